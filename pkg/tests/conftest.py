import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tanglemap.depth import DepthImage, Intrinsics

settings.register_profile(
    "repo", max_examples=60, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("repo")


def flat_image(width=64, height=48, depth=1000.0, focal=500.0):
    intr = Intrinsics.centered(width, height, focal)
    return DepthImage(np.full((height, width), float(depth)), np.ones((height, width), bool), intr)


@pytest.fixture
def flat():
    return flat_image()


@pytest.fixture(scope="session")
def twisted_scene():
    from tanglemap.scenegen import make_scene
    return make_scene("twisted", "C", 2, seed=11)


@pytest.fixture(scope="session")
def overlapped_scene():
    from tanglemap.scenegen import make_scene
    return make_scene("overlapped", "C", 2, seed=11)


@pytest.fixture(scope="session")
def tangle_plus_free_scene():
    from tanglemap.scenegen import make_scene
    return make_scene("twisted_plus_free", "C", 3, seed=3)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

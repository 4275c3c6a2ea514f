"""Judging planned grasps against rendered ground truth."""

from __future__ import annotations

from typing import Iterable, Set

import numpy as np

from .graspability import GraspCandidate, HandTemplate


def parts_in_jaws(cand: GraspCandidate, labels: np.ndarray, tmpl: HandTemplate) -> Set[int]:
    """Part ids visible between the open fingers at the candidate pose."""
    h, w = labels.shape
    row, col = cand.pixel
    off = tmpl.offsets("contact")
    rr = off[:, 0] + row
    cc = off[:, 1] + col
    ok = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    ids = labels[rr[ok], cc[ok]]
    return {int(v) for v in np.unique(ids) if v >= 0}


def grasp_on_parts(cand: GraspCandidate, labels: np.ndarray, part_ids: Iterable[int],
                   tmpl: HandTemplate) -> bool:
    """Whether the grasp picks only parts from ``part_ids``.

    A grasp centered on a part pixel is judged by that part.  A grasp
    centered on the floor (the jaws straddle a thin wire) is judged by the
    parts between its fingers, which must all belong to ``part_ids``.
    """
    wanted = set(int(i) for i in part_ids)
    row, col = cand.pixel
    center = int(labels[row, col])
    if center >= 0:
        return center in wanted
    inside = parts_in_jaws(cand, labels, tmpl)
    return bool(inside) and inside <= wanted


def calibrate_writhe_gate(n_scenes: int = 200, n_parts: int = 3, percentile: float = 95.0,
                          seed: int = 50000, patterns=("C", "S", "mixed"), map_cfg=None) -> float:
    """Writhe percentile over synthetic scenes of non-touching parts.

    Scenes use the ``separated`` placement with seeds ``seed + k``; the
    patterns cycle.  The planner's default gate is this value rounded up to
    three decimals.
    """
    from .entanglement import MapConfig, generate
    from .scenegen import make_scene

    cfg = map_cfg or MapConfig()
    values = []
    for k in range(n_scenes):
        _, rendering = make_scene("separated", patterns[k % len(patterns)], n_parts, seed + k)
        values.append(generate(rendering.image, cfg)[1].writhe)
    return float(np.percentile(values, percentile))

"""
Command-line interface.

Subcommands::

    tanglemap plan DEPTH.png --out DIR [--config FILE] [--alpha A] [--gate G]
    tanglemap gen --out DIR --count N [--seed S] [--config FILE]
    tanglemap eval CORPUS --out REPORT.json [--config FILE] [--alpha A] [--gate G]
    tanglemap config            # print every config key with its default

Exit codes: 0 success, 1 unexpected internal error, 2 bad input / config /
I/O, 3 no grasp found, 4 corpus scene without ground truth.
Set TANGLEMAP_LOG (DEBUG, INFO, WARNING...) for log output on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import io
from .config import RunConfig, apply, format_defaults, load_config
from .depth import Intrinsics
from .errors import ConfigError, MissingTruth, NoGraspFound, TangleMapError
from .evaluation import grasp_on_parts
from .graspability import build_templates
from .planner import PlanResult, plan
from .scenegen import Camera, make_scene

log = logging.getLogger("tanglemap")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_NO_GRASP = 3
EXIT_MISSING_TRUTH = 4


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------


def grasps_document(result: PlanResult) -> dict:
    return {
        "gate_taken": result.gate_taken,
        "regions": [list(r) for r in result.regions],
        "grasps": [
            {
                "x": c.pos[0],
                "y": c.pos[1],
                "angle_deg": c.angle_deg,
                "rotation_index": c.rotation_index,
                "depth_mm": c.depth_mm,
                "graspability": c.graspability,
                "entanglement": c.entanglement,
                "score": c.score,
            }
            for c in result.candidates
        ],
    }


def coordinate_document(result: PlanResult, cfg: RunConfig) -> dict:
    coord = result.coordinate
    return {
        "writhe": coord.writhe,
        "density": coord.density,
        "center": None if coord.center is None else [int(coord.center[0]), int(coord.center[1])],
        "n_segments": result.n_segments,
        "gate_taken": result.gate_taken,
        "writhe_gate": cfg.planner.writhe_gate,
        "weights": None if result.weights is None else list(result.weights),
    }


def truth_document(scene, rendering, seed: int, pattern: str, camera: Camera) -> dict:
    return {
        "seed": seed,
        "placement": scene.placement,
        "pattern": pattern,
        "camera": {"width": camera.width, "height": camera.height, "focal": camera.focal},
        "floor_mm": scene.floor_mm,
        "parts": [{"shape": p.shape, "wire_radius": p.wire_radius,
                   "centerline": np.round(p.centerline, 4)} for p in scene.parts],
        "free_part_ids": list(scene.free_part_ids),
        "entangled_pairs": [list(p) for p in scene.entangled_pairs],
        "linking": [[i, j, lk] for (i, j), lk in sorted(scene.linking.items())],
        "crossings": [{"part_i": c.part_i, "part_j": c.part_j, "pixel_pos": list(c.pixel_pos),
                       "top_part": c.top_part, "is_entangling": c.is_entangling}
                      for c in scene.crossings],
        "labels": "labels.png",
        "depth": "depth.png",
    }


def write_plan_artifacts(out: Path, img, result: PlanResult, cfg: RunConfig) -> None:
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "grasps.json", grasps_document(result))
    io.write_json(out / "coordinate.json", coordinate_document(result, cfg))
    emap = result.map if result.map is not None else np.zeros(img.depth.shape)
    io.write_map_png(out / "map.png", emap)
    io.write_overlay_png(out / "overlay.png", img, result.candidates,
                         cfg.planner.grasp.hand.open_width_px, result.regions)
    io.write_matrix_png(out / "writhe_matrix.png", result.matrix)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _planning_config(cfg: RunConfig, alpha: Optional[float], gate: Optional[float]) -> RunConfig:
    updates = {}
    if alpha is not None:
        updates["planner.rank_alpha"] = alpha
    if gate is not None:
        updates["planner.writhe_gate"] = gate
    return apply(cfg, updates, "command line") if updates else cfg


def _load_depth(path, cfg: RunConfig):
    try:
        img = io.read_depth_png(path, focal=cfg.focal)
    except FileNotFoundError:
        raise ConfigError(f"depth image not found: {path}") from None
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read depth image {path}: {exc}") from None
    return img


def _plan_or_partial(img, cfg: RunConfig):
    try:
        return plan(img, cfg.planner), None
    except NoGraspFound as exc:
        return exc.result, exc


def cmd_plan(depth_path, config_path, out_dir, alpha=None, gate=None, seed=None) -> int:
    cfg = _planning_config(load_config(config_path), alpha, gate)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    img = _load_depth(depth_path, cfg)
    result, failure = _plan_or_partial(img, cfg)
    if result is None:
        print(f"error: {failure}", file=sys.stderr)
        return EXIT_NO_GRASP
    write_plan_artifacts(Path(out_dir), img, result, cfg)
    if failure is not None:
        print(f"no grasp found: {failure}", file=sys.stderr)
        return EXIT_NO_GRASP
    log.info("%d grasps, best score %.3f", len(result.candidates), result.candidates[0].score)
    return EXIT_OK


def scene_seeds(seed: int, count: int) -> List[int]:
    if count <= 0:
        return []
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint32)
    return [int(s) for s in state]


def cmd_gen(config_path, out_dir, count: int, seed: Optional[int] = None) -> int:
    cfg = load_config(config_path)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if count < 0:
        raise ConfigError("--count must be >= 0")
    sc = cfg.scene
    camera = Camera(sc.width, sc.height, cfg.focal)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k, s in enumerate(scene_seeds(cfg.seed, count)):
        pattern = sc.patterns[k % len(sc.patterns)]
        scene, rendering = make_scene(sc.placement, pattern, sc.n_parts, s, camera, sc.noise_sigma)
        d = out / f"scene_{k:04d}"
        d.mkdir(exist_ok=True)
        io.write_depth_png(d / "depth.png", rendering.image)
        io.write_label_png(d / "labels.png", rendering.labels)
        io.write_json(d / "truth.json", truth_document(scene, rendering, s, pattern, camera))
        log.info("scene %s: %s/%s free=%s", d.name, sc.placement, pattern, scene.free_part_ids)
    return EXIT_OK


def _scene_dirs(corpus: Path) -> List[Path]:
    if not corpus.is_dir():
        raise ConfigError(f"corpus directory not found: {corpus}")
    return sorted(p for p in corpus.iterdir() if p.is_dir())


def evaluate_corpus(corpus_dir, cfg: RunConfig):
    """Per-scene outcomes and latencies, in scene-name order."""
    templates = build_templates(cfg.planner.grasp.hand, cfg.planner.grasp.rotations)
    outcomes, latencies = [], []
    for d in _scene_dirs(Path(corpus_dir)):
        truth_path = d / "truth.json"
        if not truth_path.is_file() or not (d / "labels.png").is_file():
            raise MissingTruth(f"{d}: truth.json or labels.png missing")
        truth = io.read_json(truth_path)
        labels = io.read_label_png(d / "labels.png")
        img = _load_depth(d / "depth.png", cfg)
        t0 = time.perf_counter()
        result, failure = _plan_or_partial(img, cfg)
        latencies.append(time.perf_counter() - t0)
        ok = False
        best = None
        if failure is None:
            best = result.candidates[0]
            ok = grasp_on_parts(best, labels, truth["free_part_ids"], templates[best.rotation_index])
        outcomes.append({
            "scene": d.name,
            "pattern": truth.get("pattern", "unknown"),
            "placement": truth.get("placement", "unknown"),
            "gate_taken": None if result is None else result.gate_taken,
            "success": bool(ok),
            "grasp": None if best is None else [best.pos[0], best.pos[1], best.angle_deg],
        })
    return outcomes, latencies


def summarize(outcomes: Sequence[dict]) -> dict:
    per: Dict[str, Dict[str, float]] = {}
    for o in outcomes:
        p = per.setdefault(o["pattern"], {"scenes": 0, "successes": 0})
        p["scenes"] += 1
        p["successes"] += int(o["success"])
    for p in per.values():
        p["rate"] = p["successes"] / p["scenes"]
    total = len(outcomes)
    wins = sum(int(o["success"]) for o in outcomes)
    return {"per_pattern": per, "scenes": total, "successes": wins,
            "rate": wins / total if total else None}


def timing_path(report_path) -> Path:
    p = Path(report_path)
    return p.with_name(p.stem + ".timing.json")


def cmd_eval(corpus_dir, config_path, report_path, alpha=None, gate=None) -> int:
    cfg = _planning_config(load_config(config_path), alpha, gate)
    outcomes, latencies = evaluate_corpus(corpus_dir, cfg)
    report = summarize(outcomes)
    report.update({"rank_alpha": cfg.planner.rank_alpha,
                   "writhe_gate": cfg.planner.writhe_gate,
                   "outcomes": outcomes})
    Path(report_path).parent.mkdir(parents=True, exist_ok=True)
    io.write_json(report_path, report)
    # wall-clock numbers live apart so the main report stays reproducible
    io.write_json(timing_path(report_path), {
        "mean_latency_s": float(np.mean(latencies)) if latencies else None,
        "max_latency_s": float(np.max(latencies)) if latencies else None,
        "per_scene_s": {o["scene"]: t for o, t in zip(outcomes, latencies)},
    })
    rate = report["rate"]
    print(f"{report['successes']}/{report['scenes']} scenes succeeded"
          + (f" ({rate:.1%})" if rate is not None else "")
          + (f", mean latency {np.mean(latencies):.2f} s" if latencies else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tanglemap",
                                     description="Entanglement-aware grasp planning on depth images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan grasps on one depth PNG")
    p.add_argument("depth", help="16-bit depth PNG in millimeters (0 = missing)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, help="ranking weight of entanglement")
    p.add_argument("--gate", type=float, help="writhe gate")

    g = sub.add_parser("gen", help="generate a synthetic scene corpus")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--seed", type=int)
    g.add_argument("--config")

    e = sub.add_parser("eval", help="plan every corpus scene and score against ground truth")
    e.add_argument("corpus")
    e.add_argument("--out", required=True, help="report JSON path")
    e.add_argument("--config")
    e.add_argument("--seed", type=int, help="accepted for symmetry; planning is deterministic")
    e.add_argument("--alpha", type=float)
    e.add_argument("--gate", type=float)

    sub.add_parser("config", help="print every configuration key with its default")
    return parser


def _setup_logging():
    level = os.environ.get("TANGLEMAP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "plan":
            return cmd_plan(args.depth, args.config, args.out, args.alpha, args.gate, args.seed)
        if args.command == "gen":
            return cmd_gen(args.config, args.out, args.count, args.seed)
        if args.command == "eval":
            return cmd_eval(args.corpus, args.config, args.out, args.alpha, args.gate)
        sys.stdout.write(format_defaults())
        return EXIT_OK
    except MissingTruth as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_TRUTH
    except (TangleMapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last line of defence, never a traceback
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

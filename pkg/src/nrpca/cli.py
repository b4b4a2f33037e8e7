"""Batch command line: preprocess, synthesize, certify, and solve videos.

Exit codes: 0 on success, 2 when --strict certification finds a failed
condition, 1 on any error.  NRPCA_JOBS sets the default worker count for
multi-restart solves.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .certify import RectangleSpec, certify_video, common_background_pixel
from .core import (DEFAULT_EPS_S, DataMatrix, Decomposition, FrameGeometry,
                   assemble_data_matrix, residual_sets)
from .graphs import background_connected, mask_degree_stats
from .preprocess import shift_pixels, square_video
from .solver import (SolverConfig, SolverDivergenceError, default_jobs,
                     multi_restart, solve)
from .synth import SceneSpec, certified_scene, generate


@dataclass
class RunManifest:
    """Everything needed to reproduce a run bit-for-bit."""

    command: str
    input: str | None
    output: str
    params: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "manifest.json").write_text(
            json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
        )


def _load_data_matrix(path) -> DataMatrix:
    frames, x_black, x_white = formats.load_video(path)
    if frames.shape[0] == 0:
        raise ValueError(f"{path}: video has no frames")
    if x_black is None:
        x_black, x_white = float(frames.min()), float(frames.max())
    return assemble_data_matrix(frames, x_black, x_white)


def _parse_pair(text: str, kind=float) -> tuple:
    parts = [kind(p) for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated values, got {text!r}")
    return tuple(parts)


def _parse_geometry(text: str) -> FrameGeometry:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected d_m,d_n,d_f, got {text!r}")
    return FrameGeometry(*parts)


def _parse_batch(text: str):
    return None if text == "full" else int(text)


def cmd_preprocess(args) -> int:
    out = Path(args.out)
    frames, _, _ = formats.load_video(args.input)
    if frames.shape[0] == 0:
        raise ValueError("video has no frames")
    frames, x_black, x_white = shift_pixels(frames, args.shift)
    strategy = {
        "rescale": "rescale-resolution",
        "repeat": "repeat-frames",
        "none": "none",
    }[args.square]
    frames, geometry, beta = square_video(frames, strategy)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_raw_video(out / "video.raw", frames, x_black, x_white)
    metadata = {
        "d_m": geometry.d_m,
        "d_n": geometry.d_n,
        "d_f": geometry.d_f,
        "x_black": x_black,
        "x_white": x_white,
        "delta_x": args.shift,
        "beta": beta,
        "square_strategy": strategy,
    }
    (out / "metadata.json").write_text(json.dumps(metadata, indent=2) + "\n")
    RunManifest("preprocess", str(args.input), str(out), {
        "shift": args.shift, "square": strategy,
    }).write(out)
    print(f"wrote {geometry.d_f} frames of {geometry.d_m}x{geometry.d_n} "
          f"in [{x_black:.6g}, {x_white:.6g}] to {out}")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    geometry = _parse_geometry(args.geometry)
    if args.certified:
        spec = certified_scene(geometry, background_level=args.level)
    else:
        if args.rect is None:
            raise ValueError("either --certified or --rect pm,pn is required")
        p_m, p_n = _parse_pair(args.rect, int)
        speed_x, speed_y = _parse_pair(args.speed)
        start = _parse_pair(args.start, int)
        background = args.level if args.background_high is None else (
            args.level, args.background_high)
        spec = SceneSpec(
            geometry=geometry,
            rect=RectangleSpec(p_m, p_n, speed_x=speed_x, speed_y=speed_y),
            start=start,
            background=background,
            object_contrast=args.contrast,
            boundary=args.boundary,
            eps_s=args.eps_s,
        )
    scene = generate(spec, seed=args.seed)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "raw":
        formats.write_raw_video(out / "video.raw", scene.frames,
                                scene.x_black, scene.x_white)
    else:
        maxval = int(np.ceil(scene.x_white))
        formats.write_pgm_frames(out / "frames", np.rint(scene.frames), maxval)
        (out / "frames" / "metadata.json").write_text(json.dumps({
            "x_black": scene.x_black, "x_white": scene.x_white}) + "\n")
    formats.write_mask_frames(out / "masks", scene.foreground)
    fg_stats = mask_degree_stats(scene.foreground, "foreground")
    bg_stats = mask_degree_stats(scene.foreground, "background")
    common = common_background_pixel(scene.foreground)
    ground_truth = {
        "geometry": {"d_m": geometry.d_m, "d_n": geometry.d_n, "d_f": geometry.d_f},
        "u": scene.u.tolist(),
        "v": scene.v.tolist(),
        "x_black": scene.x_black,
        "x_white": scene.x_white,
        "rect": None if spec.rect is None else {
            "p_m": spec.rect.p_m, "p_n": spec.rect.p_n,
            "speed_x": spec.rect.speed_x, "speed_y": spec.rect.speed_y,
        },
        "start": list(spec.start),
        "boundary": spec.boundary,
        "eps_s": spec.eps_s,
        "p_f": scene.p_f,
        "foreground_count": scene.foreground.foreground_count(),
        "foreground_max_degree": fg_stats.max_degree,
        "background_min_degree": bg_stats.min_degree,
        "background_connected": background_connected(scene.foreground),
        "common_pixel": common.witness,
    }
    (out / "ground_truth.json").write_text(json.dumps(ground_truth) + "\n")
    RunManifest("synth", None, str(out), {
        "geometry": args.geometry, "certified": args.certified,
        "rect": args.rect, "speed": args.speed, "start": args.start,
        "level": args.level, "background_high": args.background_high,
        "contrast": args.contrast, "boundary": args.boundary,
        "seed": args.seed, "eps_s": args.eps_s, "format": args.format,
    }).write(out)
    print(f"wrote scene ({geometry.d_m}x{geometry.d_n}x{geometry.d_f}, "
          f"|F|={ground_truth['foreground_count']}, p_f={scene.p_f}) to {out}")
    return 0


def _load_decomposition(path, lam: float = 1.0) -> Decomposition:
    doc = json.loads(Path(path).read_text())
    return Decomposition(np.asarray(doc["u"], dtype=np.float64),
                         np.asarray(doc["v"], dtype=np.float64),
                         doc.get("lambda", lam))


def cmd_certify(args) -> int:
    data = _load_data_matrix(args.input)
    decomposition = None
    if args.solution:
        decomposition = _load_decomposition(args.solution)
    elif args.ground_truth:
        decomposition = _load_decomposition(args.ground_truth)
    rect = None
    if args.rect:
        p_m, p_n = _parse_pair(args.rect, int)
        speed = _parse_pair(args.speed) if args.speed else (0.0, 0.0)
        rect = RectangleSpec(p_m, p_n, p_f=args.pf,
                             speed_x=speed[0], speed_y=speed[1])
    report = certify_video(
        data=data,
        decomposition=decomposition,
        rect=rect,
        eps_s=args.eps_s,
        margin_slack=args.eps_c,
    )
    text = report.to_text()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text)
        RunManifest("certify", str(args.input), str(out), {
            "solution": args.solution, "ground_truth": args.ground_truth,
            "rect": args.rect, "pf": args.pf, "speed": args.speed,
            "eps_s": args.eps_s, "eps_c": args.eps_c, "strict": args.strict,
        }).write(out)
    print(text, end="")
    if args.strict and not report.all_passed():
        return 2
    return 0


def cmd_solve(args) -> int:
    out = Path(args.out)
    data = _load_data_matrix(args.input)
    config = SolverConfig(
        lam=args.lam,
        learning_rate=args.lr,
        momentum=args.momentum,
        iterations=args.iters,
        batch=_parse_batch(args.batch),
        seed=args.seed,
    )
    restart_info = None
    if args.restarts:
        jobs = args.jobs if args.jobs else default_jobs()
        spread = multi_restart(data.values, args.restarts, config, n_jobs=jobs)
        result = spread.best
        restart_info = {
            "restarts": args.restarts,
            "max_relative_distance": spread.max_relative_distance,
            "reference_seed": config.seed + spread.reference_index,
            "final_objectives": [r.final_objective for r in spread.results],
            "failures": spread.failures,
        }
    else:
        result = solve(data.values, config)
    dec = result.decomposition
    _, sets = residual_sets(data, dec, args.eps_s)
    out.mkdir(parents=True, exist_ok=True)
    (out / "solution.json").write_text(json.dumps({
        "u": dec.u.tolist(),
        "v": dec.v.tolist(),
        "lambda": dec.lam,
        "final_objective": result.final_objective,
        "converged": result.converged,
        "balance_gap": dec.balance_gap(),
    }) + "\n")
    formats.write_mask_frames(out / "masks", sets)
    background = np.clip(np.rint(dec.background()), 0, 65535)
    g = data.geometry
    bg_frames = background.reshape(g.d_m, g.d_n, g.d_f, order="F").transpose(2, 0, 1)
    formats.write_pgm_frames(out / "background", bg_frames,
                             maxval=max(1, int(bg_frames.max())))
    np.savetxt(out / "trace.txt", result.objective_trace, fmt="%.17g")
    if restart_info is not None:
        (out / "restarts.json").write_text(json.dumps(restart_info, indent=2) + "\n")
    RunManifest("solve", str(args.input), str(out), {
        "lambda": args.lam, "lr": args.lr, "momentum": args.momentum,
        "iters": args.iters, "batch": args.batch, "seed": args.seed,
        "eps_s": args.eps_s, "restarts": args.restarts, "jobs": args.jobs,
    }).write(out)
    msg = (f"objective {result.final_objective:.6g}, "
           f"|F|={sets.foreground_count()}, masks in {out / 'masks'}")
    if restart_info is not None:
        msg += (f", restart spread "
                f"{restart_info['max_relative_distance']:.6g}")
    print(msg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrpca",
        description="Rank-1 background + sparse foreground video decomposition "
                    "with global-optimality certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="shift intensities and square the geometry")
    p.add_argument("input", help="raw video file or directory of PGM frames")
    p.add_argument("--out", required=True)
    p.add_argument("--shift", type=float, default=5000.0,
                   help="intensity shift delta_x > 0 (default 5000)")
    p.add_argument("--square", choices=("rescale", "repeat", "none"),
                   default="rescale")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--geometry", required=True, metavar="DM,DN,DF")
    p.add_argument("--certified", action="store_true",
                   help="search for a spec passing both certificates")
    p.add_argument("--rect", metavar="PM,PN")
    p.add_argument("--speed", default="0,0", metavar="SX,SY")
    p.add_argument("--start", default="1,1", metavar="I,J")
    p.add_argument("--level", type=float, default=4.0,
                   help="background level (or range low with --background-high)")
    p.add_argument("--background-high", type=float, default=None)
    p.add_argument("--contrast", type=float, default=None)
    p.add_argument("--boundary", choices=("exit", "wrap"), default="exit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-s", type=float, default=DEFAULT_EPS_S)
    p.add_argument("--format", choices=("raw", "pgm"), default="raw")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("certify", help="evaluate the optimality certificates")
    p.add_argument("input", help="raw video file or directory of PGM frames")
    p.add_argument("--solution", help="solution.json from the solve command")
    p.add_argument("--ground-truth", help="ground_truth.json from the synth command")
    p.add_argument("--rect", metavar="PM,PN")
    p.add_argument("--pf", type=int, default=None,
                   help="known max frames any pixel is obscured")
    p.add_argument("--speed", metavar="SX,SY")
    p.add_argument("--eps-s", type=float, default=DEFAULT_EPS_S)
    p.add_argument("--eps-c", type=float, default=1e-6)
    p.add_argument("--strict", action="store_true",
                   help="exit with status 2 if any evaluated condition fails")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("solve", help="decompose a video and write masks")
    p.add_argument("input", help="raw video file or directory of PGM frames")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--batch", default="full",
                   help="'full' or number of sampled entries per step")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="workers for --restarts (default from NRPCA_JOBS)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-s", type=float, default=DEFAULT_EPS_S)
    p.set_defaults(func=cmd_solve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, SolverDivergenceError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

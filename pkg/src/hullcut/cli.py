"""Command-line interface: ``hullcut decompose | eval | rotate-test``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numba

from .concavity import COMBINE_MODES, evaluate_decomposition, padded_convex_hull
from .decomposer import PICK_METRICS, DecompConfig, decompose, preprocess, rotation_test
from .exceptions import HullcutError
from .io import OUTPUT_MODES, build_report, ensure_writable, load_hulls, load_mesh, save_decomposition, write_json

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _config_flags(p: argparse.ArgumentParser) -> None:
    d = DecompConfig()
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="cage offset (normalized units)")
    p.add_argument("--k", type=int, default=d.k, help="number of sampled bisector planes")
    p.add_argument("--threshold", type=float, default=d.concavity_threshold, help="target concavity")
    p.add_argument("--max-parts", type=int, default=d.max_parts)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--remesh-resolution", type=int, default=d.remesh_resolution)
    p.add_argument("--no-remesh", action="store_true", help="use the input surface as is (must be closed)")
    p.add_argument("--cage-resolution", type=int, default=d.cage_resolution)
    p.add_argument("--samples", type=int, default=d.samples, help="surface samples for concavity")
    p.add_argument("--part-pick", choices=PICK_METRICS, default=d.part_pick_metric)
    p.add_argument("--concavity-combine", choices=COMBINE_MODES, default=d.concavity_combine)
    p.add_argument("--max-flat-planes", type=int, default=d.max_flat_planes)
    p.add_argument("--no-flat-planes", action="store_true")
    p.add_argument("--threads", type=int, default=0, help="worker threads (0 = all cores)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hullcut", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="decompose a mesh into convex hulls")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--output-mode", choices=OUTPUT_MODES, default="split")
    p.add_argument("--raw-parts", action="store_true", help="also write the uncapped part meshes")
    _config_flags(p)

    p = sub.add_parser("eval", help="score a directory of hull OBJs against a mesh")
    p.add_argument("input")
    p.add_argument("hulls", help="directory holding the hull OBJ files")
    p.add_argument("-o", "--output", help="where to write eval.json (default: the hull directory)")
    _config_flags(p)

    p = sub.add_parser("rotate-test", help="decompose randomly rotated copies of a mesh")
    p.add_argument("input")
    p.add_argument("--rotations", type=int, default=8)
    p.add_argument("-o", "--output", help="where to write rotations.json (default: current directory)")
    _config_flags(p)
    return parser


def config_from_args(args) -> DecompConfig:
    return DecompConfig(
        epsilon=args.epsilon, k=args.k, concavity_threshold=args.threshold, max_parts=args.max_parts,
        seed=args.seed, remesh_resolution=args.remesh_resolution, remesh_enabled=not args.no_remesh,
        samples=args.samples, part_pick_metric=args.part_pick, max_flat_planes=args.max_flat_planes,
        use_flat_planes=not args.no_flat_planes, concavity_combine=args.concavity_combine,
        cage_resolution=args.cage_resolution)


def _set_threads(n: int) -> None:
    if n < 0:
        raise HullcutError("--threads must be >= 0")
    numba.set_num_threads(n if n > 0 else numba.config.NUMBA_NUM_THREADS)


def run_decompose(args) -> int:
    config = config_from_args(args)
    mesh = load_mesh(args.input)
    out = ensure_writable(args.output)
    t = time.perf_counter()
    d = decompose(mesh, config)
    report = build_report(d, args.input)
    seconds = time.perf_counter() - t
    report.totals["seconds"]["total"] = seconds
    save_decomposition(d, out, args.output_mode, args.input, report, args.raw_parts)
    print(f"parts={len(d)} concavity={report.totals['concavity']:.6g} seconds={seconds:.3f}")
    return EXIT_OK


def run_eval(args) -> int:
    config = config_from_args(args)
    mesh = load_mesh(args.input)
    meshes = load_hulls(args.hulls)
    if not meshes:
        raise HullcutError(f"no hull OBJ files in {args.hulls}")
    norm, back = preprocess(mesh, config)
    to_norm = back.inverse()
    hulls = [padded_convex_hull(to_norm.apply(m.vertices)) for m in meshes]
    score = evaluate_decomposition(norm, hulls, config.samples, config.seed, config.concavity_combine)
    out = ensure_writable(args.output or args.hulls)
    write_json(Path(out) / "eval.json", {
        "input": args.input, "hulls": str(args.hulls), "parts": len(hulls),
        "concavity": score.combined, "hausdorff": score.hausdorff, "volume_radius": score.volume_radius,
        "config": config.as_dict(),
    })
    print(f"parts={len(hulls)} concavity={score.combined:.6g}")
    return EXIT_OK


def run_rotate_test(args) -> int:
    if args.rotations < 1:
        raise HullcutError("--rotations must be >= 1")
    config = config_from_args(args)
    mesh = load_mesh(args.input)
    runs = rotation_test(mesh, config, args.rotations, args.seed)
    records = []
    for k, r in enumerate(runs):
        # stdout carries one line per rotation; the reference run goes to stderr
        line = f"parts={r.parts} concavity={r.concavity:.6g}"
        if k == 0:
            print(f"reference {line}", file=sys.stderr)
        else:
            print(f"rotation={k} {line}")
        records.append({"index": k, "rotation": r.rotation.tolist(), "parts": r.parts, "concavity": r.concavity})
    out = ensure_writable(args.output or ".")
    write_json(Path(out) / "rotations.json", {"input": args.input, "config": config.as_dict(), "runs": records})
    return EXIT_OK


COMMANDS = {"decompose": run_decompose, "eval": run_eval, "rotate-test": run_rotate_test}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s", stream=sys.stderr)
    try:
        _set_threads(args.threads)
        return COMMANDS[args.command](args)
    except OSError as exc:
        print(f"hullcut: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HullcutError, ValueError) as exc:
        print(f"hullcut: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

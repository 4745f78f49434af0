"""Command line entry point: ``stodi {optimize,denoise,metric,fk,demo,config}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import tempfile
from pathlib import Path

from . import denoise, harness, metrics
from .kinematics import fk_path, load_chain, panda_chain
from .trajcore import CartesianPath, JointTrajectory, read_trajectory, write_trajectory


def _template_text() -> str:
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "exp.cfg"
        harness.write_config_template(p)
        return p.read_text()


def _cmd_optimize(args) -> int:
    cfg = harness.load_config(args.config)
    opt_over = {}
    if args.noise_scale is not None:
        opt_over["noise_scale"] = args.noise_scale
    if args.step_scale is not None:
        opt_over["step_scale"] = args.step_scale
    if opt_over:
        cfg.optimizer = dataclasses.replace(cfg.optimizer, **opt_over)
    if args.seed is not None:
        cfg.seeds = tuple(args.seed)
    if args.output:
        cfg.output = args.output
    if args.workers:
        cfg.workers = args.workers
    report = harness.run_comparison(cfg)
    for row in report["runs"]:
        print(f"{row['metric']:6s} {row['algo']:6s} seed={row['seed']:<4d} "
              f"Q0={row['initial_cost']:.6g} Q={row['final_cost']:.6g} iters={row['iterations']}")
    print(f"summary: {Path(cfg.output) / 'summary.json'}")
    return 0


def _cmd_denoise(args) -> int:
    path = read_trajectory(args.input)
    if not isinstance(path, CartesianPath):
        raise SystemExit(f"{args.input}: denoising expects an x,y,z file")
    out = denoise.apply_filter(path, denoise.FilterSpec(args.filter, args.gamma), anchor=not args.no_anchor)
    write_trajectory(out, args.output)
    return 0


def _cmd_metric(args) -> int:
    a, b = read_trajectory(args.a), read_trajectory(args.b)
    if not (isinstance(a, CartesianPath) and isinstance(b, CartesianPath)):
        raise SystemExit("metric expects two x,y,z files")
    cfg = metrics.DtwConfig(metrics.Distance(args.distance))
    print(repr(metrics.path_distance(args.kind, a, b, cfg)))
    return 0


def _cmd_fk(args) -> int:
    traj = read_trajectory(args.input)
    if not isinstance(traj, JointTrajectory):
        raise SystemExit(f"{args.input}: forward kinematics expects a j0..j6 file")
    chain = load_chain(args.chain) if args.chain else panda_chain()
    write_trajectory(fk_path(chain, traj), args.output)
    return 0


def _cmd_demo(args) -> int:
    path = harness.generate_demo(args.shape, args.n, args.size, args.noise, args.seed,
                                 tuple(args.center), args.plane)
    write_trajectory(path, args.output)
    return 0


def _cmd_config(args) -> int:
    text = _template_text()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stodi", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser(
        "optimize",
        help="run a seeded STOMP/STODI comparison from an experiment file",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="experiment file keys and their defaults:\n\n" + _template_text(),
    )
    o.add_argument("--config", required=True, help="INI experiment file")
    o.add_argument("--seed", type=int, nargs="+", help="override the seed list")
    o.add_argument("--noise-scale", type=float, help="override optimizer noise_scale")
    o.add_argument("--step-scale", type=float, help="multiply the R^-1 update (default 1.0)")
    o.add_argument("--output", help="override the output directory")
    o.add_argument("--workers", type=int, help="parallel runs (default 1)")
    o.set_defaults(func=_cmd_optimize)

    d = sub.add_parser("denoise", help="frequency-domain filtering of an x,y,z path")
    d.add_argument("--filter", choices=[k.value for k in denoise.FilterKind], default="gain")
    d.add_argument("--gamma", type=float, default=denoise.DEFAULT_GAMMA,
                   help="gain-control threshold (default %(default)s)")
    d.add_argument("--no-anchor", action="store_true", help="do not restore the input endpoints")
    d.add_argument("input")
    d.add_argument("output")
    d.set_defaults(func=_cmd_denoise)

    m = sub.add_parser("metric", help="print the distance between two x,y,z paths")
    m.add_argument("--kind", choices=metrics.METRIC_KINDS, default="dtw")
    m.add_argument("--distance", choices=[x.value for x in metrics.Distance],
                   default=metrics.Distance.SQUARED_EUCLIDEAN.value, help="DTW point distance")
    m.add_argument("a")
    m.add_argument("b")
    m.set_defaults(func=_cmd_metric)

    f = sub.add_parser("fk", help="map a joint trajectory to end-effector positions")
    f.add_argument("--chain", help="INI chain file (default: built-in Panda)")
    f.add_argument("input")
    f.add_argument("output")
    f.set_defaults(func=_cmd_fk)

    g = sub.add_parser("demo", help="write a generated demonstration shape")
    g.add_argument("--shape", choices=harness.SHAPES, default="circle")
    g.add_argument("--n", type=int, default=128, help="number of points (default %(default)s)")
    g.add_argument("--size", type=float, default=0.5, help="radius / half-extent in m (default %(default)s)")
    g.add_argument("--noise", type=float, default=0.0, help="per-axis noise std in m (default %(default)s)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--center", type=float, nargs=3, default=(0.0, 0.0, 0.0))
    g.add_argument("--plane", choices=("xy", "xz", "yz"), default="xy")
    g.add_argument("output")
    g.set_defaults(func=_cmd_demo)

    c = sub.add_parser("config", help="print an experiment file with every default")
    c.add_argument("output", nargs="?")
    c.set_defaults(func=_cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

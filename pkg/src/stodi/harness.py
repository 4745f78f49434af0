"""Experiment configuration, demonstration shapes and the seeded comparison runner."""

from __future__ import annotations

import configparser
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import denoise
from .costs import CostSpec, Imitation, make_term
from .kinematics import KinematicChain, ik_point, load_chain, panda_chain
from .metrics import METRIC_KINDS
from .optimizer import ALGORITHMS, StodiConfig, run, write_trace
from .trajcore import (
    CartesianPath,
    JointTrajectory,
    build_precision_matrix,
    read_trajectory,
    write_trajectory,
)

log = logging.getLogger(__name__)

SHAPES = ("line", "circle", "semicircle", "m-shape")
_PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}
_LINE_DIRECTION = np.array([1.0, 0.5, 0.25]) / np.linalg.norm([1.0, 0.5, 0.25])
_M_VERTICES = np.array([[-1.0, -1.0], [-0.5, 1.0], [0.0, -0.2], [0.5, 1.0], [1.0, -1.0]])


def _planar(uv: np.ndarray, plane: str) -> np.ndarray:
    if plane not in _PLANES:
        raise ValueError(f"unknown plane {plane!r}; choose from {tuple(_PLANES)}")
    out = np.zeros((uv.shape[0], 3))
    i, j = _PLANES[plane]
    out[:, i], out[:, j] = uv[:, 0], uv[:, 1]
    return out


def generate_demo(
    shape: str,
    npoints: int,
    size: float = 0.5,
    noise_std: float = 0.0,
    seed: int = 0,
    center=(0.0, 0.0, 0.0),
    plane: str = "xy",
) -> CartesianPath:
    """Parametric demonstration shape, optionally with i.i.d. Gaussian noise per point.

    ``size`` is the radius for circles and the half-extent otherwise. The
    circle is sampled over ``[0, 2*pi)`` so that it closes periodically; the
    semicircle includes both ends. Calling again with ``noise_std=0`` gives
    the clean counterpart of a noisy demo.
    """
    if npoints < 3:
        raise ValueError(f"npoints must be >= 3, got {npoints}")
    if shape == "line":
        s = np.linspace(-1.0, 1.0, npoints)[:, None]
        pts = size * s * _LINE_DIRECTION
    elif shape == "circle":
        t = np.arange(npoints) * 2 * np.pi / npoints
        pts = _planar(size * np.c_[np.cos(t), np.sin(t)], plane)
    elif shape == "semicircle":
        t = np.linspace(0.0, np.pi, npoints)
        pts = _planar(size * np.c_[-np.cos(t), np.sin(t)], plane)
    elif shape == "m-shape":
        seg = np.linalg.norm(np.diff(_M_VERTICES, axis=0), axis=1)
        arc = np.r_[0.0, np.cumsum(seg)]
        u = np.linspace(0.0, arc[-1], npoints)
        uv = np.c_[np.interp(u, arc, _M_VERTICES[:, 0]), np.interp(u, arc, _M_VERTICES[:, 1])]
        pts = _planar(size * uv, plane)
    else:
        raise ValueError(f"unknown demo shape {shape!r}; choose from {SHAPES}")
    pts = pts + np.asarray(center, dtype=float)
    if noise_std > 0:
        pts = pts + np.random.default_rng(seed).normal(0.0, noise_std, pts.shape)
    return CartesianPath(pts)


@dataclass
class DemoConfig:
    shape: str = "semicircle"
    npoints: int = 32
    size: float = 0.15
    noise: float = 0.0
    seed: int = 0
    center: tuple = (0.45, 0.0, 0.45)
    plane: str = "yz"
    file: Optional[str] = None
    filter: str = "none"  # none | scale | gain | backstitch
    gamma: float = denoise.DEFAULT_GAMMA


@dataclass
class CostConfig:
    metrics: tuple = ("dtw",)
    imitation_weight: float = 1e3
    control_weight: float = 0.0
    lam: float = 10.0
    per_joint_control: bool = False
    terms: tuple = ()  # (kind, params) pairs


@dataclass
class ExperimentConfig:
    algos: tuple = ALGORITHMS
    seeds: tuple = (0,)
    n_points: int = 32
    dt: float = 0.15
    output: str = "out"
    threshold: float = 1.1
    workers: int = 1
    chain_file: Optional[str] = None
    initial_file: Optional[str] = None
    demo: DemoConfig = field(default_factory=DemoConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    optimizer: StodiConfig = field(default_factory=lambda: StodiConfig(max_iters=300, noise_scale=0.1))

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.n_points < 3:
            raise ValueError("n_points must be >= 3")
        for a in self.algos:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        for m in self.costs.metrics:
            if m not in METRIC_KINDS:
                raise ValueError(f"unknown metric {m!r}")


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.replace(",", " ").split())


def _words(s: str) -> tuple:
    return tuple(v for v in s.replace(",", " ").split() if v)


_KEYS = {
    "experiment": {"algos", "seeds", "n_points", "dt", "output", "threshold", "workers", "chain", "initial"},
    "demo": {"shape", "npoints", "size", "noise", "seed", "center", "plane", "file", "filter", "gamma"},
    "costs": {"metrics", "imitation_weight", "control_weight", "lambda", "per_joint_control"},
    "optimizer": {"k", "n", "max_iters", "window", "tol", "check_convergence", "p_refresh_period",
                  "noise_scale", "noise_decay", "step_scale", "rescale_costs", "rescale_h"},
}


def _check_keys(cp: configparser.ConfigParser, path) -> None:
    for sec in cp.sections():
        if sec.startswith("term"):
            continue
        if sec not in _KEYS:
            raise ValueError(f"{path}: unknown section [{sec}]")
        unknown = set(cp[sec]) - _KEYS[sec]
        if unknown:
            raise ValueError(f"{path}: unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")


def load_config(path) -> ExperimentConfig:
    """Parse an INI experiment file; every key is optional.

    Sections: ``[experiment]``, ``[demo]``, ``[costs]``, ``[optimizer]`` and
    any number of ``[term NAME]`` sections with a ``kind`` plus its
    parameters. Relative file paths resolve against the config's directory.
    """
    path = Path(path)
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    _check_keys(cp, path)
    base = path.parent
    d = ExperimentConfig()

    def rel(v):
        return str((base / v).resolve()) if v else None

    ex = cp["experiment"] if cp.has_section("experiment") else {}
    demo_s = cp["demo"] if cp.has_section("demo") else {}
    cost_s = cp["costs"] if cp.has_section("costs") else {}
    opt_s = cp["optimizer"] if cp.has_section("optimizer") else {}

    demo = DemoConfig(
        shape=demo_s.get("shape", d.demo.shape),
        npoints=int(demo_s.get("npoints", d.demo.npoints)),
        size=float(demo_s.get("size", d.demo.size)),
        noise=float(demo_s.get("noise", d.demo.noise)),
        seed=int(demo_s.get("seed", d.demo.seed)),
        center=_floats(demo_s["center"]) if "center" in demo_s else d.demo.center,
        plane=demo_s.get("plane", d.demo.plane),
        file=rel(demo_s.get("file")),
        filter=demo_s.get("filter", d.demo.filter),
        gamma=float(demo_s.get("gamma", d.demo.gamma)),
    )
    terms = []
    for sec in cp.sections():
        if sec.startswith("term"):
            s = dict(cp[sec])
            kind = s.pop("kind", None)
            if kind is None:
                raise ValueError(f"[{sec}] needs a kind")
            params = {k: (_floats(v) if k == "center" else float(v)) for k, v in s.items()}
            make_term(kind, **params)  # validate early
            terms.append((kind, params))
    costs = CostConfig(
        metrics=_words(cost_s["metrics"]) if "metrics" in cost_s else d.costs.metrics,
        imitation_weight=float(cost_s.get("imitation_weight", d.costs.imitation_weight)),
        control_weight=float(cost_s.get("control_weight", d.costs.control_weight)),
        lam=float(cost_s.get("lambda", d.costs.lam)),
        per_joint_control=_bool(cost_s.get("per_joint_control", d.costs.per_joint_control)),
        terms=tuple(terms),
    )
    o = d.optimizer
    K = int(opt_s.get("K", o.K))
    opt = StodiConfig(
        K=K,
        n=int(opt_s["n"]) if "n" in opt_s else K // 2,
        max_iters=int(opt_s.get("max_iters", o.max_iters)),
        window=int(opt_s.get("window", o.window)),
        tol=float(opt_s.get("tol", o.tol)),
        check_convergence=_bool(opt_s.get("check_convergence", o.check_convergence)),
        p_refresh_period=int(opt_s.get("p_refresh_period", o.p_refresh_period)),
        noise_scale=float(opt_s.get("noise_scale", o.noise_scale)),
        noise_decay=float(opt_s.get("noise_decay", o.noise_decay)),
        step_scale=float(opt_s.get("step_scale", o.step_scale)),
        rescale_costs=_bool(opt_s.get("rescale_costs", o.rescale_costs)),
        rescale_h=float(opt_s.get("rescale_h", o.rescale_h)),
    )
    return ExperimentConfig(
        algos=_words(ex["algos"]) if "algos" in ex else d.algos,
        seeds=tuple(int(v) for v in _words(ex["seeds"])) if "seeds" in ex else d.seeds,
        n_points=int(ex.get("n_points", d.n_points)),
        dt=float(ex.get("dt", d.dt)),
        output=rel(ex.get("output", d.output)),
        threshold=float(ex.get("threshold", d.threshold)),
        workers=int(ex.get("workers", d.workers)),
        chain_file=rel(ex.get("chain")),
        initial_file=rel(ex.get("initial")),
        demo=demo,
        costs=costs,
        optimizer=opt,
    )


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def build_demo(cfg: DemoConfig) -> CartesianPath:
    if cfg.file:
        demo = read_trajectory(cfg.file)
        if not isinstance(demo, CartesianPath):
            raise ValueError(f"{cfg.file} is not a Cartesian (x,y,z) file")
    else:
        demo = generate_demo(cfg.shape, cfg.npoints, cfg.size, cfg.noise, cfg.seed, cfg.center, cfg.plane)
    if cfg.filter != "none":
        demo = denoise.apply_filter(demo, denoise.FilterSpec(cfg.filter, cfg.gamma))
    return demo


class SetupError(RuntimeError):
    pass


def initial_trajectory(chain: KinematicChain, demo: CartesianPath, n_points: int, dt: float) -> JointTrajectory:
    """Joint-space straight line between IK solutions of the demo's endpoints."""
    from .kinematics import IKError

    try:
        q_start = ik_point(chain, demo.points[0])
        q_goal = ik_point(chain, demo.points[-1], q_start)
    except IKError as e:
        raise SetupError(f"cannot reach demonstration endpoints: {e}") from e
    return JointTrajectory.linear(q_start, q_goal, n_points, dt)


def iterations_to_threshold(trace, fraction: float) -> Optional[int]:
    """First iteration whose cost is within ``fraction`` times the trace's final value."""
    trace = np.asarray(trace, dtype=float)
    if trace.size == 0:
        return None
    hits = np.flatnonzero(trace <= fraction * trace[-1])
    return int(hits[0]) + 1


def _one_run(job):
    cfg, metric, algo, seed, chain, demo, init = job
    spec = CostSpec(
        state_terms=[make_term(k, **p) for k, p in cfg.costs.terms],
        imitation=Imitation(metric, cfg.costs.imitation_weight, demo),
        control_weight=cfg.costs.control_weight,
        lam=cfg.costs.lam,
        per_joint_control=cfg.costs.per_joint_control,
    )
    R = build_precision_matrix(cfg.n_points, cfg.dt)
    opt = StodiConfig(**{**asdict(cfg.optimizer), "seed": seed})
    return run(init, opt, spec, R, chain, algo)


def run_comparison(cfg: ExperimentConfig) -> dict:
    """Run every (metric, algorithm, seed) combination and write traces plus a summary.

    All runs start from the same initial trajectory; runs sharing a seed
    draw identical noise. Output files land in ``cfg.output``; the summary
    (``summary.json``) is written last.
    """
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    chain = load_chain(cfg.chain_file) if cfg.chain_file else panda_chain()
    demo = build_demo(cfg.demo)
    if cfg.initial_file:
        init = read_trajectory(cfg.initial_file, dt=cfg.dt)
        if not isinstance(init, JointTrajectory) or init.n_points != cfg.n_points:
            raise SetupError(f"{cfg.initial_file}: expected a joint trajectory with {cfg.n_points} rows")
    else:
        init = initial_trajectory(chain, demo, cfg.n_points, cfg.dt)
    write_trajectory(demo, out / "demo.csv")
    write_trajectory(init, out / "initial.csv")

    keys = [(m, a, s) for m in cfg.costs.metrics for a in cfg.algos for s in cfg.seeds]
    jobs = [(cfg, m, a, s, chain, demo, init) for m, a, s in keys]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]

    rows = []
    for (metric, algo, seed), res in zip(keys, results):
        stem = f"{metric}_{algo}_seed{seed}"
        write_trace(res, out / f"{stem}_trace.csv")
        write_trajectory(res.best, out / f"{stem}_best.csv")
        rows.append({
            "metric": metric,
            "algo": algo,
            "seed": seed,
            "initial_cost": res.initial_cost,
            "final_cost": res.best_cost,
            "iterations": res.iterations,
            "converged": res.converged,
            "iterations_to_threshold": iterations_to_threshold(res.tracked, cfg.threshold),
            "trace": f"{stem}_trace.csv",
            "trajectory": f"{stem}_best.csv",
        })
        log.info("%s/%s seed %d: %.6g -> %.6g", metric, algo, seed, res.initial_cost, res.best_cost)
    report = {
        "threshold": cfg.threshold,
        "n_points": cfg.n_points,
        "dt": cfg.dt,
        "demo": "demo.csv",
        "initial": "initial.csv",
        "runs": rows,
        "medians": _medians(rows),
    }
    (out / "summary.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def _medians(rows) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(f"{r['metric']}/{r['algo']}", []).append(r)
    med = {}
    for key, rs in groups.items():
        its = [r["iterations_to_threshold"] for r in rs if r["iterations_to_threshold"] is not None]
        med[key] = {
            "final_cost": float(np.median([r["final_cost"] for r in rs])),
            "iterations_to_threshold": float(np.median(its)) if its else None,
        }
    return med


def write_config_template(path) -> None:
    """Write an experiment file listing every key at its default value."""
    d = ExperimentConfig()
    o = d.optimizer
    text = f"""[experiment]
algos = {", ".join(d.algos)}
seeds = {", ".join(map(str, d.seeds))}
n_points = {d.n_points}
dt = {d.dt}
output = {d.output}
threshold = {d.threshold}
workers = {d.workers}
# chain = chain.ini
# initial = initial.csv

[demo]
shape = {d.demo.shape}
npoints = {d.demo.npoints}
size = {d.demo.size}
noise = {d.demo.noise}
seed = {d.demo.seed}
center = {", ".join(map(str, d.demo.center))}
plane = {d.demo.plane}
filter = {d.demo.filter}
gamma = {d.demo.gamma}
# file = demo.csv

[costs]
metrics = {", ".join(d.costs.metrics)}
imitation_weight = {d.costs.imitation_weight}
control_weight = {d.costs.control_weight}
lambda = {d.costs.lam}
per_joint_control = {str(d.costs.per_joint_control).lower()}

# [term obstacle]
# kind = obstacle-sphere
# center = 0.45, 0.0, 0.6
# radius = 0.05
# weight = 100

[optimizer]
K = {o.K}
n = {o.n}
max_iters = {o.max_iters}
window = {o.window}
tol = {o.tol}
check_convergence = {str(o.check_convergence).lower()}
p_refresh_period = {o.p_refresh_period}
noise_scale = {o.noise_scale}
noise_decay = {o.noise_decay}
step_scale = {o.step_scale}
rescale_costs = {str(o.rescale_costs).lower()}
rescale_h = {o.rescale_h}
"""
    Path(path).write_text(text)

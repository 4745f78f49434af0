"""STODI and its STOMP baseline.

Both share one rollout update: perturb a trajectory with ``K`` noise
matrices, turn each timestep's rollout costs into softmax weights, average
the noise with those weights and move the trajectory by ``R^-1`` times that
average. STOMP applies it to a single iterate. STODI keeps three iterates
(best, distal exploration, proximal search) and a small set of cheap
trajectories that replace the most expensive rollouts.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .costs import CostSpec, evaluate_batch
from .kinematics import KinematicChain
from .sampler import NoiseBatch, sample_noise
from .trajcore import DEFAULT_DT, JointTrajectory, PrecisionMatrix, as_points

log = logging.getLogger(__name__)

ALGORITHMS = ("stomp", "stodi")


@dataclass(frozen=True)
class StodiConfig:
    K: int = 20
    n: Optional[int] = None  # reuse-set size; None means K // 2
    max_iters: int = 500
    window: int = 25
    tol: float = 1e-4
    check_convergence: bool = True
    p_refresh_period: int = 10
    seed: int = 0
    noise_scale: float = 1.0
    noise_decay: float = 1.0
    step_scale: float = 1.0
    rescale_costs: bool = False
    rescale_h: float = 10.0

    def __post_init__(self):
        if self.n is None:
            object.__setattr__(self, "n", self.K // 2)
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0 <= self.n < self.K:
            raise ValueError(f"reuse-set size n={self.n} must satisfy 0 <= n < K={self.K}")
        if self.max_iters < 0 or self.window < 1 or self.p_refresh_period < 1:
            raise ValueError("max_iters >= 0, window >= 1 and p_refresh_period >= 1 required")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if not self.noise_scale > 0 or not self.noise_decay > 0:
            raise ValueError("noise_scale and noise_decay must be > 0")

    def noise_at(self, it: int) -> float:
        return self.noise_scale * self.noise_decay**it


def rollout_weights(S: np.ndarray, lam: float, rescale: bool = False, h: float = 10.0) -> np.ndarray:
    """Per-timestep softmax of ``-S / lam`` over the rollout axis.

    With ``rescale`` each column is first mapped to [0, 1] and the
    temperature becomes ``1 / h``.
    """
    S = np.asarray(S, dtype=float)
    if rescale:
        lo = S.min(axis=0)
        span = S.max(axis=0) - lo
        span[span == 0] = 1.0
        logits = -h * (S - lo) / span
    else:
        logits = -S / lam
    logits = logits - logits.max(axis=0)
    E = np.exp(logits)
    P = E / E.sum(axis=0)
    if not np.all(np.isfinite(P)):
        raise FloatingPointError("rollout probability weights are not finite")
    return P


@dataclass
class ReuseEntry:
    traj: Optional[np.ndarray]
    cost: float = math.inf


@dataclass
class PassInfo:
    """Diagnostics of one rollout update."""

    rollout_costs: np.ndarray
    replaced: list = field(default_factory=list)  # rollout indices swapped for reuse entries
    weights: Optional[np.ndarray] = None


def _rollout_update(
    theta: np.ndarray,
    batch: NoiseBatch,
    spec: CostSpec,
    R: PrecisionMatrix,
    chain: KinematicChain,
    dt: float,
    cfg: StodiConfig,
    reuse: Optional[list] = None,
    n_replace: int = 0,
) -> tuple[np.ndarray, float, PassInfo]:
    eps = np.array(batch.eps)
    if eps.shape[1:] != theta.shape:
        raise ValueError(f"noise batch {eps.shape[1:]} does not match trajectory {theta.shape}")
    rollouts = theta[None] + eps
    S, Q = evaluate_batch(rollouts, spec, R, chain, dt)
    replaced = []
    if reuse and n_replace > 0:
        stored = sorted((e for e in reuse if e.traj is not None), key=lambda e: e.cost)
        worst = np.argsort(-Q, kind="stable")[:n_replace]
        for k, entry in zip(worst, stored):
            if entry.cost < Q[k]:
                rollouts[k] = entry.traj
                eps[k] = entry.traj - theta
                Q[k] = entry.cost
                replaced.append(int(k))
        if replaced:
            S[replaced] = evaluate_batch(rollouts[replaced], spec, R, chain, dt)[0]
    P = rollout_weights(S, spec.lam, cfg.rescale_costs, cfg.rescale_h)
    dtheta = np.einsum("kn,knm->nm", P[:, 1:-1], eps[:, 1:-1])
    new = theta.copy()
    new[1:-1] += cfg.step_scale * (R.Rinv @ dtheta)
    q_new = float(evaluate_batch(new[None], spec, R, chain, dt)[1][0])
    return new, q_new, PassInfo(Q, replaced, P)


def stomp_step(
    theta,
    batch: NoiseBatch,
    spec: CostSpec,
    R: PrecisionMatrix,
    chain: KinematicChain,
    cfg: StodiConfig = StodiConfig(),
) -> tuple[JointTrajectory, float]:
    """One plain STOMP update; endpoints are left untouched."""
    dt = getattr(theta, "dt", DEFAULT_DT)
    pts = np.array(as_points(theta))
    new, q, _ = _rollout_update(pts, batch, spec, R, chain, dt, cfg)
    return JointTrajectory(new, dt), q


@dataclass
class OptimizerState:
    theta_b: np.ndarray
    theta_d: np.ndarray
    theta_p: np.ndarray
    q_b: float
    q_d: float
    q_p: float
    reused: list
    dt: float
    iter: int = 0
    q_b_trace: list = field(default_factory=list)
    q_d_trace: list = field(default_factory=list)
    q_p_trace: list = field(default_factory=list)

    @classmethod
    def initial(cls, init: JointTrajectory, cfg: StodiConfig, spec, R, chain) -> "OptimizerState":
        pts = np.array(init.points)
        _, Q = evaluate_batch(pts[None], spec, R, chain, init.dt)
        q0 = float(Q[0])
        return cls(
            theta_b=pts.copy(), theta_d=pts.copy(), theta_p=pts.copy(),
            q_b=q0, q_d=q0, q_p=q0,
            reused=[ReuseEntry(None) for _ in range(cfg.n)],
            dt=init.dt,
        )


def stodi_iteration(
    state: OptimizerState,
    cfg: StodiConfig,
    spec: CostSpec,
    R: PrecisionMatrix,
    chain: KinematicChain,
    batch: Optional[NoiseBatch] = None,
) -> OptimizerState:
    """Advance ``state`` by one STODI iteration (in place) and return it.

    One noise batch serves both the distal and the proximal pass.
    """
    M = state.theta_d.shape[1]
    if batch is None:
        batch = sample_noise(R, cfg.K, M, cfg.seed, cfg.noise_at(state.iter), stream=state.iter)
    for name in ("d", "p"):
        theta = getattr(state, "theta_" + name)
        new, q, _ = _rollout_update(theta, batch, spec, R, chain, state.dt, cfg, state.reused, cfg.n)
        setattr(state, "theta_" + name, new)
        setattr(state, "q_" + name, q)
        if state.reused:
            m = max(range(len(state.reused)), key=lambda i: state.reused[i].cost)
            if q < state.reused[m].cost:
                state.reused[m] = ReuseEntry(new.copy(), q)
    if state.q_p < state.q_d:
        best_q, best = state.q_p, state.theta_p
    else:
        best_q, best = state.q_d, state.theta_d
    if best_q < state.q_b:
        state.q_b, state.theta_b = best_q, best.copy()
    state.iter += 1
    if state.iter % cfg.p_refresh_period == 0:
        state.theta_p, state.q_p = state.theta_b.copy(), state.q_b
    state.q_b_trace.append(state.q_b)
    state.q_d_trace.append(state.q_d)
    state.q_p_trace.append(state.q_p)
    return state


@dataclass
class RunResult:
    algo: str
    best: JointTrajectory
    best_cost: float
    initial_cost: float
    traces: dict
    iterations: int
    converged: bool

    @property
    def tracked(self) -> list:
        """The best-so-far cost trace used for convergence and comparisons."""
        return self.traces["q_b" if self.algo == "stodi" else "q_best"]


def _converged(trace: list, cfg: StodiConfig) -> bool:
    if not cfg.check_convergence or len(trace) <= cfg.window:
        return False
    old, new = trace[-cfg.window - 1], trace[-1]
    rel = (old - new) / abs(old) if old != 0 else 0.0
    return rel < cfg.tol


def run(
    initial: JointTrajectory,
    cfg: StodiConfig,
    spec: CostSpec,
    R: PrecisionMatrix,
    chain: KinematicChain,
    algo: str = "stodi",
) -> RunResult:
    """Optimize from ``initial`` until ``max_iters`` or relative stagnation.

    Iteration ``t`` of either algorithm draws noise stream ``t`` of
    ``cfg.seed``, so STOMP and STODI runs with the same seed see identical
    noise.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    if initial.n_points != R.n_points:
        raise ValueError(f"initial trajectory has {initial.n_points} rows, R expects {R.n_points}")
    if algo == "stodi":
        return _run_stodi(initial, cfg, spec, R, chain)
    return _run_stomp(initial, cfg, spec, R, chain)


def _run_stodi(initial, cfg, spec, R, chain) -> RunResult:
    state = OptimizerState.initial(initial, cfg, spec, R, chain)
    q0 = state.q_b
    converged = False
    while state.iter < cfg.max_iters:
        stodi_iteration(state, cfg, spec, R, chain)
        if _converged(state.q_b_trace, cfg):
            converged = True
            break
    log.debug("stodi seed=%d: %d iterations, Q_b %.6g -> %.6g", cfg.seed, state.iter, q0, state.q_b)
    traces = {"q_b": state.q_b_trace, "q_d": state.q_d_trace, "q_p": state.q_p_trace}
    return RunResult("stodi", JointTrajectory(state.theta_b, initial.dt), state.q_b, q0,
                     traces, state.iter, converged)


def _run_stomp(initial, cfg, spec, R, chain) -> RunResult:
    theta = np.array(initial.points)
    _, Q = evaluate_batch(theta[None], spec, R, chain, initial.dt)
    q0 = float(Q[0])
    best, best_q = theta.copy(), q0
    q_trace, best_trace = [], []
    converged = False
    M = theta.shape[1]
    for it in range(cfg.max_iters):
        batch = sample_noise(R, cfg.K, M, cfg.seed, cfg.noise_at(it), stream=it)
        theta, q, _ = _rollout_update(theta, batch, spec, R, chain, initial.dt, cfg)
        if q < best_q:
            best, best_q = theta.copy(), q
        q_trace.append(q)
        best_trace.append(best_q)
        if _converged(best_trace, cfg):
            converged = True
            break
    log.debug("stomp seed=%d: %d iterations, best %.6g -> %.6g", cfg.seed, len(q_trace), q0, best_q)
    return RunResult("stomp", JointTrajectory(best, initial.dt), best_q, q0,
                     {"q": q_trace, "q_best": best_trace}, len(q_trace), converged)


def write_trace(result: RunResult, path) -> None:
    """CSV trace: ``iter,q_b,q_d,q_p`` for STODI, ``iter,q,q_best`` for STOMP."""
    cols = ["q_b", "q_d", "q_p"] if result.algo == "stodi" else ["q", "q_best"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter"] + cols)
        for i, vals in enumerate(zip(*(result.traces[c] for c in cols))):
            w.writerow([i] + [repr(float(v)) for v in vals])

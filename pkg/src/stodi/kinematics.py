"""Position-only forward/inverse kinematics for a 7-joint serial arm.

Links follow the modified (Craig) DH convention: the transform from frame
``i-1`` to frame ``i`` is ``RotX(alpha) TransX(a) RotZ(theta) TransZ(d)``.
"""

from __future__ import annotations

import configparser
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trajcore import CartesianPath, JointTrajectory, as_points

N_JOINTS = 7

# Franka Panda, modified DH: (a, d, alpha, theta_offset)
PANDA_DH = (
    (0.0, 0.333, 0.0, 0.0),
    (0.0, 0.0, -np.pi / 2, 0.0),
    (0.0, 0.316, np.pi / 2, 0.0),
    (0.0825, 0.0, np.pi / 2, 0.0),
    (-0.0825, 0.384, -np.pi / 2, 0.0),
    (0.0, 0.0, np.pi / 2, 0.0),
    (0.088, 0.0, np.pi / 2, 0.0),
)
PANDA_LIMITS = (
    (-2.8973, 2.8973),
    (-1.7628, 1.7628),
    (-2.8973, 2.8973),
    (-3.0718, -0.0698),
    (-2.8973, 2.8973),
    (-0.0175, 3.7525),
    (-2.8973, 2.8973),
)
PANDA_FLANGE = 0.107
PANDA_READY = (0.0, -np.pi / 4, 0.0, -3 * np.pi / 4, 0.0, np.pi / 2, np.pi / 4)


@dataclass(frozen=True)
class KinematicChain:
    dh_rows: np.ndarray  # (7, 4): a, d, alpha, theta_offset
    joint_limits: np.ndarray  # (7, 2): lower, upper
    tool_offset: float = 0.0  # end-effector distance along the last joint axis

    def __post_init__(self):
        dh = np.array(self.dh_rows, dtype=float)
        lim = np.array(self.joint_limits, dtype=float)
        if dh.shape != (N_JOINTS, 4):
            raise ValueError(f"expected {N_JOINTS} DH rows of (a, d, alpha, offset), got {dh.shape}")
        if lim.shape != (N_JOINTS, 2):
            raise ValueError(f"expected {N_JOINTS} (lower, upper) limit pairs, got {lim.shape}")
        if not np.all(lim[:, 0] < lim[:, 1]):
            raise ValueError("every joint needs lower < upper")
        dh.setflags(write=False)
        lim.setflags(write=False)
        object.__setattr__(self, "dh_rows", dh)
        object.__setattr__(self, "joint_limits", lim)
        object.__setattr__(self, "tool_offset", float(self.tool_offset))

    @property
    def total_length(self) -> float:
        """Sum of all link lengths; bounds the reach and the FK Lipschitz constant."""
        return float(np.abs(self.dh_rows[:, :2]).sum() + abs(self.tool_offset))

    def within_limits(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.all((q >= self.joint_limits[:, 0]) & (q <= self.joint_limits[:, 1]), axis=-1)

    def clip(self, q) -> np.ndarray:
        return np.clip(q, self.joint_limits[:, 0], self.joint_limits[:, 1])

    def center(self) -> np.ndarray:
        return self.joint_limits.mean(axis=1)


def panda_chain() -> KinematicChain:
    """The built-in default chain."""
    return KinematicChain(np.array(PANDA_DH), np.array(PANDA_LIMITS), PANDA_FLANGE)


def load_chain(path) -> KinematicChain:
    """Read a chain from an INI file.

    Sections ``[joint0]`` .. ``[joint6]`` carry ``a``, ``d``, ``alpha``,
    ``offset`` (default 0), ``lower`` and ``upper``; an optional ``[tool]``
    section carries ``offset``.
    """
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    dh, lim = [], []
    for i in range(N_JOINTS):
        sec = f"joint{i}"
        if not cp.has_section(sec):
            raise ValueError(f"{path}: missing section [{sec}]")
        s = cp[sec]
        dh.append((s.getfloat("a"), s.getfloat("d"), s.getfloat("alpha"), s.getfloat("offset", 0.0)))
        lim.append((s.getfloat("lower"), s.getfloat("upper")))
    tool = cp.getfloat("tool", "offset", fallback=0.0)
    return KinematicChain(np.array(dh), np.array(lim), tool)


def save_chain(chain: KinematicChain, path) -> None:
    cp = configparser.ConfigParser()
    for i, ((a, d, alpha, off), (lo, hi)) in enumerate(zip(chain.dh_rows, chain.joint_limits)):
        cp[f"joint{i}"] = {
            "a": repr(float(a)), "d": repr(float(d)), "alpha": repr(float(alpha)),
            "offset": repr(float(off)), "lower": repr(float(lo)), "upper": repr(float(hi)),
        }
    cp["tool"] = {"offset": repr(float(chain.tool_offset))}
    with Path(path).open("w") as fh:
        cp.write(fh)


def fk_batch(chain: KinematicChain, q) -> np.ndarray:
    """End-effector positions for joint configurations of shape ``(..., 7)``.

    No limit checks; this is the hot path used by cost evaluation.
    """
    q = np.asarray(q, dtype=float)
    lead = q.shape[:-1]
    if q.shape[-1] != N_JOINTS:
        raise ValueError(f"expected {N_JOINTS} joint values, got {q.shape[-1]}")
    q = q.reshape(-1, N_JOINTS)
    B = q.shape[0]
    T = np.broadcast_to(np.eye(4), (B, 4, 4)).copy()
    L = np.zeros((B, 4, 4))
    L[:, 3, 3] = 1.0
    for i, (a, d, alpha, off) in enumerate(chain.dh_rows):
        th = q[:, i] + off
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(alpha), np.sin(alpha)
        L[:, 0, 0] = ct
        L[:, 0, 1] = -st
        L[:, 0, 2] = 0.0
        L[:, 0, 3] = a
        L[:, 1, 0] = st * ca
        L[:, 1, 1] = ct * ca
        L[:, 1, 2] = -sa
        L[:, 1, 3] = -d * sa
        L[:, 2, 0] = st * sa
        L[:, 2, 1] = ct * sa
        L[:, 2, 2] = ca
        L[:, 2, 3] = d * ca
        T = T @ L
    pos = T[:, :3, 3] + chain.tool_offset * T[:, :3, 2]
    return pos.reshape(lead + (3,))


def _warn_limits(chain: KinematicChain, q) -> None:
    if not np.all(chain.within_limits(q)):
        warnings.warn("joint configuration outside joint limits", RuntimeWarning, stacklevel=3)


def fk_point(chain: KinematicChain, q) -> np.ndarray:
    """End-effector position (meters) of a single 7-vector configuration."""
    q = np.asarray(q, dtype=float)
    if q.shape != (N_JOINTS,):
        raise ValueError(f"expected a {N_JOINTS}-vector, got shape {q.shape}")
    _warn_limits(chain, q)
    return fk_batch(chain, q)


def fk_path(chain: KinematicChain, traj) -> CartesianPath:
    pts = as_points(traj)
    if pts.ndim != 2 or pts.shape[1] != N_JOINTS:
        raise ValueError(f"forward kinematics needs M = {N_JOINTS} joints, got shape {pts.shape}")
    _warn_limits(chain, pts)
    return CartesianPath(fk_batch(chain, pts))


class IKError(RuntimeError):
    """No joint configuration found; ``residual`` is the best distance reached (m)."""

    def __init__(self, message: str, residual: float, q_best: np.ndarray):
        super().__init__(f"{message} (best residual {residual:.3g} m)")
        self.residual = residual
        self.q_best = q_best


def position_jacobian(chain: KinematicChain, q, h: float = 1e-6) -> np.ndarray:
    """3x7 position Jacobian by central differences."""
    q = np.asarray(q, dtype=float)
    E = np.eye(N_JOINTS) * h
    p = fk_batch(chain, np.concatenate([q + E, q - E]))
    return ((p[:N_JOINTS] - p[N_JOINTS:]) / (2 * h)).T


def _dls(chain, target, q, damping, max_step, max_iters, tol, respect_limits):
    best_q, best_err = q.copy(), np.inf
    lam2 = damping**2
    for _ in range(max_iters + 1):
        e = target - fk_batch(chain, q)
        err = float(np.linalg.norm(e))
        if err < best_err:
            best_q, best_err = q.copy(), err
        if err <= tol:
            break
        J = position_jacobian(chain, q)
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(3), e)
        biggest = np.abs(dq).max()
        if biggest > max_step:
            dq *= max_step / biggest
        q = q + dq
        if respect_limits:
            q = chain.clip(q)
    return best_q, best_err


def ik_point(
    chain: KinematicChain,
    target,
    seed=None,
    *,
    damping: float = 0.05,
    max_step: float = 0.2,
    max_iters: int = 200,
    tol: float = 1e-5,
    respect_limits: bool = True,
    restarts: int = 4,
) -> np.ndarray:
    """Damped least-squares position IK.

    Each attempt runs at most ``max_iters`` iterations. If the seed attempt
    stalls, up to ``restarts`` further attempts start from configurations
    drawn uniformly inside the joint limits with a fixed generator, so the
    result is deterministic. Raises :class:`IKError` when no attempt reaches
    ``tol``.
    """
    target = np.asarray(target, dtype=float)
    q0 = np.array(PANDA_READY if seed is None else seed, dtype=float)
    seeds = [chain.clip(q0) if respect_limits else q0]
    if restarts > 0 and np.linalg.norm(target) <= chain.total_length:
        rng = np.random.default_rng(0)
        lo, hi = chain.joint_limits.T
        seeds.extend(rng.uniform(lo, hi) for _ in range(restarts))
    best_q, best_err = seeds[0], np.inf
    for q in seeds:
        q, err = _dls(chain, target, q, damping, max_step, max_iters, tol, respect_limits)
        if err <= tol:
            return q
        if err < best_err:
            best_q, best_err = q, err
    raise IKError(f"IK did not converge to {target.tolist()}", best_err, best_q)


def ik_path(chain: KinematicChain, path, seed=None, **kw) -> JointTrajectory:
    """Point-by-point IK, each solve seeded with the previous solution."""
    pts = as_points(path)
    out = []
    q = seed
    for p in pts:
        q = ik_point(chain, p, q, **kw)
        out.append(q)
    return JointTrajectory(np.array(out))

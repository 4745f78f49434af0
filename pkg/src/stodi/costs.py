"""Trajectory cost: per-row state terms, a demonstration-imitation term and control cost.

The imitation distance is a whole-trajectory quantity. It is spread evenly
over the rows (``q_d / N`` each) so that the per-timestep probability
weights of the optimizer still see it, and summing the rows recovers the
full distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .kinematics import KinematicChain, fk_batch
from .metrics import METRIC_KINDS, DtwConfig, path_distance_many
from .trajcore import DEFAULT_DT, CartesianPath, JointTrajectory, PrecisionMatrix, as_points


@dataclass(frozen=True)
class ObstacleSphere:
    """Hinge penalty ``weight * max(0, radius - distance)`` on the end effector."""

    center: tuple
    radius: float
    weight: float = 1.0
    kind = "obstacle-sphere"

    def rows(self, ee: np.ndarray, dt: float) -> np.ndarray:
        d = np.linalg.norm(ee - np.asarray(self.center, dtype=float), axis=-1)
        return self.weight * np.maximum(0.0, self.radius - d)


@dataclass(frozen=True)
class VelocityMagnitude:
    """``weight * (speed - target_speed)**2`` with end-effector speed from finite differences."""

    target_speed: float
    weight: float = 1.0
    kind = "velocity-magnitude"

    def rows(self, ee: np.ndarray, dt: float) -> np.ndarray:
        speed = np.linalg.norm(np.gradient(ee, dt, axis=-2), axis=-1)
        return self.weight * (speed - self.target_speed) ** 2


StateTerm = Union[ObstacleSphere, VelocityMagnitude]


def make_term(kind: str, **params) -> Optional[StateTerm]:
    if kind == "none":
        return None
    if kind == ObstacleSphere.kind:
        return ObstacleSphere(tuple(params["center"]), float(params["radius"]), float(params.get("weight", 1.0)))
    if kind == VelocityMagnitude.kind:
        return VelocityMagnitude(float(params["target_speed"]), float(params.get("weight", 1.0)))
    raise ValueError(f"unknown state cost term {kind!r}")


@dataclass(frozen=True)
class Imitation:
    metric: str
    weight: float
    demo: CartesianPath
    dtw: DtwConfig = DtwConfig()

    def __post_init__(self):
        if self.metric not in METRIC_KINDS:
            raise ValueError(f"unknown imitation metric {self.metric!r}; choose from {METRIC_KINDS}")
        if self.weight < 0:
            raise ValueError("imitation weight must be >= 0")
        if not isinstance(self.demo, CartesianPath):
            object.__setattr__(self, "demo", CartesianPath(self.demo))


@dataclass(frozen=True)
class CostSpec:
    state_terms: Sequence[StateTerm] = field(default_factory=tuple)
    imitation: Optional[Imitation] = None
    control_weight: float = 0.0
    lam: float = 10.0  # softmax temperature of the rollout weights
    per_joint_control: bool = False

    def __post_init__(self):
        object.__setattr__(self, "state_terms", tuple(t for t in self.state_terms if t is not None))
        for t in self.state_terms:
            if not isinstance(t, (ObstacleSphere, VelocityMagnitude)):
                raise ValueError(f"unknown state cost term {t!r}")
            if t.weight < 0:
                raise ValueError(f"negative weight on {t.kind} term")
        if self.control_weight < 0:
            raise ValueError("control_weight must be >= 0")
        if not self.lam > 0:
            raise ValueError("lam must be > 0")


def state_cost_rows_batch(
    trajs: np.ndarray, spec: CostSpec, chain: KinematicChain, dt: float = DEFAULT_DT
) -> np.ndarray:
    """Per-row state costs ``S`` of shape ``(K, N)`` for a ``(K, N, M)`` stack."""
    trajs = np.asarray(trajs, dtype=float)
    K, N, _ = trajs.shape
    S = np.zeros((K, N))
    if not spec.state_terms and spec.imitation is None:
        return S
    ee = fk_batch(chain, trajs)
    for term in spec.state_terms:
        S += term.rows(ee, dt)
    im = spec.imitation
    if im is not None and im.weight > 0:
        qd = path_distance_many(im.metric, ee, im.demo, im.dtw)
        S += (im.weight * qd / N)[:, None]
    return S


def control_cost_batch(trajs: np.ndarray, R: PrecisionMatrix, per_joint: bool = False) -> np.ndarray:
    interior = np.asarray(trajs, dtype=float)[:, 1:-1]
    if interior.shape[1] != R.size:
        raise ValueError(f"trajectories with {interior.shape[1] + 2} rows do not match R for {R.n_points}")
    if per_joint:
        return 0.5 * np.einsum("kim,ij,kjm->k", interior, R.R, interior)
    s = interior.sum(axis=2)
    return 0.5 * np.einsum("ki,ij,kj->k", s, R.R, s)


def evaluate_batch(
    trajs: np.ndarray, spec: CostSpec, R: PrecisionMatrix, chain: KinematicChain, dt: float = DEFAULT_DT
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S, Q)``: per-row state costs and total costs of every trajectory."""
    S = state_cost_rows_batch(trajs, spec, chain, dt)
    Q = S.sum(axis=1)
    if spec.control_weight > 0:
        Q = Q + spec.control_weight * control_cost_batch(trajs, R, spec.per_joint_control)
    return S, Q


def _single(traj) -> tuple[np.ndarray, float]:
    dt = traj.dt if isinstance(traj, JointTrajectory) else DEFAULT_DT
    return as_points(traj)[None], dt


def state_cost_rows(traj, spec: CostSpec, chain: KinematicChain) -> np.ndarray:
    pts, dt = _single(traj)
    return state_cost_rows_batch(pts, spec, chain, dt)[0]


def total_cost(traj, spec: CostSpec, R: PrecisionMatrix, chain: KinematicChain) -> float:
    """Sum of the state rows plus weighted control cost."""
    pts, dt = _single(traj)
    return float(evaluate_batch(pts, spec, R, chain, dt)[1][0])

"""Trajectory containers, the control-cost precision matrix and CSV I/O."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

DEFAULT_DT = 0.1  # 10 Hz control frequency

_JOINT_HEADER = re.compile(r"^j(\d+)$")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointTrajectory:
    """Joint positions sampled every ``dt`` seconds, shape ``(N, M)``.

    The first and last rows are the fixed start and goal configurations;
    only the interior rows are ever optimized.
    """

    points: np.ndarray
    dt: float = DEFAULT_DT

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"joint trajectory must be 2-D, got shape {pts.shape}")
        if pts.shape[0] < 3:
            raise ValueError(f"joint trajectory needs N >= 3 rows, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("joint trajectory contains non-finite entries")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_joints(self) -> int:
        return self.points.shape[1]

    @property
    def duration(self) -> float:
        return (self.n_points - 1) * self.dt

    def with_points(self, points) -> "JointTrajectory":
        return JointTrajectory(points, self.dt)

    @classmethod
    def linear(cls, start, goal, n_points: int, dt: float = DEFAULT_DT) -> "JointTrajectory":
        """Straight-line interpolation in joint space between two configurations."""
        start = np.asarray(start, dtype=float)
        goal = np.asarray(goal, dtype=float)
        s = np.linspace(0.0, 1.0, n_points)[:, None]
        return cls((1.0 - s) * start + s * goal, dt)


@dataclass(frozen=True)
class CartesianPath:
    """End-effector positions in meters, shape ``(N, 3)`` with columns x, y, z."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"Cartesian path must have shape (N, 3), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("Cartesian path is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("Cartesian path contains non-finite entries")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.shape[0]


Trajectory = Union[JointTrajectory, CartesianPath]


def as_points(x) -> np.ndarray:
    """Return the raw point matrix of a container or array-like."""
    if isinstance(x, (JointTrajectory, CartesianPath)):
        return x.points
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class PrecisionMatrix:
    """Control-cost matrix ``R`` over interior waypoints plus its inverse.

    ``factor`` satisfies ``factor @ factor.T == Rinv`` and is what the noise
    sampler multiplies standard normals by.
    """

    R: np.ndarray
    Rinv: np.ndarray
    factor: np.ndarray
    dt: float

    @property
    def size(self) -> int:
        return self.R.shape[0]

    @property
    def n_points(self) -> int:
        return self.R.shape[0] + 2

    @classmethod
    def from_matrix(cls, R, dt: float = 1.0, eig_floor: float = 1e-12) -> "PrecisionMatrix":
        """Factorize an arbitrary symmetric PSD ``R``.

        Eigenvalues below ``eig_floor`` (relative to the largest) are treated
        as zero, giving a pseudo-inverse on rank-deficient input.
        """
        R = np.asarray(R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError(f"R must be square, got shape {R.shape}")
        R = 0.5 * (R + R.T)
        w, V = np.linalg.eigh(R)
        if w.size and w.min() < -1e-9 * max(abs(w.max()), 1.0):
            raise np.linalg.LinAlgError("R is not positive semi-definite")
        keep = w > eig_floor * max(w.max(), 0.0)
        inv_sqrt = np.zeros_like(w)
        inv_sqrt[keep] = 1.0 / np.sqrt(w[keep])
        factor = V * inv_sqrt
        Rinv = factor @ factor.T
        # Prefer the direct inverse when R is well conditioned; it is more accurate.
        if np.all(keep):
            Rinv = np.linalg.inv(R)
            Rinv = 0.5 * (Rinv + Rinv.T)
        return cls(_frozen(R), _frozen(Rinv), _frozen(factor), float(dt))


def finite_difference_matrix(n_points: int, dt: float = 1.0) -> np.ndarray:
    """Second-order difference operator on the interior waypoints.

    Shape ``(n_int + 2, n_int)``: the interior values padded with two zeros on
    each side, so the start/goal transitions are penalized too.
    """
    n_int = n_points - 2
    A = np.zeros((n_int + 2, n_int))
    for i in range(n_int):
        A[i, i] = 1.0
        A[i + 1, i] = -2.0
        A[i + 2, i] = 1.0
    return A / dt**2


def build_precision_matrix(n_points: int, dt: float = DEFAULT_DT) -> PrecisionMatrix:
    """Squared-acceleration precision matrix ``R = A.T @ A`` for ``n_points`` waypoints."""
    if n_points < 3:
        raise ValueError(f"need at least 3 waypoints, got {n_points}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    A = finite_difference_matrix(n_points, dt)
    return PrecisionMatrix.from_matrix(A.T @ A, dt=dt)


def control_cost(traj, R: PrecisionMatrix, per_joint: bool = False) -> float:
    """Quadratic control cost ``0.5 * s.T @ R @ s`` on the interior rows.

    By default ``s`` is the row sum across joints, which couples the joints.
    ``per_joint=True`` instead sums the quadratic form over each joint column.
    """
    pts = as_points(traj)
    if pts.ndim != 2 or pts.shape[0] != R.n_points:
        raise ValueError(
            f"trajectory with {pts.shape[0] if pts.ndim else 0} rows does not match "
            f"precision matrix for {R.n_points} waypoints"
        )
    interior = pts[1:-1]
    if per_joint:
        return float(0.5 * np.einsum("im,ij,jm->", interior, R.R, interior))
    s = interior.sum(axis=1)
    return float(0.5 * s @ R.R @ s)


class TrajectoryFormatError(ValueError):
    """Malformed trajectory CSV; ``line`` is the 1-based offending line."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _header_kind(cells: list[str]) -> str | None:
    if cells == ["x", "y", "z"]:
        return "cartesian"
    idx = []
    for c in cells:
        m = _JOINT_HEADER.match(c)
        if not m:
            return None
        idx.append(int(m.group(1)))
    if idx and idx == list(range(len(idx))):
        return "joint"
    return None


def read_trajectory(path, dt: float = DEFAULT_DT) -> Trajectory:
    """Load a CSV trajectory; the header decides the payload type.

    ``x,y,z`` gives a :class:`CartesianPath`, ``j0,...,j{M-1}`` a
    :class:`JointTrajectory` sampled at ``dt``.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TrajectoryFormatError(path, 1, "empty file, expected a header row")
    header = [c.strip() for c in rows[0]]
    kind = _header_kind(header)
    if kind is None:
        raise TrajectoryFormatError(path, 1, f"unrecognized header {','.join(header)!r}")
    width = len(header)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise TrajectoryFormatError(
                path, lineno, f"expected {width} columns, found {len(row)}"
            )
        try:
            data.append([float(c) for c in row])
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise TrajectoryFormatError(path, lineno, f"non-numeric cell {bad!r}") from None
    if not data:
        raise TrajectoryFormatError(path, len(rows) + 1, "no data rows")
    pts = np.array(data, dtype=float)
    if kind == "cartesian":
        return CartesianPath(pts)
    return JointTrajectory(pts, dt)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_trajectory(traj, path) -> None:
    """Write a trajectory as CSV with shortest round-trip float formatting."""
    if isinstance(traj, CartesianPath):
        header = ["x", "y", "z"]
    else:
        pts = as_points(traj)
        if pts.ndim != 2:
            raise ValueError("trajectory must be 2-D")
        header = [f"j{i}" for i in range(pts.shape[1])]
    pts = as_points(traj)
    lines = [",".join(header)]
    lines.extend(",".join(repr(float(v)) for v in row) for row in pts)
    Path(path).write_text("\n".join(lines) + "\n")

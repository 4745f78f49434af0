"""Frequency-domain clean-up of noisy demonstration paths.

All filters transform each Cartesian column separately with a 1-D DFT,
edit the bins and transform back. By default the result is re-anchored:
a linear ramp is added so the first and last points coincide with the
input's, which keeps filtered demonstrations usable as imitation targets.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .trajcore import CartesianPath, as_points

DEFAULT_GAMMA = 20.0


class FilterKind(str, enum.Enum):
    SCALE = "scale"
    GAIN = "gain"
    BACKSTITCH = "backstitch"


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind = FilterKind.GAIN
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


class DegenerateInputError(ValueError):
    pass


def _points(path) -> np.ndarray:
    pts = np.asarray(as_points(path), dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError(f"expected a non-empty (N, d) path, got shape {pts.shape}")
    return pts


def _inverse(F: np.ndarray) -> np.ndarray:
    out = np.fft.ifft(F, axis=0)
    residue = np.abs(out.imag).max()
    if residue > 1e-9 * max(1.0, np.abs(out.real).max()):
        raise FloatingPointError(f"inverse transform left imaginary residue {residue:.3g}")
    return out.real


def _symmetric_magnitude(F: np.ndarray) -> np.ndarray:
    # |F[k]| and |F[-k]| agree analytically; average them so thresholding
    # never splits a conjugate pair.
    mag = np.abs(F)
    mirror = mag[(-np.arange(F.shape[0])) % F.shape[0]]
    return 0.5 * (mag + mirror)


def anchor_endpoints(out: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Add the linear ramp that moves ``out``'s endpoints onto ``reference``'s."""
    t = np.linspace(0.0, 1.0, out.shape[0])[:, None]
    return out + (1.0 - t) * (reference[0] - out[0]) + t * (reference[-1] - out[-1])


def _finish(out, pts, anchor):
    if anchor:
        out = anchor_endpoints(out, pts)
    return CartesianPath(out) if out.shape[1] == 3 else out


def filter_scale(path, anchor: bool = True):
    """Divide every bin of a column by that column's largest bin magnitude."""
    pts = _points(path)
    F = np.fft.fft(pts, axis=0)
    peak = np.abs(F).max(axis=0)
    if np.any(peak == 0):
        raise DegenerateInputError("a column is identically zero; nothing to normalize by")
    return _finish(_inverse(F / peak), pts, anchor)


def _gain(pts: np.ndarray, gamma: float) -> np.ndarray:
    F = np.fft.fft(pts, axis=0)
    weak = _symmetric_magnitude(F) <= gamma
    F[weak] /= gamma
    return _inverse(F)


def filter_gain(path, gamma: float = DEFAULT_GAMMA, anchor: bool = True):
    """Divide bins whose magnitude is at most ``gamma`` by ``gamma``; keep the rest."""
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    pts = _points(path)
    return _finish(_gain(pts, gamma), pts, anchor)


def filter_backstitch(path, gamma: float = DEFAULT_GAMMA, anchor: bool = True):
    """Gain control on the path followed by its reversal, keeping the first half.

    Walking the path out and back closes an open curve, so the periodic
    DFT no longer sees a jump between the last and first point.
    """
    pts = _points(path)
    if pts.shape[0] < 2:
        raise ValueError("backstitching needs at least two points")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    doubled = np.concatenate([pts, pts[::-1]])
    return _finish(_gain(doubled, gamma)[: pts.shape[0]], pts, anchor)


def apply_filter(path, spec: FilterSpec, anchor: bool = True):
    if spec.kind is FilterKind.SCALE:
        return filter_scale(path, anchor)
    if spec.kind is FilterKind.GAIN:
        return filter_gain(path, spec.gamma, anchor)
    return filter_backstitch(path, spec.gamma, anchor)


def rmse(a, b) -> float:
    """Root mean squared point-to-point distance of two equally long paths."""
    a, b = as_points(a), as_points(b)
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))))

"""Trajectory similarity: dynamic time warping and spectrum-based errors.

The frequency-domain metrics compare the 2-D DFT of two equally long
(zero-padded) Cartesian paths. Because of Parseval's identity the spectrum
MSE equals the plain sum of squared point distances, which in turn upper
bounds squared-distance DTW (the diagonal alignment is one admissible warp).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np

from .trajcore import as_points


class Distance(str, enum.Enum):
    SQUARED_EUCLIDEAN = "squared-euclidean"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class DtwConfig:
    distance: Distance = Distance.SQUARED_EUCLIDEAN


@numba.njit(cache=True)
def _dtw_kernel(a, b, squared):
    n, m = a.shape[0], b.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        for j in range(1, m + 1):
            cost = 0.0
            for c in range(a.shape[1]):
                diff = a[i - 1, c] - b[j - 1, c]
                cost += diff * diff
            if not squared:
                cost = np.sqrt(cost)
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = cost + best
        prev, cur = cur, prev
    return prev[m]


@numba.njit(cache=True)
def _dtw_many(paths, b, squared):
    out = np.empty(paths.shape[0])
    for k in range(paths.shape[0]):
        out[k] = _dtw_kernel(paths[k], b, squared)
    return out


def _check_path(x, name):
    pts = np.ascontiguousarray(as_points(x), dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty (N, d) path, got shape {pts.shape}")
    return pts


def dtw(a, b, cfg: DtwConfig = DtwConfig()) -> float:
    """Dynamic-time-warping distance between two paths of possibly different length.

    Fills the ``(N+1) x (N_hat+1)`` table with an infinite border and
    ``S[0, 0] = 0``; each cell adds the point distance to the cheapest of its
    three predecessors. Runs in ``O(N * N_hat)`` with two rolling rows.
    """
    a = _check_path(a, "a")
    b = _check_path(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    squared = Distance(cfg.distance) is Distance.SQUARED_EUCLIDEAN
    return float(_dtw_kernel(a, b, squared))


def dtw_many(paths: np.ndarray, b, cfg: DtwConfig = DtwConfig()) -> np.ndarray:
    """DTW of each path in a ``(K, N, d)`` stack against one reference."""
    paths = np.ascontiguousarray(paths, dtype=float)
    b = _check_path(b, "b")
    squared = Distance(cfg.distance) is Distance.SQUARED_EUCLIDEAN
    return _dtw_many(paths, b, squared)


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (int(n) - 1).bit_length()


def zero_pad(x, length: int) -> np.ndarray:
    pts = as_points(x)
    if length < pts.shape[0]:
        raise ValueError(f"cannot pad {pts.shape[0]} rows down to {length}")
    out = np.zeros((length,) + pts.shape[1:])
    out[: pts.shape[0]] = pts
    return out


def zero_pad_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Append zero rows to both paths up to the next power of two covering both."""
    a, b = as_points(a), as_points(b)
    n = next_pow2(max(a.shape[0], b.shape[0]))
    return zero_pad(a, n), zero_pad(b, n)


@dataclass(frozen=True)
class Spectrum:
    bins: np.ndarray  # (pad_len, 3) complex
    pad_len: int

    def energy(self) -> float:
        """Time-domain energy recovered through Parseval's identity."""
        return float(np.sum(np.abs(self.bins) ** 2) / self.bins.size)


def _column_dft_matrix(m: int) -> np.ndarray:
    u = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(u, u) / m)


def dft2(x) -> Spectrum:
    """2-D DFT of an ``(N, 3)`` path: FFT along time, direct 3-point DFT across columns.

    ``bins[v, u]`` is the coefficient for time frequency ``v`` and column
    frequency ``u``.
    """
    pts = as_points(x)
    if pts.ndim != 2:
        raise ValueError(f"expected an (N, d) path, got shape {pts.shape}")
    along_time = np.fft.fft(pts, axis=0)
    bins = along_time @ _column_dft_matrix(pts.shape[1])  # symmetric matrix
    return Spectrum(bins, pts.shape[0])


def _check_pair(fa: Spectrum, fb: Spectrum) -> None:
    if fa.pad_len != fb.pad_len or fa.bins.shape != fb.bins.shape:
        raise ValueError(f"spectra lengths differ: {fa.pad_len} vs {fb.pad_len}")


def mses(fa: Spectrum, fb: Spectrum) -> float:
    """Mean squared error between two spectra, ``sum |f - g|^2 / (3N)``."""
    _check_pair(fa, fb)
    return float(np.sum(np.abs(fa.bins - fb.bins) ** 2) / fa.bins.size)


def mseps(fa: Spectrum, fb: Spectrum) -> float:
    """Mean squared error between bin magnitudes; blind to phase."""
    _check_pair(fa, fb)
    return float(np.sum((np.abs(fa.bins) - np.abs(fb.bins)) ** 2) / fa.bins.size)


def spectral_cross_term(fa: Spectrum, fb: Spectrum) -> float:
    """``(2 / 3N) * sum(|f||g| - f g*)``, the gap between MSES and MSEPS.

    Individual summands are complex; for spectra of real signals the sum is
    real, and each real part is non-negative by Cauchy-Schwarz.
    """
    _check_pair(fa, fb)
    f, g = fa.bins, fb.bins
    total = np.sum(np.abs(f) * np.abs(g) - f * np.conj(g)) * 2.0 / f.size
    scale = max(1.0, float(np.sum(np.abs(f) * np.abs(g))) * 2.0 / f.size)
    if abs(total.imag) > 1e-9 * scale:
        raise ValueError(f"cross term has imaginary part {total.imag:.3g}; inputs not real spectra")
    return float(total.real)


METRIC_KINDS = ("dtw", "mses", "mseps")


def path_distance(kind: str, a, b, cfg: DtwConfig = DtwConfig()) -> float:
    """Compare two Cartesian paths with the named metric.

    Frequency metrics zero-pad both paths to a shared power-of-two length.
    """
    if kind == "dtw":
        return dtw(a, b, cfg)
    if kind not in METRIC_KINDS:
        raise ValueError(f"unknown metric {kind!r}; choose from {METRIC_KINDS}")
    pa, pb = zero_pad_pair(a, b)
    fa, fb = dft2(pa), dft2(pb)
    return mses(fa, fb) if kind == "mses" else mseps(fa, fb)


def path_distance_many(kind: str, paths: np.ndarray, b, cfg: DtwConfig = DtwConfig()) -> np.ndarray:
    """Vectorized :func:`path_distance` for a ``(K, N, 3)`` stack against one reference."""
    paths = np.asarray(paths, dtype=float)
    if kind == "dtw":
        return dtw_many(paths, b, cfg)
    if kind not in METRIC_KINDS:
        raise ValueError(f"unknown metric {kind!r}; choose from {METRIC_KINDS}")
    b = as_points(b)
    n = next_pow2(max(paths.shape[1], b.shape[0]))
    padded = np.zeros((paths.shape[0], n, paths.shape[2]))
    padded[:, : paths.shape[1]] = paths
    W = _column_dft_matrix(paths.shape[2])
    fa = np.fft.fft(padded, axis=1) @ W
    fb = dft2(zero_pad(b, n)).bins
    size = n * paths.shape[2]
    if kind == "mses":
        return np.sum(np.abs(fa - fb) ** 2, axis=(1, 2)) / size
    return np.sum((np.abs(fa) - np.abs(fb)) ** 2, axis=(1, 2)) / size

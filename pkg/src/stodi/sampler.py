"""Seeded smooth exploration noise drawn from N(0, R^-1).

Every batch is addressed by ``(seed, stream)``; the optimizers use the
iteration number as ``stream``. Each rollout ``k`` then draws from its own
child of ``numpy.random.SeedSequence(seed, spawn_key=(stream,))`` through a
Philox counter-based generator, so results do not depend on the order in
which rollouts are generated and are stable across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajcore import PrecisionMatrix


@dataclass(frozen=True)
class NoiseBatch:
    eps: np.ndarray  # (K, N, M); rows 0 and N-1 are zero
    seed: int
    stddev_scale: float
    stream: int = 0

    @property
    def K(self) -> int:
        return self.eps.shape[0]


def rollout_generators(seed: int, stream: int, K: int) -> list[np.random.Generator]:
    root = np.random.SeedSequence(seed, spawn_key=(stream,))
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(K)]


def sample_noise(
    R: PrecisionMatrix, K: int, M: int, seed: int, scale: float = 1.0, stream: int = 0
) -> NoiseBatch:
    """Draw ``K`` noise matrices of shape ``(N, M)``, one independent column per joint.

    Interior column = ``scale * factor @ z`` with ``z`` standard normal and
    ``factor @ factor.T = R^-1``; start and goal rows stay exactly zero.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not scale > 0:
        raise ValueError(f"noise scale must be positive, got {scale}")
    factor = R.factor
    if not np.all(np.isfinite(factor)):
        raise np.linalg.LinAlgError("precision matrix factor is not finite")
    n_int = R.size
    eps = np.zeros((K, n_int + 2, M))
    for k, gen in enumerate(rollout_generators(seed, stream, K)):
        z = gen.standard_normal((n_int, M))
        eps[k, 1:-1] = scale * (factor @ z)
    eps.setflags(write=False)
    return NoiseBatch(eps, int(seed), float(scale), int(stream))

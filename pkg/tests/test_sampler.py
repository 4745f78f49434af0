import numpy as np
import pytest

from stodi.sampler import sample_noise
from stodi.trajcore import build_precision_matrix


@pytest.fixture
def R():
    return build_precision_matrix(12, 0.15)


def test_deterministic(R):
    a = sample_noise(R, 6, 7, seed=4, stream=3)
    b = sample_noise(R, 6, 7, seed=4, stream=3)
    np.testing.assert_array_equal(a.eps, b.eps)
    assert a.K == 6 and a.eps.shape == (6, 12, 7)
    assert not a.eps.flags.writeable


def test_streams_and_seeds_differ(R):
    base = sample_noise(R, 3, 2, seed=0).eps
    assert not np.array_equal(base, sample_noise(R, 3, 2, seed=1).eps)
    assert not np.array_equal(base, sample_noise(R, 3, 2, seed=0, stream=1).eps)


def test_rollouts_independent_of_batch_size(R):
    np.testing.assert_array_equal(sample_noise(R, 8, 2, 0).eps[:3], sample_noise(R, 3, 2, 0).eps)


def test_endpoints_zero(R):
    eps = sample_noise(R, 10, 7, 0).eps
    assert np.all(eps[:, 0] == 0) and np.all(eps[:, -1] == 0)


def test_tiny_scale(R):
    eps = sample_noise(R, 4, 3, 0, scale=1e-300).eps
    assert np.all(np.isfinite(eps))
    assert np.abs(eps).max() < 1e-290


def test_scale_is_linear(R):
    np.testing.assert_allclose(sample_noise(R, 4, 3, 0, scale=2.5).eps, 2.5 * sample_noise(R, 4, 3, 0).eps)


@pytest.mark.parametrize("kw, match", [({"K": 0}, "K"), ({"scale": 0.0}, "scale"), ({"scale": -1.0}, "scale")])
def test_bad_arguments(R, kw, match):
    args = {"K": 2, "M": 1, "seed": 0, **kw}
    with pytest.raises(ValueError, match=match):
        sample_noise(R, **args)


def test_covariance_small_matrix():
    R = build_precision_matrix(6, 1.0)
    eps = sample_noise(R, 5000, 4, seed=11).eps[:, 1:-1]  # 20,000 interior columns
    cols = eps.transpose(0, 2, 1).reshape(-1, R.size)
    emp = cols.T @ cols / cols.shape[0]
    mask = np.abs(R.Rinv) > 0.01 * np.abs(R.Rinv).max()
    rel = np.abs(emp - R.Rinv)[mask] / np.abs(R.Rinv)[mask]
    assert rel.max() < 0.05

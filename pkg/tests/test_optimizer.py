import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import stodi.optimizer as opt
from stodi.costs import CostSpec, Imitation, ObstacleSphere, total_cost
from stodi.optimizer import (
    OptimizerState,
    StodiConfig,
    rollout_weights,
    run,
    stodi_iteration,
    stomp_step,
    write_trace,
)
from stodi.sampler import sample_noise


@pytest.fixture(scope="module")
def problem(imitation_setup):
    demo, init, R = imitation_setup
    spec = CostSpec(imitation=Imitation("dtw", 1e3, demo))
    return init, spec, R


def test_softmax_weights():
    P = rollout_weights(np.array([[1.0, 5.0], [1.0, 0.0]]), lam=1.0)
    np.testing.assert_allclose(P.sum(axis=0), 1.0)
    assert P[0, 0] == pytest.approx(0.5)
    assert P[1, 1] == pytest.approx(1 / (1 + np.exp(-5)))
    # huge costs do not overflow thanks to the max shift
    P = rollout_weights(np.array([[1e6], [1e6 + 1]]), lam=1e-3)
    assert np.all(np.isfinite(P))


def test_softmax_rescaled():
    S = np.array([[0.0, 3.0], [10.0, 3.0]])
    P = rollout_weights(S, lam=1.0, rescale=True, h=10.0)
    assert P[0, 0] == pytest.approx(1 / (1 + np.exp(-10)))
    np.testing.assert_allclose(P[:, 1], 0.5)


def test_softmax_nan_raises():
    with pytest.raises(FloatingPointError):
        rollout_weights(np.array([[np.nan], [1.0]]), lam=1.0)


def test_single_rollout_takes_full_step(problem, chain):
    init, spec, R = problem
    batch = sample_noise(R, 1, 7, seed=3)
    new, _ = stomp_step(init, batch, spec, R, chain, StodiConfig(K=1, n=0))
    expected = init.points.copy()
    expected[1:-1] += R.Rinv @ batch.eps[0, 1:-1]
    np.testing.assert_allclose(new.points, expected, atol=1e-14)


def test_equal_costs_average_noise(problem, chain):
    init, _, R = problem
    batch = sample_noise(R, 2, 7, seed=1)
    new, q = stomp_step(init, batch, CostSpec(), R, chain, StodiConfig(K=2, n=0))
    expected = init.points.copy()
    expected[1:-1] += R.Rinv @ batch.eps[:, 1:-1].mean(axis=0)
    np.testing.assert_allclose(new.points, expected, atol=1e-14)
    assert q == 0.0


def test_endpoints_pinned(problem, chain):
    init, spec, R = problem
    state = OptimizerState.initial(init, StodiConfig(), spec, R, chain)
    for _ in range(15):
        stodi_iteration(state, StodiConfig(noise_scale=0.3), spec, R, chain)
    for th in (state.theta_b, state.theta_d, state.theta_p):
        np.testing.assert_array_equal(th[[0, -1]], init.points[[0, -1]])


def test_first_iteration_replaces_nothing(problem, chain, monkeypatch):
    init, spec, R = problem
    seen = []
    real = opt._rollout_update

    def spy(*a, **kw):
        out = real(*a, **kw)
        seen.append(out[2].replaced)
        return out

    monkeypatch.setattr(opt, "_rollout_update", spy)
    state = OptimizerState.initial(init, StodiConfig(), spec, R, chain)
    assert all(e.cost == np.inf for e in state.reused)
    stodi_iteration(state, StodiConfig(), spec, R, chain)
    assert seen[0] == []


def test_shared_noise_batch(problem, chain, monkeypatch):
    init, spec, R = problem
    batches = []
    real = opt._rollout_update

    def spy(theta, batch, *a, **kw):
        batches.append(batch)
        return real(theta, batch, *a, **kw)

    monkeypatch.setattr(opt, "_rollout_update", spy)
    state = OptimizerState.initial(init, StodiConfig(), spec, R, chain)
    for _ in range(3):
        stodi_iteration(state, StodiConfig(noise_scale=0.1), spec, R, chain)
    assert len(batches) == 6
    for i in range(0, 6, 2):
        assert batches[i] is batches[i + 1]
        assert batches[i].stream == i // 2
    assert batches[0] is not batches[2]


def test_reuse_set_soundness(problem, chain):
    init, spec, R = problem
    cfg = StodiConfig(noise_scale=0.1)
    state = OptimizerState.initial(init, cfg, spec, R, chain)
    for _ in range(30):
        stodi_iteration(state, cfg, spec, R, chain)
        for e in state.reused:
            if e.traj is not None:
                assert e.cost == total_cost(type(init)(e.traj, init.dt), spec, R, chain)
    assert sum(e.traj is not None for e in state.reused) == cfg.n
    assert state.q_b == total_cost(type(init)(state.theta_b, init.dt), spec, R, chain)


def test_reuse_replacements_happen(problem, chain, monkeypatch):
    init, spec, R = problem
    counts = []
    real = opt._rollout_update

    def spy(*a, **kw):
        out = real(*a, **kw)
        counts.append(len(out[2].replaced))
        return out

    monkeypatch.setattr(opt, "_rollout_update", spy)
    cfg = StodiConfig(noise_scale=0.1)
    state = OptimizerState.initial(init, cfg, spec, R, chain)
    for _ in range(10):
        stodi_iteration(state, cfg, spec, R, chain)
    assert max(counts) > 0
    assert max(counts) <= cfg.n


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), noise=st.sampled_from([0.05, 0.3, 1.0]),
       center=st.tuples(*[st.floats(-0.5, 0.5)] * 3))
def test_best_trace_monotone(problem, chain, seed, noise, center):
    init, spec, R = problem
    spec = CostSpec([ObstacleSphere(center, 0.4, 50.0)], spec.imitation, control_weight=1e-4)
    res = run(init, StodiConfig(max_iters=25, seed=seed, noise_scale=noise, check_convergence=False),
              spec, R, chain, "stodi")
    tr = np.array(res.traces["q_b"])
    assert np.all(np.diff(tr) <= 0)
    assert res.best_cost <= res.initial_cost


def test_reduction_to_stomp(problem, chain):
    init, spec, R = problem
    cfg = StodiConfig(n=0, max_iters=20, noise_scale=0.1, seed=5, check_convergence=False)
    state = OptimizerState.initial(init, cfg, spec, R, chain)
    theta = init
    for it in range(cfg.max_iters):
        stodi_iteration(state, cfg, spec, R, chain)
        batch = sample_noise(R, cfg.K, 7, cfg.seed, cfg.noise_at(it), stream=it)
        theta, _ = stomp_step(theta, batch, spec, R, chain, cfg)
        np.testing.assert_array_equal(state.theta_d, theta.points)


def test_max_iters_zero(problem, chain):
    init, spec, R = problem
    for algo in ("stodi", "stomp"):
        res = run(init, StodiConfig(max_iters=0), spec, R, chain, algo)
        np.testing.assert_array_equal(res.best.points, init.points)
        assert all(len(v) == 0 for v in res.traces.values())
        assert res.iterations == 0


@pytest.mark.parametrize("algo", ["stodi", "stomp"])
def test_deterministic(problem, chain, algo):
    init, spec, R = problem
    cfg = StodiConfig(max_iters=15, noise_scale=0.1, seed=9)
    a = run(init, cfg, spec, R, chain, algo)
    b = run(init, cfg, spec, R, chain, algo)
    assert a.traces == b.traces
    np.testing.assert_array_equal(a.best.points, b.best.points)


def test_stomp_tracks_best(problem, chain):
    init, spec, R = problem
    res = run(init, StodiConfig(max_iters=30, noise_scale=0.3, check_convergence=False), spec, R, chain, "stomp")
    q, best = np.array(res.traces["q"]), np.array(res.traces["q_best"])
    np.testing.assert_array_equal(best, np.minimum.accumulate(np.minimum(q, res.initial_cost)))
    assert res.best_cost == best[-1]
    assert total_cost(res.best, spec, R, chain) == res.best_cost


def test_convergence_stops_early(problem, chain):
    init, _, R = problem
    res = run(init, StodiConfig(max_iters=200, window=5), CostSpec(), R, chain, "stodi")
    assert res.converged and res.iterations == 6


def test_improves_imitation(problem, chain):
    init, spec, R = problem
    res = run(init, StodiConfig(max_iters=60, noise_scale=0.1), spec, R, chain, "stodi")
    assert res.best_cost < 0.5 * res.initial_cost


def test_run_validation(problem, chain):
    init, spec, R = problem
    with pytest.raises(ValueError, match="algorithm"):
        run(init, StodiConfig(), spec, R, chain, "chomp")
    with pytest.raises(ValueError, match="rows"):
        run(init, StodiConfig(), spec, type(R).from_matrix(np.eye(3)), chain)


@pytest.mark.parametrize("kw", [{"K": 0}, {"K": 4, "n": 4}, {"n": -1}, {"tol": 0.0}, {"noise_scale": 0.0},
                                {"max_iters": -1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        StodiConfig(**kw)


def test_write_trace(problem, chain, tmp_path):
    init, spec, R = problem
    res = run(init, StodiConfig(max_iters=4, noise_scale=0.1), spec, R, chain, "stodi")
    write_trace(res, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,q_b,q_d,q_p" and len(lines) == 5
    assert float(lines[-1].split(",")[1]) == res.best_cost
    res = run(init, StodiConfig(max_iters=2, noise_scale=0.1), spec, R, chain, "stomp")
    write_trace(res, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "iter,q,q_best"

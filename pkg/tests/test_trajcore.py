import numpy as np
import pytest

from stodi.trajcore import (
    CartesianPath,
    JointTrajectory,
    PrecisionMatrix,
    TrajectoryFormatError,
    build_precision_matrix,
    control_cost,
    finite_difference_matrix,
    read_trajectory,
    write_trajectory,
)


def test_precision_matrix_three_points_by_hand():
    # single interior point: A = (1, -2, 1)^T, so R = 1 + 4 + 1
    R = build_precision_matrix(3, 1.0)
    np.testing.assert_array_equal(R.R, [[6.0]])
    np.testing.assert_allclose(R.Rinv, [[1 / 6]])


def test_precision_matrix_dt_scaling():
    R1 = build_precision_matrix(6, 1.0)
    R2 = build_precision_matrix(6, 0.5)
    np.testing.assert_allclose(R2.R, R1.R / 0.5**4)


def test_finite_difference_shape():
    A = finite_difference_matrix(7, 1.0)
    assert A.shape == (7, 5)
    # every column is one shifted (1, -2, 1) stencil
    np.testing.assert_array_equal(A.sum(axis=0), np.zeros(5))


@pytest.mark.parametrize("n", [3, 4, 8, 32, 65])
def test_precision_matrix_symmetric_psd(n, rng):
    R = build_precision_matrix(n, 0.1)
    assert np.abs(R.R - R.R.T).max() <= 1e-12
    x = rng.normal(size=(100, n - 2))
    assert np.all(np.einsum("ki,ij,kj->k", x, R.R, x) >= 0)
    np.testing.assert_allclose(R.factor @ R.factor.T, R.Rinv, rtol=1e-8, atol=1e-12)


def test_precision_inverse_n5():
    R = build_precision_matrix(5, 1.0)
    np.testing.assert_allclose(R.R @ R.Rinv, np.eye(3), atol=1e-8)


def test_precision_too_small():
    with pytest.raises(ValueError, match="at least 3"):
        build_precision_matrix(2, 1.0)


def test_rank_deficient_matrix_uses_pseudo_inverse():
    R = PrecisionMatrix.from_matrix(np.diag([2.0, 0.0]))
    np.testing.assert_allclose(R.Rinv, np.diag([0.5, 0.0]))
    np.testing.assert_allclose(R.factor @ R.factor.T, R.Rinv)


def test_control_cost_examples():
    R = build_precision_matrix(3, 1.0)
    assert control_cost(np.zeros((3, 1)), R) == 0.0
    traj = np.array([[0.0], [2.0], [0.0]])
    assert control_cost(traj, R) == pytest.approx(12.0)
    assert control_cost(3.0 * traj, R) == pytest.approx(9 * 12.0)


def test_control_cost_couples_joints_by_row_sum(rng):
    R = build_precision_matrix(6, 1.0)
    pts = rng.normal(size=(6, 3))
    s = pts[1:-1].sum(axis=1)
    assert control_cost(pts, R) == pytest.approx(0.5 * s @ R.R @ s)
    # opposite joints cancel in the literal form but not per joint
    anti = np.c_[pts[:, 0], -pts[:, 0]]
    assert control_cost(anti, R) == pytest.approx(0.0, abs=1e-12)
    assert control_cost(anti, R, per_joint=True) > 0


def test_control_cost_dimension_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        control_cost(np.zeros((5, 2)), build_precision_matrix(4, 1.0))


def test_joint_trajectory_invariants():
    with pytest.raises(ValueError, match="N >= 3"):
        JointTrajectory(np.zeros((2, 7)))
    with pytest.raises(ValueError, match="non-finite"):
        JointTrajectory(np.array([[0.0], [np.nan], [0.0]]))
    with pytest.raises(ValueError, match="dt"):
        JointTrajectory(np.zeros((3, 1)), dt=0.0)
    t = JointTrajectory(np.zeros((11, 7)), dt=0.1)
    assert t.duration == pytest.approx(1.0)
    assert not t.points.flags.writeable


def test_linear_interpolation_endpoints():
    t = JointTrajectory.linear(np.zeros(7), np.ones(7), 5)
    np.testing.assert_array_equal(t.points[0], np.zeros(7))
    np.testing.assert_array_equal(t.points[-1], np.ones(7))
    np.testing.assert_allclose(t.points[2], 0.5)


def test_round_trip_joint(tmp_path, rng):
    traj = JointTrajectory(rng.normal(size=(9, 7)))
    p = tmp_path / "j.csv"
    write_trajectory(traj, p)
    back = read_trajectory(p, dt=traj.dt)
    assert isinstance(back, JointTrajectory) and back.n_joints == 7
    np.testing.assert_allclose(back.points, traj.points, rtol=0, atol=1e-12)
    assert p.read_text().splitlines()[0] == "j0,j1,j2,j3,j4,j5,j6"
    write_trajectory(back, tmp_path / "k.csv")
    assert (tmp_path / "k.csv").read_bytes() == p.read_bytes()


def test_round_trip_cartesian(tmp_path, rng):
    path = CartesianPath(rng.normal(size=(5, 3)))
    p = tmp_path / "c.csv"
    write_trajectory(path, p)
    back = read_trajectory(p)
    assert isinstance(back, CartesianPath)
    np.testing.assert_array_equal(back.points, path.points)
    assert not p.read_text().rstrip("\n").endswith(",")


@pytest.mark.parametrize(
    "text, line, match",
    [
        ("a,b,c\n1,2,3\n", 1, "header"),
        ("j0,j2\n1,2\n", 1, "header"),
        ("x,y,z\n1,2,3\n4,5\n", 3, "columns"),
        ("x,y,z\n1,2,3\n4,five,6\n", 3, "non-numeric"),
        ("x,y,z\n", 2, "no data"),
        ("", 1, "empty"),
    ],
)
def test_parse_errors_name_line(tmp_path, text, line, match):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(TrajectoryFormatError, match=match) as exc:
        read_trajectory(p)
    assert exc.value.line == line
    assert f":{line}:" in str(exc.value)

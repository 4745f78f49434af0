import warnings

import numpy as np
import pytest

from stodi.kinematics import ik_point, panda_chain
from stodi.trajcore import JointTrajectory, build_precision_matrix

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def chain():
    return panda_chain()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def imitation_setup(chain):
    """Semicircle demo in the arm's workspace plus the joint-space straight-line start."""
    from stodi.harness import generate_demo

    n = 32
    demo = generate_demo("semicircle", n, 0.15, center=(0.45, 0.0, 0.45), plane="yz")
    q0 = ik_point(chain, demo.points[0])
    q1 = ik_point(chain, demo.points[-1], q0)
    init = JointTrajectory.linear(q0, q1, n, 0.15)
    return demo, init, build_precision_matrix(n, 0.15)


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_limit_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", "joint configuration outside joint limits")
        yield

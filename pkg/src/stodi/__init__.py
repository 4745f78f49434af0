"""Trajectory optimization that imitates a demonstration.

Modules: ``trajcore`` (containers, the smoothness matrix R, CSV I/O),
``kinematics`` (Panda FK/IK), ``metrics`` (DTW and spectral distances),
``sampler`` (smooth noise), ``costs``, ``optimizer`` (STODI and STOMP),
``denoise`` (frequency-domain filters) and ``harness`` (experiments).
"""

from .costs import CostSpec, Imitation, ObstacleSphere, VelocityMagnitude, total_cost
from .denoise import FilterSpec, filter_backstitch, filter_gain, filter_scale
from .kinematics import KinematicChain, fk_path, fk_point, ik_point, panda_chain
from .metrics import DtwConfig, dft2, dtw, mseps, mses, path_distance
from .optimizer import RunResult, StodiConfig, run, stodi_iteration, stomp_step
from .sampler import NoiseBatch, sample_noise
from .trajcore import (
    CartesianPath,
    JointTrajectory,
    PrecisionMatrix,
    build_precision_matrix,
    control_cost,
    read_trajectory,
    write_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "CartesianPath", "CostSpec", "DtwConfig", "FilterSpec", "Imitation", "JointTrajectory",
    "KinematicChain", "NoiseBatch", "ObstacleSphere", "PrecisionMatrix", "RunResult", "StodiConfig",
    "VelocityMagnitude", "build_precision_matrix", "control_cost", "dft2", "dtw", "filter_backstitch",
    "filter_gain", "filter_scale", "fk_path", "fk_point", "ik_point", "mseps", "mses", "panda_chain",
    "path_distance", "read_trajectory", "run", "sample_noise", "stodi_iteration", "stomp_step",
    "total_cost", "write_trajectory",
]

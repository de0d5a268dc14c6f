"""Delta robot iterative learning control with input shaping.

Kinematics and lumped rigid dynamics, a flexible modal model, an optimal
three-impulse input shaper, a fuzzy mismatch approximator, the AMCILC
controller with PIDILC and AFC baselines, and a fixed-step simulator.
"""
__version__ = "0.1.0"

from .params import RobotParams, load_params
from .dynamics import RigidModel, true_plant
from .shaper import make_shaper, optimize_shaper, residual_percentage, shape_trajectory
from .trajectory import butterfly_trajectory, pick_and_place, square_trajectory
from .controllers import AMCILC, AFC, PIDILC, AMCILCGains
from .sim import SimConfig, run_ilc, simulate_iteration

__all__ = [
    "RobotParams", "load_params", "RigidModel", "true_plant", "make_shaper",
    "optimize_shaper", "residual_percentage", "shape_trajectory", "butterfly_trajectory",
    "pick_and_place", "square_trajectory", "AMCILC", "AFC", "PIDILC", "AMCILCGains",
    "SimConfig", "run_ilc", "simulate_iteration",
]

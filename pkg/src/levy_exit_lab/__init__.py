"""Exit times, survival and hitting probabilities for isotropic unimodal Levy processes."""

from .characteristics import (CharacteristicProfile, build_profile, h1, pruitt_h, pruitt_table,
                              scaling_indices, script_I, script_J)
from .domains import Ball, BallComplement, Ellipsoid, Generic, HalfLine, HalfSpace, Interval, make_domain
from .model import FAMILIES, LevyModel, ModelError, make_model, psi, psi_star
from .renewal import RenewalTable, condition_A, kappa, renewal_V
from .simulate import (McEstimate, SimConfig, SimulationError, dynkin_estimate, exit_place_tail, exit_time,
                       hit_ball_prob, sample_increment, simulate_paths, survival_curve, survival_prob)
from .verify import BoundCheck, Report

__version__ = "0.1.0"

__all__ = [
    "Ball", "BallComplement", "BoundCheck", "CharacteristicProfile", "Ellipsoid", "FAMILIES", "Generic",
    "HalfLine", "HalfSpace", "Interval", "LevyModel", "McEstimate", "ModelError", "RenewalTable", "Report",
    "SimConfig", "SimulationError", "build_profile", "condition_A", "dynkin_estimate", "exit_place_tail",
    "exit_time", "h1", "hit_ball_prob", "kappa", "make_domain", "make_model", "pruitt_h", "pruitt_table",
    "psi", "psi_star", "renewal_V", "sample_increment", "scaling_indices", "script_I", "script_J",
    "simulate_paths", "survival_curve", "survival_prob",
]

"""Numerical laboratory for the magnonic Dicke superradiant transition in ErFeO3."""

from .params import FIT_PARAMETERS, ModelParams, load_params, save_params
from .spin_model import Environment, MeanFieldState, self_consistent_solve

__all__ = [
    "FIT_PARAMETERS",
    "Environment",
    "MeanFieldState",
    "ModelParams",
    "load_params",
    "save_params",
    "self_consistent_solve",
]
__version__ = "0.1.0"

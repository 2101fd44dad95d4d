"""Deterministic SE(R)IRS and SVE(R)IRS epidemic models: thresholds, equilibria,
stability, simulation, vaccination control and parameter sweeps."""

from ._accel import BACKEND
from .model import (
    SERIRS,
    SVERIRS,
    EpidynError,
    NumericalError,
    ParameterError,
    SerirsParams,
    SverirsParams,
    make_params,
    validate_params,
)
from .reproduction import critical_phi, herd_threshold, r0

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "SERIRS",
    "SVERIRS",
    "EpidynError",
    "NumericalError",
    "ParameterError",
    "SerirsParams",
    "SverirsParams",
    "critical_phi",
    "herd_threshold",
    "make_params",
    "r0",
    "validate_params",
]

"""Linearized three-mode dynamics of a pumped condensate in a ring cavity.

Gaussian (Wick) moments of the probe and the two atomic side-modes, with an
exact truncated-Fock reference for validation.
"""

__version__ = "0.1.0"

from .errors import (
    CarlError,
    ConvergenceError,
    CutoffError,
    DegenerateSpectrumError,
    InvalidParameter,
    RegimeError,
    ResourceError,
)
from .model import ModelParams, PhysicalParams, derive_model, validity_horizon
from .moments import ObservablesRecord, record
from .propagator import (
    PropagatorMatrix,
    propagate,
    propagate_asymptotic,
    propagate_exact,
    propagate_series,
)
from .spectral import Regime, SpectralData, characteristic_roots, classify_regime, eigensystem

__all__ = [
    "CarlError",
    "ConvergenceError",
    "CutoffError",
    "DegenerateSpectrumError",
    "InvalidParameter",
    "ModelParams",
    "ObservablesRecord",
    "PhysicalParams",
    "PropagatorMatrix",
    "Regime",
    "RegimeError",
    "ResourceError",
    "SpectralData",
    "characteristic_roots",
    "classify_regime",
    "derive_model",
    "eigensystem",
    "propagate",
    "propagate_asymptotic",
    "propagate_exact",
    "propagate_series",
    "record",
    "validity_horizon",
]

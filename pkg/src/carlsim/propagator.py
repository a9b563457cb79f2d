"""Linear propagator of the mode vector ``d = (a, c_-^dag, c_+)``.

``d(tau) = U(tau) d(0)``.  Because ``d`` mixes annihilation and creation
operators, U is not unitary but pseudo-unitary with respect to the metric
``eta = diag(1, -1, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DegenerateSpectrumError, InvalidParameter, RegimeError
from .model import ModelParams
from .spectral import Regime, SpectralData

MODES = ("a", "minus", "plus")
METRIC = np.diag([1.0, -1.0, 1.0])


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    tau: float
    matrix: np.ndarray

    def __getitem__(self, idx):
        return self.matrix[idx]

    def pseudo_unitarity_error(self) -> float:
        U = self.matrix
        return float(np.max(np.abs(U @ METRIC @ U.conj().T - METRIC)))

    def determinant(self) -> complex:
        return complex(np.linalg.det(self.matrix))


def _check_tau(tau):
    if not np.isfinite(tau) or tau < 0:
        raise InvalidParameter(f"tau must be finite and >= 0, got {tau!r}")


def propagate_exact(spectral: SpectralData, tau: float) -> PropagatorMatrix:
    """U = V diag(exp(i lambda_k tau)) V^-1."""
    _check_tau(tau)
    if spectral.regime is Regime.MARGINAL:
        raise DegenerateSpectrumError("marginal spectrum; use propagate_series")
    V, Vinv = spectral.eigenvectors, spectral.inverse
    phases = np.exp(1j * spectral.eigenvalues * tau)
    U = (V * phases) @ Vinv
    if tau == 0:
        U = np.eye(3, dtype=complex)
    return PropagatorMatrix(float(tau), U)


def propagate_exact_grid(spectral: SpectralData, taus) -> np.ndarray:
    """Stack of exact propagators, shape ``(len(taus), 3, 3)``."""
    if spectral.regime is Regime.MARGINAL:
        raise DegenerateSpectrumError("marginal spectrum; use propagate_series")
    taus = np.asarray(taus, dtype=float)
    V, Vinv = spectral.eigenvectors, spectral.inverse
    phases = np.exp(1j * np.multiply.outer(taus, spectral.eigenvalues))
    return np.einsum("ik,tk,kj->tij", V, phases, Vinv)


def propagate_series(model: ModelParams, tau: float) -> PropagatorMatrix:
    """Matrix exponential ``expm(i M tau)`` by scaling and squaring.

    Valid everywhere, including at defective (MARGINAL) points.
    """
    _check_tau(tau)
    U = expm(1j * tau * model.coupling_matrix())
    return PropagatorMatrix(float(tau), U)


def propagate_asymptotic(spectral: SpectralData, tau: float) -> PropagatorMatrix:
    """Exponential-growth approximation ``U ~ zeta exp((Gamma + i Omega) tau)``.

    Only the growing eigenbranch is kept, so ``U_asym(0) = zeta`` rather than
    the identity; the approximation is meaningful only once the transient
    branches are negligible.
    """
    _check_tau(tau)
    if spectral.regime is not Regime.UNSTABLE:
        raise RegimeError(
            f"no exponential growth regime in {spectral.regime} spectrum"
        )
    growth = spectral.gain_rate + 1j * spectral.oscillation
    return PropagatorMatrix(float(tau), spectral.weights * np.exp(growth * tau))


def propagate(model: ModelParams, tau: float, spectral: SpectralData | None = None) -> PropagatorMatrix:
    """Exact propagator, falling back to the series path at MARGINAL points."""
    if spectral is not None and spectral.regime is not Regime.MARGINAL:
        return propagate_exact(spectral, tau)
    return propagate_series(model, tau)

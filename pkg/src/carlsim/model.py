"""Physical parameters, the dimensionless (chi, delta) control plane and the
linearization validity window.

Lab quantities are converted with the free-space dispersion ``omega = c k``
for the probe and the counterpropagating recoil momentum ``K = k0 + k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import InvalidParameter


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory inputs (SI units).

    Attributes
    ----------
    dipole_moment : float
        Atomic dipole moment ``d`` [C m].
    cavity_length : float
        Ring resonator length ``L`` [m].
    mode_cross_section : float
        Probe mode cross-section ``S`` in the atomic sample [m^2].
    detuning_Delta : float
        Pump detuning from the nearest electronic resonance [rad/s], nonzero.
    pump_rabi_Omega0 : complex
        Pump Rabi frequency [rad/s].
    pump_frequency_omega0 : float
        Pump frequency [rad/s].
    probe_wavenumber_k, pump_wavenumber_k0 : float
        Wavenumbers [1/m].
    atom_count_N : float
        Mean condensate atom number.
    atom_mass : float
        Atomic mass [kg].
    """

    dipole_moment: float
    cavity_length: float
    mode_cross_section: float
    detuning_Delta: float
    pump_rabi_Omega0: complex
    pump_frequency_omega0: float
    probe_wavenumber_k: float
    pump_wavenumber_k0: float
    atom_count_N: float
    atom_mass: float

    def __post_init__(self):
        positive = (
            "dipole_moment",
            "cavity_length",
            "mode_cross_section",
            "pump_frequency_omega0",
            "probe_wavenumber_k",
            "pump_wavenumber_k0",
            "atom_count_N",
            "atom_mass",
        )
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameter(f"{name} must be positive, got {value!r}")
        if self.detuning_Delta == 0 or not np.isfinite(self.detuning_Delta):
            raise InvalidParameter(
                "detuning_Delta must be nonzero: adiabatic elimination needs a detuned pump"
            )
        if self.recoil_wavenumber <= 0:
            raise InvalidParameter("recoil momentum K vanishes")

    @property
    def recoil_wavenumber(self) -> float:
        """|K| for counterpropagating pump and probe."""
        return self.pump_wavenumber_k0 + self.probe_wavenumber_k

    @property
    def probe_frequency(self) -> float:
        return constants.c * self.probe_wavenumber_k


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless control parameters.

    ``alpha = 0`` is the spontaneous (vacuum seeded) case.
    """

    chi: float
    delta: float
    alpha: complex = 0.0

    def __post_init__(self):
        chi = float(self.chi)
        delta = float(self.delta)
        alpha = complex(self.alpha)
        if not np.isfinite(chi) or chi < 0:
            raise InvalidParameter(f"chi must be finite and >= 0, got {self.chi!r}")
        if not np.isfinite(delta):
            raise InvalidParameter(f"delta must be finite, got {self.delta!r}")
        if not (np.isfinite(alpha.real) and np.isfinite(alpha.imag)):
            raise InvalidParameter(f"alpha must be finite, got {self.alpha!r}")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "alpha", alpha)

    def with_alpha(self, alpha: complex) -> "ModelParams":
        return ModelParams(self.chi, self.delta, alpha)

    def coupling_matrix(self) -> np.ndarray:
        """Real matrix ``M`` with ``d/dtau (a, c_-^dag, c_+) = i M (a, c_-^dag, c_+)``."""
        chi, delta = self.chi, self.delta
        return np.array(
            [
                [delta, -chi, -chi],
                [chi, 1.0, 0.0],
                [-chi, 0.0, -1.0],
            ]
        )


def recoil_frequency(recoil_wavenumber: float, atom_mass: float) -> float:
    """omega_r = hbar K^2 / 2m in rad/s."""
    return constants.hbar * recoil_wavenumber**2 / (2.0 * atom_mass)


def probe_coupling(dipole_moment, probe_wavenumber, cavity_length, mode_cross_section):
    """Atom-probe coupling ``g = d [c k / (2 eps0 L S)]^(1/2)``.

    Returned in rad/s, i.e. already divided by hbar so that ``g Omega0 / Delta``
    is a frequency.
    """
    field = math.sqrt(
        constants.c
        * probe_wavenumber
        / (2.0 * constants.epsilon_0 * cavity_length * mode_cross_section)
    )
    # d * field is an energy times sqrt(1/J); the hbar factor makes it a rate
    return dipole_moment * field / math.sqrt(constants.hbar)


def coupling_chi(g_abs, rabi_abs, atom_count, omega_r, Delta):
    """chi = |g| |Omega0| sqrt(N) / (8 omega_r |Delta|).

    The sign of ``Delta`` is absorbed into the phase of the slowly varying
    probe operator, so only its magnitude enters.
    """
    if Delta == 0:
        raise InvalidParameter("Delta must be nonzero")
    if omega_r <= 0:
        raise InvalidParameter("omega_r must be positive")
    return abs(g_abs) * abs(rabi_abs) * math.sqrt(atom_count) / (8.0 * omega_r * abs(Delta))


def derive_model(phys: PhysicalParams):
    """Map laboratory parameters onto the (chi, delta) plane.

    Returns
    -------
    (ModelParams, float, float)
        Model with ``alpha = 0``, the recoil frequency omega_r and the
        coupling g, both in rad/s.
    """
    K = phys.recoil_wavenumber
    if K <= 0:
        raise InvalidParameter("recoil momentum K vanishes; omega_r undefined")
    omega_r = recoil_frequency(K, phys.atom_mass)
    g = probe_coupling(
        phys.dipole_moment,
        phys.probe_wavenumber_k,
        phys.cavity_length,
        phys.mode_cross_section,
    )
    chi = coupling_chi(g, abs(phys.pump_rabi_Omega0), phys.atom_count_N, omega_r, phys.detuning_Delta)
    delta = (phys.pump_frequency_omega0 - phys.probe_frequency) / omega_r
    return ModelParams(chi, delta, 0.0), omega_r, g


DEFAULT_TAU_STEP = 1e-3
DEFAULT_TAU_STOP = 100.0


def validity_horizon(
    spectral,
    model: ModelParams,
    atom_count_N: float,
    probe_cap: float,
    fraction_eps: float,
    tau_grid=None,
) -> float:
    """Largest grid time before the undepleted-pump approximation breaks.

    The approximation holds while the side-mode population stays a small
    fraction ``fraction_eps`` of the condensate and the probe stays below
    ``probe_cap`` photons.  ``fraction_eps >= 1`` and ``probe_cap = inf``
    switch the respective limit off.  Returns ``math.inf`` if no active limit
    is reached on the grid, ``-math.inf`` if the first grid point already
    violates one.

    ``tau_grid`` defaults to ``arange(0, 100, 1e-3)``.
    """
    from .moments import intensities_on_grid

    if not fraction_eps > 0:
        raise InvalidParameter("fraction_eps must be positive")
    if atom_count_N <= 0:
        raise InvalidParameter("atom_count_N must be positive")
    if tau_grid is None:
        tau_grid = np.arange(0.0, DEFAULT_TAU_STOP, DEFAULT_TAU_STEP)
    tau_grid = np.asarray(tau_grid, dtype=float)

    I_a, I_minus, I_plus = intensities_on_grid(spectral, model.alpha, tau_grid)
    ok = np.ones(tau_grid.shape, dtype=bool)
    if fraction_eps < 1:
        ok &= (I_minus + I_plus) / atom_count_N <= fraction_eps
    if math.isfinite(probe_cap):
        ok &= I_a <= probe_cap
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return math.inf
    first = bad[0]
    if first == 0:
        # already outside the window at the first grid point
        return -math.inf
    return float(tau_grid[first - 1])

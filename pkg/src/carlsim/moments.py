"""Observables of the three-mode state via Wick contractions.

The initial state ``|alpha, 0, 0>`` is Gaussian and the dynamics is linear, so
every operator at time tau is a c-number plus a linear combination of the
initial fluctuation operators

    e = (db_a, db_-, db_+, db_a^dag, db_-^dag, db_+^dag)

whose only nonzero two-point functions are ``<db_k db_k^dag> = 1``.  Moments
of any order follow from Wick's theorem with these contractions; anomalous
pairings such as ``<a c_->`` appear automatically.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import CarlError, InvalidParameter
from .model import ModelParams
from .propagator import MODES, PropagatorMatrix, propagate, propagate_exact_grid
from .spectral import SpectralData

# intensities below this are treated as empty modes (0/0 correlations)
INTENSITY_FLOOR = 1e-14
DEFAULT_ATOM_COUNT = 1e6

# <e_k e_l> for the vacuum fluctuations of |alpha, 0, 0>
_CONTRACTIONS = np.zeros((6, 6))
_CONTRACTIONS[0, 3] = _CONTRACTIONS[1, 4] = _CONTRACTIONS[2, 5] = 1.0

PAIRS = (("a", "minus"), ("a", "plus"), ("minus", "plus"))


def mode_index(mode) -> int:
    if isinstance(mode, (int, np.integer)):
        if not 0 <= mode < 3:
            raise InvalidParameter(f"mode index out of range: {mode}")
        return int(mode)
    try:
        return MODES.index({"-": "minus", "+": "plus"}.get(mode, mode))
    except ValueError:
        raise InvalidParameter(f"unknown mode {mode!r}") from None


@dataclass(frozen=True, eq=False)
class LinearOp:
    """``mean + coeffs . e`` for the fluctuation basis ``e``."""

    mean: complex
    coeffs: np.ndarray

    def dag(self) -> "LinearOp":
        c = self.coeffs
        return LinearOp(np.conj(self.mean), np.concatenate([c[3:], c[:3]]).conj())

    def __add__(self, other):
        return LinearOp(self.mean + other.mean, self.coeffs + other.coeffs)

    def __mul__(self, scalar):
        return LinearOp(self.mean * scalar, self.coeffs * scalar)

    __rmul__ = __mul__


def contraction(x: LinearOp, y: LinearOp) -> complex:
    """Ordered fluctuation two-point function <dx dy>."""
    return x.coeffs @ _CONTRACTIONS @ y.coeffs


def _pairings(ops):
    # sum over perfect matchings keeping operator order inside each pair
    if not ops:
        return 1.0
    if len(ops) % 2:
        return 0.0
    first, rest = ops[0], ops[1:]
    total = 0.0
    for k, other in enumerate(rest):
        c = contraction(first, other)
        if c != 0:
            total += c * _pairings(rest[:k] + rest[k + 1:])
    return total


def wick_expectation(ops) -> complex:
    """Expectation of the ordered product ``ops[0] ops[1] ...``.

    Each factor is split into mean plus fluctuation; every subset of
    fluctuations is reduced to ordered pairwise contractions.
    """
    ops = list(ops)
    n = len(ops)
    total = 0.0
    for mask in range(1 << n):
        if bin(mask).count("1") % 2:
            continue
        coeff = 1.0
        fluct = []
        for k, op in enumerate(ops):
            if mask >> k & 1:
                fluct.append(op)
            else:
                coeff *= op.mean
        if coeff == 0:
            continue
        total += coeff * _pairings(fluct)
    return complex(total)


def _as_matrix(U):
    if isinstance(U, PropagatorMatrix):
        return U.matrix
    return np.asarray(U, dtype=complex)


def mode_operators(U, alpha: complex):
    """Annihilation operators ``(a, c_-, c_+)`` at time tau as LinearOps."""
    U = _as_matrix(U)
    # initial d = (a, c_-^dag, c_+) expressed in the e basis
    d0 = np.zeros((3, 6), dtype=complex)
    d0[0, 0] = 1.0
    d0[1, 4] = 1.0
    d0[2, 2] = 1.0
    d_means = U[:, 0] * alpha
    d_coeffs = U @ d0
    ops = [LinearOp(complex(d_means[i]), d_coeffs[i]) for i in range(3)]
    ops[1] = ops[1].dag()
    return ops


def mean_fields(U, alpha: complex):
    """``(<a>, <c_->, <c_+>)``; note ``<c_-> = conj(alpha u_{-a})``."""
    U = _as_matrix(U)
    alpha = complex(alpha)
    return (
        alpha * U[0, 0],
        np.conj(alpha * U[1, 0]),
        alpha * U[2, 0],
    )


def intensities_formula(U, alpha: complex) -> np.ndarray:
    """Closed form ``I_i = |alpha|^2 |u_ia|^2 + |u_i-|^2 - [i == -]``.

    For the minus mode ``|u_--|^2 - 1`` is evaluated as ``|u_-a|^2 + |u_-+|^2``
    (pseudo-unitarity), which avoids cancellation when the mode is nearly empty.
    """
    U = _as_matrix(U)
    I = abs(alpha) ** 2 * np.abs(U[..., :, 0]) ** 2 + np.abs(U[..., :, 1]) ** 2
    I[..., 1] = (abs(alpha) ** 2 + 1.0) * np.abs(U[..., 1, 0]) ** 2 + np.abs(U[..., 1, 2]) ** 2
    return I


def intensities_wick(U, alpha: complex) -> np.ndarray:
    ops = mode_operators(U, alpha)
    return np.array([wick_expectation([b.dag(), b]).real for b in ops])


def intensities(U, alpha: complex):
    """Mean occupations ``(I_a, I_-, I_+)``.

    Computed from the closed form and cross-checked against the Wick engine.
    """
    closed = intensities_formula(U, alpha)
    wick = intensities_wick(U, alpha)
    scale = max(1.0, float(np.max(np.abs(closed))))
    if np.max(np.abs(closed - wick)) > 1e-10 * scale:
        raise CarlError(f"intensity engines disagree: {closed} vs {wick}")
    return tuple(float(x) for x in closed)


def intensities_on_grid(spectral: SpectralData, alpha: complex, taus):
    """Vectorised intensities along a tau grid; returns three arrays.

    Entries overflow to inf/nan far into the growth regime.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        Us = propagate_exact_grid(spectral, taus)
        I = intensities_formula(Us, alpha)
    return I[:, 0], I[:, 1], I[:, 2]


def _g2_from_ops(ops, i, j):
    bi, bj = ops[i], ops[j]
    Ii = wick_expectation([bi.dag(), bi]).real
    Ij = wick_expectation([bj.dag(), bj]).real
    if Ii < INTENSITY_FLOOR or Ij < INTENSITY_FLOOR:
        return None, Ii, Ij
    num = wick_expectation([bi.dag(), bj.dag(), bj, bi]).real
    return num / (Ii * Ij), Ii, Ij


def g2_single(U, alpha: complex, mode) -> Optional[float]:
    """Equal-time ``<b^dag b^dag b b> / <b^dag b>^2``; None for an empty mode."""
    i = mode_index(mode)
    g2, _, _ = _g2_from_ops(mode_operators(U, alpha), i, i)
    return g2


def g2_single_closed(U, alpha: complex, mode) -> Optional[float]:
    """``(|beta|^4 + 4|beta|^2 n + 2 n^2) / (|beta|^2 + n)^2``.

    ``beta`` is the mean field and ``n`` the spontaneous occupation.  Valid
    because single-mode anomalous moments vanish for this dynamics.
    """
    i = mode_index(mode)
    U = _as_matrix(U)
    beta2 = abs(mean_fields(U, alpha)[i]) ** 2
    n = float(intensities_formula(U, 0.0)[i])
    I = beta2 + n
    if I < INTENSITY_FLOOR:
        return None
    return (beta2**2 + 4 * beta2 * n + 2 * n**2) / I**2


@dataclass(frozen=True)
class CrossCorrelation:
    g2: Optional[float]
    cs_bound: Optional[float]
    quantum_bound: Optional[float]
    violates_cs: Optional[bool]


def g2_cross(U, alpha: complex, pair) -> CrossCorrelation:
    """Two-mode intensity cross-correlation and its classical/quantum bounds.

    ``cs_bound = sqrt(g2_i g2_j)`` is the Cauchy-Schwarz limit for classical
    fields; ``quantum_bound = sqrt((g2_i + 1/I_i)(g2_j + 1/I_j))``.
    """
    i, j = (mode_index(m) for m in pair)
    if i == j:
        raise InvalidParameter("cross-correlation needs two distinct modes")
    ops = mode_operators(U, alpha)
    gij, Ii, Ij = _g2_from_ops(ops, i, j)
    if gij is None:
        return CrossCorrelation(None, None, None, None)
    gi, _, _ = _g2_from_ops(ops, i, i)
    gj, _, _ = _g2_from_ops(ops, j, j)
    return cross_with_bounds(gij, gi, gj, Ii, Ij)


# rounding allowance; the violation margin ~ 1/(4 I) is resolvable up to I ~ 1e13
CS_SLACK = 16 * np.finfo(float).eps


def cross_with_bounds(gij, gi, gj, Ii, Ij) -> CrossCorrelation:
    """Attach the classical and quantum limits to a cross-correlation value."""
    if gij is None or gi is None or gj is None:
        return CrossCorrelation(None, None, None, None)
    cs = math.sqrt(gi * gj)
    qb = math.sqrt((gi + 1.0 / Ii) * (gj + 1.0 / Ij))
    return CrossCorrelation(float(gij), cs, qb, bool(gij > cs * (1.0 + CS_SLACK)))


def quadrature_moments(U, alpha: complex, mode):
    """``(<b>, <db^dag db>, <db db>)`` for one physical mode."""
    b = mode_operators(U, alpha)[mode_index(mode)]
    zero_mean = LinearOp(0.0, b.coeffs)
    n = wick_expectation([zero_mean.dag(), zero_mean]).real
    m = wick_expectation([zero_mean, zero_mean])
    return b.mean, n, m


def uncertainties_from_moments(mean, n, m):
    """Amplitude and phase spreads from Gaussian second moments.

    ``X(theta) = (db e^{-i theta} + db^dag e^{i theta}) / 2`` has variance
    ``(2 n + 1 + 2 Re(e^{-2 i theta} m)) / 4``.  The amplitude quadrature is
    along the mean's phase, the phase quadrature orthogonal to it.
    """
    ell = float(abs(mean))
    if ell < INTENSITY_FLOOR:
        return None, None
    rot = np.exp(-2j * np.angle(mean)) * m
    var_par = float(2 * n + 1 + 2 * rot.real) / 4
    var_perp = float(2 * n + 1 - 2 * rot.real) / 4
    return math.sqrt(max(var_par, 0.0)) / ell, math.sqrt(max(var_perp, 0.0)) / ell


def phase_amplitude_uncertainty(U, alpha: complex, mode):
    """Relative amplitude spread and phase spread of one mode's mean field.

    Returns ``(dl/l, dphi)``; either is None when the mean field vanishes.
    """
    if alpha == 0:
        raise InvalidParameter("phase is undefined without an injected probe (alpha = 0)")
    return uncertainties_from_moments(*quadrature_moments(U, alpha, mode))


def bunching_operator(U, alpha: complex, atom_count_N: float) -> LinearOp:
    """Linearised bunching ``B = (c_-^dag + c_+) / sqrt(N)``."""
    if atom_count_N <= 0:
        raise InvalidParameter("atom_count_N must be positive")
    _, cm, cp = mode_operators(U, alpha)
    return (cm.dag() + cp) * (1.0 / math.sqrt(atom_count_N))


def bunching(U, alpha: complex, atom_count_N: float):
    """``(<B>, <B^dag B>)``."""
    B = bunching_operator(U, alpha, atom_count_N)
    return complex(B.mean), float(wick_expectation([B.dag(), B]).real)


@dataclass(frozen=True)
class ObservablesRecord:
    """All equal-time observables at one tau.  None marks an undefined value."""

    tau: float
    mean_probe: complex
    mean_minus: complex
    mean_plus: complex
    intensity_a: float
    intensity_minus: float
    intensity_plus: float
    g2_a: Optional[float]
    g2_minus: Optional[float]
    g2_plus: Optional[float]
    g2_aminus: Optional[float]
    g2_aplus: Optional[float]
    g2_minusplus: Optional[float]
    cs_aminus: Optional[float]
    qb_aminus: Optional[float]
    cs_aplus: Optional[float]
    qb_aplus: Optional[float]
    cs_minusplus: Optional[float]
    qb_minusplus: Optional[float]
    violates_aminus: Optional[bool]
    violates_aplus: Optional[bool]
    violates_minusplus: Optional[bool]
    dl_a: Optional[float]
    dphi_a: Optional[float]
    dl_minus: Optional[float]
    dphi_minus: Optional[float]
    dl_plus: Optional[float]
    dphi_plus: Optional[float]
    bunching_mean: complex
    bunching_intensity: float
    depletion_fraction: float

    def as_dict(self):
        return asdict(self)


def build_record(tau, means, I, g2s, cross, uncert, bunch, atom_count_N) -> ObservablesRecord:
    fields = {
        "tau": float(tau),
        "mean_probe": complex(means[0]),
        "mean_minus": complex(means[1]),
        "mean_plus": complex(means[2]),
        "intensity_a": float(I[0]),
        "intensity_minus": float(I[1]),
        "intensity_plus": float(I[2]),
        "g2_a": g2s[0],
        "g2_minus": g2s[1],
        "g2_plus": g2s[2],
        "bunching_mean": complex(bunch[0]),
        "bunching_intensity": float(bunch[1]),
        "depletion_fraction": float((I[1] + I[2]) / atom_count_N),
    }
    for (i, j), cc in zip(PAIRS, cross):
        key = i + j
        fields["g2_" + key] = cc.g2
        fields["cs_" + key] = cc.cs_bound
        fields["qb_" + key] = cc.quantum_bound
        fields["violates_" + key] = cc.violates_cs
    for name, (dl, dphi) in zip(MODES, uncert):
        fields["dl_" + name] = dl
        fields["dphi_" + name] = dphi
    return ObservablesRecord(**fields)


def check_record(rec: ObservablesRecord, alpha: complex, tol: float = 1e-8):
    """Raise if a record breaks conservation, positivity or the quantum bound."""
    charge = rec.intensity_a - rec.intensity_minus + rec.intensity_plus
    scale = max(1.0, rec.intensity_a)
    if abs(charge - abs(alpha) ** 2) > tol * scale:
        raise CarlError(f"charge not conserved at tau={rec.tau}: {charge} vs {abs(alpha) ** 2}")
    for name in ("intensity_a", "intensity_minus", "intensity_plus"):
        value = getattr(rec, name)
        if value < -tol * scale:
            raise CarlError(f"negative {name} at tau={rec.tau}: {value}")
    for key in ("a", "minus", "plus", "aminus", "aplus", "minusplus"):
        value = getattr(rec, "g2_" + key)
        if value is not None and value < -tol:
            raise CarlError(f"negative g2_{key} at tau={rec.tau}: {value}")
    for i, j in PAIRS:
        g, qb = getattr(rec, f"g2_{i}{j}"), getattr(rec, f"qb_{i}{j}")
        if g is not None and g - qb > tol * max(1.0, qb):
            raise CarlError(f"quantum bound exceeded for ({i},{j}) at tau={rec.tau}: {g} > {qb}")


def observables(
    U, alpha: complex, atom_count_N: float = DEFAULT_ATOM_COUNT, check: bool = True
) -> ObservablesRecord:
    """Record for an explicit propagator.

    ``check=False`` skips the invariant checks, which only hold for a true
    (pseudo-unitary) propagator.
    """
    P = U if isinstance(U, PropagatorMatrix) else PropagatorMatrix(float("nan"), np.asarray(U))
    alpha = complex(alpha)
    I = intensities(P, alpha)
    g2s = [g2_single(P, alpha, m) for m in MODES]
    cross = [g2_cross(P, alpha, pair) for pair in PAIRS]
    if alpha == 0:
        uncert = [(None, None)] * 3
    else:
        uncert = [phase_amplitude_uncertainty(P, alpha, m) for m in MODES]
    rec = build_record(
        P.tau,
        mean_fields(P, alpha),
        I,
        g2s,
        cross,
        uncert,
        bunching(P, alpha, atom_count_N),
        atom_count_N,
    )
    if check:
        check_record(rec, alpha)
    return rec


def record(
    model: ModelParams,
    spectral: Optional[SpectralData],
    tau: float,
    atom_count_N: float = DEFAULT_ATOM_COUNT,
    propagator=None,
) -> ObservablesRecord:
    """All observables at ``tau`` for ``model``.

    Uses the eigendecomposition when ``spectral`` is given and non-marginal,
    the matrix exponential otherwise.  ``propagator`` may be a callable
    ``(spectral, tau) -> PropagatorMatrix`` to override the path (e.g.
    ``propagate_asymptotic``).
    """
    if propagator is None:
        return observables(propagate(model, tau, spectral), model.alpha, atom_count_N)
    return observables(propagator(spectral, tau), model.alpha, atom_count_N, check=False)

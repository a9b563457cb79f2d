"""Dispersion relation and eigen-structure of the three-mode coupling matrix.

The characteristic polynomial of the coupling matrix is

    p(lambda) = lambda^3 - delta lambda^2 - lambda + delta + 2 chi^2

and time dependence goes as ``exp(i lambda tau)``, so a root with negative
imaginary part is a growing branch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError
from .model import ModelParams

# Below this eigenvalue gap (relative to max(1, |lambda|)) the spectrum is
# treated as defective.  A double root of a double-precision cubic is only
# resolvable to ~sqrt(eps) ~ 1e-8, so the band has to sit above that.
MARGINAL_GAP = 1e-6
REAL_TOL = 1e-12
RESIDUAL_TOL = 1e-10


class Regime(enum.Enum):
    STABLE = "STABLE"
    UNSTABLE = "UNSTABLE"
    MARGINAL = "MARGINAL"

    def __str__(self):
        return self.value


def characteristic_coefficients(model: ModelParams) -> np.ndarray:
    """Monic coefficients ``[1, -delta, -1, delta + 2 chi^2]``."""
    return np.array([1.0, -model.delta, -1.0, model.delta + 2.0 * model.chi**2])


def discriminant(model: ModelParams) -> float:
    """Cubic discriminant; negative iff a complex-conjugate root pair exists."""
    _, b, c, d = characteristic_coefficients(model)
    return 18 * b * c * d - 4 * b**3 * d + b**2 * c**2 - 4 * c**3 - 27 * d**2


def _residual_scale(lam):
    return max(1.0, abs(lam) ** 3)


def _newton_polish(coeffs, lam):
    p = np.polyval(coeffs, lam)
    dp = np.polyval(np.polyder(coeffs), lam)
    if dp == 0:
        return lam
    candidate = lam - p / dp
    # near a double root Newton can wander; only accept improvements
    if abs(np.polyval(coeffs, candidate)) < abs(p):
        return candidate
    return lam


def characteristic_roots(model: ModelParams) -> np.ndarray:
    """The three roots of the dispersion cubic.

    A real companion-matrix eigenvalue (the most isolated one if several) is
    Newton polished; the remaining quadratic is solved in
    closed form after deflation.  This keeps conjugate pairs exact and double
    roots on the real axis.

    Returns
    -------
    ndarray of complex, shape (3,)
        Ordered ``[real root, lambda_2, lambda_3]`` with ``Im lambda_3 <= 0``.
    """
    coeffs = characteristic_coefficients(model)
    companion = np.zeros((3, 3))
    companion[0, :] = -coeffs[1:]
    companion[1, 0] = 1.0
    companion[2, 1] = 1.0
    raw = np.linalg.eigvals(companion).astype(complex)

    # deflate on a real root; among several, the most isolated one is best
    # conditioned
    scale = max(1.0, float(np.max(np.abs(raw))))
    im_min = float(np.min(np.abs(raw.imag)))
    real_like = [k for k in range(3) if abs(raw[k].imag) <= im_min + REAL_TOL * scale]
    gaps = {k: min(abs(raw[k] - raw[j]) for j in range(3) if j != k) for k in real_like}
    k1 = max(real_like, key=gaps.get)
    r1 = _newton_polish(coeffs, complex(raw[k1].real, 0.0)).real
    _, c2, c1, c0 = coeffs
    p = c2 + r1
    q = -c0 / r1 if abs(r1) > 1.0 else c1 + r1 * p
    disc = p * p - 4.0 * q
    scale = max(1.0, abs(r1), abs(p))
    if disc < -((REAL_TOL * scale) ** 2):
        im = 0.5 * math.sqrt(-disc)
        lam2, lam3 = complex(-0.5 * p, im), complex(-0.5 * p, -im)
    else:
        # stable quadratic formula; disc within rounding of 0 is a double root
        t = -0.5 * (p + math.copysign(math.sqrt(max(disc, 0.0)), p))
        x1 = t
        x2 = q / t if t != 0.0 else 0.0
        lo, hi = sorted((x1, x2))
        lam2, lam3 = complex(hi, 0.0), complex(lo, 0.0)
    return np.array([complex(r1, 0.0), lam2, lam3])


def root_gap(roots) -> float:
    roots = np.asarray(roots)
    return min(abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3))


def classify_regime(roots) -> Regime:
    """Classify the gain regime from the roots of the dispersion cubic.

    MARGINAL when two roots coalesce to within ``MARGINAL_GAP`` (relative),
    UNSTABLE when a conjugate pair with nonzero imaginary part exists,
    STABLE otherwise.
    """
    roots = np.asarray(roots, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(roots))))
    if root_gap(roots) < MARGINAL_GAP * scale:
        return Regime.MARGINAL
    if np.max(np.abs(roots.imag)) > REAL_TOL * scale:
        return Regime.UNSTABLE
    return Regime.STABLE


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigen-quantities of the coupling matrix for one (chi, delta).

    ``eigenvectors[:, k]`` is the eigenvector for ``eigenvalues[k]``; the last
    eigenvalue is the growing branch in the UNSTABLE regime.  ``weights`` is
    ``zeta[i, j] = V[i, 2] Vinv[2, j]``.
    """

    model: ModelParams
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    inverse: np.ndarray
    gain_rate: float
    oscillation: float
    weights: np.ndarray
    fluctuation_f: float
    regime: Regime

    @property
    def growth_eigenvalue(self) -> complex:
        return complex(self.eigenvalues[2])


def _null_vector(A):
    # right singular vector for the smallest singular value spans ker(A)
    _, _, vh = np.linalg.svd(A)
    return vh[-1].conj()


def _normalize(v):
    v = v / np.linalg.norm(v)
    ref = np.max(np.abs(v))
    for comp in v:
        if abs(comp) > 1e-12 * ref:
            return v * (abs(comp) / comp)
    return v


def eigensystem(model: ModelParams) -> SpectralData:
    """Eigen-decomposition of the coupling matrix.

    Eigenvectors have unit norm with their first nonzero component real and
    positive.  ``zeta`` and ``f = |Vinv[2, -] / Vinv[2, a]|`` do not depend on
    that choice.

    Raises
    ------
    DegenerateSpectrumError
        If the regime is MARGINAL; propagate with ``propagate_series``.
    """
    roots = characteristic_roots(model)
    regime = classify_regime(roots)
    if regime is Regime.MARGINAL:
        raise DegenerateSpectrumError(
            f"eigenvalue gap {root_gap(roots):.3g} below {MARGINAL_GAP:g} at "
            f"chi={model.chi!r}, delta={model.delta!r}; use propagate_series"
        )
    if regime is Regime.STABLE:
        roots = _stable_order(model, roots)

    M = model.coupling_matrix()
    V = np.empty((3, 3), dtype=complex)
    for k, lam in enumerate(roots):
        V[:, k] = _normalize(_null_vector(M - lam * np.eye(3)))
    Vinv = np.linalg.inv(V)

    lam3 = roots[2]
    if regime is Regime.UNSTABLE:
        gain = -lam3.imag
        omega = lam3.real
    else:
        gain = 0.0
        omega = float("nan")
    weights = np.outer(V[:, 2], Vinv[2, :])
    denom = abs(Vinv[2, 0])
    f = abs(Vinv[2, 1]) / denom if denom > 0 else float("inf")
    return SpectralData(
        model=model,
        eigenvalues=roots,
        eigenvectors=V,
        inverse=Vinv,
        gain_rate=float(gain),
        oscillation=float(omega),
        weights=weights,
        fluctuation_f=float(f),
        regime=regime,
    )


def _stable_order(model, roots):
    """Put the root closest to the bare probe frequency first.

    For chi = 0 this gives ``(delta, 1, -1)`` so that V is the identity; for
    small chi it keeps eigenvectors continuously connected to the bare modes.
    """
    bare = np.array([model.delta, 1.0, -1.0])
    remaining = list(range(3))
    ordered = []
    for target in bare:
        k = min(remaining, key=lambda i: abs(roots[i] - target))
        ordered.append(roots[k])
        remaining.remove(k)
    return np.array(ordered)


def gain_rate(model: ModelParams) -> float:
    """Growth rate Gamma = max(0, -min Im lambda), defined in every regime."""
    roots = characteristic_roots(model)
    return float(max(0.0, -np.min(roots.imag)))

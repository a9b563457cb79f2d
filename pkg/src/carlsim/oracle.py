"""Brute-force reference: Schroedinger evolution in a truncated Fock space.

The effective three-mode Hamiltonian (in units of hbar omega_r)

    H = n_+ + n_- - delta n_a + chi (a^dag c_-^dag + a^dag c_+ + c_+^dag a + c_- a)

is built on the product basis ``|n_a, n_-, n_+>`` in lexicographic order and
evolved exactly within each block of the conserved charge
``Q = n_a - n_- + n_+``.  No Gaussian assumption is made anywhere, so the
moments here independently check the Wick engine in :mod:`carlsim.moments`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from .errors import ConvergenceError, CutoffError, InvalidParameter, ResourceError
from .model import ModelParams
from .moments import (
    DEFAULT_ATOM_COUNT,
    INTENSITY_FLOOR,
    PAIRS,
    ObservablesRecord,
    build_record,
    cross_with_bounds,
    uncertainties_from_moments,
)
from .propagator import MODES

MAX_DIMENSION = 250_000


@dataclass(frozen=True)
class FockOracleConfig:
    cutoff_a: int = 20
    cutoff_minus: int = 12
    cutoff_plus: int = 12
    time_step: float = 0.05
    truncation_tol: float = 1e-12
    convergence_tol: float = 1e-8
    max_dimension: int = MAX_DIMENSION

    def __post_init__(self):
        for name in ("cutoff_a", "cutoff_minus", "cutoff_plus"):
            if int(getattr(self, name)) < 1:
                raise InvalidParameter(f"{name} must be >= 1")
        if not self.time_step > 0:
            raise InvalidParameter("time_step must be positive")
        for name in ("truncation_tol", "convergence_tol"):
            if not 0 < getattr(self, name) < 1:
                raise InvalidParameter(f"{name} must lie in (0, 1)")

    @property
    def cutoffs(self):
        return (int(self.cutoff_a), int(self.cutoff_minus), int(self.cutoff_plus))

    @property
    def shape(self):
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.shape))

    def scaled(self, factor: float) -> "FockOracleConfig":
        ca, cm, cp = (int(math.ceil(c * factor)) for c in self.cutoffs)
        return replace(self, cutoff_a=ca, cutoff_minus=cm, cutoff_plus=cp)


@dataclass(frozen=True, eq=False)
class FockState:
    """State vector on the truncated basis, stored with shape ``config.shape``.

    ``leakage`` is the largest probability found on any mode's top level
    along the evolution; ``truncated_weight`` is the coherent-state weight
    dropped when the initial state was cut off.
    """

    amplitudes: np.ndarray
    tau: float
    model: ModelParams
    config: FockOracleConfig
    leakage: float = 0.0
    truncated_weight: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)


def _ladder(cutoff):
    n = np.arange(1, cutoff + 1)
    return sparse.diags(np.sqrt(n), 1, shape=(cutoff + 1, cutoff + 1), format="csr")


def mode_operators(config: FockOracleConfig):
    """Sparse annihilation operators ``(a, c_-, c_+)`` on the product space."""
    shape = config.shape
    eyes = [sparse.identity(s, format="csr") for s in shape]
    ops = []
    for k in range(3):
        factors = list(eyes)
        factors[k] = _ladder(config.cutoffs[k])
        ops.append(sparse.kron(sparse.kron(factors[0], factors[1]), factors[2], format="csr"))
    return ops


def occupation_grid(config: FockOracleConfig):
    """``(n_a, n_-, n_+)`` as broadcast-ready integer arrays of ``config.shape``."""
    return np.meshgrid(*(np.arange(s) for s in config.shape), indexing="ij")


def charge_diagonal(config: FockOracleConfig) -> np.ndarray:
    na, nm, npl = occupation_grid(config)
    return (na - nm + npl).reshape(-1)


def _check_budget(config):
    if config.dimension > config.max_dimension:
        raise ResourceError(
            f"Fock dimension {config.dimension} exceeds budget {config.max_dimension}"
        )


def build_hamiltonian(model: ModelParams, config: FockOracleConfig) -> sparse.csr_matrix:
    """Sparse Hermitian matrix of the three-mode Hamiltonian."""
    _check_budget(config)
    a, cm, cp = mode_operators(config)
    na, nm, npl = (x.reshape(-1).astype(float) for x in occupation_grid(config))
    diag = sparse.diags(npl + nm - model.delta * na, format="csr")
    pair = a.conj().T @ cm.conj().T  # a^dag c_-^dag
    hop = a.conj().T @ cp  # a^dag c_+
    coupling = pair + hop
    H = diag + model.chi * (coupling + coupling.conj().T)
    return H.tocsr()


@lru_cache(maxsize=64)
def _block_eigensystem(chi, delta, cutoffs):
    config = FockOracleConfig(*cutoffs, max_dimension=10**9)
    H = build_hamiltonian(ModelParams(chi, delta), config)
    Q = charge_diagonal(config)
    blocks = []
    for q in np.unique(Q):
        idx = np.flatnonzero(Q == q)
        Hb = H[idx][:, idx].toarray()
        w, W = np.linalg.eigh(Hb)
        blocks.append((idx, w, W))
    return blocks


def coherent_amplitudes(alpha: complex, cutoff: int):
    """Truncated coherent-state amplitudes and the dropped probability."""
    n = np.arange(cutoff + 1)
    if alpha == 0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return amps, 0.0
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    dropped = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    return amps, dropped


def initial_state(model: ModelParams, config: FockOracleConfig) -> FockState:
    """``|alpha, 0, 0>`` truncated and renormalised."""
    _check_budget(config)
    amps, dropped = coherent_amplitudes(model.alpha, config.cutoff_a)
    if dropped > config.truncation_tol:
        raise CutoffError(
            f"coherent state |alpha|={abs(model.alpha):g} loses {dropped:.3g} "
            f"above cutoff_a={config.cutoff_a}",
            mode="a",
            leakage=dropped,
        )
    psi = np.zeros(config.shape, dtype=complex)
    psi[:, 0, 0] = amps / np.linalg.norm(amps)
    return FockState(psi, 0.0, model, config, 0.0, dropped)


def boundary_weights(psi: np.ndarray):
    """Probability on the top retained level of each mode."""
    p = np.abs(psi) ** 2
    return (
        float(p[-1, :, :].sum()),
        float(p[:, -1, :].sum()),
        float(p[:, :, -1].sum()),
    )


def _apply_evolution(blocks, vec, tau):
    out = np.empty_like(vec)
    for idx, w, W in blocks:
        coeffs = W.conj().T @ vec[idx]
        out[idx] = W @ (np.exp(-1j * w * tau) * coeffs)
    return out


def evolve(model: ModelParams, config: FockOracleConfig, tau: float) -> FockState:
    """State at ``tau`` starting from ``|alpha, 0, 0>``.

    Each charge block is exponentiated through its eigendecomposition, so the
    step is unitary to rounding.  The state is sampled every ``time_step`` to
    monitor probability reaching the cutoffs.

    Raises
    ------
    CutoffError
        If the top level of some mode carries more than ``convergence_tol``.
    """
    if not np.isfinite(tau) or tau < 0:
        raise InvalidParameter(f"tau must be finite and >= 0, got {tau!r}")
    state = initial_state(model, config)
    blocks = _block_eigensystem(model.chi, model.delta, config.cutoffs)
    vec0 = state.vector
    n_steps = max(1, int(math.ceil(tau / config.time_step)))
    leak = np.array(boundary_weights(state.amplitudes))
    psi = vec0
    for k in range(1, n_steps + 1):
        t = tau * k / n_steps
        psi = _apply_evolution(blocks, vec0, t)
        leak = np.maximum(leak, boundary_weights(psi.reshape(config.shape)))
    worst = int(np.argmax(leak))
    if leak[worst] > config.convergence_tol:
        raise CutoffError(
            f"cutoff insufficient for mode {MODES[worst]}: top-level weight "
            f"{leak[worst]:.3g} > {config.convergence_tol:g}",
            mode=MODES[worst],
            leakage=float(leak[worst]),
        )
    return FockState(
        psi.reshape(config.shape),
        float(tau),
        model,
        config,
        float(leak.max()),
        state.truncated_weight,
    )


def _lower(psi, axis):
    """Annihilation operator on one axis of the amplitude array."""
    out = np.zeros_like(psi)
    n = psi.shape[axis]
    factors = np.sqrt(np.arange(1, n)).reshape([-1 if k == axis else 1 for k in range(3)])
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[axis] = slice(1, None)
    dst[axis] = slice(0, n - 1)
    out[tuple(dst)] = factors * psi[tuple(src)]
    return out


def _raise(psi, axis):
    """Creation operator, dropping the component pushed above the cutoff."""
    out = np.zeros_like(psi)
    n = psi.shape[axis]
    factors = np.sqrt(np.arange(1, n)).reshape([-1 if k == axis else 1 for k in range(3)])
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[axis] = slice(0, n - 1)
    dst[axis] = slice(1, None)
    out[tuple(dst)] = factors * psi[tuple(src)]
    return out


def expectation(state: FockState, operator) -> complex:
    psi = state.vector
    return complex(np.vdot(psi, operator @ psi))


def oracle_moments(state: FockState, atom_count_N: float = DEFAULT_ATOM_COUNT) -> ObservablesRecord:
    """Every observable by direct sums over the state's amplitudes."""
    psi = state.amplitudes
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 == 0:
        raise InvalidParameter("zero state vector")
    psi = psi / math.sqrt(norm2)

    low = [_lower(psi, k) for k in range(3)]
    means = [complex(np.vdot(psi, low[k])) for k in range(3)]
    I = [float(np.vdot(low[k], low[k]).real) for k in range(3)]

    # <b_j^dag b_i^dag b_i b_j> = || b_i b_j psi ||^2
    def pair_norm(i, j):
        v = _lower(low[j], i)
        return float(np.vdot(v, v).real)

    g2 = []
    for k in range(3):
        g2.append(pair_norm(k, k) / I[k] ** 2 if I[k] >= INTENSITY_FLOOR else None)

    cross = []
    for p, q in PAIRS:
        i, j = MODES.index(p), MODES.index(q)
        if I[i] < INTENSITY_FLOOR or I[j] < INTENSITY_FLOOR:
            cross.append(cross_with_bounds(None, None, None, I[i], I[j]))
            continue
        gij = pair_norm(i, j) / (I[i] * I[j])
        cross.append(cross_with_bounds(gij, g2[i], g2[j], I[i], I[j]))

    if state.model.alpha == 0:
        uncert = [(None, None)] * 3
    else:
        uncert = []
        for k in range(3):
            bb = complex(np.vdot(psi, _lower(low[k], k)))
            n = I[k] - abs(means[k]) ** 2
            m = bb - means[k] ** 2
            uncert.append(uncertainties_from_moments(means[k], n, m))

    if atom_count_N <= 0:
        raise InvalidParameter("atom_count_N must be positive")
    B_psi = (_raise(psi, 1) + low[2]) / math.sqrt(atom_count_N)
    B_mean = complex(np.vdot(psi, B_psi))
    B_int = float(np.vdot(B_psi, B_psi).real)

    return build_record(state.tau, means, I, g2, cross, uncert, (B_mean, B_int), atom_count_N)


@dataclass(frozen=True)
class ConvergenceCertificate:
    cutoffs: tuple
    max_difference: float
    tolerance: float
    leakage: float


LADDER = (1.0, 1.5, 2.0)


def record_difference(r1: ObservablesRecord, r2: ObservablesRecord) -> float:
    """Largest scaled difference over fields defined in both records."""
    worst = 0.0
    d1, d2 = r1.as_dict(), r2.as_dict()
    for key, v1 in d1.items():
        v2 = d2[key]
        if key == "tau" or v1 is None or v2 is None or isinstance(v1, bool):
            continue
        diff = abs(complex(v1) - complex(v2)) / max(1.0, abs(complex(v1)))
        worst = max(worst, diff)
    return worst


def convergence_ladder(
    model: ModelParams,
    tau: float,
    base_config: FockOracleConfig,
    atom_count_N: float = DEFAULT_ATOM_COUNT,
):
    """Run ``evolve`` at cutoffs scaled by 1, 1.5 and 2.

    Returns ``(record, certificate)`` for the finest rung once two successive
    rungs agree to ``convergence_tol``.  Rungs whose cutoffs are too small
    are skipped.
    """
    previous = None
    last_diff = math.inf
    for factor in LADDER:
        config = base_config.scaled(factor)
        try:
            state = evolve(model, config, tau)
        except CutoffError:
            previous = None
            continue
        rec = oracle_moments(state, atom_count_N)
        if previous is not None:
            last_diff = record_difference(previous, rec)
            if last_diff < base_config.convergence_tol:
                cert = ConvergenceCertificate(
                    config.cutoffs, last_diff, base_config.convergence_tol, state.leakage
                )
                return rec, cert
        previous = rec
    raise ConvergenceError(
        f"oracle did not converge for {model} at tau={tau}: last rung difference "
        f"{last_diff:.3g} vs tolerance {base_config.convergence_tol:g}"
    )

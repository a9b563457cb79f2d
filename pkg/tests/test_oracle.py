import numpy as np
import pytest

from carlsim.errors import ConvergenceError, CutoffError, InvalidParameter, ResourceError
from carlsim.model import ModelParams
from carlsim.moments import record
from carlsim.oracle import (
    FockOracleConfig,
    build_hamiltonian,
    charge_diagonal,
    coherent_amplitudes,
    convergence_ladder,
    evolve,
    expectation,
    initial_state,
    mode_operators,
    oracle_moments,
    record_difference,
)
from carlsim.spectral import eigensystem

SMALL = FockOracleConfig(1, 1, 1)
MEDIUM = FockOracleConfig(14, 10, 10)


def basis_index(na, nm, npl, config=SMALL):
    sa, sm, sp = config.shape
    return (na * sm + nm) * sp + npl


def test_hamiltonian_entries_by_hand():
    chi, delta = 0.3, 0.7
    H = build_hamiltonian(ModelParams(chi, delta), SMALL).toarray()
    expected = np.zeros((8, 8))
    for na in (0, 1):
        for nm in (0, 1):
            for npl in (0, 1):
                i = basis_index(na, nm, npl)
                expected[i, i] = npl + nm - delta * na
    # a^dag c_-^dag : |0,0,p> -> |1,1,p>
    for npl in (0, 1):
        expected[basis_index(1, 1, npl), basis_index(0, 0, npl)] = chi
    # a^dag c_+ : |0,m,1> -> |1,m,0>
    for nm in (0, 1):
        expected[basis_index(1, nm, 0), basis_index(0, nm, 1)] = chi
    expected = expected + np.tril(expected, -1).T
    np.testing.assert_allclose(H, expected, atol=1e-15)


def test_decoupled_hamiltonian_is_diagonal():
    H = build_hamiltonian(ModelParams(0.0, 0.4), MEDIUM)
    assert (H - H.multiply(np.eye(H.shape[0]))).count_nonzero() == 0


def test_hamiltonian_hermitian_and_charge_conserving():
    H = build_hamiltonian(ModelParams(0.8, -1.3), FockOracleConfig(5, 4, 3))
    assert abs(H - H.conj().T).max() < 1e-15
    Q = np.diag(charge_diagonal(FockOracleConfig(5, 4, 3)).astype(float))
    comm = H @ Q - Q @ H
    assert np.abs(comm).max() < 1e-12


def test_operators_satisfy_commutator_below_cutoff():
    config = FockOracleConfig(3, 3, 3)
    for b in mode_operators(config):
        comm = (b @ b.conj().T - b.conj().T @ b).toarray()
        diag = np.diag(comm).reshape(config.shape)
        # equals 1 except on the top level of this mode
        assert np.isclose(diag, 1).sum() >= diag.size * 3 / 4 - 1e-9


def test_coherent_amplitudes_normalised():
    amps, dropped = coherent_amplitudes(1.0 + 1.0j, 30)
    assert np.sum(np.abs(amps) ** 2) == pytest.approx(1.0, abs=1e-14)
    assert dropped < 1e-14


def test_truncated_coherent_state_rejected():
    with pytest.raises(CutoffError) as info:
        initial_state(ModelParams(0.1, 0.0, 3.0), FockOracleConfig(4, 2, 2))
    assert info.value.mode == "a"


def test_evolution_conserves_energy_and_charge():
    model = ModelParams(0.4, 0.5, 0.8)
    config = FockOracleConfig(20, 14, 14)
    H = build_hamiltonian(model, config)
    Q = np.diag(charge_diagonal(config).astype(float))
    s0 = initial_state(model, config)
    s1 = evolve(model, config, 1.0)
    assert s1.norm == pytest.approx(1.0, abs=1e-12)
    assert expectation(s1, H) == pytest.approx(expectation(s0, H), abs=1e-9)
    q0 = np.vdot(s0.vector, Q @ s0.vector).real
    q1 = np.vdot(s1.vector, Q @ s1.vector).real
    assert q1 == pytest.approx(q0, abs=1e-9)


def test_decoupled_state_only_acquires_phase():
    model = ModelParams(0.0, 0.37, 1.0)
    config = FockOracleConfig(16, 2, 2)
    s = evolve(model, config, 2.0)
    rec = oracle_moments(s)
    assert rec.mean_probe == pytest.approx(np.exp(1j * 0.37 * 2.0), abs=1e-12)
    assert rec.intensity_minus == pytest.approx(0.0, abs=1e-15)
    assert rec.g2_a == pytest.approx(1.0, abs=1e-10)


def test_vacuum_correlations_undefined():
    model = ModelParams(0.5, 0.0, 0.0)
    rec = oracle_moments(initial_state(model, MEDIUM))
    assert rec.g2_a is None and rec.g2_aminus is None
    assert rec.bunching_intensity == pytest.approx(1e-6)


def test_coherent_g2_is_one():
    model = ModelParams(0.5, 0.0, 1.2)
    rec = oracle_moments(initial_state(model, FockOracleConfig(24, 2, 2)))
    assert rec.g2_a == pytest.approx(1.0, abs=1e-10)
    assert rec.dl_a == pytest.approx(1 / 2.4, rel=1e-9)


def _compare(model, tau, config, tol):
    oracle = oracle_moments(evolve(model, config, tau))
    wick = record(model, eigensystem(model), tau)
    assert record_difference(oracle, wick) < tol
    return oracle, wick


def test_spontaneous_matches_wick():
    oracle, wick = _compare(ModelParams(0.3, 1.0), 0.5, FockOracleConfig(8, 8, 8), 1e-6)
    # non-Gaussian-agnostic check of the thermal statistics
    assert oracle.g2_minus == pytest.approx(2.0, abs=1e-6)
    assert oracle.g2_aplus == pytest.approx(2.0, abs=1e-6)


def test_imaginary_probe_matches_wick():
    # separates |alpha|^4 from alpha^2 in the single-mode g2
    oracle, wick = _compare(ModelParams(0.3, 0.5, 0.7j), 1.0, MEDIUM, 1e-7)
    assert oracle.g2_a == pytest.approx(wick.g2_a, abs=1e-7)
    assert oracle.dphi_minus == pytest.approx(wick.dphi_minus, abs=1e-7)


def test_resource_budget_enforced():
    with pytest.raises(ResourceError):
        build_hamiltonian(ModelParams(0.3, 0.0), FockOracleConfig(99, 99, 99))


def test_cutoff_leakage_names_mode():
    with pytest.raises(CutoffError) as info:
        evolve(ModelParams(1.0, 0.0), FockOracleConfig(3, 3, 3), 3.0)
    assert info.value.mode in ("a", "minus", "plus")
    assert info.value.leakage > 1e-8


def test_negative_time_rejected():
    with pytest.raises(InvalidParameter):
        evolve(ModelParams(0.3, 0.0), SMALL, -1.0)


def test_convergence_certificate():
    model = ModelParams(0.3, 0.0, 0.5)
    rec, cert = convergence_ladder(model, 1.0, FockOracleConfig(12, 8, 8))
    assert cert.max_difference < cert.tolerance
    assert cert.leakage <= cert.tolerance
    assert record_difference(rec, record(model, eigensystem(model), 1.0)) < 1e-7


def test_convergence_failure_reported():
    with pytest.raises(ConvergenceError):
        convergence_ladder(ModelParams(1.0, 0.0), 6.0, FockOracleConfig(2, 2, 2))


def test_state_stays_gaussian_without_probe():
    from carlsim.oracle import _lower

    model = ModelParams(0.5, 1.0, 0.0)
    state = evolve(model, FockOracleConfig(14, 14, 14), 1.0)
    psi = state.amplitudes
    la, lm = _lower(psi, 0), _lower(psi, 1)
    n_a = np.vdot(la, la).real
    n_m = np.vdot(lm, lm).real
    v = _lower(la, 1)
    joint = np.vdot(v, v).real  # <a^dag c_-^dag c_- a>
    pair = np.vdot(psi, v)  # <c_- a>
    assert n_a > 1e-3 and n_m > 1e-3
    assert joint == pytest.approx(n_a * n_m + abs(pair) ** 2, abs=1e-6)

"""Heat decomposition of the Fisher score: identities on small models."""

import math

import numpy as np
import pytest

from thermoq.engine import (
    HeatEngine,
    NonThermalSampleError,
    SuppressedOutcomeError,
    conditional_bath_state,
    evolve_total,
    outcome_probabilities,
    precision_bound,
)
from thermoq.linalg import DensityMatrix, thermal_state
from thermoq.models import (
    BathMode,
    build_coupled_oscillators,
    build_dephasing_model,
    fock_measurement,
    pauli_x_measurement,
)


@pytest.fixture(scope="module")
def he_setup():
    n_max = 14
    model = build_coupled_oscillators(1.1, 1.0, 0.15, n_max)
    rho0 = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    rho0[0, 0] = 1.0
    return HeatEngine(model), rho0, fock_measurement(n_max), 1.2, 2.5


@pytest.fixture(scope="module")
def deph_setup():
    model = build_dephasing_model([BathMode(1.0, 0.1), BathMode(1.6, 0.15)], 9)
    plus = np.full((2, 2), 0.5, dtype=complex)
    return HeatEngine(model), plus, pauli_x_measurement(), 1.0, 1.7


class TestStatesAndEvolution:
    def test_initial_state_is_valid_density_matrix(self, he_setup):
        eng, rho0, _, beta, _ = he_setup
        chi0 = eng.initial_state_matrix(rho0, beta)
        DensityMatrix(eng.model.space, chi0)

    def test_propagator_is_unitary(self, he_setup):
        eng = he_setup[0]
        u = eng.propagator(0.8)
        assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-12)

    def test_evolution_preserves_trace_and_energy(self, he_setup):
        eng, rho0, _, beta, t = he_setup
        chi0 = eng.initial_state_matrix(rho0, beta)
        chi_t = eng.evolve_matrix(chi0, t)
        assert np.trace(chi_t).real == pytest.approx(1.0, abs=1e-12)
        h = eng.model.hamiltonian
        assert np.trace(h @ chi_t).real == pytest.approx(np.trace(h @ chi0).real,
                                                         abs=1e-10)

    def test_evolve_total_wrapper(self, he_setup):
        eng, rho0, _, beta, t = he_setup
        chi0 = DensityMatrix(eng.model.space, eng.initial_state_matrix(rho0, beta))
        out = evolve_total(eng.model, chi0, t)
        assert np.allclose(out.matrix, eng.evolve_matrix(chi0.matrix, t), atol=1e-12)


class TestProbabilities:
    def test_sum_to_one(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        probs = eng.outcome_probabilities_at(rho0, beta, t, meas)
        assert probs.sum() == pytest.approx(1.0, abs=1e-10)

    def test_outcome_probabilities_wrapper(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        chi_t = DensityMatrix(
            eng.model.space,
            eng.evolve_matrix(eng.initial_state_matrix(rho0, beta), t))
        pairs = outcome_probabilities(chi_t, meas)
        assert [lab for lab, _ in pairs] == list(meas.labels)
        assert sum(p for _, p in pairs) == pytest.approx(1.0, abs=1e-10)

    def test_conditional_bath_state_is_normalized(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        chi0 = DensityMatrix(eng.model.space, eng.initial_state_matrix(rho0, beta))
        p, rho_b = conditional_bath_state(eng.model, chi0, t, 1, meas)
        assert 0.0 < p < 1.0
        assert np.trace(rho_b.matrix).real == pytest.approx(1.0, abs=1e-10)

    def test_conditional_state_suppressed_outcome(self, he_setup):
        eng, rho0, meas, beta, _ = he_setup
        chi0 = DensityMatrix(eng.model.space, eng.initial_state_matrix(rho0, beta))
        # at t=0 the probe is still in its ground state; l=5 cannot occur
        with pytest.raises(SuppressedOutcomeError):
            conditional_bath_state(eng.model, chi0, 0.0, 5, meas)


class TestHeatDecomposition:
    def test_zero_time_heats_vanish(self, he_setup):
        eng, rho0, meas, beta, _ = he_setup
        record = eng.heat_decomposition(rho0, beta, 0.0, meas)
        assert len(record.outcomes) == 1
        o = record.outcomes[0]
        assert o.label == 0 and o.probability == pytest.approx(1.0, abs=1e-12)
        assert abs(o.h_tra) < 1e-10 and abs(o.h_cor) < 1e-10

    def test_average_heat_is_mean_trajectory_heat(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        record = eng.heat_decomposition(rho0, beta, t, meas)
        avg = sum(o.probability * o.h_tra for o in record.outcomes)
        assert avg == pytest.approx(record.h_avg, abs=1e-10)

    def test_scores_have_zero_mean(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        record = eng.heat_decomposition(rho0, beta, t, meas)
        assert sum(o.probability * o.score for o in record.outcomes) == \
            pytest.approx(0.0, abs=1e-10)

    def test_score_identity(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        record = eng.heat_decomposition(rho0, beta, t, meas)
        direct = eng.score_direct_all(rho0, beta, t, meas)
        for o in record.outcomes:
            assert direct[o.label] == pytest.approx(o.score, abs=1e-10)

    def test_score_identity_dephasing(self, deph_setup):
        eng, plus, meas, beta, t = deph_setup
        record = eng.heat_decomposition(plus, beta, t, meas)
        direct = eng.score_direct_all(plus, beta, t, meas)
        for o in record.outcomes:
            assert direct[o.label] == pytest.approx(o.score, abs=1e-10)

    def test_suppressed_outcome_raises(self, he_setup):
        eng, rho0, meas, beta, _ = he_setup
        with pytest.raises(SuppressedOutcomeError):
            eng.score_direct(rho0, beta, 0.0, meas, 7)


class TestTwoPointRoute:
    def test_matches_projected_energy_route(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        record = eng.heat_decomposition(rho0, beta, t, meas)
        chi0 = eng.initial_state_matrix(rho0, beta)
        heats = eng.two_point_trajectory_heat_all(chi0, t, meas)
        for o in record.outcomes:
            assert heats[o.label] == pytest.approx(o.h_tra, abs=1e-9)

    def test_matches_on_dephasing_model(self, deph_setup):
        eng, plus, meas, beta, t = deph_setup
        record = eng.heat_decomposition(plus, beta, t, meas)
        chi0 = eng.initial_state_matrix(plus, beta)
        heats = eng.two_point_trajectory_heat_all(chi0, t, meas)
        for o in record.outcomes:
            assert heats[o.label] == pytest.approx(o.h_tra, abs=1e-9)

    def test_rejects_sample_energy_coherence(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        d = eng.model.bath_dim
        coherent = np.zeros((d, d), dtype=complex)
        coherent[:2, :2] = 0.5
        chi0 = np.kron(rho0, coherent)
        with pytest.raises(NonThermalSampleError):
            eng.two_point_trajectory_heat_all(chi0, t, meas)


class TestFisher:
    def test_three_way_agreement(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        record = eng.heat_decomposition(rho0, beta, t, meas)
        fd = eng.fisher_finite_difference(rho0, beta, t, meas)
        assert fd == pytest.approx(record.fisher_heat, rel=1e-6)

    def test_fd_step_validation(self, he_setup):
        eng, rho0, meas, beta, t = he_setup
        with pytest.raises(ValueError):
            eng.fisher_finite_difference(rho0, beta, t, meas, h=beta)

    def test_decoupled_probe_has_zero_information(self):
        # g = 0: no sample energy reaches the probe, so nothing is learned
        n_max, beta = 10, 1.0
        model = build_coupled_oscillators(1.0, 1.0, 0.0, n_max)
        rho0 = thermal_state(model.h_s_local, beta).matrix
        eng = HeatEngine(model)
        record = eng.heat_decomposition(rho0, beta, 2.0, fock_measurement(n_max))
        assert record.fisher_heat < 1e-15
        assert all(abs(o.h_tra) < 1e-10 and abs(o.h_cor) < 1e-10
                   for o in record.outcomes)


class TestPrecisionBound:
    def test_inverse_square_root(self):
        assert precision_bound(4.0) == pytest.approx(0.5)
        assert precision_bound(4.0, n_measurements=4) == pytest.approx(0.25)

    def test_zero_information_gives_infinite_bound(self):
        assert precision_bound(0.0) == math.inf

    def test_rejects_zero_measurements(self):
        with pytest.raises(ValueError):
            precision_bound(1.0, n_measurements=0)

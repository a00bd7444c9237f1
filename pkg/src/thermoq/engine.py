"""Evolution, measurement, and the heat decomposition of the Fisher score.

For a thermometer prepared in rho0 and a sample in the Gibbs state at
inverse temperature beta, the score of the outcome distribution with
respect to -beta equals a heat fluctuation: the centered trajectory heat
(two-point sample-energy loss along the thermometer's trajectory) plus
the correlation heat (sample-energy shift caused by projecting the
thermometer). The Fisher information is the variance of that fluctuation,
and this module computes it three independent ways: from the heat terms,
from a two-point double sum over sample eigenprojectors, and from a
finite-difference derivative of the outcome probabilities.
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DensityMatrix,
    embed_factor,
    gibbs_weights,
    partial_trace_matrix,
)

PROB_FLOOR = 1e-12


def _trace_prod(a, b):
    """Tr[a b] without forming the product."""
    return np.einsum("ij,ji->", a, b)


class SuppressedOutcomeError(ValueError):
    """Outcome probability below the floor; 1/P_l terms are unreliable."""


class NonThermalSampleError(ValueError):
    """Initial sample state is not diagonal in the sample energy basis."""


@dataclass(frozen=True)
class OutcomeHeat:
    """Per-outcome heat bookkeeping for one measurement result."""

    label: object
    probability: float
    h_tra: float
    h_cor: float
    score: float


@dataclass(frozen=True)
class HeatRecord:
    """Full heat decomposition of one (model, rho0, beta, t, measurement) point."""

    outcomes: tuple
    h_avg: float
    fisher_heat: float
    excluded_probability: float

    @property
    def probabilities(self):
        return np.array([o.probability for o in self.outcomes])


class HeatEngine:
    """Caches the model's eigendecompositions for repeated evaluation.

    All methods are pure given their arguments; instances hold only
    immutable spectra, so sharing across threads is safe.
    """

    def __init__(self, model, prob_floor=PROB_FLOOR):
        self.model = model
        self.prob_floor = prob_floor
        self._ham_w, self._ham_v = np.linalg.eigh(model.hamiltonian)
        self._bath_w, self._bath_v = np.linalg.eigh(model.h_b_local)

    # -- state preparation ------------------------------------------------

    def sample_thermal_matrix(self, beta):
        p = gibbs_weights(self._bath_w, beta)
        return (self._bath_v * p) @ self._bath_v.conj().T

    def initial_state_matrix(self, rho0, beta):
        rho0 = rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0, complex)
        return np.kron(rho0, self.sample_thermal_matrix(beta))

    def propagator(self, t):
        phase = np.exp(-1j * self._ham_w * t)
        return (self._ham_v * phase) @ self._ham_v.conj().T

    def evolve_matrix(self, chi0, t):
        u = self.propagator(t)
        return u @ chi0 @ u.conj().T

    # -- measurement ------------------------------------------------------

    def embedded_projectors(self, meas):
        if meas.system_dim != self.model.system_dim:
            raise ValueError("measurement does not match the system factor")
        return [embed_factor(p, self.model.space, 0) for p in meas.projectors]

    def probabilities(self, chi_t, meas):
        probs = []
        for proj in self.embedded_projectors(meas):
            p = _trace_prod(proj, chi_t).real
            if p < -1e-12:
                raise ValueError(f"negative outcome probability {p:.3e}")
            probs.append(min(max(p, 0.0), 1.0))
        return np.array(probs)

    # -- heat decomposition (projected-energy route) ----------------------

    def heat_decomposition(self, rho0, beta, t, meas):
        """Per-outcome trajectory/correlation heat, score, and Fisher information."""
        if beta <= 0:
            raise ValueError("beta must be positive")
        chi0 = self.initial_state_matrix(rho0, beta)
        u = self.propagator(t)
        chi_t = u @ chi0 @ u.conj().T
        h_b = self.model.h_b.matrix
        # U H_B chi0 U^dag: sandwiching with Pi_l and tracing gives the
        # trajectory-conditioned initial sample energy.
        k0 = u @ (h_b @ chi0) @ u.conj().T
        e_b_0 = np.trace(h_b @ chi0).real
        e_b_t = np.trace(h_b @ chi_t).real
        h_avg = e_b_0 - e_b_t

        chi_t_hb = chi_t @ h_b
        outcomes = []
        excluded = 0.0
        for label, proj in zip(meas.labels, self.embedded_projectors(meas)):
            p = _trace_prod(proj, chi_t).real
            p = min(max(p, 0.0), 1.0)
            if p < self.prob_floor:
                excluded += p
                continue
            e_start = _trace_prod(proj, k0).real / p
            e_end = _trace_prod(proj, chi_t_hb).real / p
            h_tra = e_start - e_end
            h_cor = e_end - e_b_t
            score = (h_tra - h_avg) + h_cor
            outcomes.append(OutcomeHeat(label, p, h_tra, h_cor, score))

        fisher = sum(o.probability * o.score**2 for o in outcomes)
        return HeatRecord(tuple(outcomes), h_avg, fisher, excluded)

    def score_direct_all(self, rho0, beta, t, meas):
        """Scores for every non-suppressed outcome, as a label -> score dict.

        Uses the conditioned-minus-unconditioned initial sample energy,
        Tr[M_l H_B chi(0) M_l^dag] - Tr[H_B chi(0)], not the heat terms.
        """
        chi0 = self.initial_state_matrix(rho0, beta)
        u = self.propagator(t)
        chi_t = u @ chi0 @ u.conj().T
        h_b = self.model.h_b.matrix
        k0 = u @ (h_b @ chi0) @ u.conj().T
        e_b_0 = _trace_prod(h_b, chi0).real
        scores = {}
        for label, proj in zip(meas.labels, self.embedded_projectors(meas)):
            p = _trace_prod(proj, chi_t).real
            if p < self.prob_floor:
                continue
            scores[label] = _trace_prod(proj, k0).real / p - e_b_0
        return scores

    def score_direct(self, rho0, beta, t, meas, label):
        """Score from the conditioned-minus-unconditioned initial sample energy."""
        scores = self.score_direct_all(rho0, beta, t, meas)
        if label not in scores:
            raise SuppressedOutcomeError(f"outcome {label!r} is suppressed")
        return scores[label]

    def _projector_for(self, meas, label):
        idx = meas.labels.index(label)
        return self.embedded_projectors(meas)[idx]

    # -- two-point measurement route --------------------------------------

    def two_point_trajectory_heat_all(self, chi0, t, meas):
        """Trajectory heat from the explicit double sum over sample eigenstates.

        Works in the frame where the sample Hamiltonian is diagonal; chi0
        must carry no coherence between distinct sample energy eigenstates
        (a thermal sample state qualifies). Returns a label -> heat dict
        over the non-suppressed outcomes.
        """
        chi0 = chi0.matrix if isinstance(chi0, DensityMatrix) else np.asarray(chi0, complex)
        d_s = self.model.system_dim
        d_b = self.model.bath_dim
        rot = np.kron(np.eye(d_s), self._bath_v)
        chi_rot = rot.conj().T @ chi0 @ rot
        blocks = chi_rot.reshape(d_s, d_b, d_s, d_b)
        diag = np.einsum("sitj,ij->sitj", blocks, np.eye(d_b))
        dev = np.abs(blocks - diag).max()
        if dev > 1e-10 * (1.0 + np.abs(chi0).max()):
            raise NonThermalSampleError(
                f"initial state has sample-energy coherence {dev:.3e}"
            )
        u_rot = rot.conj().T @ ((self.propagator(t)) @ rot)

        projs = [np.asarray(p, complex) for p in meas.projectors]
        eps = self._bath_w
        cols = np.arange(d_s) * d_b
        total = np.zeros(len(projs))
        energy_sum = np.zeros(len(projs))
        for j in range(d_b):
            r_j = blocks[:, j, :, j]
            weight = np.trace(r_j).real
            if weight < 1e-300:
                continue
            w_r, v_r = np.linalg.eigh(r_j)
            keep = w_r > 1e-16 * max(weight, 1.0)
            if not np.any(keep):
                continue
            amp = u_rot[:, cols + j] @ (v_r[:, keep] * np.sqrt(w_r[keep]))
            for li, proj in enumerate(projs):
                # q[i] = sum over branches of <psi|(P_l x |i><i|)|psi>
                q = np.zeros(d_b)
                for r in range(amp.shape[1]):
                    m = amp[:, r].reshape(d_s, d_b)
                    q += np.einsum("si,si->i", m.conj(), proj @ m).real
                q = np.clip(q, 0.0, None)
                total[li] += q.sum()
                energy_sum[li] += eps[j] * q.sum() - float(eps @ q)
        return {
            label: energy_sum[li] / total[li]
            for li, label in enumerate(meas.labels)
            if total[li] >= self.prob_floor
        }

    def two_point_trajectory_heat(self, chi0, t, label, meas):
        heats = self.two_point_trajectory_heat_all(chi0, t, meas)
        if label not in heats:
            raise SuppressedOutcomeError(f"outcome {label!r} is suppressed")
        return heats[label]

    # -- finite-difference route ------------------------------------------

    def outcome_probabilities_at(self, rho0, beta, t, meas):
        chi_t = self.evolve_matrix(self.initial_state_matrix(rho0, beta), t)
        return self.probabilities(chi_t, meas)

    def fisher_finite_difference(self, rho0, beta, t, meas, h=None):
        """Classical Fisher information from d ln P_l / d(-beta).

        Central differences in beta acting only through the thermal sample
        input, Richardson-extrapolated over step sizes h and h/2. Outcomes
        whose probability dips below the floor at any stencil point are
        excluded.
        """
        if h is None:
            h = 1e-4 * beta
        if not 0 < h <= beta / 10:
            raise ValueError("finite-difference step must lie in (0, beta/10]")

        # The propagator is beta-independent; only the thermal input moves.
        u = self.propagator(t)
        projs = self.embedded_projectors(meas)
        rho0_m = rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0, complex)

        def probs_at(b):
            chi0 = np.kron(rho0_m, self.sample_thermal_matrix(b))
            chi_t = u @ chi0 @ u.conj().T
            vals = np.array([_trace_prod(p, chi_t).real for p in projs])
            return np.clip(vals, 0.0, 1.0)

        def log_scores(step):
            lo = probs_at(beta + step)
            hi = probs_at(beta - step)
            ok = (lo > self.prob_floor) & (hi > self.prob_floor)
            val = np.zeros(len(lo))
            val[ok] = (np.log(hi[ok]) - np.log(lo[ok])) / (2.0 * step)
            return val, ok

        l_h, ok_h = log_scores(h)
        l_h2, ok_h2 = log_scores(h / 2.0)
        scores = (4.0 * l_h2 - l_h) / 3.0
        p0 = probs_at(beta)
        ok = ok_h & ok_h2 & (p0 > self.prob_floor)
        return float(np.sum(p0[ok] * scores[ok] ** 2))


# -- module-level one-shot wrappers (spec operation surfaces) --------------


def evolve_total(model, chi0, t):
    """Unitary evolution of the full state under the model Hamiltonian."""
    if chi0.space.factor_dims != model.space.factor_dims:
        raise ValueError("state space does not match model space")
    out = HeatEngine(model).evolve_matrix(chi0.matrix, t)
    return DensityMatrix(model.space, out)


def outcome_probabilities(chi_t, meas):
    """(label, probability) pairs for a projective measurement on factor 0."""
    dims = chi_t.space.factor_dims
    probs = []
    for label, p in zip(meas.labels, meas.projectors):
        proj = embed_factor(p, chi_t.space, 0)
        val = np.trace(proj @ chi_t.matrix).real
        probs.append((label, min(max(val, 0.0), 1.0)))
    total = sum(p for _, p in probs)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"outcome probabilities sum to {total!r}")
    return probs


def conditional_bath_state(model, chi0, t, label, meas, prob_floor=PROB_FLOOR):
    """Post-measurement sample state (P_l, Tr_S[Pi_l chi(t) Pi_l]/P_l)."""
    eng = HeatEngine(model, prob_floor)
    chi_t = eng.evolve_matrix(chi0.matrix, t)
    proj = eng._projector_for(meas, label)
    sandwich = proj @ chi_t @ proj
    p = np.trace(sandwich).real
    if p < prob_floor:
        raise SuppressedOutcomeError(f"outcome {label!r} has probability {p:.3e}")
    keep = range(1, model.space.num_factors)
    reduced = partial_trace_matrix(sandwich / p, model.space.factor_dims, keep)
    return p, DensityMatrix(model.space.subspace(keep), reduced)


def heat_decomposition(model, rho0, beta, t, meas, prob_floor=PROB_FLOOR):
    return HeatEngine(model, prob_floor).heat_decomposition(rho0, beta, t, meas)


def two_point_trajectory_heat(model, chi0, t, label, meas, prob_floor=PROB_FLOOR):
    return HeatEngine(model, prob_floor).two_point_trajectory_heat(chi0, t, label, meas)


def score_direct(model, rho0, beta, t, meas, label, prob_floor=PROB_FLOOR):
    return HeatEngine(model, prob_floor).score_direct(rho0, beta, t, meas, label)


def fisher_finite_difference(model, rho0, beta, t, meas, h=None, prob_floor=PROB_FLOOR):
    return HeatEngine(model, prob_floor).fisher_finite_difference(rho0, beta, t, meas, h)


def precision_bound(fisher, n_measurements=1):
    """Cramer-Rao bound on the inverse-temperature error, 1/sqrt(N F)."""
    if n_measurements < 1:
        raise ValueError("n_measurements must be at least 1")
    if fisher <= 0:
        return math.inf
    return 1.0 / math.sqrt(n_measurements * fisher)

"""Analytic results for both thermometer families, plus scaling-law fits.

These formulas are the cross-validation targets for the numerical engine:
geometric outcome law and heat terms for the excitation-exchange pair,
decoherence factor and heat terms for the dephasing probe, the associated
precision bounds, and the low-temperature scaling pipelines.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .models import BathMode, SpectralDensity, discretize_spectral_density


def _nbar(beta, omega):
    """Thermal occupation 1/(e^{beta omega} - 1), overflow-safe."""
    x = beta * omega
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class HEParams:
    """Coupled-oscillator thermometer working point."""

    omega_a: float
    omega_0: float
    g: float
    beta: float
    t: float

    def __post_init__(self):
        if self.omega_a <= 0 or self.omega_0 <= 0 or self.beta <= 0 or self.t < 0:
            raise ValueError("require positive frequencies and beta, t >= 0")

    @property
    def detuning(self):
        return (self.omega_a - self.omega_0) / 2.0

    @property
    def rabi(self):
        """Effective oscillation frequency sqrt(detuning^2 + g^2)."""
        return math.hypot(self.detuning, self.g)

    @property
    def nbar_b(self):
        return _nbar(self.beta, self.omega_0)


def he_mean_excitation(p: HEParams):
    """Mean thermometer excitation n(t) = nbar_b g^2/E^2 sin^2(E t)."""
    e = p.rabi
    if e == 0.0:
        return 0.0
    return p.nbar_b * (p.g / e) ** 2 * math.sin(e * p.t) ** 2


def he_outcome_probability(p: HEParams, l):
    """Geometric outcome law P_l = n^l / (1+n)^{l+1}."""
    if l < 0:
        raise ValueError("outcome l must be nonnegative")
    n = he_mean_excitation(p)
    if n == 0.0:
        return 1.0 if l == 0 else 0.0
    return n**l / (1.0 + n) ** (l + 1)


def he_heat_terms(p: HEParams, l):
    """(trajectory heat, correlation heat) for outcome l.

    H_tra = l omega_0; H_cor = (nbar_b - n)/(1 + n) * (l - n) omega_0.
    """
    n = he_mean_excitation(p)
    h_tra = l * p.omega_0
    h_cor = (p.nbar_b - n) / (1.0 + n) * (l - n) * p.omega_0
    return h_tra, h_cor


def he_fisher(p: HEParams):
    """Closed-form Fisher information omega_0^2 (1+nbar_b)^2 n/(1+n)."""
    n = he_mean_excitation(p)
    return p.omega_0**2 * (1.0 + p.nbar_b) ** 2 * n / (1.0 + n)


def he_precision_bound(p: HEParams):
    """Relative bound Delta beta/beta = sqrt((1+n)/n) / (beta omega_0 (1+nbar_b))."""
    n = he_mean_excitation(p)
    if n <= 0.0:
        return math.inf
    return math.sqrt((1.0 + n) / n) / (p.beta * p.omega_0 * (1.0 + p.nbar_b))


def he_optimal_time(p: HEParams, i=0):
    """Evolution times (i + 1/2) pi / E maximizing the excitation swap."""
    return (i + 0.5) * math.pi / p.rabi


@dataclass(frozen=True)
class DephParams:
    """Dephasing thermometer working point over explicit modes."""

    modes: tuple
    beta: float
    t: float

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise ValueError("at least one mode required")
        if self.beta <= 0 or self.t < 0:
            raise ValueError("require beta > 0 and t >= 0")
        object.__setattr__(self, "modes", modes)

    @property
    def omegas(self):
        return np.array([m.omega for m in self.modes])

    @property
    def couplings(self):
        return np.array([m.g for m in self.modes])

    @property
    def nbars(self):
        x = self.beta * self.omegas
        with np.errstate(over="ignore"):
            return np.where(x > 700, 0.0, 1.0 / np.expm1(np.minimum(x, 700)))


def _one_minus_cos(p: DephParams):
    return 1.0 - np.cos(p.omegas * p.t)


def deph_gamma(p: DephParams):
    """Decoherence exponent 4 sum_k g_k^2/w_k^2 (2n_k+1)(1-cos w_k t)."""
    g2 = p.couplings**2
    return float(4.0 * np.sum(g2 / p.omegas**2 * (2.0 * p.nbars + 1.0) * _one_minus_cos(p)))


def deph_Q(p: DephParams):
    """Average heat Q = -2 sum_k g_k^2/w_k (1-cos w_k t)."""
    return float(-2.0 * np.sum(p.couplings**2 / p.omegas * _one_minus_cos(p)))


def deph_C(p: DephParams):
    """Thermal-fluctuation weight C = -4 sum_k g_k^2/w_k n_k(1+n_k)(1-cos w_k t)."""
    nk = p.nbars
    return float(-4.0 * np.sum(p.couplings**2 / p.omegas * nk * (1.0 + nk) * _one_minus_cos(p)))


def deph_probability(p: DephParams, l):
    """P_l = (1 + l e^{-Gamma})/2 for the x-basis outcome l = +/-1."""
    if l not in (1, -1):
        raise ValueError("dephasing outcome label must be +1 or -1")
    return 0.5 * (1.0 + l * math.exp(-deph_gamma(p)))


def deph_heat_terms(p: DephParams, l, prob_floor=1e-12):
    """(trajectory heat, correlation heat) for x-basis outcome l = +/-1."""
    q = deph_Q(p)
    c = deph_C(p)
    visibility = math.exp(-deph_gamma(p))
    p_l = 0.5 * (1.0 + l * visibility)
    if p_l < prob_floor:
        raise ValueError(f"outcome {l} suppressed: probability {p_l:.3e}")
    ratio = l * visibility / p_l
    return q - ratio * q, ratio * (q + c)


def deph_fisher(p: DephParams):
    """Two-outcome Fisher information 4 C^2 / (e^{2 Gamma} - 1)."""
    c = deph_C(p)
    return 4.0 * c**2 / math.expm1(2.0 * deph_gamma(p))


def deph_precision_bound(p: DephParams):
    """Relative bound sqrt(e^{2 Gamma} - 1) / (2 beta |C|)."""
    c = deph_C(p)
    if c == 0.0:
        return math.inf
    return math.sqrt(math.expm1(2.0 * deph_gamma(p))) / (2.0 * p.beta * abs(c))


# -- scaling experiments ---------------------------------------------------


def scaling_fit(points):
    """Least-squares log-log fit of bound vs beta: (slope, intercept, r^2)."""
    pts = [(float(b), float(v)) for b, v in points]
    if len(pts) < 4:
        raise ValueError("at least 4 points required for a scaling fit")
    if any(b <= 0 or v <= 0 for b, v in pts):
        raise ValueError("scaling fit requires positive betas and bounds")
    x = np.log([b for b, _ in pts])
    y = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def he_scaling_points(j: SpectralDensity, betas, delta_ratio=0.1, time_factor=0.3):
    """Single-mode-approximation bound over a beta sweep.

    Per beta: sample frequency omega_0 = 1/beta, effective coupling
    g^2 = integral of J up to omega_0, detuning = delta_ratio * g. The
    evolution time is held fixed across the sweep (short compared with
    every Rabi period, time_factor/E at the smallest beta) so the bound
    tracks the shrinking coupling.
    """
    betas = sorted(float(b) for b in betas)
    params = []
    for beta in betas:
        omega_0 = 1.0 / beta
        g = math.sqrt(quad(j, 0.0, omega_0)[0])
        params.append((beta, omega_0, g, delta_ratio * g))
    t = time_factor / math.hypot(params[0][3], params[0][2])
    return [
        (beta, he_precision_bound(HEParams(omega_0 + 2 * delta, omega_0, g, beta, t)))
        for beta, omega_0, g, delta in params
    ]


def deph_scaling_points(j: SpectralDensity, betas, t=None, k_modes=2000, omega_max=None):
    """Dephasing bound over a beta sweep at fixed evolution time.

    Default t = 1/(10 omega_c); modes come from the midpoint discretization
    of J up to omega_max (default 10 omega_c).
    """
    if t is None:
        t = 1.0 / (10.0 * j.omega_c)
    if omega_max is None:
        omega_max = 10.0 * j.omega_c
    modes = tuple(discretize_spectral_density(j, k_modes, omega_max))
    return [
        (float(beta), deph_precision_bound(DephParams(modes, float(beta), t)))
        for beta in betas
    ]

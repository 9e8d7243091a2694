"""Analytic association, SINR, rate and energy-efficiency coverage.

Every conditional coverage is a single outer integral over the serving
distance.  With ``w = pi * lambda_M * x**2`` the dominant factor becomes
``exp(-w)``; the interference terms (Q constants) do not depend on ``x`` and
are computed once per evaluation.  The integral is truncated at ``w = 45``,
where the bounding exponential drops below 3e-20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .model import NetworkParams, ScheduleClass, UserSet, total_bs_power
from .quadrature import DEFAULT_SETTINGS, IntegrationSettings, integrate, q_func, tail_integral

W_MAX = 45.0
LOAD_SHAPE = 3.5         # cell-size distribution shape of the load model
MEAN_LOAD_SLOPE = 1.28   # mean-load approximation slope

SD_EXACT = "exact"
SD_LITERAL = "literal"
METHODS = ("exact", "meanload")

_PROB_SLACK = 1e-6  # beyond this a probability outside [0, 1] is a bug, not roundoff


class DegenerateClassError(ValueError):
    """Conditional quantity requested for an empty association set."""


@dataclass(frozen=True)
class AssociationProbs:
    a1: float
    a_d: float
    a_dbar: float

    def __getitem__(self, user_set: UserSet) -> float:
        return {UserSet.U1: self.a1, UserSet.UD: self.a_d, UserSet.UDBAR: self.a_dbar}[user_set]

    @property
    def total(self) -> float:
        return self.a1 + self.a_d + self.a_dbar


def _clamp_probability(value: float, what: str) -> float:
    if not (-_PROB_SLACK <= value <= 1.0 + _PROB_SLACK):
        raise ArithmeticError(f"{what} = {value!r} lies outside [0, 1]")
    return min(1.0, max(0.0, value))


# ---------------------------------------------------------------------------
# geometry of the association regions
# ---------------------------------------------------------------------------

def _cross_coefficient(params: NetworkParams, serving: int, bias: float) -> float:
    """Exclusion-radius coefficient for the other tier.

    A user served by tier ``serving`` at distance x sees no BS of the other
    tier closer than ``sqrt(coef) * x**(alpha_serving / alpha_other)``.
    For the macro tier ``bias`` multiplies the small-cell power; for the
    small-cell tier it divides the macro power.
    """
    t1, t2 = params.tier1, params.tier2
    if serving == 1:
        return (t2.tx_power * bias / t1.tx_power) ** (2.0 / t2.path_loss_exp)
    return (t1.tx_power / (t2.tx_power * bias)) ** (2.0 / t1.path_loss_exp)


def _outer_integral(params: NetworkParams, serving: int, noise_coef: float, own_factor: float,
                    cross_terms, settings: IntegrationSettings) -> float:
    """Serving-distance average written in w = pi * lambda_M * x**2, cut at W_MAX.

    Each (sign, coef, factor) in ``cross_terms`` contributes
    sign * exp(-noise_coef * x**a_M - own_factor * w - pi * lambda_o * coef * factor * x**(2 a_M / a_o)).
    The prefactor 2 pi lambda_M x dx becomes dw, so the result is A times the
    conditional coverage.
    """
    tm = params.tier(serving)
    to = params.tier(3 - serving)
    lam_m = tm.density
    scale = 1.0 / (math.pi * lam_m)  # x**2 per unit w
    noise_pow = 0.5 * tm.path_loss_exp
    cross_pow = tm.path_loss_exp / to.path_loss_exp
    terms = [
        (sign, math.pi * to.density * coef * factor * scale ** cross_pow)
        for sign, coef, factor in cross_terms
    ]
    noise_k = noise_coef * scale ** noise_pow

    def integrand(w):
        base = -own_factor * w
        if noise_k:
            base = base - noise_k * w ** noise_pow
        wp = w ** cross_pow
        out = np.zeros_like(w)
        for sign, k in terms:
            out += sign * np.exp(base - k * wp)
        return out

    # Split at each exponent's e-folding scale so a narrow peak near w = 0
    # (extreme density or path-loss ratios) is never stepped over.
    scales = [1.0 / own_factor] + [k ** (-1.0 / cross_pow) for _, k in terms if k > 0]
    if noise_k:
        scales.append(noise_k ** (-1.0 / noise_pow))
    cuts = sorted({min(W_MAX, s * f) for s in scales for f in (0.1, 1.0, 10.0)} - {W_MAX})
    edges = [0.0] + [c for c in cuts if c > 0.0] + [W_MAX]
    return sum(integrate(integrand, a, b, settings) for a, b in zip(edges, edges[1:]))


# ---------------------------------------------------------------------------
# association
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1024)
def association_probabilities(params: NetworkParams,
                              settings: IntegrationSettings = DEFAULT_SETTINGS) -> AssociationProbs:
    """Probabilities of the macro, extra-offloaded and original small-cell sets."""
    b1, b2 = params.cre.bias_b1, params.cre.bias_b2
    a1 = _outer_integral(params, 1, 0.0, 1.0, [(1.0, _cross_coefficient(params, 1, b1), 1.0)], settings)
    a_dbar = _outer_integral(params, 2, 0.0, 1.0, [(1.0, _cross_coefficient(params, 2, b2), 1.0)],
                             settings)
    if b1 == b2:
        a_d = 0.0
    else:
        a_d = _outer_integral(params, 2, 0.0, 1.0, [
            (1.0, _cross_coefficient(params, 2, b1), 1.0),
            (-1.0, _cross_coefficient(params, 2, b2), 1.0),
        ], settings)
    probs = AssociationProbs(
        _clamp_probability(a1, "A1"),
        _clamp_probability(a_d, "A_D"),
        _clamp_probability(a_dbar, "A_Dbar"),
    )
    if abs(probs.total - 1.0) > 1e-7:
        raise ArithmeticError(f"association probabilities do not sum to 1: {probs}")
    return probs


def serving_distance_pdf(user_set: UserSet, x, params: NetworkParams,
                         settings: IntegrationSettings = DEFAULT_SETTINGS):
    """Density of the serving distance (metres) conditioned on ``user_set``."""
    probs = association_probabilities(params, settings)
    a = probs[user_set]
    if a <= 0.0:
        raise DegenerateClassError(f"{user_set.value} is empty; its serving-distance density is undefined")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("distance must be >= 0")
    t1, t2 = params.tier1, params.tier2
    b1, b2 = params.cre.bias_b1, params.cre.bias_b2
    if user_set is UserSet.U1:
        c = _cross_coefficient(params, 1, b1)
        out = 2 * math.pi * t1.density * x * np.exp(
            -math.pi * t1.density * x ** 2
            - math.pi * t2.density * c * x ** (2 * t1.path_loss_exp / t2.path_loss_exp))
        return out / a
    power = 2 * t2.path_loss_exp / t1.path_loss_exp
    near = np.exp(-math.pi * t2.density * x ** 2
                  - math.pi * t1.density * _cross_coefficient(params, 2, b2) * x ** power)
    if user_set is UserSet.UDBAR:
        return 2 * math.pi * t2.density * x * near / a
    far = np.exp(-math.pi * t2.density * x ** 2
                 - math.pi * t1.density * _cross_coefficient(params, 2, b1) * x ** power)
    return 2 * math.pi * t2.density * x * (far - near) / a


# ---------------------------------------------------------------------------
# SINR coverage
# ---------------------------------------------------------------------------

def _check_threshold(value: float, name: str) -> float:
    value = float(value)
    if not value >= 0 or math.isnan(value):
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


@lru_cache(maxsize=65536)
def sinr_coverage_class(cls: ScheduleClass, T: float, params: NetworkParams,
                        settings: IntegrationSettings = DEFAULT_SETTINGS,
                        sd_form: str = SD_EXACT) -> float:
    """P(SINR >= T | typical user scheduled in class ``cls``), T linear.

    ``sd_form`` selects the class-D expression: ``"exact"`` excludes the
    macro interferers inside the B2 boundary in the second term (what the
    simulated model produces); ``"literal"`` keeps the lower limit at the B1
    boundary in that term.
    """
    T = _check_threshold(T, "SINR threshold")
    probs = association_probabilities(params, settings)
    a = probs[cls.user_set]
    if a <= 0.0:
        raise DegenerateClassError(
            f"class {cls.value} has zero association probability (B1 == B2)")
    if T == 0.0:
        return 1.0
    if math.isinf(T):
        return 0.0

    t1, t2 = params.tier1, params.tier2
    beta = params.cre.power_beta
    b1, b2 = params.cre.bias_b1, params.cre.bias_b2
    sigma2 = params.noise_power
    al1, al2 = t1.path_loss_exp, t2.path_loss_exp

    if cls is ScheduleClass.B:
        val = _outer_integral(
            params, 1, T * sigma2 / (beta * t1.tx_power), 1.0 + q_func(T, al1, settings),
            [(1.0, _cross_coefficient(params, 1, b1), 1.0 + q_func(T / (beta * b1), al2, settings))],
            settings)
    elif cls is ScheduleClass.BBAR:
        val = _outer_integral(
            params, 1, T * sigma2 / t1.tx_power, 1.0 + q_func(T, al1, settings),
            [(1.0, _cross_coefficient(params, 1, b1), 1.0 + q_func(T / b1, al2, settings))],
            settings)
    elif cls is ScheduleClass.DBAR:
        val = _outer_integral(
            params, 2, T * sigma2 / t2.tx_power, 1.0 + q_func(T, al2, settings),
            [(1.0, _cross_coefficient(params, 2, b2), 1.0 + q_func(T * b2, al1, settings))],
            settings)
    else:
        first = 1.0 + q_func(beta * T * b1, al1, settings)
        if sd_form == SD_EXACT:
            second = 1.0 + q_func(beta * T * b2, al1, settings)
        elif sd_form == SD_LITERAL:
            second = 1.0 + (beta * T * b2) ** (2.0 / al1) * tail_integral(
                (beta * T * b1) ** (-2.0 / al1), al1, settings)
        else:
            raise ValueError(f"unknown sd_form {sd_form!r}")
        val = _outer_integral(
            params, 2, T * sigma2 / t2.tx_power, 1.0 + q_func(T, al2, settings),
            [(1.0, _cross_coefficient(params, 2, b1), first),
             (-1.0, _cross_coefficient(params, 2, b2), second)],
            settings)
    return _clamp_probability(val / a, f"S_{cls.value}({T})")


def _mix(params: NetworkParams, per_class, settings: IntegrationSettings) -> float:
    """A1 (eta X_B + (1-eta) X_Bbar) + A_D X_D + A_Dbar X_Dbar, with A_D X_D = 0 if A_D = 0."""
    probs = association_probabilities(params, settings)
    eta = params.cre.partition_eta
    total = probs.a1 * (eta * per_class(ScheduleClass.B) + (1 - eta) * per_class(ScheduleClass.BBAR))
    if probs.a_d > 0:
        total += probs.a_d * per_class(ScheduleClass.D)
    total += probs.a_dbar * per_class(ScheduleClass.DBAR)
    return _clamp_probability(total, "overall coverage")


def sinr_coverage_overall(T: float, params: NetworkParams,
                          settings: IntegrationSettings = DEFAULT_SETTINGS,
                          sd_form: str = SD_EXACT) -> float:
    return _mix(params, lambda c: sinr_coverage_class(c, T, params, settings, sd_form), settings)


# ---------------------------------------------------------------------------
# load and rate coverage
# ---------------------------------------------------------------------------

def load_ratio(cls: ScheduleClass, params: NetworkParams,
               settings: IntegrationSettings = DEFAULT_SETTINGS) -> float:
    """lambda_u * A_q(l) / lambda_M(l): mean number of other same-set users per cell."""
    a = association_probabilities(params, settings)[cls.user_set]
    if a <= 0.0:
        raise DegenerateClassError(f"class {cls.value} has zero association probability (B1 == B2)")
    return params.user_density * a / params.tier(cls.serving_tier).density


def _log_pmf(n: np.ndarray, c: float) -> np.ndarray:
    k = LOAD_SHAPE
    return (k * math.log(k) + gammaln(n + k) - gammaln(k) - gammaln(n)
            + (n - 1) * math.log(c) - (n + k) * math.log(k + c))


def cell_load_pmf(cls: ScheduleClass, n, params: NetworkParams,
                  settings: IntegrationSettings = DEFAULT_SETTINGS):
    """P(N = n), n >= 1: users sharing the tagged BS within the class's set.

    The typical user is always one of them.  Evaluated in log space.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 1) or not np.all(np.equal(np.mod(n_arr, 1), 0)):
        raise ValueError("load is defined for integer n >= 1")
    c = load_ratio(cls, params, settings)
    out = np.exp(_log_pmf(n_arr.astype(float), c))
    return float(out) if out.ndim == 0 else out


def mean_load(cls: ScheduleClass, params: NetworkParams,
              settings: IntegrationSettings = DEFAULT_SETTINGS) -> float:
    """Mean-load approximation 1 + 1.28 * lambda_u * A_q / lambda_M."""
    return 1.0 + MEAN_LOAD_SLOPE * load_ratio(cls, params, settings)


@lru_cache(maxsize=256)
def check_load_pmf_normalization(cls: ScheduleClass, params: NetworkParams,
                                 settings: IntegrationSettings = DEFAULT_SETTINGS,
                                 tol: float = 1e-6) -> float:
    """Sum the load PMF until its tail is negligible; raise if it is not 1."""
    c = load_ratio(cls, params, settings)
    total = 0.0
    start = 1
    block = 256
    while True:
        n = np.arange(start, start + block, dtype=float)
        terms = np.exp(_log_pmf(n, c))
        total += float(terms.sum())
        # the PMF is eventually geometric with ratio c / (c + k); bound the rest
        ratio = c / (c + LOAD_SHAPE) * (1.0 + LOAD_SHAPE / n[-1])
        if n[-1] > c and ratio < 1 and terms[-1] / (1 - ratio) < 1e-9:
            break
        start += block
    if abs(total - 1.0) > tol:
        raise ArithmeticError(f"load PMF of class {cls.value} sums to {total!r}")
    return total


def _sinr_for_rate(rate: float, load: float, bandwidth: float) -> float:
    """SINR needed for (W / load) * log2(1 + SINR) >= rate."""
    exponent = math.log(2.0) * rate * load / bandwidth
    if exponent > 700.0:
        return math.inf
    return math.expm1(exponent)


def rate_coverage_class_exact(cls: ScheduleClass, rho: float | None, params: NetworkParams,
                              settings: IntegrationSettings = DEFAULT_SETTINGS,
                              sd_form: str = SD_EXACT) -> float:
    """P(rate >= rho | class), summing over the load PMF.

    ``rho`` defaults to the class target.  The series stops once the PMF tail
    is below 1e-6 and the last five terms were each below 1e-9, or earlier
    once S(T_n) * tail < 1e-10 (S is non-increasing, so that bounds the rest).
    """
    rho = params.rate_target(cls.rate_tier) if rho is None else _check_threshold(rho, "rate threshold")
    if rho == 0.0:
        return 1.0
    check_load_pmf_normalization(cls, params, settings)
    c = load_ratio(cls, params, settings)
    w = params.bandwidth
    total = 0.0
    cdf = 0.0
    small_run = 0
    n = 0
    while True:
        n += 1
        p = math.exp(float(_log_pmf(np.array(float(n)), c)))
        t_n = _sinr_for_rate(rho, n, w)
        s = sinr_coverage_class(cls, t_n, params, settings, sd_form)
        term = p * s
        total += term
        cdf += p
        tail = max(0.0, 1.0 - cdf)
        small_run = small_run + 1 if term < 1e-9 else 0
        if tail < 1e-6 and small_run >= 5:
            break
        if n > c and s * tail < 1e-10:
            break
    return _clamp_probability(total, f"R_{cls.value}({rho})")


def rate_coverage_class_meanload(cls: ScheduleClass, rho: float | None, params: NetworkParams,
                                 settings: IntegrationSettings = DEFAULT_SETTINGS,
                                 sd_form: str = SD_EXACT) -> float:
    """P(rate >= rho | class) with the load replaced by its mean."""
    rho = params.rate_target(cls.rate_tier) if rho is None else _check_threshold(rho, "rate threshold")
    if rho == 0.0:
        return 1.0
    t = _sinr_for_rate(rho, mean_load(cls, params, settings), params.bandwidth)
    return sinr_coverage_class(cls, t, params, settings, sd_form)


def rate_coverage_class(cls: ScheduleClass, rho: float | None, params: NetworkParams,
                        method: str = "exact", settings: IntegrationSettings = DEFAULT_SETTINGS,
                        sd_form: str = SD_EXACT) -> float:
    if method == "exact":
        return rate_coverage_class_exact(cls, rho, params, settings, sd_form)
    if method == "meanload":
        return rate_coverage_class_meanload(cls, rho, params, settings, sd_form)
    raise ValueError(f"unknown rate method {method!r}; expected one of {METHODS}")


def rate_coverage_overall(rho_scale: float, params: NetworkParams, method: str = "exact",
                          settings: IntegrationSettings = DEFAULT_SETTINGS,
                          sd_form: str = SD_EXACT) -> float:
    """Overall rate coverage; each class is tested against rho_scale times its target."""
    rho_scale = _check_threshold(rho_scale, "rho_scale")

    def per_class(c):
        return rate_coverage_class(c, rho_scale * params.rate_target(c.rate_tier), params,
                                   method, settings, sd_form)

    return _mix(params, per_class, settings)


# ---------------------------------------------------------------------------
# energy-efficiency coverage
# ---------------------------------------------------------------------------

def ee_rate_threshold(cls: ScheduleClass, tau: float, params: NetworkParams) -> float:
    """Rate a class-``cls`` user needs for EE >= tau (bit/s per W)."""
    return tau * total_bs_power(params.tier(cls.serving_tier))


def ee_coverage_class(cls: ScheduleClass, tau: float, params: NetworkParams, method: str = "exact",
                      settings: IntegrationSettings = DEFAULT_SETTINGS,
                      sd_form: str = SD_EXACT) -> float:
    tau = _check_threshold(tau, "EE threshold")
    return rate_coverage_class(cls, ee_rate_threshold(cls, tau, params), params, method,
                               settings, sd_form)


def ee_coverage_overall(tau: float, params: NetworkParams, method: str = "exact",
                        settings: IntegrationSettings = DEFAULT_SETTINGS,
                        sd_form: str = SD_EXACT) -> float:
    tau = _check_threshold(tau, "EE threshold")
    return _mix(params, lambda c: ee_coverage_class(c, tau, params, method, settings, sd_form),
                settings)

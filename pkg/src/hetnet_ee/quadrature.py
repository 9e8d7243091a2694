"""Adaptive 1-D quadrature and the interference tail integrals.

The integrator is a globally adaptive Gauss-Legendre scheme: each panel is
estimated with an n-point rule on the whole panel and on its two halves; the
difference serves as the panel error estimate.  Integrands are called with a
numpy array of abscissae and must return an array of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_GL_ORDER = 15
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class IntegrationSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol!r}")
        if not self.abs_tol >= 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol!r}")
        if self.max_subdivisions < 10:
            raise ValueError(f"max_subdivisions must be >= 10, got {self.max_subdivisions!r}")


DEFAULT_SETTINGS = IntegrationSettings()


class IntegrationError(ArithmeticError):
    """Adaptive refinement ran out of subdivisions before converging."""

    def __init__(self, estimate: float, error: float, message: str = ""):
        self.estimate = estimate
        self.error = error
        super().__init__(message or f"no convergence: estimate={estimate!r}, error bound={error!r}")


def _panel_estimates(f, lo: np.ndarray, hi: np.ndarray):
    """Coarse and refined GL estimates for a batch of panels."""
    mid = 0.5 * (lo + hi)
    edges_lo = np.concatenate([lo, lo, mid])
    edges_hi = np.concatenate([hi, mid, hi])
    half = 0.5 * (edges_hi - edges_lo)
    centre = 0.5 * (edges_hi + edges_lo)
    x = centre[:, None] + half[:, None] * _GL_NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    sums = half * (fx @ _GL_WEIGHTS)
    n = lo.size
    coarse = sums[:n]
    fine = sums[n:2 * n] + sums[2 * n:]
    return fine, np.abs(fine - coarse)


def integrate(f, a: float, b: float, settings: IntegrationSettings = DEFAULT_SETTINGS) -> float:
    """Integrate ``f`` over the finite interval [a, b].

    Panels are bisected, worst first, until the summed error estimate is below
    ``max(abs_tol, rel_tol * |result|)``.  Raises IntegrationError carrying the
    best estimate when ``max_subdivisions`` panels are exhausted.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate() needs finite limits; use integrate_semi_infinite")
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    lo = np.array([a])
    hi = np.array([b])
    val, err = _panel_estimates(f, lo, hi)
    while True:
        total = float(np.sum(val))
        total_err = float(np.sum(err))
        if not (math.isfinite(total) and math.isfinite(total_err)):
            raise IntegrationError(total, total_err, "integrand produced non-finite values")
        tol = max(settings.abs_tol, settings.rel_tol * abs(total))
        if total_err <= tol:
            return sign * total
        room = settings.max_subdivisions - lo.size
        if room <= 0:
            raise IntegrationError(sign * total, total_err)
        # split the worst panels until what is left unsplit fits in half the budget
        order = np.argsort(err)[::-1]
        cum = total_err - np.cumsum(err[order])
        n_split = int(np.searchsorted(-cum, -0.5 * tol)) + 1
        n_split = max(1, min(n_split, room, order.size))
        split = order[:n_split]
        keep = order[n_split:]
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_val, new_err = _panel_estimates(f, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], new_val])
        err = np.concatenate([err[keep], new_err])


def integrate_semi_infinite(f, settings: IntegrationSettings = DEFAULT_SETTINGS) -> float:
    """Integrate ``f`` over [0, inf) through the map x = t / (1 - t), t in [0, 1)."""

    def mapped(t):
        one_minus = 1.0 - t
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.asarray(f(t / one_minus), dtype=float) / (one_minus * one_minus)
        return np.where(np.isfinite(out), out, 0.0)

    return integrate(mapped, 0.0, 1.0, settings)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 2.0:
        raise ValueError(f"path-loss exponent must exceed 2 (integral diverges), got {alpha!r}")
    return alpha


@lru_cache(maxsize=4096)
def tail_integral(lower: float, alpha: float,
                  settings: IntegrationSettings = DEFAULT_SETTINGS) -> float:
    """Integral of 1 / (1 + v**(alpha/2)) over [lower, inf).

    With a = alpha/2, the part beyond v = 1 is folded onto a finite interval by
    v = s**(-1/(a-1)), which turns it into (a-1)**-1 times the integral of
    1 / (1 + s**(a/(a-1))) over s in [0, min(1, lower)**(1-a)].  The part on
    [lower, 1] (when lower < 1) is integrated directly.
    """
    alpha = _check_alpha(alpha)
    lower = float(lower)
    if lower < 0 or math.isnan(lower):
        raise ValueError(f"lower limit must be >= 0, got {lower!r}")
    if math.isinf(lower):
        return 0.0
    a = 0.5 * alpha
    p = a / (a - 1.0)

    def folded(s):
        return 1.0 / (1.0 + s ** p)

    if lower >= 1.0:
        upper = lower ** (1.0 - a)
        if upper == 0.0:
            return 0.0
        return integrate(folded, 0.0, upper, settings) / (a - 1.0)

    near = integrate(lambda v: 1.0 / (1.0 + v ** a), lower, 1.0, settings)
    far = integrate(folded, 0.0, 1.0, settings) / (a - 1.0)
    return near + far


def q_closed_form_alpha4(T: float) -> float:
    """Q(T, 4) = sqrt(T) * (pi/2 - arctan(1/sqrt(T)))."""
    r = math.sqrt(T)
    return r * (0.5 * math.pi - math.atan(1.0 / r)) if r > 0 else 0.0


def q_func(T: float, alpha: float, settings: IntegrationSettings = DEFAULT_SETTINGS,
           closed_form: bool = True) -> float:
    """Interference term T**(2/alpha) * tail_integral(T**(-2/alpha), alpha).

    ``closed_form`` enables the arctan shortcut when alpha == 4.
    """
    alpha = _check_alpha(alpha)
    T = float(T)
    if T < 0 or math.isnan(T):
        raise ValueError(f"threshold must be >= 0, got {T!r}")
    if T == 0.0:
        return 0.0
    if closed_form and alpha == 4.0:
        return q_closed_form_alpha4(T)
    if math.isinf(T):
        return math.inf
    scale = T ** (2.0 / alpha)
    return scale * tail_integral(1.0 / scale, alpha, settings)

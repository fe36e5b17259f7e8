"""Gauss-Legendre rules and the interval-union transforms built on them.

Semi-infinite pieces are mapped algebraically, u = a + r*v/(1-v) with
v in (0,1) and r the weight's decay length; the full line splits at 0.
"""

import math

import numpy as np

from ..errors import DomainError, UsageError
from ..intervals import IntervalUnion

_BASE_RULES = {}


def _base_rule(order):
    if order < 1:
        raise UsageError("quadrature order must be >= 1")
    rule = _BASE_RULES.get(order)
    if rule is None:
        nodes, weights = np.polynomial.legendre.leggauss(order)
        rule = (nodes, weights)
        _BASE_RULES[order] = rule
    return rule


def gauss_legendre_rule(order, interval=(-1.0, 1.0)):
    """Nodes and weights on a finite interval, exact to degree 2*order-1."""
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(
            "gauss_legendre_rule needs finite endpoints; use union_rule with "
            "a decay scale for semi-infinite domains"
        )
    if not lo < hi:
        raise UsageError(f"interval [{lo}, {hi}] has no interior")
    v, w = _base_rule(order)
    half = 0.5 * (hi - lo)
    return lo + half * (v + 1.0), half * w


def gauss_jacobi_rule(order, exponent, interval):
    """Nodes and weights for the measure (y - lo)^exponent dy on a finite
    interval, exponent > -1, by Golub-Welsch on the one-sided Jacobi
    recurrence (weight (1+x)^exponent on (-1, 1))."""
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise UsageError(f"interval [{lo}, {hi}] is not a finite interval")
    if exponent <= -1.0:
        raise DomainError("jacobi exponent must exceed -1")
    if exponent == 0.0:
        return gauss_legendre_rule(order, (lo, hi))
    nu = float(exponent)
    ns = np.arange(order, dtype=float)
    diag = nu * nu / ((2.0 * ns + nu) * (2.0 * ns + nu + 2.0))
    ns_off = np.arange(1, order, dtype=float)
    off = np.sqrt(
        4.0
        * ns_off ** 2
        * (ns_off + nu) ** 2
        / (
            (2.0 * ns_off + nu) ** 2
            * (2.0 * ns_off + nu + 1.0)
            * (2.0 * ns_off + nu - 1.0)
        )
    )
    jac = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    vals, vecs = np.linalg.eigh(jac)
    mu0 = 2.0 ** (nu + 1.0) / (nu + 1.0)
    half = 0.5 * (hi - lo)
    nodes = lo + half * (vals + 1.0)
    weights = half ** (nu + 1.0) * mu0 * vecs[0] ** 2
    return nodes, weights


def half_line_rule(endpoint, order, scale, increasing=True):
    """Rule for (endpoint, +inf) (or its mirror) via u = a + r*v/(1-v)."""
    if scale <= 0:
        raise UsageError("decay scale must be positive")
    v, w = gauss_legendre_rule(order, (0.0, 1.0))
    stretch = scale / (1.0 - v)
    nodes = v * stretch
    weights = w * stretch / (1.0 - v)
    if increasing:
        return endpoint + nodes, weights
    return endpoint - nodes[::-1], weights[::-1]


def interval_rule(lo, hi, order, scale):
    """Rule for a single interval, finite or semi-infinite."""
    lo_f, hi_f = math.isfinite(lo), math.isfinite(hi)
    if lo_f and hi_f:
        return gauss_legendre_rule(order, (lo, hi))
    if lo_f:
        return half_line_rule(lo, order, scale, increasing=True)
    if hi_f:
        return half_line_rule(hi, order, scale, increasing=False)
    # Full line: split at 0.
    right = half_line_rule(0.0, order, scale, increasing=True)
    left = half_line_rule(0.0, order, scale, increasing=False)
    return (np.concatenate([left[0], right[0]]),
            np.concatenate([left[1], right[1]]))


def union_rule(E, order, scale=1.0):
    """Concatenated rule over all intervals of an IntervalUnion."""
    if not isinstance(E, IntervalUnion):
        E = IntervalUnion(E)
    E.require_nonempty()
    nodes, weights = [], []
    for lo, hi in E.intervals:
        x, w = interval_rule(lo, hi, order, scale)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate(f, E, order, scale=1.0):
    """Integral of a vectorized callable over an interval union."""
    x, w = union_rule(E, order, scale)
    return float(np.dot(w, f(x)))

"""The Pfaff lattice: skew moment matrices, Pfaffian tau functions,
skew-orthogonal polynomials, and the projected Lax flow.

Two constructions feed the same machinery: ``alpha = -1`` builds the
sign-kernel double integral (symmetric-ensemble route) and ``alpha = +1``
the Wronskian single integral (symplectic-ensemble route, with the t/2
rescaling absorbed so downstream identities use plain t).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DepthError,
    DivergenceError,
    SingularTauError,
    StabilityError,
    UsageError,
)
from .intervals import IntervalUnion
from .mathcore import block_j, pfaffian, skew_borel, union_rule
from .tau import (
    WeightSpec,
    _direction_poly_powers,
    logdet_series_derivatives,
    shift_coefficients,
    max_shift_for,
)


@dataclass(frozen=True, eq=False)
class SkewMoments:
    """Skew-symmetric moment matrix of even size with its provenance."""

    m: np.ndarray
    alpha: int
    weight: WeightSpec
    E: IntervalUnion

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        object.__setattr__(self, "m", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise UsageError("skew moment matrix must be square of even size")
        if np.abs(m + m.T).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise UsageError("moment matrix must be skew-symmetric")
        if self.alpha not in (-1, 1):
            raise UsageError("alpha must be -1 or +1")

    @property
    def size(self):
        return self.m.shape[0]

    def block(self, n2):
        if n2 > self.size:
            raise DepthError(f"need a {n2} block, matrix has size {self.size}")
        return self.m[:n2, :n2]


def _weighted_powers(w, nodes, weights, count):
    """sum_l weights_l * rho(nodes_l) * nodes_l^j for j = 0..count-1."""
    base = weights * w.density(nodes)
    out = np.empty(count)
    current = np.where(base != 0.0, np.ones_like(base), 0.0)
    for j in range(count):
        out[j] = float(np.dot(base, current))
        current = current * nodes
    return out


def skew_inner_products(w, E=None, alpha=-1, N=4, order=64):
    """Skew moment matrix mu_{ij}, 0 <= i,j < 2N.

    alpha = -1: mu_{ij} = (double integral of) y^i z^j sign(z-y)
    rho(y) rho(z) over E^2, computed with an antiderivative table so no
    quadrature ever straddles the sign kink.

    alpha = +1: mu_{ij} = (j - i) * integral of y^{i+j-1} rho(y) over E
    (the Wronskian pairing).

    The orientation of both pairings is pinned by requiring tau_2 > 0 for
    a positive weight, so that the Pfaffian tau functions match the
    positive ensemble integrals they represent.
    """
    if E is None:
        E = w.support()
    else:
        E = E.intersect(w.support())
    E.require_nonempty()
    if not w.has_decay() and not E.is_bounded():
        raise DivergenceError("weight does not decay on an unbounded domain")
    size = 2 * N
    scale = w.decay_scale()
    mu = np.zeros((size, size))
    if alpha == 1:
        nodes, weights = union_rule(E, order, scale)
        raw = _weighted_powers(w, nodes, weights, 2 * size)
        for i in range(size):
            for j in range(i + 1, size):
                mu[i, j] = (j - i) * raw[i + j - 1]
                mu[j, i] = -mu[i, j]
    elif alpha == -1:
        nodes, weights = union_rule(E, order, scale)
        total = _weighted_powers(w, nodes, weights, size)
        # antiderivative table: F_j(y) = int_{E, z < y} z^j rho(z) dz,
        # evaluated by a fresh rule on E cut at y (integrands stay smooth)
        f_table = np.zeros((len(nodes), size))
        for idx, y in enumerate(nodes):
            lower = E.intersect(IntervalUnion.half_line_below(float(y)))
            if lower.is_empty:
                continue
            sub_nodes, sub_weights = union_rule(lower, order, scale)
            f_table[idx] = _weighted_powers(w, sub_nodes, sub_weights, size)
        outer = weights * w.density(nodes)
        ypow = np.where(outer != 0.0, np.ones_like(nodes), 0.0)
        ymoments = np.empty((size, size))
        for i in range(size):
            # int y^i rho(y) (T_j - 2 F_j(y)) dy for all j at once
            ymoments[i] = (outer * ypow) @ (total - 2.0 * f_table)
            ypow = ypow * nodes
        for i in range(size):
            for j in range(i + 1, size):
                mu[i, j] = 0.5 * (ymoments[i, j] - ymoments[j, i])
                mu[j, i] = -mu[i, j]
    if not np.all(np.isfinite(mu)):
        raise DivergenceError("skew moments diverge on this domain")
    return SkewMoments(m=mu, alpha=alpha, weight=w, E=E)


def evolve_skew(m0, t):
    """Exact evolution m(t) = e^{sum t_k L^k} m(0) e^{sum t_k L^{T k}}.

    The matrix shrinks: border entries whose evolved value would need
    unknown deeper moments are dropped (kept size stays even).
    """
    shift = max_shift_for(t)
    if shift == 0:
        return m0
    keep = m0.size - shift
    keep -= keep % 2
    if keep <= 0:
        raise DepthError(
            f"evolution needs {shift} spare moment indices, have {m0.size}"
        )
    c = shift_coefficients(t, shift)
    new = np.zeros((keep, keep))
    for a, ca in enumerate(c):
        if ca == 0.0:
            continue
        for b, cb in enumerate(c):
            if cb == 0.0:
                continue
            new += ca * cb * m0.m[a : a + keep, b : b + keep]
    new = 0.5 * (new - new.T)  # rounding-exact skewness
    return SkewMoments(m=new, alpha=m0.alpha, weight=m0.weight, E=m0.E)


def pfaff_tau_table(m, nmax):
    """tau_0 = 1, tau_{2n} = pfaffian of the leading 2n block; entry k of
    the result is tau_{2k}."""
    taus = [1.0]
    for n in range(1, nmax + 1):
        taus.append(pfaffian(m.block(2 * n)))
    return np.array(taus)


def pfaff_lax(m):
    """L = Q Lambda Q^{-1} with Q the skew-Borel factor of the moments."""
    q = skew_borel(m.m)
    n = m.size
    lam = np.eye(n, k=1)
    return np.linalg.solve(q.T, (q @ lam).T).T


def project_plus(a):
    """Projection onto the lower-triangular factor of the 2x2-block
    splitting: (a_- - J a_+^T J) + (a_0 - J a_0^T J) / 2, where a_-, a_0,
    a_+ are the strictly-lower, diagonal, and strictly-upper parts in the
    2x2-block grid."""
    n = a.shape[0]
    if n % 2:
        raise UsageError("block projection requires even size")
    rows = np.arange(n)[:, None] // 2
    cols = np.arange(n)[None, :] // 2
    low = np.where(rows > cols, a, 0.0)
    mid = np.where(rows == cols, a, 0.0)
    up = np.where(rows < cols, a, 0.0)
    j = block_j(n)
    inv = lambda x: j @ x.T @ j
    return (low - inv(up)) + 0.5 * (mid - inv(mid))


def project_minus(a):
    """Complementary projection onto the symplectic factor."""
    return a - project_plus(a)


def _pfaff_rhs(L, k):
    b = -project_plus(np.linalg.matrix_power(L, k))
    return b @ L - L @ b


def pfaff_ode_flow(L0, Q0, k, t_end, step, monitor_size=None):
    """Integrate dL/dt_k = [-P_+(L^k), L] and dQ/dt_k = -P_+(L^k) Q by RK4.

    Truncation pollutes the bottom border, so invariants are monitored on
    the interior ``monitor_size`` block only (default: size - 2k); drift
    of its characteristic polynomial beyond what the flow itself causes is
    not checked here — callers compare routes instead.  Returns (L, Q).
    """
    if step <= 0:
        raise UsageError("step must be positive")
    L = np.array(L0, dtype=float)
    Q = np.array(Q0, dtype=float) if Q0 is not None else np.eye(L.shape[0])
    t = 0.0
    direction = 1.0 if t_end >= 0 else -1.0
    while abs(t_end - t) > 1e-15:
        h = direction * min(step, abs(t_end - t))
        # coupled RK4 on (L, Q)
        kl1 = _pfaff_rhs(L, k)
        kq1 = -project_plus(np.linalg.matrix_power(L, k)) @ Q
        L2, Q2 = L + 0.5 * h * kl1, Q + 0.5 * h * kq1
        kl2 = _pfaff_rhs(L2, k)
        kq2 = -project_plus(np.linalg.matrix_power(L2, k)) @ Q2
        L3, Q3 = L + 0.5 * h * kl2, Q + 0.5 * h * kq2
        kl3 = _pfaff_rhs(L3, k)
        kq3 = -project_plus(np.linalg.matrix_power(L3, k)) @ Q3
        L4, Q4 = L + h * kl3, Q + h * kq3
        kl4 = _pfaff_rhs(L4, k)
        kq4 = -project_plus(np.linalg.matrix_power(L4, k)) @ Q4
        L = L + (h / 6.0) * (kl1 + 2 * kl2 + 2 * kl3 + kl4)
        Q = Q + (h / 6.0) * (kq1 + 2 * kq2 + 2 * kq3 + kq4)
        t += h
        if not np.all(np.isfinite(L)):
            raise StabilityError(f"flow blew up at t={t:.4g}; reduce the step")
    return L, Q


def skew_orthopoly_eval(m, n, z):
    """Skew-orthogonal polynomial q_n(z): row n of Q applied to the
    monomial character vector (1, z, z^2, ...)."""
    q = skew_borel(m.m)
    if n >= m.size:
        raise DepthError(f"need degree {n}, moments stop at {m.size - 1}")
    z = np.asarray(z, dtype=float)
    powers = np.power.outer(z, np.arange(n + 1))
    val = powers @ q[n, : n + 1]
    return float(val) if z.ndim == 0 else val


def _skew_direction_matrices(m0, n2, d, order=2):
    """Taylor matrices of the leading n2 block of the evolved skew matrix
    along t = s*d: m(s) = sum_j s^j G_j, exactly."""
    powers = _direction_poly_powers(d, order)
    maxdeg = len(powers[-1]) - 1
    if n2 + maxdeg > m0.size:
        raise DepthError(
            f"need moment indices through {n2 + maxdeg - 1}, "
            f"matrix has size {m0.size}"
        )
    gs = []
    for j in range(order + 1):
        g = np.zeros((n2, n2))
        for p in range(j + 1):
            q = j - p
            cp, cq = powers[p], powers[q]
            for a, ca in enumerate(cp):
                if ca == 0.0:
                    continue
                for b, cb in enumerate(cq):
                    if cb == 0.0:
                        continue
                    g += ca * cb * m0.m[a : a + n2, b : b + n2]
        gs.append(g)
    return gs


def _dlog_pf_directional(m0, n2, d, order):
    """Exact directional derivatives of log pf(m_{n2}(t)) along d, via
    log pf = (1/2) log det."""
    gs = _skew_direction_matrices(m0, n2, d, order)
    return [0.5 * v for v in logdet_series_derivatives(gs)]


def pfaffkp_residual(m, n):
    """Normalized residual of the first Pfaff-KP equation for tau_n:

        ((d/dt1)^4 + 3 (d/dt2)^2 - 4 d^2/dt1 dt3) log tau_n
        + 6 ((d/dt1)^2 log tau_n)^2 - 12 tau_{n-2} tau_{n+2} / tau_n^2 = 0,

    n even.  All derivatives are exact (trace-log series on the moment
    evolution); the mixed term uses polarization.
    """
    if n < 2 or n % 2:
        raise UsageError("pfaffkp_residual needs even n >= 2")
    tau_n = pfaffian(m.block(n))
    if tau_n == 0.0:
        raise SingularTauError(f"tau_{n} vanishes")
    tau_minus = 1.0 if n == 2 else pfaffian(m.block(n - 2))
    tau_plus = pfaffian(m.block(n + 2))
    d1 = _dlog_pf_directional(m, n, [1.0], 4)
    d2 = _dlog_pf_directional(m, n, [0.0, 1.0], 2)
    plus = _dlog_pf_directional(m, n, [1.0, 0.0, 1.0], 2)
    minus = _dlog_pf_directional(m, n, [1.0, 0.0, -1.0], 2)
    t13 = 0.25 * (plus[1] - minus[1])
    rhs = 12.0 * tau_minus * tau_plus / tau_n ** 2
    terms = [d1[3], 3.0 * d2[1], -4.0 * t13, 6.0 * d1[1] ** 2, -rhs]
    scale = max(abs(v) for v in terms)
    if scale == 0.0:
        return 0.0
    return sum(terms) / scale


def skew_from_matrix(mat, alpha=-1, weight=None, E=None):
    """Wrap a raw skew matrix (testing and synthetic data)."""
    return SkewMoments(
        m=np.asarray(mat, dtype=float),
        alpha=alpha,
        weight=weight or WeightSpec("custom", func=lambda z: np.ones_like(z)),
        E=E or IntervalUnion.full_line(),
    )

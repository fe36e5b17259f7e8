"""Linear constraint operators for moment-matrix tau functions.

Three layers:

* weight data: the rational logarithmic derivative -rho'/rho = g/f of a
  weight, as coefficient lists of f and g, with a numerical check of the
  boundary decay f(z) rho(z) z^k -> 0 at the ends of the support;
* numeric operators: the first-order (Heisenberg) and second-order
  (Virasoro) time operators applied to a tau function through a supplier
  exposing exact first time-derivatives, and the full constraint residual
  combining them with a finite-difference boundary operator in the
  endpoints of the spectral window;
* exact algebra: the same operator family acting on polynomials in
  t_1, t_2, ... with rational coefficients, used to check the commutation
  relations and the central charge without any rounding.

Throughout, the multiplication-by-t terms carry the weight
sigma = 1/beta: that weight is pinned by the translation and dilation
identities of the ensemble integrals, and it is also exactly the weight
for which the dressed operators close as a Virasoro algebra in the
standard normalization.
"""

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DepthError, UsageError
from .intervals import IntervalUnion
from .mathcore import lu_determinant, pfaffian
from .pfaff import evolve_skew, skew_inner_products
from .tau import evolve_hankel, hankel_moments

# ----------------------------------------------------------------------
# weight data
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class VirasoroWeightData:
    """Coefficients of f and g in -rho'/rho = g/f, lowest degree first,
    plus the numerically verified boundary-decay flag."""

    f_coeffs: tuple
    g_coeffs: tuple
    boundary_ok: bool

    def f(self, z):
        return sum(c * z ** i for i, c in enumerate(self.f_coeffs))

    def g(self, z):
        return sum(c * z ** i for i, c in enumerate(self.g_coeffs))


def _boundary_decay_ok(w, f_coeffs, kmax=6):
    """Check numerically that f(z) rho(z) z^k -> 0 at both support ends."""

    def worst(z):
        fz = sum(c * z ** i for i, c in enumerate(f_coeffs))
        rho = float(w.density(np.asarray([z]))[0])
        return max(abs(fz * rho * z ** k) for k in range(kmax + 1))

    for lo, hi in w.support().intervals:
        for end, inward in ((lo, +1.0), (hi, -1.0)):
            if math.isinf(end):
                scale = w.decay_scale()
                probes = [math.copysign(r * scale, end)
                          for r in (60.0, 80.0, 100.0)]
            else:
                probes = [end + inward * eps for eps in (1e-4, 1e-6, 1e-8)]
            vals = [worst(z) for z in probes]
            if not all(a >= b for a, b in zip(vals, vals[1:])):
                return False
            if vals[-1] > 1e-10 * (1.0 + vals[0]):
                return False
    return True


def weight_to_fg(w):
    """Extract (f, g) with -rho'/rho = g/f for the supported families."""
    if w.family == "gaussian":
        fc, gc = (1.0,), (0.0, 2.0 * w.b)
    elif w.family == "laguerre":
        fc, gc = (0.0, 1.0), (-w.a, w.b)
    else:
        raise UsageError(
            f"no rational-log-derivative data for the {w.family} weight"
        )
    return VirasoroWeightData(
        f_coeffs=fc, g_coeffs=gc, boundary_ok=_boundary_decay_ok(w, fc)
    )


# ----------------------------------------------------------------------
# tau suppliers with exact first time-derivatives
# ----------------------------------------------------------------------


class HankelTauSupplier:
    """tau_n(t) = det of the n x n Hankel block of E-restricted moments,
    with the time dependence handled by the exact polynomial evolution.
    First derivatives are exact: d/dt_k log tau = tr(m^{-1} m^{(k)})."""

    def __init__(self, w, E, n, depth, order=64):
        self.n = n
        self._m0 = hankel_moments(w, E, M=depth, order=order)
        self._cache = {}

    def _evolved(self, t):
        key = tuple(np.asarray(t, dtype=float))
        m = self._cache.get(key)
        if m is None:
            m = evolve_hankel(self._m0, np.asarray(t, dtype=float))
            self._cache[key] = m
        return m

    def value(self, t):
        return lu_determinant(self._evolved(t).matrix(self.n))

    def d1(self, t, k):
        m = self._evolved(t)
        base = m.matrix(self.n)
        shifted = m.matrix(self.n, shift=k)
        return lu_determinant(base) * float(
            np.trace(np.linalg.solve(base, shifted))
        )


class PfaffTauSupplier:
    """Pfaffian tau of the skew moment matrix: the sign-kernel pairing for
    the beta = 1 integrals (block size n, n even) and the Wronskian
    pairing for beta = 4 (block size 2n, with the times halved so the
    supplier matches integrals carrying one weight factor per variable).
    First derivatives are exact via d log pf = (1/2) tr(m^{-1} dm)."""

    def __init__(self, w, E, n, beta, depth, order=64):
        if beta == 1:
            if n % 2:
                raise UsageError("the beta = 1 Pfaffian form needs even n")
            self.block, alpha, self._tfac = n, -1, 1.0
        elif beta == 4:
            self.block, alpha, self._tfac = 2 * n, 1, 0.5
        else:
            raise UsageError("Pfaffian supplier covers beta = 1 and 4 only")
        size = self.block + depth
        size += size % 2
        self._m0 = skew_inner_products(w, E, alpha=alpha, N=size // 2,
                                       order=order)
        self._cache = {}

    def _evolved(self, t):
        t = self._tfac * np.asarray(t, dtype=float)
        key = tuple(t)
        m = self._cache.get(key)
        if m is None:
            m = evolve_skew(self._m0, t)
            self._cache[key] = m
        return m

    def value(self, t):
        return pfaffian(self._evolved(t).block(self.block))

    def d1(self, t, k):
        m = self._evolved(t)
        b = self.block
        if b + k > m.size:
            raise DepthError(
                f"need skew moments to index {b + k - 1}, have {m.size - 1}"
            )
        base = m.m[:b, :b]
        dm = m.m[k : b + k, :b] + m.m[:b, k : b + k]
        return (
            self._tfac
            * 0.5
            * pfaffian(base)
            * float(np.trace(np.linalg.solve(base, dm)))
        )


# ----------------------------------------------------------------------
# numeric operators
# ----------------------------------------------------------------------


def _j1_numeric(k, sup, t, sigma):
    if k == 0:
        return 0.0
    if k > 0:
        return sup.d1(t, k)
    idx = -k
    tv = t[idx - 1] if idx <= len(t) else 0.0
    return sigma * idx * tv * sup.value(t)


def _j2_numeric(k, sup, t, sigma, h):
    total = 0.0
    # second derivatives d^2/dt_i dt_j, i + j = k, by central differences
    # of the exact first derivative
    for i in range(1, k):
        j = k - i
        tp = np.array(t, dtype=float)
        tm = np.array(t, dtype=float)
        tp[i - 1] += h
        tm[i - 1] -= h
        total += (sup.d1(tp, j) - sup.d1(tm, j)) / (2.0 * h)
    # dilation part: 2 sigma * m t_m d/dt_{m+k}, literal in t
    for m in range(max(1, 1 - k), len(t) + 1):
        tv = t[m - 1]
        if tv != 0.0:
            total += 2.0 * sigma * m * tv * sup.d1(t, m + k)
    # pure multiplication part
    if k <= -2:
        val = sup.value(t)
        for i in range(1, -k):
            j = -k - i
            ti = t[i - 1] if i <= len(t) else 0.0
            tj = t[j - 1] if j <= len(t) else 0.0
            if ti != 0.0 and tj != 0.0:
                total += sigma * sigma * i * j * ti * tj * val
    return total


def j_apply(kind, k, supplier, t, beta=2.0, n=0, sigma=None, h=1e-4):
    """Apply a time operator to tau at t through its supplier.

    kind: "J1" (first order), "J2" (second order), or "betaJ2" (the
    beta- and n-dressed second-order operator).  First derivatives come
    exactly from the supplier; second derivatives by central differences
    of the exact first derivative; multiplication-by-t terms literally.
    """
    t = np.asarray(t, dtype=float)
    if kind not in ("J1", "J2", "betaJ2"):
        raise UsageError(f"unknown operator kind {kind!r}")
    if abs(k) > 4:
        raise UsageError("operator index must satisfy |k| <= 4")
    if sigma is None:
        sigma = 1.0 / beta
    if kind == "J1":
        return _j1_numeric(k, supplier, t, sigma)
    if k >= 0 and len(t) < k + 3:
        raise DepthError(
            f"time truncation too short: need at least t_{k + 3}, "
            f"have t_{len(t)}"
        )
    j2 = _j2_numeric(k, supplier, t, sigma, h)
    if kind == "J2":
        return j2
    out = 0.5 * beta * j2
    coeff = n * beta + (k + 1) * (1.0 - 0.5 * beta)
    if coeff != 0.0:
        out += coeff * _j1_numeric(k, supplier, t, sigma)
    if k == 0:
        out += n * ((n - 1) * 0.5 * beta + 1.0) * supplier.value(t)
    return out


# ----------------------------------------------------------------------
# constraint residual
# ----------------------------------------------------------------------


def _finite_endpoints(E):
    out = []
    for lo, hi in E.intervals:
        if math.isfinite(lo):
            out.append(lo)
        if math.isfinite(hi):
            out.append(hi)
    return out


def _shift_endpoint(E, c, delta):
    shifted = []
    for lo, hi in E.intervals:
        lo2 = lo + delta if lo == c else lo
        hi2 = hi + delta if hi == c else hi
        shifted.append((lo2, hi2))
    return IntervalUnion(shifted)


def virasoro_residual(w, beta, E, n, k, t=None, order=64, step=1e-5):
    """Normalized residual of the k-th linear constraint on the ensemble
    integral over E^n: the boundary operator (finite differences in the
    endpoints) must balance the time-operator combination fixed by the
    (f, g) data of the weight.
    """
    if beta not in (1, 2, 4):
        raise UsageError("beta must be 1, 2 or 4")
    if k < -1:
        raise UsageError("constraints exist for k >= -1 only")
    data = weight_to_fg(w)
    E = (E if E is not None else w.support()).intersect(w.support())
    E.require_nonempty()
    sigma = 1.0 / beta

    kq = k + len(data.f_coeffs)  # largest second-order index used
    K = max(kq + 3, 4)
    if t is None:
        t = np.zeros(K)
    else:
        t = np.asarray(t, dtype=float)
        if len(t) < K:
            t = np.concatenate([t, np.zeros(K - len(t))])
    nonzero = np.nonzero(t)[0]
    span = max(int(nonzero[-1]) + 1 if len(nonzero) else 0, kq)
    reach = 12 * span + K + kq + 2

    if beta == 2:
        depth = 2 * (n - 1) + reach

        def make(dom):
            return HankelTauSupplier(w, dom, n, depth=depth, order=order)

    else:
        def make(dom):
            return PfaffTauSupplier(w, dom, n, beta, depth=reach,
                                    order=order)

    sup = make(E)
    tau = sup.value(t)
    terms = []
    for i, ai in enumerate(data.f_coeffs):
        if ai != 0.0:
            terms.append(
                ai * j_apply("betaJ2", k + i, sup, t, beta=beta, n=n,
                             sigma=sigma)
            )
    for i, bi in enumerate(data.g_coeffs):
        if bi != 0.0:
            idx = k + i + 1
            part = _j1_numeric(idx, sup, t, sigma)
            if idx == 0:
                part += n * tau
            terms.append(-bi * part)
    for c in _finite_endpoints(E):
        coeff = c ** (k + 1) * data.f(c)
        if coeff == 0.0:
            continue
        up = make(_shift_endpoint(E, c, step)).value(t)
        down = make(_shift_endpoint(E, c, -step)).value(t)
        terms.append(-coeff * (up - down) / (2.0 * step))
    scale = max([abs(tau)] + [abs(v) for v in terms])
    if scale == 0.0:
        return 0.0
    return sum(terms) / scale


# ----------------------------------------------------------------------
# exact polynomial algebra
# ----------------------------------------------------------------------


class TPoly:
    """Polynomial in t_1, t_2, ... with Fraction coefficients; monomials
    are exponent tuples with trailing zeros trimmed."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for exps, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    self.terms[_trim(exps)] = c

    @classmethod
    def monomial(cls, exps, coeff=1):
        return cls({tuple(exps): Fraction(coeff)})

    @property
    def is_zero(self):
        return not self.terms

    def max_index(self):
        return max((len(e) for e in self.terms), default=0)

    def max_abs_coeff(self):
        return max((abs(c) for c in self.terms.values()), default=Fraction(0))

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s == 0:
                out.pop(e, None)
            else:
                out[e] = s
        p = TPoly()
        p.terms = out
        return p

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        scalar = Fraction(scalar)
        p = TPoly()
        if scalar != 0:
            p.terms = {e: scalar * c for e, c in self.terms.items()}
        return p

    def mul_var(self, i):
        """Multiply by t_i."""
        p = TPoly()
        for e, c in self.terms.items():
            e2 = list(e) + [0] * max(0, i - len(e))
            e2[i - 1] += 1
            p.terms[tuple(e2)] = c
        return p

    def diff(self, i):
        """d/dt_i."""
        p = TPoly()
        for e, c in self.terms.items():
            if i <= len(e) and e[i - 1] > 0:
                e2 = list(e)
                e2[i - 1] -= 1
                p.terms[_trim(tuple(e2))] = c * e[i - 1]
        return p

    def __eq__(self, other):
        return isinstance(other, TPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))


def _trim(exps):
    exps = tuple(exps)
    while exps and exps[-1] == 0:
        exps = exps[:-1]
    return exps


def heisenberg_poly(k, p, sigma=Fraction(1, 2)):
    """First-order operator d/dt_k + sigma (-k) t_{-k} on a polynomial
    (the k = 0 component is zero)."""
    if k == 0:
        return TPoly()
    if k > 0:
        return p.diff(k)
    return (Fraction(sigma) * (-k)) * p.mul_var(-k)


def quadratic_poly(k, p, sigma=Fraction(1, 2)):
    """Second-order operator: derivative pairs i + j = k, the dilation
    part 2 sigma m t_m d/dt_{m+k}, and the multiplication pairs."""
    sigma = Fraction(sigma)
    out = TPoly()
    for i in range(1, k):
        out = out + p.diff(i).diff(k - i)
    top = p.max_index()
    for m in range(max(1, 1 - k), top - k + 1):
        d = p.diff(m + k)
        if not d.is_zero:
            out = out + (2 * sigma * m) * d.mul_var(m)
    for i in range(1, -k):
        j = -k - i
        out = out + (sigma * sigma * i * j) * p.mul_var(i).mul_var(j)
    return out


def dressed_poly(k, p, beta, n, sigma=None):
    """The beta- and n-dressed second-order operator on a polynomial."""
    beta = Fraction(beta)
    if sigma is None:
        sigma = 1 / beta
    out = (beta / 2) * quadratic_poly(k, p, sigma)
    coeff = n * beta + (k + 1) * (1 - beta / 2)
    if coeff != 0:
        out = out + coeff * heisenberg_poly(k, p, sigma)
    if k == 0:
        out = out + (n * ((n - 1) * beta / 2 + 1)) * p
    return out


def central_charge(beta):
    """Central charge of the dressed operator family."""
    if beta <= 0:
        raise UsageError("beta must be positive")
    beta = Fraction(beta)
    return 1 - 3 * (beta - 2) ** 2 / beta


def _random_poly(rng, nvars=6, max_degree=6, monomials=10):
    terms = {}
    for _ in range(monomials):
        exps = [0] * nvars
        budget = rng.randint(0, max_degree)
        while budget > 0:
            i = rng.randrange(nvars)
            exps[i] += 1
            budget -= 1
        terms[tuple(exps)] = Fraction(rng.randint(-9, 9))
    return TPoly(terms)


def virasoro_commutator_check(beta, k, l, n, trials=4, seed=7):
    """Max coefficient, over random test polynomials, of

        ([V_k, V_l] - (k - l) V_{k+l} - c (k^3 - k)/12 delta_{k,-l}) p

    for the dressed operators, computed by exact rational polynomial
    algebra."""
    beta = Fraction(beta)
    c = central_charge(beta)
    rng = random.Random(seed)

    def op(kk, p):
        return dressed_poly(kk, p, beta, n)

    worst = Fraction(0)
    for _ in range(trials):
        p = _random_poly(rng)
        res = op(k, op(l, p)) - op(l, op(k, p)) - (k - l) * op(k + l, p)
        if k + l == 0:
            res = res - (c * Fraction(k ** 3 - k, 12)) * p
        worst = max(worst, res.max_abs_coeff())
    return float(worst)

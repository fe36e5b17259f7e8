"""Matrix Lax flows with a spectral parameter h.

A Lax polynomial a(h) = alpha h^m + (gamma + lower) h^{m-1} + ... flows by
a' = [a, b + beta h] with beta = f'(alpha) diagonal and b built from the
h^{m-1} coefficient.  Specializing the rank-two data x, y gives the Euler
top (m = 1), the ellipsoidal geodesic / Neumann systems and the central
force problem (m = 2).  The coefficients of the characteristic polynomial
det(z I - a(h)) in (h, z) are conserved along every such flow and serve
as the integrability certificates.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFlagError, DomainError, StabilityError, UsageError

SYSTEM_KINDS = ("euler", "geodesic", "neumann", "central_force")
F_KINDS = ("euler", "geodesic", "neumann", "central_force")
INVARIANT_DRIFT_TOL = 1e-6
CONDITIONED_SIZE = 6


@dataclass(frozen=True)
class LaxPolynomial:
    """a(h) = sum_j coeffs[j] h^j with diagonal leading coefficient."""

    coeffs: tuple
    alpha: np.ndarray
    gamma: np.ndarray

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def size(self):
        return len(self.alpha)

    def __call__(self, h):
        out = np.zeros_like(self.coeffs[0])
        for c in reversed(self.coeffs):
            out = out * h + c
        return out

    def invariant_drift(self):
        """Distance from the invariant manifold: the leading coefficient
        must stay diag(alpha) and the next diagonal must stay gamma."""
        top = np.abs(self.coeffs[-1] - np.diag(self.alpha)).max()
        sub = np.abs(np.diag(self.coeffs[-2]) - self.gamma).max()
        return max(top, sub)


def _check_alpha(alpha):
    alpha = np.asarray(alpha, dtype=float)
    n = len(alpha)
    gaps = np.abs(alpha[:, None] - alpha[None, :])[~np.eye(n, dtype=bool)]
    if n > 1 and gaps.min() < 1e-12 * (1.0 + np.abs(alpha).max()):
        raise DegenerateFlagError("alpha entries must be distinct")
    return alpha


def skew_pair(x, y):
    return np.outer(x, y) - np.outer(y, x)


def sym_pair(x, y):
    return np.outer(x, y) + np.outer(y, x)


def build_system(kind, alpha, gamma=None, x=None, y=None):
    """The Lax polynomial of one of the named mechanical systems."""
    if kind not in SYSTEM_KINDS:
        raise UsageError(f"unknown system kind {kind!r}")
    alpha = _check_alpha(alpha)
    n = len(alpha)
    gamma = np.zeros(n) if gamma is None else np.asarray(gamma, dtype=float)
    x = np.zeros(n) if x is None else np.asarray(x, dtype=float)
    y = np.zeros(n) if y is None else np.asarray(y, dtype=float)
    sub = np.diag(gamma) + skew_pair(x, y)
    if kind == "euler":
        coeffs = (sub, np.diag(alpha))
    elif kind in ("geodesic", "neumann"):
        coeffs = (-np.outer(x, x), sub, np.diag(alpha))
    else:
        coeffs = (sym_pair(x, y) - np.diag(alpha), sub, np.diag(alpha))
    return LaxPolynomial(coeffs=coeffs, alpha=alpha, gamma=gamma)


def _f_derivatives(f_kind, alpha):
    """(f'(alpha), f''(alpha)) for the generating function of the flow."""
    if f_kind == "euler":  # f = (2/3) x^(3/2)
        if np.any(alpha <= 0.0):
            raise DomainError("f = (2/3) x^(3/2) needs alpha > 0")
        return np.sqrt(alpha), 0.5 / np.sqrt(alpha)
    if f_kind in ("geodesic", "central_force"):  # f = ln x
        if np.any(alpha <= 0.0):
            raise DomainError("f = ln x needs alpha > 0")
        return 1.0 / alpha, -1.0 / alpha ** 2
    if f_kind == "neumann":  # f = x^2 / 2
        return alpha.copy(), np.ones_like(alpha)
    raise UsageError(f"unknown flow kind {f_kind!r}")


def b_from_a(a, f_kind):
    """b_ij = (f'(a_i) - f'(a_j)) / (a_i - a_j) (a_{m-1})_ij off the
    diagonal, gamma_i f''(a_i) on it."""
    alpha = a.alpha
    beta, fpp = _f_derivatives(f_kind, alpha)
    diff_a = alpha[:, None] - alpha[None, :]
    np.fill_diagonal(diff_a, 1.0)
    ratio = (beta[:, None] - beta[None, :]) / diff_a
    b = ratio * a.coeffs[-2]
    np.fill_diagonal(b, a.gamma * fpp)
    return b


def _flow_derivative(coeffs, a, f_kind):
    """Coefficients of [a, b + beta h]: a_j' = [a_j, b] + [a_{j-1}, beta]."""
    b = b_from_a(
        LaxPolynomial(coeffs=tuple(coeffs), alpha=a.alpha, gamma=a.gamma),
        f_kind,
    )
    beta = np.diag(_f_derivatives(f_kind, a.alpha)[0])
    out = []
    for j, cj in enumerate(coeffs):
        d = cj @ b - b @ cj
        if j > 0:
            prev = coeffs[j - 1]
            d = d + prev @ beta - beta @ prev
        out.append(d)
    return out


def aci_flow(a0, f_kind, t_end, step):
    """RK4 trajectory endpoint of a' = [a, b + beta h], with b rebuilt
    from the current h^{m-1} coefficient at every stage."""
    if step <= 0.0:
        raise UsageError("step must be positive")
    coeffs = [c.copy() for c in a0.coeffs]
    remaining = float(t_end)
    steps_done = 0
    while remaining > 1e-15:
        h = min(step, remaining)
        k1 = _flow_derivative(coeffs, a0, f_kind)
        k2 = _flow_derivative(
            [c + 0.5 * h * k for c, k in zip(coeffs, k1)], a0, f_kind
        )
        k3 = _flow_derivative(
            [c + 0.5 * h * k for c, k in zip(coeffs, k2)], a0, f_kind
        )
        k4 = _flow_derivative(
            [c + h * k for c, k in zip(coeffs, k3)], a0, f_kind
        )
        coeffs = [
            c + (h / 6.0) * (p + 2.0 * q + 2.0 * r + s)
            for c, p, q, r, s in zip(coeffs, k1, k2, k3, k4)
        ]
        remaining -= h
        steps_done += 1
        if steps_done % 200 == 0:
            current = LaxPolynomial(
                coeffs=tuple(coeffs), alpha=a0.alpha, gamma=a0.gamma
            )
            if current.invariant_drift() > INVARIANT_DRIFT_TOL:
                raise StabilityError(
                    "invariant manifold drift "
                    f"{current.invariant_drift():.2e} after {steps_done} steps"
                )
    out = LaxPolynomial(coeffs=tuple(coeffs), alpha=a0.alpha, gamma=a0.gamma)
    if out.invariant_drift() > INVARIANT_DRIFT_TOL:
        raise StabilityError(
            f"invariant manifold drift {out.invariant_drift():.2e} at t_end"
        )
    return out


def spectral_curve_coeffs(a):
    """Coefficients q_{k, l} of det(z I - a(h)) = z^N + sum q_{k, l} h^k z^l.

    The characteristic polynomial is sampled on a Chebyshev grid in h and
    each z-coefficient is recovered by a Vandermonde solve (exact up to
    rounding for the polynomial degrees involved).
    """
    N, m = a.size, a.degree
    if N > CONDITIONED_SIZE:
        warnings.warn(
            f"spectral-curve extraction at size {N} > {CONDITIONED_SIZE} "
            "may be ill-conditioned",
            stacklevel=2,
        )
    hmax = m * N
    nodes = np.array(
        [math.cos(math.pi * (r + 0.5) / (hmax + 1)) for r in range(hmax + 1)]
    )
    # char poly coefficients, row r: [1, c_{N-1}, ..., c_0] at h = nodes[r]
    table = np.array([np.real(np.poly(a(h))) for h in nodes])
    out = {(0, N): 1.0}
    for ell in range(N):
        deg = m * (N - ell)
        pts = nodes[: deg + 1]
        vand = np.vander(pts, deg + 1, increasing=True)
        sol = np.linalg.solve(vand, table[: deg + 1, N - ell])
        for k, q in enumerate(sol):
            out[(k, ell)] = float(q)
    return out


def conservation_report(a0, f_kind, t_end, step, checkpoints=5):
    """Max drift of any spectral-curve coefficient along the flow."""
    base = spectral_curve_coeffs(a0)
    scale = max(1.0, max(abs(v) for v in base.values()))
    drift = 0.0
    current = a0
    for _ in range(checkpoints):
        current = aci_flow(current, f_kind, t_end / checkpoints, step)
        now = spectral_curve_coeffs(current)
        drift = max(
            drift, max(abs(now[key] - base[key]) for key in base)
        )
    return drift / scale


def commutativity_report(a0, f_kind_1, f_kind_2, t_small, step=1e-3):
    """sup-norm coefficient discrepancy of the two flow orderings."""
    ab = aci_flow(aci_flow(a0, f_kind_1, t_small, step), f_kind_2, t_small, step)
    ba = aci_flow(aci_flow(a0, f_kind_2, t_small, step), f_kind_1, t_small, step)
    return max(
        float(np.abs(p - q).max()) for p, q in zip(ab.coeffs, ba.coeffs)
    )

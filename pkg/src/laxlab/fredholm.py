"""Fredholm determinants det(I - lambda K|_E) by Nystrom discretization.

Kernels: Airy (soft edge), Bessel (hard edge), sine (bulk), and the
finite-N Hermite projection kernel.  The discretization factors the
symmetrized matrix I - lambda sqrt(w) K sqrt(w); on the Airy half-line the
tail is truncated where Ai^2 < 1e-18 with nodes placed relative to the
moving endpoint, so the determinant stays smooth in the endpoints.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .mathcore import (
    airy_ai_vec,
    bessel_j,
    bessel_j_prime,
    gauss_jacobi_rule,
    gauss_legendre_rule,
    lu_determinant,
)

# Ai(x)^2 < 1e-18 beyond this point; used to truncate (s, inf)
AIRY_TAIL_CUT = 9.3


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel, with its parameters and the lambda multiplier."""

    kind: str
    nu: float = 0.0
    N: int = 1
    b: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("airy", "bessel", "sine", "hermite"):
            raise UsageError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "bessel" and self.nu <= -1.0:
            raise DomainError("bessel kernel requires nu > -1")
        if self.kind == "hermite" and (self.N < 1 or self.b <= 0.0):
            raise DomainError("hermite kernel requires N >= 1 and b > 0")


def _airy_kernel(y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    ay, apy = airy_ai_vec(y)
    az, apz = airy_ai_vec(z)
    diff = y - z
    close = np.abs(diff) < 1e-8
    safe = np.where(close, 1.0, diff)
    off = (ay * apz - apy * az) / safe
    mid = 0.5 * (y + z)
    am, apm = airy_ai_vec(mid)
    diag = apm ** 2 - mid * am ** 2
    return np.where(close, diag, off)


def _bessel_kernel(nu, y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(y <= 0.0) or np.any(z <= 0.0):
        raise DomainError("bessel kernel needs arguments > 0")
    sy, sz = np.sqrt(y), np.sqrt(z)
    jy = np.vectorize(lambda t: bessel_j(nu, t))(sy)
    jz = np.vectorize(lambda t: bessel_j(nu, t))(sz)
    jpy = np.vectorize(lambda t: bessel_j_prime(nu, t))(sy)
    jpz = np.vectorize(lambda t: bessel_j_prime(nu, t))(sz)
    diff = y - z
    close = np.abs(diff) < 1e-8
    safe = np.where(close, 1.0, diff)
    off = (jy * sz * jpz - jz * sy * jpy) / (2.0 * safe)
    m = 0.5 * (y + z)
    sm = np.sqrt(m)
    jm = np.vectorize(lambda t: bessel_j(nu, t))(sm)
    jpm = np.vectorize(lambda t: bessel_j_prime(nu, t))(sm)
    diag = 0.25 * (jpm ** 2 + (1.0 - nu ** 2 / m) * jm ** 2)
    return np.where(close, diag, off)


def _sine_kernel(y, z):
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    diff = np.pi * (y - z)
    close = np.abs(diff) < 1e-10
    safe = np.where(close, 1.0, diff)
    return np.where(close, 1.0, np.sin(safe) / safe)


def hermite_functions(N, b, z):
    """Orthonormal oscillator functions phi_k(z) = p_k(z) e^{-b z^2 / 2},
    k < N, for the weight e^{-b z^2}, by the three-term recurrence."""
    z = np.asarray(z, dtype=float)
    u = math.sqrt(b) * z
    phi = np.empty((N, len(z)))
    phi0 = math.pi ** -0.25 * np.exp(-0.5 * u ** 2)
    phi[0] = phi0
    if N > 1:
        phi[1] = math.sqrt(2.0) * u * phi0
    for k in range(1, N - 1):
        phi[k + 1] = (
            u * phi[k] * math.sqrt(2.0 / (k + 1))
            - phi[k - 1] * math.sqrt(k / (k + 1.0))
        )
    return b ** 0.25 * phi


def _hermite_kernel(N, b, y, z):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    py = hermite_functions(N, b, y)
    pz = hermite_functions(N, b, z)
    return py.T @ pz


def kernel_eval(k, y, z):
    """K(y, z) for the chosen kernel (lambda not applied)."""
    scalar = np.ndim(y) == 0 and np.ndim(z) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if k.kind == "airy":
        val = _airy_kernel(y, z)
    elif k.kind == "bessel":
        val = _bessel_kernel(k.nu, y, z)
    elif k.kind == "sine":
        val = _sine_kernel(y, z)
    else:
        val = _hermite_kernel(k.N, k.b, y, z)
        if scalar:
            return float(val[0, 0])
        return val
    return float(val[0]) if scalar else val


def _nystrom_nodes(k, E, order):
    """Nodes and measure weights per interval.

    For the bessel kernel the measure is z^nu dz: the kernel factors as
    (yz)^{nu/2} * (entire function), so a multiplicative similarity turns
    det(I - K) into the determinant of a smooth kernel against z^nu dz.
    An interval touching the hard edge 0 gets a Gauss-Jacobi rule; the
    others absorb z^nu into Gauss-Legendre weights.
    """
    nodes = []
    weights = []
    for lo, hi in E.intervals:
        if math.isinf(lo):
            raise DomainError("kernels here have no decay at -inf")
        if math.isinf(hi):
            if k.kind != "airy":
                raise DomainError(
                    f"the {k.kind} kernel needs a bounded domain"
                )
            hi = max(lo + 0.5, AIRY_TAIL_CUT)
        if k.kind == "bessel" and k.nu != 0.0 and lo == 0.0:
            x, w = gauss_jacobi_rule(order, k.nu, (lo, hi))
        else:
            x, w = gauss_legendre_rule(order, (lo, hi))
            if k.kind == "bessel" and k.nu != 0.0:
                w = w * x ** k.nu
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _airy_matrix(x):
    """K(x_i, x_j) from one pass of Ai over the distinct 1-D nodes."""
    ai, aip = airy_ai_vec(x)
    diff = x[:, None] - x[None, :]
    num = ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]
    np.fill_diagonal(diff, 1.0)
    kernel = num / diff
    np.fill_diagonal(kernel, aip ** 2 - x * ai ** 2)
    return kernel


def _bessel_matrix(nu, x):
    s = np.sqrt(x)
    j = np.array([bessel_j(nu, t) for t in s])
    jp = np.array([bessel_j_prime(nu, t) for t in s])
    diff = x[:, None] - x[None, :]
    num = j[:, None] * (s * jp)[None, :] - j[None, :] * (s * jp)[:, None]
    np.fill_diagonal(diff, 1.0)
    kernel = num / (2.0 * diff)
    np.fill_diagonal(kernel, 0.25 * (jp ** 2 + (1.0 - nu * nu / x) * j ** 2))
    return kernel


def nystrom_matrix(k, E, order):
    """The symmetrized discretization sqrt(w) K sqrt(w) and its nodes
    (for bessel: the similarity-transformed smooth kernel against the
    z^nu measure, which has the same determinant and traces)."""
    x, w = _nystrom_nodes(k, E, order)
    sw = np.sqrt(w)
    if k.kind == "hermite":
        kernel = _hermite_kernel(k.N, k.b, x, x)
    elif k.kind == "airy":
        kernel = _airy_matrix(x)
    elif k.kind == "bessel":
        kernel = _bessel_matrix(k.nu, x)
        if k.nu != 0.0:
            scale = x ** (-0.5 * k.nu)
            kernel = scale[:, None] * kernel * scale[None, :]
    else:
        kernel = kernel_eval(k, x[:, None], x[None, :])
    return sw[:, None] * kernel * sw[None, :], x, w


def nystrom_det(k, E, order=64, estimate_error=False):
    """det(I - lambda K|_E) via LU of the symmetrized Nystrom matrix.

    With estimate_error=True returns (det, err) where err compares
    against a rule of 1.5x the order.
    """
    if E.is_empty:
        return (1.0, 0.0) if estimate_error else 1.0
    mat, _, _ = nystrom_matrix(k, E, order)
    val = lu_determinant(np.eye(mat.shape[0]) - k.lam * mat)
    if not estimate_error:
        return val
    mat2, _, _ = nystrom_matrix(k, E, order + order // 2)
    val2 = lu_determinant(np.eye(mat2.shape[0]) - k.lam * mat2)
    return val2, abs(val - val2)


def kernel_trace_powers(k, E, order, jmax):
    """tr(K^j|_E) for j = 1..jmax by quadrature (lambda not applied)."""
    mat, _, _ = nystrom_matrix(k, E, order)
    out = []
    power = np.eye(mat.shape[0])
    for _ in range(jmax):
        power = power @ mat
        out.append(float(np.trace(power)))
    return out


def scaling_limit_error(N, regime, grid, b=1.0):
    """sup over the grid of |rescaled K_N - limit kernel|.

    bulk: (1/rho) K_N(x/rho, y/rho) -> sine kernel, rho = K_N(0, 0);
    edge: scale sigma = sqrt(2) N^{1/6} about sqrt(2N) -> Airy kernel
    (stated for b = 1; general b rescales lengths by 1/sqrt(b)).
    """
    if N < 10:
        raise UsageError("scaling checks need N >= 10")
    grid = np.asarray(grid, dtype=float)
    k = KernelSpec("hermite", N=N, b=b)
    s = math.sqrt(b)
    if regime == "bulk":
        rho = kernel_eval(k, 0.0, 0.0)
        pts = grid / rho
        approx = _hermite_kernel(N, b, pts, pts) / rho
        exact = _sine_kernel(grid[:, None], grid[None, :])
    elif regime == "edge":
        center = math.sqrt(2.0 * N) / s
        sigma = math.sqrt(2.0) * N ** (1.0 / 6.0) * s
        pts = center + grid / sigma
        approx = _hermite_kernel(N, b, pts, pts) / sigma
        exact = _airy_kernel(grid[:, None], grid[None, :])
    else:
        raise UsageError("regime must be 'bulk' or 'edge'")
    return float(np.abs(approx - exact).max())

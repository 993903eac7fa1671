"""Independent Green-kernel oracle for the reduced quarter-plane problems.

The reduced operator is the Laplacian of the upper half space of dimension
N = n + 4 acting on functions radial in the first N - 1 coordinates.  Its
solution is therefore the image-charge Green potential

    V(r, s) = iint K(r, s; rho, sigma) f(rho, sigma) rho^{n+2} drho dsigma,

where the angular kernel reduces, with d_{-+}^2 = (r-rho)^2 + (s -+ sigma)^2
+ 2 r rho (1 - cos t), to

    K = (1 / 2 pi) (2 r rho)^{-(n+2)/2} [Phi_n(chi_minus) - Phi_n(chi_plus)],
    Phi_n(chi) = int_0^2 (chi + u)^{-(n+2)/2} (u (2 - u))^{n/2} du,
    chi_{-+} = ((r - rho)^2 + (s -+ sigma)^2) / (2 r rho).

Phi_n is tabulated once per dimension on a log grid and splined; the overall
normalization 1/(2 pi) is pinned by the exact identity used in
``verify_kernel_identity`` lifted four dimensions up (see the tests).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import integrate_1d, integrate_tail_1d
from .solver import AuxProblem

_CHI_LO = 1e-16
_CHI_HI = 1e9
_CHI_ASYM = 1e8


def _phi_infinity(n: int) -> float:
    """``int_0^2 (u(2-u))^{n/2} du = 2^{n+1} B(n/2+1, n/2+1)``."""
    a = n / 2.0 + 1.0
    return 2.0 ** (n + 1) * math.exp(2 * math.lgamma(a) - math.lgamma(2 * a))


@lru_cache(maxsize=None)
def _phi_spline(n: int) -> CubicSpline:
    chis = np.logspace(math.log10(_CHI_LO), math.log10(_CHI_HI), 1401)
    m = (n + 2) / 2.0
    vals = np.empty_like(chis)
    for k, chi in enumerate(chis):
        def f(u, chi=chi):
            return (chi + u) ** (-m) * (u * (2.0 - u)) ** (n / 2.0)
        pts = [p for p in (min(chi, 1.0), 1.0) if 0 < p < 2]
        vals[k] = integrate_1d(f, 0.0, 2.0, tol=1e-9, points=pts).value
    return CubicSpline(np.log(chis), np.log(vals))


def _phi_scaled(n: int, d2: np.ndarray, two_rrho: np.ndarray) -> np.ndarray:
    """``(2 r rho)^{-(n+2)/2} Phi_n(d2 / (2 r rho))`` without overflow.

    Uses the spline for moderate chi and the closed asymptotic form
    ``Phi_inf chi^{-m} (1 - m/chi)`` beyond it, where the powers of
    ``2 r rho`` cancel exactly.
    """
    m = (n + 2) / 2.0
    phi_inf = _phi_infinity(n)
    d2 = np.asarray(d2, dtype=float)
    two_rrho = np.asarray(two_rrho, dtype=float)
    out = np.empty(np.broadcast(d2, two_rrho).shape)
    d2b, tb = np.broadcast_arrays(d2, two_rrho)

    with np.errstate(divide="ignore", over="ignore"):
        chi = np.where(tb > 0, d2b / np.where(tb > 0, tb, 1.0), np.inf)
    near = (chi <= _CHI_ASYM) & (tb > 0)
    if np.any(near):
        spline = _phi_spline(n)
        chi_n = np.clip(chi[near], _CHI_LO, None)
        out[near] = np.exp(spline(np.log(chi_n))) * tb[near] ** (-m)
    far = ~near
    if np.any(far):
        with np.errstate(divide="ignore", over="ignore"):
            lead = d2b[far] ** (-m)
        corr = 1.0 - m * tb[far] / np.where(d2b[far] > 0, d2b[far], 1.0)
        out[far] = phi_inf * lead * corr
    return out


def kernel_reduced(n: int, r: float, s: float, rho, sigma) -> np.ndarray:
    """Angular-reduced image-charge kernel K(r, s; rho, sigma)."""
    rho = np.asarray(rho, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    dr2 = (r - rho) ** 2
    two_rrho = 2.0 * r * rho
    km = _phi_scaled(n, dr2 + (s - sigma) ** 2, two_rrho)
    kp = _phi_scaled(n, dr2 + (s + sigma) ** 2, two_rrho)
    return (km - kp) / (2.0 * math.pi)


def green_potential(n: int, source_fn, r: float, s: float,
                    tol: float = 1e-6) -> float:
    """Half-space Green potential of ``source_fn(rho, sigma)`` at (r, s)."""
    if s == 0.0:
        return 0.0

    def sigma_breaks():
        return tuple(p for p in (0.5 * s, s, 2.0 * s, 1.0) if p > 0)

    def rho_breaks():
        return tuple(p for p in (0.5 * r, r, 2.0 * r, 1.0) if p > 0)

    def inner(sigma: float) -> float:
        def f(rho):
            return (kernel_reduced(n, r, s, rho, sigma)
                    * source_fn(rho, np.full_like(rho, sigma))
                    * rho ** (n + 2))
        return integrate_tail_1d(f, 0.0, tol=0.3 * tol,
                                 points=rho_breaks()).value

    def g(sig):
        return np.array([inner(float(x)) for x in np.atleast_1d(sig)])

    return integrate_tail_1d(g, 0.0, tol=tol, points=sigma_breaks()).value


def oracle_point(problem: AuxProblem, r: float, s: float,
                 tol: float = 1e-6) -> float:
    """Green-representation value of the auxiliary field at one point."""
    if r < 0 or s < 0:
        raise ValueError("oracle points must lie in the closed quarter plane")
    n, p = problem.n, problem.p

    def src(rho, sigma):
        return sigma**p * (rho**2 + (1.0 + sigma) ** 2) ** (-(n + 2) / 2.0)

    return green_potential(n, src, r, s, tol=tol)


# --------------------------------------------------------------------------
# Kernel identity check
# --------------------------------------------------------------------------

def bubble_kernel(n: int, r, s):
    """``(1/2n) s ((1+s)^2 + r^2)^{-n/2}``: the closed-form Green potential of
    the bubble nonlinearity in the (n-1)-radial reduction."""
    return s * ((1.0 + s) ** 2 + r**2) ** (-n / 2.0) / (2.0 * n)


def bubble_source(n: int, r, s):
    """``((1+s)^2 + r^2)^{-(n+2)/2}``: the bubble nonlinearity itself."""
    return ((1.0 + s) ** 2 + r**2) ** (-(n + 2) / 2.0)


def _fd_second(f, x, y, h, axis: int):
    """Fourth-order central second derivative along one axis."""
    if axis == 0:
        vals = [f(x + k * h, y) for k in (-2, -1, 0, 1, 2)]
    else:
        vals = [f(x, y + k * h) for k in (-2, -1, 0, 1, 2)]
    fm2, fm1, f0, fp1, fp2 = vals
    return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)


def _fd_first(f, x, y, h, axis: int):
    if axis == 0:
        vals = [f(x + k * h, y) for k in (-2, -1, 1, 2)]
    else:
        vals = [f(x, y + k * h) for k in (-2, -1, 1, 2)]
    fm2, fm1, fp1, fp2 = vals
    return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)


def verify_kernel_identity(n: int, points, h: float = 3e-3) -> float:
    """Check by finite differences that the reduced operator with radial
    dimension n - 1 maps the closed-form kernel to the bubble nonlinearity.

    ``points`` is an iterable of (r, s) with s > 0.  Returns the maximum
    relative error over the samples.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts[:, 1] <= 0) or np.any(pts[:, 0] <= 0):
        raise ValueError("sample points must have r > 0 and s > 0")

    def u(r, s):
        return bubble_kernel(n, r, s)

    worst = 0.0
    for r, s in pts:
        lap = (-_fd_second(u, r, s, h, 0)
               - (n - 2) / r * _fd_first(u, r, s, h, 0)
               - _fd_second(u, r, s, h, 1))
        rhs = bubble_source(n, r, s)
        worst = max(worst, abs(lap - rhs) / abs(rhs))
    return worst

"""Adaptive quadrature for improper integrals with algebraic decay, and
composite integration of gridded fields against analytic kernels.

The 1D scheme is adaptive bisection with a fixed 15-point Gauss-Legendre
rule per panel; the error of a panel is estimated from the difference
against its two half-panels, and the worst panel is refined first.  Improper
integrals are compactified once, globally, by r = lower + t/(1-t).

The 2D scheme is a tensor-product composite rule matched to the solver grid
(midpoint in the cell-centered direction, trapezoid in the node-based one,
both with endpoint-derivative corrections), plus a separable algebraic tail
fitted on the outer annulus for the exterior of the truncated domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from heapq import heappush, heappop

import numpy as np

from .exact import beta_half  # noqa: F401  (re-exported convenience for callers)


class QuadratureConvergenceError(RuntimeError):
    """Adaptive refinement stalled before reaching the requested tolerance."""


class TailModelError(RuntimeError):
    """The fitted algebraic tail does not converge (exponent too small)."""


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.abs_error_estimate < 0:
            raise ValueError("error estimate must be >= 0")


@dataclass(frozen=True)
class TailSpec:
    """Algebraic tail model ``c * rho^{-decay_exponent}`` beyond ``cutoff``.

    ``decay_exponent`` refers to the radially reduced profile of the
    integrand (after angular integration in 2D) and must exceed 1 for the
    tail to converge.  Either field may be None: the exponent is then fitted
    and the cutoff taken from the domain edge.
    """

    decay_exponent: float | None = None
    cutoff: float | None = None

    def __post_init__(self):
        if self.decay_exponent is not None and self.decay_exponent <= 1:
            raise TailModelError(
                f"tail exponent {self.decay_exponent} <= 1: tail diverges"
            )
        if self.cutoff is not None and self.cutoff <= 0:
            raise ValueError("cutoff must be positive")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


def _panel_value(f, a: float, b: float) -> float:
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, f(x)))


def integrate_1d(f, a: float, b: float, tol: float = 1e-10,
                 points=(), max_panels: int = 20000) -> QuadResult:
    """Adaptive integral of a vectorized callable over the finite [a, b].

    ``points`` lists interior abscissae where the initial partition is split
    (peaks, kinks, near-singular locations).
    """
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    breaks = sorted({a, b, *(p for p in points if a < p < b)})
    evals = 0

    # Each heap entry is a parent panel with its two children evaluated:
    # (-err, tiebreak, lo, mid, hi, I_left, I_right).
    heap: list = []
    total = 0.0
    total_err = 0.0
    counter = 0

    def push(lo: float, hi: float, whole: float | None):
        nonlocal total, total_err, counter, evals
        mid = 0.5 * (lo + hi)
        il = _panel_value(f, lo, mid)
        ir = _panel_value(f, mid, hi)
        evals += 30
        if whole is None:
            whole = _panel_value(f, lo, hi)
            evals += 15
        err = abs(whole - (il + ir))
        if not math.isfinite(il + ir):
            raise ValueError("integrand returned a non-finite value")
        total += il + ir
        total_err += err
        counter += 1
        heappush(heap, (-err, counter, lo, mid, hi, il, ir))

    for lo, hi in zip(breaks[:-1], breaks[1:]):
        push(lo, hi, None)

    floor = 1e-300
    while total_err > tol * max(abs(total), floor):
        if len(heap) >= max_panels:
            raise QuadratureConvergenceError(
                f"no convergence after {len(heap)} panels "
                f"(err={total_err:.3e}, target={tol * max(abs(total), floor):.3e})"
            )
        neg_err, _, lo, mid, hi, il, ir = heappop(heap)
        err = -neg_err
        total -= il + ir
        total_err -= err
        if hi - lo < 1e-14 * (breaks[-1] - breaks[0]):
            # Interval exhausted: re-account its error as irreducible.
            total += il + ir
            total_err += err
            if err <= tol * max(abs(total), floor):
                break
            raise QuadratureConvergenceError(
                "panel width underflow before reaching tolerance"
            )
        push(lo, mid, il)
        push(mid, hi, ir)

    return QuadResult(total, total_err, evals)


def integrate_tail_1d(f, lower: float = 0.0, tol: float = 1e-10,
                      points=(), max_panels: int = 20000) -> QuadResult:
    """Adaptive integral of a vectorized callable over [lower, infinity).

    Assumes algebraic decay.  The substitution r = lower + t/(1-t) maps the
    ray to [0, 1); integrands that overflow to 0/0 at astronomically large
    arguments are clipped to zero there.
    """
    if lower < 0:
        raise ValueError("lower bound must be >= 0")

    def g(t):
        t = np.asarray(t, dtype=float)
        one_m = 1.0 - t
        r = lower + t / one_m
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = np.asarray(f(r), dtype=float) / one_m**2
        bad = ~np.isfinite(vals)
        if np.any(bad):
            if np.all(r[bad] > 1e10):
                vals = np.where(bad, 0.0, vals)
            else:
                raise ValueError("integrand returned non-finite values")
        return vals

    t_points = [0.5]
    for p in points:
        if p > lower:
            t_points.append((p - lower) / (1.0 + p - lower))
    return integrate_1d(g, 0.0, 1.0, tol=tol, points=t_points,
                        max_panels=max_panels)


def fit_algebraic_tail(rho, values) -> tuple[float, float]:
    """Least-squares fit ``values ~ c * rho^{-q}`` on positive samples.

    Returns (c, q).  Raises TailModelError if too few samples are positive.
    """
    rho = np.asarray(rho, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (values > 0) & (rho > 0)
    if mask.sum() < 4:
        raise TailModelError("not enough positive samples to fit a tail")
    lx = np.log(rho[mask])
    ly = np.log(values[mask])
    slope, intercept = np.polyfit(lx, ly, 1)
    return math.exp(intercept), -slope


def algebraic_tail_1d(f, cutoff: float, fit_window: float = 0.9,
                      samples: int = 33) -> tuple[float, float]:
    """Fitted tail ``int_cutoff^inf f`` for an algebraically decaying f.

    The model c * r^{-q} is fitted on [fit_window*cutoff, cutoff] and
    integrated in closed form.  Returns (tail_value, fitted_exponent).
    """
    rs = np.linspace(fit_window * cutoff, cutoff, samples)
    c, q = fit_algebraic_tail(rs, f(rs))
    if q <= 1:
        raise TailModelError(f"fitted decay exponent {q:.3f} <= 1: tail diverges")
    return c * cutoff ** (1.0 - q) / (q - 1.0), q


# --------------------------------------------------------------------------
# 2D composite rule over solver grids
# --------------------------------------------------------------------------

def _endpoint_slope(values: np.ndarray, h: float, at_start: bool) -> np.ndarray:
    """Third-order one-sided derivative at the first/last sample (node stagger)."""
    if at_start:
        f0, f1, f2, f3 = values[..., 0], values[..., 1], values[..., 2], values[..., 3]
        return (-11 * f0 + 18 * f1 - 9 * f2 + 2 * f3) / (6 * h)
    f0, f1, f2, f3 = values[..., -1], values[..., -2], values[..., -3], values[..., -4]
    return (11 * f0 - 18 * f1 + 9 * f2 - 2 * f3) / (6 * h)


def _face_slope(values: np.ndarray, h: float, at_start: bool) -> np.ndarray:
    """Cubic derivative estimate at the cell face, half a step outside the
    first/last cell-centered sample."""
    if at_start:
        f0, f1, f2, f3 = values[..., 0], values[..., 1], values[..., 2], values[..., 3]
        return (-71 * f0 + 141 * f1 - 93 * f2 + 23 * f3) / (24 * h)
    f0, f1, f2, f3 = values[..., -1], values[..., -2], values[..., -3], values[..., -4]
    return (71 * f0 - 141 * f1 + 93 * f2 - 23 * f3) / (24 * h)


def _trapezoid_weights(m: int, h: float) -> np.ndarray:
    w = np.full(m, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _corrected_rule_1d(values: np.ndarray, h: float, kind: str) -> np.ndarray:
    """Composite rule along the last axis with endpoint-derivative correction.

    ``kind`` is "trapezoid" (node samples spanning the interval) or
    "midpoint" (cell-centered samples; slopes are extrapolated to the faces).
    Returns the integral reduced over the last axis.
    """
    m = values.shape[-1]
    if kind == "trapezoid":
        base = values @ _trapezoid_weights(m, h)
        d0 = _endpoint_slope(values, h, True)
        d1 = _endpoint_slope(values, h, False)
        return base - (h * h / 12.0) * (d1 - d0)
    if kind == "midpoint":
        base = h * values.sum(axis=-1)
        # Slopes at the faces a = first center - h/2, b = last center + h/2.
        d0 = _face_slope(values, h, True)
        d1 = _face_slope(values, h, False)
        return base + (h * h / 24.0) * (d1 - d0)
    raise ValueError(f"unknown rule kind {kind!r}")


def _plain_rule_1d(values: np.ndarray, h: float, kind: str) -> np.ndarray:
    m = values.shape[-1]
    if kind == "trapezoid":
        return values @ _trapezoid_weights(m, h)
    return h * values.sum(axis=-1)


def _pi_half_beta(q: float) -> float:
    """``int_0^inf (1+t^2)^{-q/2} dt`` for float q > 1."""
    return 0.5 * math.sqrt(math.pi) * math.exp(
        math.lgamma((q - 1.0) / 2.0) - math.lgamma(q / 2.0)
    )


def integrate_field_weighted(field, weight, radial_power: int,
                             tail: TailSpec | None = None,
                             tol: float = 1e-6) -> QuadResult:
    """``iint w(r,s) r^radial_power field(r,s) dr ds`` over the quarter plane.

    The interior of the field's grid is integrated with the composite rule
    matched to the grid stagger (no re-interpolation); the exterior is the
    fitted (or supplied) separable algebraic tail in rho = sqrt(r^2+(1+s)^2).
    """
    grid = field.grid
    r = grid.r_centers()
    s = grid.s_nodes()
    R = r[:, None]
    S = s[None, :]
    F = weight(R, S) * R**radial_power * field.values
    if not np.all(np.isfinite(F)):
        raise ValueError("weighted integrand has non-finite values")
    evals = F.size

    inner_s = _corrected_rule_1d(F, grid.ds, "trapezoid")
    value = float(_corrected_rule_1d(inner_s, grid.dr, "midpoint"))
    plain = float(_plain_rule_1d(_plain_rule_1d(F, grid.ds, "trapezoid"),
                                 grid.dr, "midpoint"))
    disc_est = 0.25 * abs(value - plain)

    # Exterior model c * rho^{-q2} with q2 the 2D pointwise exponent.
    rho = np.sqrt(R**2 + (1.0 + S) ** 2)
    s_last = s[-1]
    rho_in = min(grid.rmax, 1.0 + s_last)
    cutoff = tail.cutoff if tail is not None and tail.cutoff is not None else rho_in
    annulus = (rho >= 0.85 * cutoff) & (rho <= cutoff)

    tail_value = 0.0
    if np.any(annulus & (F > 0)):
        if tail is not None and tail.decay_exponent is not None:
            q2 = tail.decay_exponent + 1.0
            # Amplitude fit is a plain mean ratio: linear in the field.
            c = float(np.mean(F[annulus] * rho[annulus] ** q2))
        else:
            c, q2 = fit_algebraic_tail(rho[annulus], F[annulus])
        if q2 <= 2.0:
            raise TailModelError(
                f"integrand tail exponent {q2 - 1.0:.3f} <= 1: exterior diverges"
            )
        model_total = c / (q2 - 2.0) * _pi_half_beta(q2)
        M = c * rho ** (-q2)
        model_inside = float(
            _corrected_rule_1d(_corrected_rule_1d(M, grid.ds, "trapezoid"),
                               grid.dr, "midpoint")
        )
        tail_value = model_total - model_inside

    err = disc_est + 0.5 * abs(tail_value)
    return QuadResult(value + tail_value, err, evals)

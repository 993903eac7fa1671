"""Assembly of the isoperimetric-quotient expansion coefficients.

Along the bubble family the quotient's numerator expands as

    2^{-n} omega_n + K lambda^2 + ...      (nonumbilic boundary point)
    2^{-n} omega_n + (a (R_ninj)^2 + b |Wbar|^2) lambda^4 + ...   (umbilic)

The closed-form parts are assembled in exact rational arithmetic on the
symbolic base |S^{n-2}| J_n; the remaining parts are weighted integrals of
the auxiliary quarter-plane fields and carry conservative numerical error
bars (quadrature estimate plus probe drift under one grid halving and one
domain halving).  Sign certificates require the value to clear its total
error bar.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import exact
from .exact import Base, ExactQuantity, beta_line_rational, radial_ratio_to_base
from .grids import Grid2D, Field2D
from .quadrature import QuadResult, TailSpec, integrate_field_weighted
from .solver import AuxProblem, solve_reduced

NONUMBILIC_THRESHOLD = 12
UMBILIC_THRESHOLD = 10


@dataclass(frozen=True)
class CurvatureInputs:
    """Scalar curvature data entering the expansions multiplicatively.

    ``h2`` is the squared norm of the trace-free boundary second fundamental
    form (nonumbilic case); ``rninj2``, ``wbar2`` and ``rnn2`` are the
    normal-curvature square, boundary Weyl square and second normal
    derivative of scalar curvature (umbilic case).
    """

    h2: float = 1.0
    rninj2: float = 1.0
    wbar2: float = 1.0
    rnn2: float = 0.0

    def __post_init__(self):
        if self.h2 < 0 or self.rninj2 < 0 or self.wbar2 < 0:
            raise ValueError("squared curvature inputs must be >= 0")


@dataclass(frozen=True)
class NonumbilicCoefficients:
    a1: ExactQuantity          # closed form, per h2
    a2: QuadResult             # per h2
    a3: QuadResult             # per h2
    k_value: float             # per h2
    k_error: float


@dataclass(frozen=True)
class UmbilicClosedPart:
    rninj2_mult: ExactQuantity
    wbar2_mult: ExactQuantity
    rnn_mult: ExactQuantity    # must reduce to exactly zero


@dataclass(frozen=True)
class UmbilicCoefficients:
    a_value: float             # per rninj2
    a_error: float
    b: ExactQuantity           # per wbar2, exact
    rnn_coeff: ExactQuantity   # exact zero
    step2: QuadResult
    step3: QuadResult


@dataclass(frozen=True)
class SignCertificate:
    n: int
    case: str                  # "nonumbilic" | "umbilic"
    positive: bool
    margin: float


# --------------------------------------------------------------------------
# Closed forms, assembled from the exact primitives
# --------------------------------------------------------------------------

def _sj(n: int) -> Base:
    return Base.sphere_radial(n - 2, n)


def nonumbilic_terms(n: int) -> tuple[ExactQuantity, ExactQuantity, ExactQuantity]:
    """The three radial integrals of the first expansion step, each as an
    exact multiple of |S^{n-2}| J_n."""
    if n < 6:
        raise ValueError(f"need n >= 6, got {n}")
    base = _sj(n)
    i1 = ExactQuantity(
        beta_line_rational(3, n + 1) * radial_ratio_to_base(n - 2, n, n), base
    )
    i2 = ExactQuantity(
        beta_line_rational(3, n + 1) * radial_ratio_to_base(n, n + 1, n), base
    )
    i3 = ExactQuantity(
        beta_line_rational(1, n - 1) * radial_ratio_to_base(n - 2, n - 1, n), base
    )
    return i1, i2, i3


def combine_nonumbilic_terms(n: int, i1: ExactQuantity, i2: ExactQuantity,
                             i3: ExactQuantity) -> ExactQuantity:
    """``-2(n-2) I1 + (2n(n-2)/(n-1)) I2 + ((n-2)/(4(n-1))) I3``."""
    return (i1 * Fraction(-2 * (n - 2))
            + i2 * Fraction(2 * n * (n - 2), n - 1)
            + i3 * Fraction(n - 2, 4 * (n - 1)))


def nonumbilic_step1_closed(n: int) -> ExactQuantity:
    """Closed-form combination of the first step; its rational part is
    (n-12) / (2n(n-1)(n-3)) on the base |S^{n-2}| J_n, so it vanishes at
    n = 12 and is negative below."""
    return combine_nonumbilic_terms(n, *nonumbilic_terms(n))


def umbilic_terms(n: int) -> list[UmbilicClosedPart]:
    """The six radial integrals of the umbilic first step, split by the
    curvature channel each multiplies, on the common base |S^{n-2}| J_n."""
    if n < 6:
        raise ValueError(f"need n >= 6, got {n}")
    base = _sj(n)
    zero = ExactQuantity(Fraction(0), base)

    def q(c: Fraction) -> ExactQuantity:
        return ExactQuantity(c, base)

    line31 = beta_line_rational(3, n - 1)    # int y^3 (1+y)^{1-n}
    line5 = beta_line_rational(5, n + 1)     # int y^5 (1+y)^{-n-1}
    line13 = beta_line_rational(1, n - 3)    # int y  (1+y)^{3-n}
    rad_hi = radial_ratio_to_base(n + 2, n + 1, n)   # (n+1)/(2n)
    rad_eq = radial_ratio_to_base(n - 2, n, n)       # 1
    rad_mid = radial_ratio_to_base(n, n + 1, n)      # (n-1)/(2n)
    rad_lo2 = radial_ratio_to_base(n - 2, n - 1, n)  # 2
    rad_top = radial_ratio_to_base(n, n - 1, n)      # 2(n-1)/(n-3)

    pf1 = Fraction(n - 2, n - 1)
    t1 = UmbilicClosedPart(
        rninj2_mult=q(pf1 * line31 * rad_eq),
        wbar2_mult=zero,
        rnn_mult=q(pf1 * Fraction(1, 2) * line31 * rad_eq),
    )
    pf2 = Fraction(-n * (n - 2), (n + 1) * (n - 1))
    t2 = UmbilicClosedPart(
        rninj2_mult=q(pf2 * line31 * rad_hi),
        wbar2_mult=zero,
        rnn_mult=q(pf2 * Fraction(1, 2) * line31 * rad_hi),
    )
    pf3 = Fraction(n * (n - 2), 2 * (n - 1))
    t3 = UmbilicClosedPart(
        rninj2_mult=q(pf3 * line5 * rad_mid), wbar2_mult=zero, rnn_mult=zero
    )
    pf4 = Fraction(-(n - 2), 2)
    t4 = UmbilicClosedPart(
        rninj2_mult=q(pf4 * line5 * rad_eq), wbar2_mult=zero, rnn_mult=zero
    )
    pf5 = Fraction(-(n - 2), 8 * (n - 1))
    t5 = UmbilicClosedPart(
        rninj2_mult=zero, wbar2_mult=zero, rnn_mult=q(pf5 * line31 * rad_lo2)
    )
    pf6 = Fraction(n - 2, 48 * (n - 1) ** 2)
    t6 = UmbilicClosedPart(
        rninj2_mult=zero, wbar2_mult=q(pf6 * line13 * rad_top), rnn_mult=zero
    )
    return [t1, t2, t3, t4, t5, t6]


def combine_umbilic_terms(terms) -> UmbilicClosedPart:
    total = terms[0]
    for t in terms[1:]:
        total = UmbilicClosedPart(
            rninj2_mult=total.rninj2_mult + t.rninj2_mult,
            wbar2_mult=total.wbar2_mult + t.wbar2_mult,
            rnn_mult=total.rnn_mult + t.rnn_mult,
        )
    return total


def umbilic_closed_sum(n: int) -> UmbilicClosedPart:
    """Summed first-step multipliers: the normal-curvature channel carries
    3(n-10)/(n(n-1)(n-3)(n-4)(n-5)), the Weyl channel
    (n-2)/(24(n-1)(n-3)(n-4)(n-5)), and the scalar-curvature channel
    cancels to exactly zero."""
    return combine_umbilic_terms(umbilic_terms(n))


# --------------------------------------------------------------------------
# Field-backed parts
# --------------------------------------------------------------------------

def _moment4_total(n: int) -> float:
    """``int_{S^{n-2}} x_1^4`` as a float prefactor."""
    return float(exact.sphere_moment4(n))


def _scaled(result: QuadResult, factor: float) -> QuadResult:
    return QuadResult(result.value * factor, result.abs_error_estimate * abs(factor),
                      result.evaluations)


def nonumbilic_a2(n: int, v_field: Field2D, tol: float = 1e-6) -> QuadResult:
    """Second-step coefficient per h2: weighted integral of the auxiliary
    field against ``s^2 (r^2+(1+s)^2)^{-(n+4)/2} r^{n+2}``."""
    def w(r, s):
        return s**2 * (r**2 + (1.0 + s) ** 2) ** (-(n + 4) / 2.0)

    raw = integrate_field_weighted(v_field, w, n + 2,
                                   tail=TailSpec(decay_exponent=n - 2), tol=tol)
    pref = (4.0 * n * (n**2 - 4) / 3.0) * _moment4_total(n)
    return _scaled(raw, pref)


def nonumbilic_a3(n: int, v_field: Field2D, tol: float = 1e-6) -> QuadResult:
    """Third-step coefficient per h2: the square of the auxiliary field
    against ``(r^2+(1+s)^2)^{-2} r^{n+2}``."""
    def w(r, s):
        return (r**2 + (1.0 + s) ** 2) ** (-2.0)

    raw = integrate_field_weighted(v_field.squared(), w, n + 2,
                                   tail=TailSpec(decay_exponent=n - 1), tol=tol)
    pref = (8.0 * n**2 * (n - 2) ** 2 / 3.0) * _moment4_total(n)
    return _scaled(raw, pref)


def umbilic_step2(n: int, lam_field: Field2D, tol: float = 1e-6) -> QuadResult:
    def w(r, s):
        return s**3 * (r**2 + (1.0 + s) ** 2) ** (-(n + 4) / 2.0)

    raw = integrate_field_weighted(lam_field, w, n + 2,
                                   tail=TailSpec(decay_exponent=n - 4), tol=tol)
    pref = ((n**3 - 4 * n) / 3.0) * _moment4_total(n)
    return _scaled(raw, pref)


def umbilic_step3(n: int, lam_field: Field2D, tol: float = 1e-6) -> QuadResult:
    def w(r, s):
        return (r**2 + (1.0 + s) ** 2) ** (-2.0)

    raw = integrate_field_weighted(lam_field.squared(), w, n + 2,
                                   tail=TailSpec(decay_exponent=n - 3), tol=tol)
    pref = (2.0 * n**2 * (n - 2) ** 2 / 3.0) * _moment4_total(n)
    return _scaled(raw, pref)


# --------------------------------------------------------------------------
# Field library with conservative error bars
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    """Base grid for coefficient runs plus its halved companions."""

    rmax: float = 40.0
    smax: float = 40.0
    nr: int = 1024
    ns: int = 1024
    tol: float = 1e-10

    def base_grid(self) -> Grid2D:
        return Grid2D(self.rmax, self.smax, self.nr, self.ns)

    def half_resolution_grid(self) -> Grid2D:
        return Grid2D(self.rmax, self.smax, self.nr // 2, self.ns // 2)

    def half_domain_grid(self) -> Grid2D:
        return Grid2D(self.rmax / 2.0, self.smax / 2.0, self.nr // 2, self.ns // 2)

    def validate_for_error_bars(self) -> None:
        for g in (self.base_grid(), self.half_resolution_grid(),
                  self.half_domain_grid()):
            if g.dr > 0.1 + 1e-12 or g.ds > 0.1 + 1e-12:
                raise ValueError(
                    "error-bar companions too coarse: base grid needs "
                    "dr, ds <= 0.05 so the halved grids stay admissible"
                )


class FieldLibrary:
    """Shared read-only cache of solved auxiliary fields keyed by
    (n, p, grid)."""

    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self.config.validate_for_error_bars()
        self._cache: dict = {}

    def field(self, n: int, p: int, grid: Grid2D) -> Field2D:
        key = (n, p, grid)
        if key not in self._cache:
            problem = AuxProblem(n, p)
            fld, _report = solve_reduced(problem, grid, tol=self.config.tol)
            self._cache[key] = fld
        return self._cache[key]

    def with_error_bars(self, n: int, p: int, op) -> QuadResult:
        """Evaluate ``op(n, field)`` on the base grid and widen its error by
        the drift under one resolution halving and one domain halving."""
        cfg = self.config
        f_base = self.field(n, p, cfg.base_grid())
        f_res = self.field(n, p, cfg.half_resolution_grid())
        f_dom = self.field(n, p, cfg.half_domain_grid())
        base = op(n, f_base)
        v_res = op(n, f_res).value
        v_dom = op(n, f_dom).value
        err = base.abs_error_estimate + abs(base.value - v_res) + abs(
            base.value - v_dom
        )
        return QuadResult(base.value, err, base.evaluations)


# --------------------------------------------------------------------------
# Full per-dimension pipelines
# --------------------------------------------------------------------------

def lambda2_coefficient(n: int, curvature: CurvatureInputs,
                        library: FieldLibrary
                        ) -> tuple[NonumbilicCoefficients, SignCertificate]:
    """Quadratic expansion coefficient K(n) for a nonumbilic boundary point,
    with its sign certificate."""
    a1 = nonumbilic_step1_closed(n) * Fraction(1, 2 * n)
    a2 = library.with_error_bars(n, 1, nonumbilic_a2)
    a3 = library.with_error_bars(n, 1, nonumbilic_a3)

    c_linear = 2.0 * n / (n - 2)
    c_quad = n * (n + 2) / (n - 2) ** 2
    k_value = c_linear * (float(a1) + a2.value) + c_quad * a3.value
    k_error = c_linear * a2.abs_error_estimate + c_quad * a3.abs_error_estimate

    coeffs = NonumbilicCoefficients(a1, a2, a3, k_value, k_error)
    margin = (k_value - k_error) * curvature.h2
    positive = margin > 0 and curvature.h2 > 0
    return coeffs, SignCertificate(n, "nonumbilic", positive, margin)


def lambda4_coefficients(n: int, curvature: CurvatureInputs,
                         library: FieldLibrary
                         ) -> tuple[UmbilicCoefficients, SignCertificate]:
    """Quartic expansion coefficients a(n), b(n) for an umbilic boundary
    point with nonvanishing Weyl tensor, with their sign certificate."""
    closed = umbilic_closed_sum(n)
    step2 = library.with_error_bars(n, 2, umbilic_step2)
    step3 = library.with_error_bars(n, 2, umbilic_step3)

    c_linear = 2.0 * n / (n - 2)
    c_quad = n * (n + 2) / (n - 2) ** 2
    a_value = c_linear * (float(closed.rninj2_mult) / (2 * n) + step2.value) \
        + c_quad * step3.value
    a_error = c_linear * step2.abs_error_estimate \
        + c_quad * step3.abs_error_estimate
    b = closed.wbar2_mult * Fraction(1, n - 2)
    rnn_coeff = closed.rnn_mult * Fraction(1, 2 * n)

    coeffs = UmbilicCoefficients(a_value, a_error, b, rnn_coeff, step2, step3)
    combined = (a_value - a_error) * curvature.rninj2 + float(b) * curvature.wbar2
    positive = combined > 0 and (curvature.rninj2 + curvature.wbar2) > 0
    return coeffs, SignCertificate(n, "umbilic", positive, combined)


def quotient_expansion(n: int, case: str, curvature: CurvatureInputs,
                       lambdas, library: FieldLibrary) -> list[dict]:
    """Model quotient along the bubble family for given scale parameters.

    Each row reports the perturbed quotient
    ``(2^{-n} omega_n + K lambda^k) / (2^{-(n-1)} n omega_n)^{n/(n-1)}``
    and its excess over the sharp constant of the unit ball.
    """
    omega = exact.ball_volume(n)
    denom = (2.0 ** (-(n - 1)) * n * omega) ** (n / (n - 1))
    theta = exact.theta_ball(n)
    if case == "nonumbilic":
        coeffs, _ = lambda2_coefficient(n, curvature, library)
        K = coeffs.k_value * curvature.h2
        k_exp = 2
    elif case == "umbilic":
        coeffs, _ = lambda4_coefficients(n, curvature, library)
        K = coeffs.a_value * curvature.rninj2 + float(coeffs.b) * curvature.wbar2
        k_exp = 4
    else:
        raise ValueError(f"unknown case {case!r}")

    rows = []
    for lam in lambdas:
        quotient = (2.0**-n * omega + K * lam**k_exp) / denom
        rows.append({
            "n": n, "case": case, "lambda": lam, "quotient": quotient,
            "excess": quotient - theta, "coefficient": K, "order": k_exp,
        })
    return rows


def exploratory(n: int, case: str) -> bool:
    """Whether dimension n lies below the proven threshold for the case."""
    if case == "nonumbilic":
        return n < NONUMBILIC_THRESHOLD
    if case == "umbilic":
        return n < UMBILIC_THRESHOLD
    raise ValueError(f"unknown case {case!r}")

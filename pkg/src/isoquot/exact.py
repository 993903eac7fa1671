"""Exact evaluation of the closed-form integrals and geometric constants.

Everything here is computed in arbitrary-precision rational arithmetic
relative to a small set of symbolic bases:

* ``SphereArea(m)``  -- the area ``|S^m|`` of the unit m-sphere,
* ``BaseJ(n)``       -- the canonical radial integral
  ``J_n = int_0^inf r^n / (1+r^2)^n dr``,
* ``PiPower(k)``     -- a (half-integer) power of pi.

Half-integer Gamma values are carried symbolically as (rational) * sqrt(pi),
so every ratio needed downstream collapses to an exact rational.  Floating
point appears only at explicit evaluation boundaries (``beta_half``,
``sphere_area``, ``ExactQuantity.__float__``, ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


class DivergentIntegralError(ValueError):
    """The requested integral does not converge."""


class ParityError(ValueError):
    """Exponent parity makes the requested ratio irrational."""


class BaseMismatchError(ValueError):
    """Arithmetic between quantities on incompatible symbolic bases."""


# --------------------------------------------------------------------------
# Gamma / Beta primitives on half-integer arguments
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gamma_half(m: int) -> tuple[Fraction, int]:
    """Gamma(m/2) for positive integer m, as ``(c, e)`` with value c * pi**(e/2).

    Integer arguments give factorials (e = 0); half-integer arguments use
    Gamma(k + 1/2) = (2k)! / (4^k k!) * sqrt(pi)  (e = 1).  Only the
    recurrence Gamma(x + 1) = x Gamma(x) is behind these formulas, so the
    rational part is exact.
    """
    if m <= 0:
        raise ValueError(f"Gamma argument must be positive, got {m}/2")
    if m % 2 == 0:
        return Fraction(math.factorial(m // 2 - 1)), 0
    k = (m - 1) // 2
    return Fraction(math.factorial(2 * k), 4**k * math.factorial(k)), 1


def beta_half_exact(a: int, b: int) -> tuple[Fraction, int]:
    """``int_0^inf r^a/(1+r^2)^b dr`` as ``(c, e)`` with value c * pi**e.

    Equals (1/2) * B((a+1)/2, b-(a+1)/2).  The two Beta arguments always
    share parity (their sum is the integer b), hence e is 0 or 1.
    """
    if a < 0:
        raise ValueError(f"radial exponent must be >= 0, got a={a}")
    m1 = a + 1
    m2 = 2 * b - (a + 1)
    if m2 <= 0:
        raise DivergentIntegralError(
            f"int r^{a}/(1+r^2)^{b} diverges: need b > (a+1)/2"
        )
    c1, e1 = gamma_half(m1)
    c2, e2 = gamma_half(m2)
    cb, _ = gamma_half(2 * b)
    # e1 == e2 because m1 + m2 = 2b is even.
    return c1 * c2 / (2 * cb), e1


def beta_half(a: int, b: int) -> float:
    """Float value of ``int_0^inf r^a/(1+r^2)^b dr``."""
    c, e = beta_half_exact(a, b)
    return float(c) * math.pi**e


def beta_line_rational(p: int, q: int) -> Fraction:
    """Exact value of ``int_0^inf y^p/(1+y)^q dy = p! (q-p-2)! / (q-1)!``."""
    if p < 0:
        raise ValueError(f"line exponent must be >= 0, got p={p}")
    if q <= p + 1:
        raise DivergentIntegralError(
            f"int y^{p}/(1+y)^{q} diverges: need q >= p+2"
        )
    return Fraction(
        math.factorial(p) * math.factorial(q - p - 2), math.factorial(q - 1)
    )


def radial_ratio_to_base(a: int, b: int, n: int) -> Fraction:
    """Exact ratio ``int r^a/(1+r^2)^b  /  int r^n/(1+r^2)^n``.

    Requires a - n even; odd parity would leave a stray factor of pi.
    """
    if (a - n) % 2 != 0:
        raise ParityError(
            f"ratio of (a={a}, b={b}) to base n={n} is irrational: a-n must be even"
        )
    ca, ea = beta_half_exact(a, b)
    cn, en = beta_half_exact(n, n)
    assert ea == en  # same parity by the check above
    return ca / cn


# --------------------------------------------------------------------------
# Spheres, balls and the sharp constant
# --------------------------------------------------------------------------

def sphere_area_exact(m: int) -> tuple[Fraction, int]:
    """``|S^m| = 2 pi^{(m+1)/2} / Gamma((m+1)/2)`` as (c, twice_pi_exponent)."""
    if m < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {m}")
    c, e = gamma_half(m + 1)
    return Fraction(2) / c, (m + 1) - e


def sphere_area(m: int) -> float:
    c, tp = sphere_area_exact(m)
    return float(c) * math.pi ** (tp / 2)


def ball_volume_exact(n: int) -> tuple[Fraction, int]:
    """``omega_n = pi^{n/2} / Gamma(n/2 + 1)`` as (c, twice_pi_exponent)."""
    if n < 1:
        raise ValueError(f"ball dimension must be >= 1, got {n}")
    c, e = gamma_half(n + 2)
    return 1 / c, n - e


def ball_volume(n: int) -> float:
    c, tp = ball_volume_exact(n)
    return float(c) * math.pi ** (tp / 2)


def theta_ball(n: int) -> float:
    """Sharp isoperimetric constant ``n^{-n/(n-1)} omega_n^{-1/(n-1)}``."""
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    return n ** (-n / (n - 1)) * ball_volume(n) ** (-1 / (n - 1))


# --------------------------------------------------------------------------
# Symbolic bases and quantities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Base:
    """Symbolic positive base of an exact quantity.

    ``sphere`` is the dimension m of a ``|S^m|`` factor (None if absent),
    ``radial`` the n of a ``J_n`` factor (None if absent), ``twice_pi`` an
    extra pi power in half-integer units.  The unit base is all-empty.
    """

    sphere: int | None = None
    radial: int | None = None
    twice_pi: int = 0

    @staticmethod
    def one() -> "Base":
        return Base()

    @staticmethod
    def sphere_area(m: int) -> "Base":
        return Base(sphere=m)

    @staticmethod
    def radial_j(n: int) -> "Base":
        return Base(radial=n)

    @staticmethod
    def sphere_radial(m: int, n: int) -> "Base":
        return Base(sphere=m, radial=n)

    @staticmethod
    def pi_power(twice_k: int) -> "Base":
        return Base(twice_pi=twice_k)

    def reduce_to_pi(self) -> tuple[Fraction, int]:
        """Exact reduction of the base to ``(rational, twice_pi_exponent)``."""
        c = Fraction(1)
        tp = self.twice_pi
        if self.sphere is not None:
            cs, tps = sphere_area_exact(self.sphere)
            c *= cs
            tp += tps
        if self.radial is not None:
            cr, er = beta_half_exact(self.radial, self.radial)
            c *= cr
            tp += 2 * er
        return c, tp

    def __float__(self) -> float:
        c, tp = self.reduce_to_pi()
        return float(c) * math.pi ** (tp / 2)


@dataclass(frozen=True)
class ExactQuantity:
    """A rational coefficient attached to a symbolic base."""

    coeff: Fraction
    base: Base = Base.one()

    def __post_init__(self):
        if not isinstance(self.coeff, Fraction):
            object.__setattr__(self, "coeff", Fraction(self.coeff))

    def __add__(self, other: "ExactQuantity") -> "ExactQuantity":
        if self.base != other.base:
            if self.coeff == 0:
                return ExactQuantity(other.coeff, other.base)
            if other.coeff == 0:
                return self
            raise BaseMismatchError(
                f"cannot add quantities on bases {self.base} and {other.base}"
            )
        return ExactQuantity(self.coeff + other.coeff, self.base)

    def __sub__(self, other: "ExactQuantity") -> "ExactQuantity":
        return self + ExactQuantity(-other.coeff, other.base)

    def __neg__(self) -> "ExactQuantity":
        return ExactQuantity(-self.coeff, self.base)

    def scale(self, factor) -> "ExactQuantity":
        return ExactQuantity(self.coeff * Fraction(factor), self.base)

    def __mul__(self, factor) -> "ExactQuantity":
        return self.scale(factor)

    __rmul__ = __mul__

    def reduce_to_pi(self) -> tuple[Fraction, int]:
        """Exact value as ``(rational, twice_pi_exponent)``; zero maps to (0, 0)."""
        if self.coeff == 0:
            return Fraction(0), 0
        cb, tp = self.base.reduce_to_pi()
        return self.coeff * cb, tp

    def same_value(self, other: "ExactQuantity") -> bool:
        """Exact equality after reduction to the pi basis."""
        return self.reduce_to_pi() == other.reduce_to_pi()

    def is_zero(self) -> bool:
        return self.coeff == 0

    def __float__(self) -> float:
        c, tp = self.reduce_to_pi()
        return float(c) * math.pi ** (tp / 2)


# --------------------------------------------------------------------------
# Sphere moments
# --------------------------------------------------------------------------

def sphere_moment4(n: int) -> ExactQuantity:
    """``int_{S^{n-2}} x_1^4`` as the exact multiple ``3/((n-1)(n+1)) |S^{n-2}|``.

    n = 2 is the degenerate two-point sphere S^0 and still satisfies the
    formula (value 2).
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return ExactQuantity(
        Fraction(3, (n - 1) * (n + 1)), Base.sphere_area(n - 2)
    )


def sphere_moment22(n: int) -> ExactQuantity:
    """``int_{S^{n-2}} x_1^2 x_2^2``, exactly one third of the fourth moment."""
    q = sphere_moment4(n)
    return ExactQuantity(q.coeff / 3, q.base)


# --------------------------------------------------------------------------
# Conversion table between the two radial bases that appear in closed forms
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def jprime_to_j(n: int) -> Fraction:
    """Exact ratio ``int r^{n-2}/(1+r^2)^n / J_n`` (equal to 1 for every n)."""
    return radial_ratio_to_base(n - 2, n, n)


@lru_cache(maxsize=None)
def jlow_to_j(n: int) -> Fraction:
    """Exact ratio ``int r^n/(1+r^2)^{n-1} / J_n`` (equal to 2(n-1)/(n-3))."""
    return radial_ratio_to_base(n, n - 1, n)

"""Exact extended non-negative arithmetic.

Every quantitative value in the toolkit (distances, disturbance radii,
fixpoint values, ranks, robustness bounds) is an exact ``fractions.Fraction``
or the dedicated infinity element ``INF``.  Binary floats never enter any
computation: parsers accept integers, fraction strings ("5/2"), decimal
strings ("2.5") and "inf", and serialization is canonical so that equal
values always print identically.

``INF`` is deliberately not ``math.inf``: keeping infinity out of the float
domain means accidental float contamination raises immediately, and the
undefined products (``0 * INF``) raise instead of producing NaN.
"""

from __future__ import annotations

from fractions import Fraction


class Infinity:
    """The single positive-infinity element of the extended rationals.

    Compares strictly greater than every rational, equal to itself, and
    supports the arithmetic the analyses need (absorption under addition,
    multiplication by positive rationals, division by positive rationals).
    ``0 * INF`` and ``INF - INF`` raise ``ArithmeticError``.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __hash__(self):
        return hash("metricsynth-infinity")

    def __eq__(self, other):
        return other is self

    def __ne__(self, other):
        return other is not self

    def __lt__(self, other):
        if isinstance(other, (int, Fraction, Infinity)):
            return False
        return NotImplemented

    def __le__(self, other):
        if other is self:
            return True
        if isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __gt__(self, other):
        if other is self:
            return False
        if isinstance(other, (int, Fraction)):
            return True
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, (int, Fraction, Infinity)):
            return True
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, (int, Fraction, Infinity)):
            return self
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise ArithmeticError("inf - inf is undefined")
        if isinstance(other, (int, Fraction)):
            return self
        return NotImplemented

    def __rsub__(self, other):
        raise ArithmeticError("cannot subtract inf from a finite value")

    def __mul__(self, other):
        if other is self:
            return self
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ArithmeticError("0 * inf is undefined")
            if other < 0:
                raise ArithmeticError("negative multiples of inf are not extended non-negatives")
            return self
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if other is self:
            raise ArithmeticError("inf / inf is undefined")
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("inf / 0")
            if other < 0:
                raise ArithmeticError("inf / negative is not an extended non-negative")
            return self
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Fraction(0)
        return NotImplemented


INF = Infinity()

#: A value in the extended non-negative rationals.
Scalar = Fraction | Infinity


def is_finite(value: Scalar) -> bool:
    return value is not INF


def parse_scalar(text) -> Scalar:
    """Parse an extended non-negative rational from a document field.

    Accepts Python ints, and strings in integer ("5"), fraction ("5/2"),
    decimal ("2.5") or "inf" form.  Floats are rejected to keep the toolkit
    exact end-to-end.
    """
    if isinstance(text, bool):
        raise ValueError(f"expected a rational, got boolean {text!r}")
    if isinstance(text, int):
        value = Fraction(text)
    elif isinstance(text, float):
        raise ValueError(
            f"binary float {text!r} rejected: use a decimal or fraction string for exactness"
        )
    elif isinstance(text, str):
        stripped = text.strip()
        if stripped.lower() in ("inf", "infinity"):
            return INF
        try:
            value = Fraction(stripped)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational from {text!r}: {exc}") from None
    else:
        raise ValueError(f"cannot parse rational from {text!r}")
    if value < 0:
        raise ValueError(f"negative value {text!r} is not an extended non-negative")
    return value


def format_scalar(value: Scalar) -> str:
    """Canonical textual form: "inf", integers as "5", otherwise "p/q"."""
    if value is INF:
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"

"""Configurable-precision scalars used for network weights and evaluation.

Three arithmetic modes are supported:

* ``f64``      -- IEEE binary64 floats,
* ``bigfloat`` -- gmpy2 floats with a fixed mantissa size (>= 64 bits),
* ``rational`` -- exact fractions.

Networks carry a :class:`ScalarKind`; all weights and all intermediate
values of an evaluation are kept in that arithmetic.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

__all__ = [
    "ScalarKind",
    "F64",
    "RATIONAL",
    "to_scalar",
    "scalar_context",
    "scalar_to_str",
    "scalar_from_str",
    "two_pow",
    "is_finite",
]


@dataclass(frozen=True)
class ScalarKind:
    """Arithmetic mode of a network: ``f64``, ``bigfloat`` or ``rational``."""

    variant: str
    mantissa_bits: int | None = None

    def __post_init__(self):
        if self.variant not in ("f64", "bigfloat", "rational"):
            raise ValueError(f"unknown scalar variant {self.variant!r}")
        if self.variant == "bigfloat":
            if self.mantissa_bits is None or self.mantissa_bits < 64:
                raise ValueError("bigfloat requires mantissa_bits >= 64")
        elif self.mantissa_bits is not None:
            raise ValueError(f"{self.variant} takes no mantissa_bits")

    @staticmethod
    def f64() -> "ScalarKind":
        return ScalarKind("f64")

    @staticmethod
    def rational() -> "ScalarKind":
        return ScalarKind("rational")

    @staticmethod
    def bigfloat(mantissa_bits: int = 256) -> "ScalarKind":
        return ScalarKind("bigfloat", mantissa_bits)

    @property
    def exact(self) -> bool:
        return self.variant == "rational"

    def tag(self) -> str:
        """Serialization tag, e.g. ``"bigfloat:256"``."""
        if self.variant == "f64":
            return "f64"
        if self.variant == "rational":
            return "rational"
        return f"bigfloat:{self.mantissa_bits}"

    @staticmethod
    def from_tag(tag: str) -> "ScalarKind":
        if tag == "f64":
            return ScalarKind.f64()
        if tag == "rational":
            return ScalarKind.rational()
        if tag.startswith("bigfloat:"):
            return ScalarKind.bigfloat(int(tag.split(":", 1)[1]))
        raise ValueError(f"unknown scalar tag {tag!r}")


F64 = ScalarKind.f64()
RATIONAL = ScalarKind.rational()


def scalar_context(kind: ScalarKind):
    """Context manager installing the arithmetic context for ``kind``."""
    if kind.variant == "bigfloat":
        return gmpy2.context(precision=kind.mantissa_bits)
    return contextlib.nullcontext()


def to_scalar(value, kind: ScalarKind):
    """Convert ``value`` (int, Fraction, float, mpfr) to ``kind``'s type.

    Conversion into rational mode requires an exactly-representable input.
    """
    if kind.variant == "rational":
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float):
            return Fraction(value)
        if isinstance(value, gmpy2.mpfr):
            num, den = value.as_integer_ratio()
            return Fraction(int(num), int(den))
        raise TypeError(f"cannot convert {type(value).__name__} to rational")
    if kind.variant == "f64":
        return float(value)
    with scalar_context(kind):
        if isinstance(value, Fraction):
            return gmpy2.mpfr(value.numerator) / gmpy2.mpfr(value.denominator)
        return gmpy2.mpfr(value)


def two_pow(numerator: int, denominator: int, kind: ScalarKind):
    """2**(numerator/denominator) in the given arithmetic.

    Exact in rational mode only when denominator divides numerator.
    """
    if numerator % denominator == 0:
        k = numerator // denominator
        if kind.variant == "rational":
            return Fraction(2) ** k
        return to_scalar(Fraction(2) ** k, kind)
    if kind.variant == "rational":
        raise ValueError(
            f"2^({numerator}/{denominator}) is irrational; rational mode needs "
            "denominator | numerator"
        )
    if kind.variant == "f64":
        return 2.0 ** (numerator / denominator)
    with scalar_context(kind):
        return gmpy2.exp2(gmpy2.mpfr(numerator) / gmpy2.mpfr(denominator))


def is_finite(value) -> bool:
    if isinstance(value, (int, Fraction)):
        return True
    if isinstance(value, float):
        return math.isfinite(value)
    return bool(gmpy2.is_finite(value))


def scalar_to_str(value, kind: ScalarKind) -> str:
    """Serialize one scalar: decimal repr (f64), ``p/q`` (rational), or a
    hex-mantissa string ``[-]0x<mant>p<exp>`` (bigfloat)."""
    if kind.variant == "f64":
        return repr(float(value))
    if kind.variant == "rational":
        f = value if isinstance(value, Fraction) else Fraction(value)
        return f"{f.numerator}/{f.denominator}"
    if not isinstance(value, gmpy2.mpfr):
        raise TypeError(f"bigfloat scalar expected mpfr, got {type(value).__name__}")
    num, den = value.as_integer_ratio()
    num, den = int(num), int(den)
    exp = -(den.bit_length() - 1)
    sign = "-" if num < 0 else ""
    return f"{sign}0x{abs(num):x}p{exp}"


def scalar_from_str(text: str, kind: ScalarKind):
    """Inverse of :func:`scalar_to_str`; raises ValueError on bad input."""
    if kind.variant == "f64":
        return float(text)
    if kind.variant == "rational":
        num, _, den = text.partition("/")
        if not den:
            raise ValueError(f"rational scalar {text!r} missing '/'")
        return Fraction(int(num), int(den))
    body = text
    sign = 1
    if body.startswith("-"):
        sign, body = -1, body[1:]
    if not body.startswith("0x") or "p" not in body:
        raise ValueError(f"bad bigfloat scalar {text!r}")
    mant_str, _, exp_str = body[2:].partition("p")
    mant = sign * int(mant_str, 16)
    exp = int(exp_str)
    with scalar_context(kind):
        return gmpy2.mpfr(gmpy2.mpz(mant)) * gmpy2.exp2(exp)

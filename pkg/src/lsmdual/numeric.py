"""Numeric tower shared by the exact (rational) and float code paths.

Rate algebra runs in one of two modes: ``"rational"`` (arbitrary-precision
``fractions.Fraction``, used wherever a result is asserted to be *exactly*
zero) and ``"float"`` (double precision, used by all simulation paths).
Floats entering the rational mode are promoted through their shortest
decimal repr, so 0.3 becomes 3/10 rather than the nearest binary fraction.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Union

Scalar = Union[int, float, Fraction]

MODES = ("rational", "float")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def as_fraction(x: Scalar | str) -> Fraction:
    """Promote a number to an exact rational.

    Floats are converted via their decimal repr (exact decimal-to-rational
    promotion), so values written as short decimals stay what they look like.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rate")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    xf = float(x)
    if xf != xf or xf in (float("inf"), float("-inf")):
        raise ValueError(f"cannot promote {x!r} to a rational")
    return Fraction(repr(xf))


def promote(x: Scalar | str, mode: str) -> Scalar:
    """Carry a scalar into the arithmetic of ``mode``."""
    if mode == "rational":
        return as_fraction(x)
    return float(Fraction(x)) if isinstance(x, str) else float(x)


def denominator_lcm(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = lcm(out, v.denominator)
    return out


def is_zero(x: Scalar, tol: float = 0.0) -> bool:
    if isinstance(x, Fraction) or isinstance(x, int):
        return x == 0
    return abs(x) <= tol

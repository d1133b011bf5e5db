"""Exact rationals and measure vectors.

A measure vector is a plain tuple of :class:`fractions.Fraction`, one entry per
vertex of a finite simplex.  Every helper here is exact; nothing in the
package ever converts to floating point.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Tuple

Vector = Tuple[Fraction, ...]


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` (or an int / Fraction) into a Fraction.

    Floats are refused; an exact interface must not smuggle in binary
    approximations.
    """
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    s = text.strip()
    if not s or any(c in s for c in ".eE"):
        raise ValueError(f"not a rational: {text!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def vec(*values) -> Vector:
    """Build a vector from anything :func:`parse_rational` accepts."""
    if len(values) == 1 and not isinstance(values[0], (str, int, Fraction)):
        values = tuple(values[0])
    return tuple(parse_rational(v) for v in values)


def parse_vector(items: Iterable) -> Vector:
    return tuple(parse_rational(v) for v in items)


def format_vector(v: Sequence[Fraction]) -> list:
    return [format_rational(x) for x in v]


def zeros(k: int) -> Vector:
    return (Fraction(0),) * k


def ones(k: int) -> Vector:
    return (Fraction(1),) * k


def add(u: Vector, v: Vector) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Vector, v: Vector) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def scale(u: Vector, c) -> Vector:
    return tuple(a * c for a in u)


def vsum(vectors: Iterable[Vector], k: int) -> Vector:
    total = [Fraction(0)] * k
    for v in vectors:
        for i, x in enumerate(v):
            total[i] += x
    return tuple(total)


def le(u: Vector, v: Vector) -> bool:
    return all(a <= b for a, b in zip(u, v))


def lt(u: Vector, v: Vector) -> bool:
    """Strict inequality at every coordinate."""
    return all(a < b for a, b in zip(u, v))


def is_positive(u: Vector) -> bool:
    return all(a > 0 for a in u)


def is_zero(u: Vector) -> bool:
    return all(a == 0 for a in u)


def max_denominator(u: Iterable[Fraction]) -> int:
    return max((Fraction(a).denominator for a in u), default=1)


def restrict(u: Vector, indices: Sequence[int]) -> Vector:
    return tuple(u[i] for i in indices)

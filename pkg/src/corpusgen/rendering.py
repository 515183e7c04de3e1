"""Decimal rendering of exact rationals."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Number = Union[int, Fraction]


def quantize(value: Number, places: int, truncate: bool = False) -> Fraction:
    """Round ``value`` to ``places`` decimals (half-to-even) or cut it off."""
    value = Fraction(value)
    scale = 10**places
    if truncate:
        return Fraction(math.trunc(value * scale), scale)
    return Fraction(round(value * scale), scale)


def format_decimal(value: Number, places: int, truncate: bool = False, strip: bool = False) -> str:
    """Render ``value`` with ``places`` decimals.

    With ``strip`` trailing zeros (and a dangling point) are removed, so
    ``1/25`` renders as ``0.04`` and zero as ``0``.
    """
    q = quantize(value, places, truncate)
    sign = "-" if q < 0 else ""
    scaled = abs(q.numerator * 10**places // q.denominator)
    whole, frac = divmod(scaled, 10**places)
    text = str(whole)
    if places:
        digits = str(frac).rjust(places, "0")
        if strip:
            digits = digits.rstrip("0")
        if digits:
            text += "." + digits
    if text.strip("0.") == "":
        sign = ""
    return sign + text


def format_quantity(value: Number, max_places: int = 2, exact_places: int = 3) -> str:
    """Render a table operand.

    Values with at most ``exact_places`` decimals print exactly, so millisecond
    timings survive; anything longer is rounded to ``max_places``.
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    if (value * 10 ** exact_places).denominator == 1:
        return format_decimal(value, exact_places, strip=True)
    return format_decimal(value, max_places, strip=True)

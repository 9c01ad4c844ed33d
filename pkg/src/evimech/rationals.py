"""Exact rational parsing/formatting for the "num/den" wire format."""

from __future__ import annotations

from fractions import Fraction


class RationalFormatError(ValueError):
    pass


def parse_rational(text: str) -> Fraction:
    """Parse "num/den" (or a bare integer string) into a Fraction."""
    if not isinstance(text, str):
        raise RationalFormatError(f"rational must be a string, got {type(text).__name__}")
    parts = text.strip().split("/")
    try:
        if len(parts) == 1:
            return Fraction(int(parts[0]))
        if len(parts) == 2:
            return Fraction(int(parts[0]), int(parts[1]))
    except (ValueError, ZeroDivisionError) as exc:
        raise RationalFormatError(f"bad rational {text!r}: {exc}") from exc
    raise RationalFormatError(f"bad rational {text!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"

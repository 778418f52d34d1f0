"""Shared number handling for the auction modules.

Two numeric modes coexist throughout the package:

* exact mode: quantities are `fractions.Fraction`, comparisons are exact
  and the equilibrium tolerance defaults to 0;
* float mode: quantities are binary floats and comparisons use a small
  tolerance (1e-9 by default).

All operations are written generically, so they accept either kind.  The
helpers here convert between the two and pick the right default
tolerance for a mix of inputs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

#: Comparison tolerance used when any input is a binary float.
FLOAT_EPSILON = 1e-9

Number = Fraction | int | float


def exact_number(x) -> Fraction:
    """Convert ``x`` to an exact rational through its decimal form.

    Floats are converted via their shortest decimal representation, so a
    JSON value written as ``0.47`` becomes 47/100 rather than the nearby
    binary fraction.  Strings may be decimals ("0.47") or ratios
    ("47/100").
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a number")


def exact_seq(xs: Iterable) -> tuple[Fraction, ...]:
    return tuple(exact_number(x) for x in xs)


def all_exact(*seqs: Sequence) -> bool:
    """True when every entry of every sequence is a Fraction or int."""
    return all(isinstance(x, (Fraction, int)) for xs in seqs for x in xs)


def default_epsilon(*seqs: Sequence) -> Number:
    """0 for all-rational inputs, FLOAT_EPSILON otherwise."""
    return 0 if all_exact(*seqs) else FLOAT_EPSILON


def fmt(x) -> str:
    """Render a number with 6 significant digits for human output."""
    return f"{float(x):.6g}"


def num_to_json(x):
    """JSON encoding for a quantity: exact rationals go out as strings."""
    if isinstance(x, Fraction):
        return str(x)
    return x


def num_from_json(x) -> Number:
    """Inverse of :func:`num_to_json` ("47/100" and 0.47 both accepted)."""
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, bool):
        raise TypeError("expected a number, got a bool")
    if isinstance(x, (int, float)):
        return x
    raise TypeError(f"cannot interpret {x!r} as a number")

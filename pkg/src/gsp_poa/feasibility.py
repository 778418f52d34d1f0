"""Exact feasibility of linear inequality systems.

Fourier-Motzkin elimination over `fractions.Fraction`, with strict and
weak relations tracked separately.  Feasible systems come back with a
rational witness obtained by back-substituting interval midpoints (open
endpoints are nudged inward by half the interval, unbounded sides step
one unit away from the finite bound).

The eliminator is exponential in the worst case and refuses systems
with more than ``max_variables`` unknowns (default 12), which is ample
for the bid systems this package generates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .equilibrium import LinearSystem
from .errors import DimensionCapError, InvalidInstanceError
from .numeric import exact_number

MAX_VARIABLES = 12


@dataclass(frozen=True)
class FeasibilityResult:
    status: str                 # "feasible" | "infeasible"
    witness: tuple | None       # Fractions in variable order, or None
    eliminated_order: tuple     # variable names, elimination order
    conflict: str | None = None # description of the contradictory row

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass(frozen=True)
class _Row:
    """coeffs . x <= rhs (strict=True means <); canonically scaled."""

    coeffs: tuple
    rhs: Fraction
    strict: bool
    tag: str

    @staticmethod
    def make(coeffs, rhs, strict, tag):
        coeffs = tuple(coeffs)
        scale = None
        for c in coeffs:
            if c != 0:
                scale = abs(c)
                break
        if scale is None:
            scale = abs(rhs) if rhs != 0 else None
        if scale is not None and scale != 1:
            coeffs = tuple(c / scale for c in coeffs)
            rhs = rhs / scale
        return _Row(coeffs, rhs, strict, tag)


def _normalize(system: LinearSystem) -> list[_Row]:
    rows = []
    for idx, row in enumerate(system.rows):
        coeffs = [exact_number(c) for c in row.coeffs]
        rhs = exact_number(row.rhs)
        tag = row.provenance or f"row {idx}"
        if row.rel in (">=", ">"):
            coeffs = [-c for c in coeffs]
            rhs = -rhs
        strict = row.rel in ("<", ">")
        rows.append(_Row.make(coeffs, rhs, strict, tag))
    return rows


def _constant_conflict(row: _Row) -> bool:
    """Is an all-zero-coefficient row violated? (0 <= rhs / 0 < rhs)."""
    if row.strict:
        return row.rhs <= 0
    return row.rhs < 0


def _eliminate(rows: list[_Row], var: int) -> list[_Row] | _Row:
    """Project out variable ``var``; returns new rows or a conflict row."""
    uppers, lowers, keep = [], [], []
    for row in rows:
        c = row.coeffs[var]
        if c > 0:
            uppers.append(row)
        elif c < 0:
            lowers.append(row)
        else:
            keep.append(row)
    out = {}
    for row in keep:
        key = (row.coeffs, row.rhs, row.strict)
        out.setdefault(key, row)
    for low in lowers:
        for up in uppers:
            cl, cu = -low.coeffs[var], up.coeffs[var]
            coeffs = tuple(
                low.coeffs[t] * cu + up.coeffs[t] * cl
                for t in range(len(low.coeffs))
            )
            combined = _Row.make(
                coeffs,
                low.rhs * cu + up.rhs * cl,
                low.strict or up.strict,
                f"combine({low.tag}; {up.tag})",
            )
            if all(c == 0 for c in combined.coeffs):
                if _constant_conflict(combined):
                    return combined
                continue
            key = (combined.coeffs, combined.rhs, combined.strict)
            out.setdefault(key, combined)
    return list(out.values())


def _interval(rows: list[_Row], var: int, point: dict):
    """Bounds on ``var`` after substituting ``point`` for later variables."""
    lo = hi = None
    lo_strict = hi_strict = False
    for row in rows:
        c = row.coeffs[var]
        if c == 0:
            continue
        rest = row.rhs - sum(
            row.coeffs[t] * point[t] for t in point if row.coeffs[t] != 0
        )
        bound = rest / c
        if c > 0:
            if hi is None or bound < hi or (bound == hi and row.strict):
                hi, hi_strict = bound, row.strict
        else:
            if lo is None or bound > lo or (bound == lo and row.strict):
                lo, lo_strict = bound, row.strict
    return lo, lo_strict, hi, hi_strict


def _pick(lo, lo_strict, hi, hi_strict) -> Fraction:
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        return hi - 1 if hi_strict else hi
    if hi is None:
        return lo + 1 if lo_strict else lo
    return (lo + hi) / 2 if lo != hi else lo


def solve(system: LinearSystem, order=None,
          max_variables: int = MAX_VARIABLES) -> FeasibilityResult:
    """Decide the system exactly and produce a witness when feasible.

    ``order`` optionally names the elimination order (variable names or
    indices); default is last-to-first.  The reported status does not
    depend on the order, only the witness may.
    """
    n = system.n_variables
    if n > max_variables:
        raise DimensionCapError(
            f"{n} variables exceeds the eliminator cap of {max_variables}"
        )
    if order is None:
        order_idx = list(range(n - 1, -1, -1))
    else:
        order_idx = []
        for v in order:
            if isinstance(v, str):
                if v not in system.variables:
                    raise InvalidInstanceError(f"unknown variable {v!r}")
                order_idx.append(system.variables.index(v))
            else:
                order_idx.append(int(v))
        if sorted(order_idx) != list(range(n)):
            raise InvalidInstanceError("elimination order must cover each variable once")
    order_names = tuple(system.variables[i] for i in order_idx)

    rows = _normalize(system)
    for row in rows:
        if all(c == 0 for c in row.coeffs) and _constant_conflict(row):
            return FeasibilityResult("infeasible", None, order_names,
                                     f"constant row violated: {row.tag}")

    snapshots = []
    for var in order_idx:
        snapshots.append((var, rows))
        result = _eliminate(rows, var)
        if isinstance(result, _Row):
            return FeasibilityResult(
                "infeasible", None, order_names,
                f"eliminating {system.variables[var]}: {result.tag}",
            )
        rows = result

    point: dict[int, Fraction] = {}
    for var, level_rows in reversed(snapshots):
        lo, lo_s, hi, hi_s = _interval(level_rows, var, point)
        point[var] = _pick(lo, lo_s, hi, hi_s)
    witness = tuple(point[i] for i in range(n))
    return FeasibilityResult("feasible", witness, order_names)

"""Closed-form regret upper bounds for HLMC and the flat routines."""

from __future__ import annotations

import math
from typing import NamedTuple


class Bound(NamedTuple):
    kind: str
    value: float
    in_regime: bool
    note: str = ""


BOUND_KINDS = (
    "weak_expected",  # two-level EXP3/EXP3
    "weak_highprob",  # two-level EXP3.P/EXP3.P, holds w.p. 1 - delta
    "shifting",  # EXP3.S group level, EXP3 arm level, V known
    "shifting_unknownV",
    "threelevel",  # EXP3 at three levels
    "exp3",
    "exp3p",
    "exp3s",
)


def theoretical_bound(kind: str, T: int, K: int, V: float | None = None,
                      delta: float | None = None) -> Bound:
    """Upper bound value; ``in_regime`` is False when the inputs fall outside
    the conditions under which the bound is proven."""
    if kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")
    if T < 1 or K < 2:
        raise ValueError("need T >= 1 and K >= 2")
    notes = []
    ok = True
    if kind in ("shifting", "shifting_unknownV", "exp3s"):
        if V is None:
            raise ValueError(f"{kind} bound needs V")
        if V < 1:
            raise ValueError("hardness V must be >= 1")
        if kind == "shifting" and T < V * K:
            ok = False
            notes.append(f"T={T} < V*K={V * K}")
    if kind in ("weak_highprob", "exp3p"):
        if delta is None:
            raise ValueError(f"{kind} bound needs delta")
        if not 0.0 < delta < 1.0:
            ok = False
            notes.append(f"delta={delta} outside (0, 1)")
    if kind in ("weak_expected", "weak_highprob", "shifting", "shifting_unknownV") and K < 4:
        ok = False
        notes.append("two-level bounds need K >= 4")
    if kind == "threelevel" and K < 8:
        ok = False
        notes.append("three-level bound needs K >= 8")

    lnK = math.log(K)
    q = T**0.75 * K**0.25
    if kind == "weak_expected":
        value = (4 + 2 * math.sqrt(2)) * q * math.sqrt(lnK)
    elif kind == "weak_highprob":
        value = 12.5 * q * math.sqrt(math.log(2 * K * T / delta)) if ok else math.inf
    elif kind == "shifting":
        value = (6 * math.sqrt(2) + 1) * q * V**0.25 * math.sqrt(math.log(K * T))
    elif kind == "shifting_unknownV":
        value = math.sqrt(2) * (V + 5) * q * math.sqrt(math.log(K * T))
    elif kind == "threelevel":
        value = 12 * T ** (5 / 6) * K ** (1 / 6) * math.sqrt(lnK)
    elif kind == "exp3":
        value = 2 * math.sqrt(2 * T * K * lnK)
    elif kind == "exp3p":
        value = 5.15 * math.sqrt(K * T * math.log(K / delta)) if ok else math.inf
    else:
        value = 4 * math.sqrt(V * K * T * math.log(K * T))
    return Bound(kind, value, ok, "; ".join(notes))

"""Harsanyi dividends via Moebius inversion, under two sign conventions.

RAW is the exact Moebius transform of the energy function:

    delta(B) = sum_{A subset B} (-1)^{|B|-|A|} E(A)

and satisfies the reconstruction identity E(C) = sum_{B subset C} delta(B).

PAPER keeps delta({i}) = E({i}) and flips the sign for |B| >= 2, so that with
entropy energies a pair dividend equals mutual information (non-negative) and
a triple dividend equals interaction information (positive = synergy,
negative = redundancy).  Reconstruction does not hold under PAPER.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import chain, combinations
from typing import Iterable

import numpy as np

from .entropy import Coalition, EnergyTable, coalition
from .errors import ConventionError, InputError
from .trace_store import HeadId

FAST_PATH_MAX_UNIVERSE = 20


class SignConvention(str, Enum):
    RAW = "raw"
    PAPER = "paper"


@dataclass
class DividendTable:
    universe: Coalition
    max_order: int
    convention: SignConvention
    dividends: dict[Coalition, float]

    def dividend(self, members: Iterable[HeadId]) -> float:
        c = coalition(members)
        try:
            return self.dividends[c]
        except KeyError:
            raise InputError(f"coalition {c} not stored (max_order={self.max_order})")

    @property
    def is_full_order(self) -> bool:
        return self.max_order == len(self.universe)


def _subsets(c: Coalition):
    return chain.from_iterable(combinations(c, k) for k in range(len(c) + 1))


def _raw_dividend(energies: EnergyTable, c: Coalition) -> float:
    b = len(c)
    total = 0.0
    for a in _subsets(c):
        total += (-1) ** (b - len(a)) * energies.energies[a]
    return total


def _raw_dividends_fast(energies: EnergyTable) -> np.ndarray:
    """In-place subset-lattice Moebius transform over bitmask-indexed energies."""
    n = len(energies.universe)
    f = np.empty(1 << n, dtype=float)
    for mask in range(1 << n):
        members = tuple(energies.universe[i] for i in range(n) if mask >> i & 1)
        f[mask] = energies.energies[members]
    for i in range(n):
        bit = 1 << i
        for mask in range(1 << n):
            if mask & bit:
                f[mask] -= f[mask ^ bit]
    return f


def mobius_dividends(
    energies: EnergyTable, convention: SignConvention = SignConvention.PAPER
) -> DividendTable:
    """One dividend per stored coalition of size 1..max_order."""
    convention = SignConvention(convention)
    for c in energies.coalitions():
        if c not in energies.energies:
            raise InputError(f"energy table incomplete: missing {c}")

    dividends: dict[Coalition, float] = {(): 0.0}
    n = len(energies.universe)
    if energies.is_full_order and n <= FAST_PATH_MAX_UNIVERSE:
        flat = _raw_dividends_fast(energies)
        for mask in range(1, 1 << n):
            members = tuple(energies.universe[i] for i in range(n) if mask >> i & 1)
            dividends[members] = float(flat[mask])
    else:
        for c in energies.coalitions():
            if c:
                dividends[c] = _raw_dividend(energies, c)

    if convention is SignConvention.PAPER:
        for c in dividends:
            if len(c) >= 2:
                dividends[c] = -dividends[c]

    return DividendTable(
        universe=energies.universe,
        max_order=energies.max_order,
        convention=convention,
        dividends=dividends,
    )


def reconstruct_energy(dividends: DividendTable, members: Iterable[HeadId]) -> float:
    """Sum of dividends over all subsets; the Moebius round-trip (RAW only)."""
    if dividends.convention is not SignConvention.RAW:
        raise ConventionError(
            "energy reconstruction is only valid under the RAW convention"
        )
    c = coalition(members)
    if len(c) > dividends.max_order:
        raise InputError(f"|{c}| exceeds stored max_order {dividends.max_order}")
    return sum(dividends.dividends[b] for b in _subsets(c))

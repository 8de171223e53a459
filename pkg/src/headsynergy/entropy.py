"""Empirical joint distributions and joint Shannon entropies of head coalitions.

Energies are plug-in entropies in bits, E(C) = H(C).  The per-head additive
constant c = log2|S| that a free-energy reading of the traces would add is
not applied; it cancels in every dividend of order >= 2 and is recorded on
the table as documentation metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import GuardError, InputError
from .trace_store import HeadId, TraceSet

Coalition = tuple[HeadId, ...]

DEFAULT_MAX_ORDER = 3
DEFAULT_COALITION_CEILING = 10**6


def coalition(members: Iterable[HeadId]) -> Coalition:
    """Canonical coalition: sorted by (layer, head), duplicates rejected."""
    members = tuple(sorted(HeadId(*m) for m in members))
    for a, b in zip(members, members[1:]):
        if a == b:
            raise InputError(f"duplicate member {a} in coalition")
    return members


def empirical_distribution(
    traces: TraceSet, members: Iterable[HeadId]
) -> dict[tuple[int, ...], float]:
    """Joint empirical distribution of a non-empty coalition's symbol tuples."""
    c = coalition(members)
    if not c:
        raise InputError("empirical_distribution requires a non-empty coalition")
    cols = np.stack([traces.column(h) for h in c])  # (k, N)
    outcomes, counts = np.unique(cols.T, axis=0, return_counts=True)
    n = traces.num_samples
    return {tuple(int(x) for x in row): int(cnt) / n for row, cnt in zip(outcomes, counts)}


def joint_entropy(traces: TraceSet, members: Iterable[HeadId]) -> float:
    """Plug-in Shannon entropy in bits of the coalition's joint distribution."""
    c = coalition(members)
    if not c:
        return 0.0
    cols = np.stack([traces.column(h) for h in c])
    _, counts = np.unique(cols.T, axis=0, return_counts=True)
    p = counts / traces.num_samples
    return float(-(p * np.log2(p)).sum())


@dataclass
class EnergyTable:
    """Memoized coalition energies E(C) = H(C) over a declared universe."""

    universe: Coalition
    max_order: int
    energies: dict[Coalition, float]
    sample_count: int
    dropped_constant_note: str = (
        "per-head additive constant c = log2|S| omitted from all energies; "
        "it cancels in every Harsanyi dividend of order >= 2"
    )

    def energy(self, members: Iterable[HeadId]) -> float:
        c = coalition(members)
        try:
            return self.energies[c]
        except KeyError:
            raise InputError(f"coalition {c} not stored (max_order={self.max_order})")

    @property
    def is_full_order(self) -> bool:
        return self.max_order == len(self.universe)

    def coalitions(self, order: int | None = None) -> Iterator[Coalition]:
        """Stored coalitions in canonical order, optionally one size only."""
        sizes = range(self.max_order + 1) if order is None else (order,)
        for k in sizes:
            yield from combinations(self.universe, k)

    def validate(self, tol: float = 1e-9) -> None:
        """Check completeness, entropy bounds, and subset monotonicity."""
        ceiling = np.log2(self.sample_count) if self.sample_count > 1 else 0.0
        for c in self.coalitions():
            e = self.energy(c)
            if not -tol <= e <= ceiling + tol:
                raise InputError(f"energy {e} for {c} outside [0, log2(N)]")
        for c in self.coalitions():
            for smaller in combinations(c, len(c) - 1) if c else ():
                if self.energies[smaller] > self.energies[c] + tol:
                    raise InputError(f"monotonicity violated: H({smaller}) > H({c})")


def build_energy_table(
    traces: TraceSet,
    universe: Iterable[HeadId],
    max_order: int = DEFAULT_MAX_ORDER,
    coalition_ceiling: int = DEFAULT_COALITION_CEILING,
) -> EnergyTable:
    """Compute H(C) for every coalition of the universe with |C| <= max_order."""
    uni = coalition(universe)
    if not uni:
        raise InputError("universe must be non-empty")
    for h in uni:
        if not traces.has_head(h):
            raise InputError(f"universe head {h} not present in traces")
    if max_order < 1 or max_order > len(uni):
        raise InputError(f"max_order must be in 1..{len(uni)}")

    n_coalitions = sum(comb(len(uni), k) for k in range(max_order + 1))
    if n_coalitions > coalition_ceiling:
        raise GuardError(
            f"{n_coalitions} coalitions exceed the ceiling of {coalition_ceiling}"
        )

    energies: dict[Coalition, float] = {(): 0.0}
    for k in range(1, max_order + 1):
        for c in combinations(uni, k):
            energies[c] = joint_entropy(traces, c)
    return EnergyTable(
        universe=uni,
        max_order=max_order,
        energies=energies,
        sample_count=traces.num_samples,
    )


def energy_table_from_values(
    universe: Iterable[HeadId],
    values: Mapping[Coalition, float],
    sample_count: int = 0,
    note: str = "externally supplied energy function",
) -> EnergyTable:
    """Wrap an arbitrary set function as an EnergyTable (full order).

    Used for synthetic games and oracles; no entropy bounds are implied, so
    validate() is not meaningful for these tables.
    """
    uni = coalition(universe)
    energies = {(): 0.0}
    for k in range(1, len(uni) + 1):
        for c in combinations(uni, k):
            if c not in values:
                raise InputError(f"missing value for coalition {c}")
            energies[c] = float(values[c])
    if () in values and values[()] != 0.0:
        raise InputError("the empty coalition must have energy 0")
    return EnergyTable(
        universe=uni,
        max_order=len(uni),
        energies=energies,
        sample_count=sample_count,
        dropped_constant_note=note,
    )

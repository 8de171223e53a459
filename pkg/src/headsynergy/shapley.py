"""Per-head importance scores.

Three routes to a score:

* full_shapley        eta_i = sum_{B containing i} delta(B) / |B|
* truncated_shapley   phi_i = delta({i}) + 1/2 sum_{j != i} delta({i, j})
* permutation_shapley_oracle   brute-force average marginal contribution,
  kept deliberately independent of the dividend formulas for validation.

Under RAW dividends eta is the classical Shapley value and satisfies
efficiency: sum_i eta_i = E(universe).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable

from .entropy import Coalition, EnergyTable, coalition
from .errors import GuardError, InputError
from .harsanyi import DividendTable, SignConvention
from .trace_store import HeadId

ORACLE_MAX_UNIVERSE = 10


@dataclass
class ScoreTable:
    universe: Coalition
    scores: dict[HeadId, float]
    kind: str  # full_eta | truncated_phi | oracle_eta
    convention: SignConvention
    metadata: dict = field(default_factory=dict)

    def score(self, head: HeadId) -> float:
        return self.scores[head]

    def ranking(self) -> list[HeadId]:
        """Heads from lowest to highest score; ties by ascending (layer, head)."""
        return sorted(self.universe, key=lambda h: (self.scores[h], h))


def full_shapley(dividends: DividendTable, allow_truncated: bool = False) -> ScoreTable:
    """Shapley value from dividends; exact only on a full-order table."""
    if not dividends.is_full_order and not allow_truncated:
        raise InputError(
            "dividend table is truncated (max_order "
            f"{dividends.max_order} < {len(dividends.universe)}); "
            "pass allow_truncated=True for an approximate score"
        )
    scores = {h: 0.0 for h in dividends.universe}
    for c, d in sorted(dividends.dividends.items()):
        for h in c:
            scores[h] += d / len(c)
    return ScoreTable(
        universe=dividends.universe,
        scores=scores,
        kind="full_eta",
        convention=dividends.convention,
        metadata={
            "max_order": dividends.max_order,
            "truncated": not dividends.is_full_order,
        },
    )


def truncated_shapley(dividends: DividendTable) -> ScoreTable:
    """Pairwise surrogate phi; needs only singleton and pair dividends."""
    uni = dividends.universe
    scores = {}
    for i in uni:
        try:
            phi = dividends.dividends[(i,)]
            for j in uni:
                if j != i:
                    phi += 0.5 * dividends.dividends[coalition((i, j))]
        except KeyError as exc:
            raise InputError(f"missing singleton or pair dividend: {exc}") from exc
        scores[i] = phi
    return ScoreTable(
        universe=uni,
        scores=scores,
        kind="truncated_phi",
        convention=dividends.convention,
        metadata={"max_order": dividends.max_order},
    )


def permutation_shapley_oracle(energies: EnergyTable) -> ScoreTable:
    """Average marginal contribution over all |universe|! orderings."""
    uni = energies.universe
    n = len(uni)
    if n > ORACLE_MAX_UNIVERSE:
        raise GuardError(f"oracle limited to {ORACLE_MAX_UNIVERSE} heads, got {n}")
    if not energies.is_full_order:
        raise InputError("oracle requires a full-order energy table")

    totals = {h: 0.0 for h in uni}
    count = 0
    for order in permutations(uni):
        prefix: list[HeadId] = []
        e_prev = 0.0
        for h in order:
            prefix.append(h)
            e_cur = energies.energies[coalition(prefix)]
            totals[h] += e_cur - e_prev
            e_prev = e_cur
        count += 1
    return ScoreTable(
        universe=uni,
        scores={h: totals[h] / count for h in uni},
        kind="oracle_eta",
        convention=SignConvention.RAW,
        metadata={"permutations": count},
    )

"""Synthetic cooperative games used as test oracles."""

import numpy as np

from headsynergy import HeadId, coalition, energy_table_from_values
from headsynergy.entropy import EnergyTable
from itertools import chain, combinations

def subsets(c):
    return chain.from_iterable(combinations(c, k) for k in range(len(c) + 1))


def random_game(rng: np.random.Generator, n_heads: int, scale: float = 2.0) -> EnergyTable:
    """Arbitrary full-order energy function with E(empty) = 0."""
    uni = [HeadId(0, i) for i in range(n_heads)]
    values = {}
    for k in range(1, n_heads + 1):
        for c in combinations(uni, k):
            values[coalition(c)] = float(rng.uniform(0, scale))
    return energy_table_from_values(uni, values)


def additive_game(weights: dict[HeadId, float]) -> EnergyTable:
    uni = sorted(weights)
    values = {}
    for k in range(1, len(uni) + 1):
        for c in combinations(uni, k):
            values[coalition(c)] = sum(weights[h] for h in c)
    return energy_table_from_values(uni, values)


def game_from_dividends(dividends: dict) -> EnergyTable:
    """Zeta transform: E(C) = sum of dividends over subsets of C."""
    uni = sorted({h for c in dividends for h in c})
    values = {}
    for k in range(1, len(uni) + 1):
        for c in combinations(uni, k):
            c = coalition(c)
            values[c] = sum(dividends.get(coalition(b), 0.0) for b in subsets(c))
    return energy_table_from_values(uni, values)

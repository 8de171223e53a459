from itertools import combinations

import numpy as np
import pytest

from headsynergy import (
    ConventionError,
    GeneratorSpec,
    HeadId,
    InputError,
    SignConvention,
    build_energy_table,
    coalition,
    energy_table_from_values,
    mobius_dividends,
    reconstruct_energy,
    synth_traces,
)
from headsynergy.harsanyi import _raw_dividend

from gametools import random_game, subsets

U3 = [HeadId(0, i) for i in range(3)]


def test_paper_pair_identical_heads():
    t = synth_traces(
        GeneratorSpec("duplicate_head", num_samples=64, num_heads=2, num_symbols=2,
                      exact=True), 0
    )
    e = build_energy_table(t, [HeadId(0, 0), HeadId(0, 1)], 2)
    d = mobius_dividends(e, SignConvention.PAPER)
    assert d.dividend([HeadId(0, 0), HeadId(0, 1)]) == pytest.approx(1.0, abs=1e-9)


def test_paper_pair_independent_heads():
    # exact product joint: all four outcomes equally likely
    table = {(a, b): 0.25 for a in (0, 1) for b in (0, 1)}
    t = synth_traces(GeneratorSpec("explicit", num_samples=100, table=table, exact=True), 0)
    e = build_energy_table(t, [HeadId(0, 0), HeadId(0, 1)], 2)
    d = mobius_dividends(e, SignConvention.PAPER)
    assert d.dividend([HeadId(0, 0), HeadId(0, 1)]) == pytest.approx(0.0, abs=1e-9)


def test_paper_xor_triple_positive():
    t = synth_traces(GeneratorSpec("xor_triple", num_samples=4000, exact=True), 7)
    e = build_energy_table(t, U3, 3)
    assert e.energy([U3[0]]) == pytest.approx(1.0, abs=1e-9)
    assert e.energy(U3[:2]) == pytest.approx(2.0, abs=1e-9)
    assert e.energy(U3) == pytest.approx(2.0, abs=1e-9)
    d = mobius_dividends(e, SignConvention.PAPER)
    assert d.dividend(U3) == pytest.approx(1.0, abs=1e-9)


def test_paper_three_identical_negative():
    t = synth_traces(
        GeneratorSpec("duplicate_head", num_samples=64, num_heads=3, num_symbols=2,
                      exact=True), 1
    )
    e = build_energy_table(t, U3, 3)
    d = mobius_dividends(e, SignConvention.PAPER)
    assert d.dividend(U3) == pytest.approx(-1.0, abs=1e-9)


def test_paper_singleton_equals_entropy():
    t = synth_traces(
        GeneratorSpec("independent_uniform", num_samples=50, num_heads=2, num_symbols=3), 4
    )
    e = build_energy_table(t, [HeadId(0, 0), HeadId(0, 1)], 2)
    d = mobius_dividends(e, SignConvention.PAPER)
    for h in e.universe:
        assert d.dividend([h]) == pytest.approx(e.energy([h]), abs=1e-12)


def test_paper_explicit_formulas():
    # Direct checks of the pair and triple inclusion-exclusion expansions
    rng = np.random.default_rng(2)
    t = synth_traces(
        GeneratorSpec("independent_uniform", num_samples=40, num_heads=3, num_symbols=3), 2
    )
    e = build_energy_table(t, U3, 3)
    d = mobius_dividends(e, SignConvention.PAPER)
    i, j, k = U3
    hij = e.energy([i, j])
    assert d.dividend([i, j]) == pytest.approx(
        e.energy([i]) + e.energy([j]) - hij, abs=1e-12
    )
    expected_triple = (
        -e.energy(U3)
        + e.energy([i, j]) + e.energy([i, k]) + e.energy([j, k])
        - e.energy([i]) - e.energy([j]) - e.energy([k])
    )
    assert d.dividend(U3) == pytest.approx(expected_triple, abs=1e-12)


def test_pairwise_nonnegativity_many_traces(rng):
    specs = [
        GeneratorSpec("independent_uniform", num_samples=60, num_heads=4, num_symbols=3),
        GeneratorSpec("duplicate_head", num_samples=60, num_heads=4, num_symbols=4),
        GeneratorSpec("xor_triple", num_samples=60),
    ]
    for seed, spec in enumerate(specs):
        t = synth_traces(spec, seed)
        u = list(t.heads())
        d = mobius_dividends(build_energy_table(t, u, 2), SignConvention.PAPER)
        for c, v in d.dividends.items():
            if len(c) == 2:
                assert v >= -1e-9


def test_raw_round_trip_random_games(rng):
    for n in (3, 4, 5, 6):
        g = random_game(rng, n)
        d = mobius_dividends(g, SignConvention.RAW)
        for c in g.coalitions():
            assert reconstruct_energy(d, c) == pytest.approx(g.energies[c], abs=1e-9)


def test_sign_relation_paper_vs_raw(rng):
    g = random_game(rng, 4)
    raw = mobius_dividends(g, SignConvention.RAW)
    paper = mobius_dividends(g, SignConvention.PAPER)
    for c in g.coalitions():
        if len(c) == 1:
            assert paper.dividends[c] == pytest.approx(raw.dividends[c], abs=1e-12)
        elif len(c) >= 2:
            assert paper.dividends[c] == pytest.approx(-raw.dividends[c], abs=1e-12)


def test_dividend_locality(rng):
    # perturbing the energy of a non-subset coalition leaves delta(B) fixed
    g = random_game(rng, 4)
    b = coalition(g.universe[:2])
    before = mobius_dividends(g, SignConvention.RAW).dividends[b]
    outsider = coalition(g.universe[1:])  # not a subset of b
    g.energies[outsider] += 5.0
    after = mobius_dividends(g, SignConvention.RAW).dividends[b]
    assert after == pytest.approx(before, abs=1e-12)


def test_fast_path_matches_enumeration(rng):
    g = random_game(rng, 6)
    fast = mobius_dividends(g, SignConvention.RAW)  # full order -> bitmask path
    for c in g.coalitions():
        if c:
            assert fast.dividends[c] == pytest.approx(_raw_dividend(g, c), abs=1e-9)


def test_reconstruct_requires_raw(rng):
    g = random_game(rng, 3)
    d = mobius_dividends(g, SignConvention.PAPER)
    with pytest.raises(ConventionError):
        reconstruct_energy(d, g.universe)


def test_incomplete_table_rejected(rng):
    g = random_game(rng, 3)
    del g.energies[coalition(g.universe[:2])]
    with pytest.raises((InputError, KeyError)):
        mobius_dividends(g, SignConvention.RAW)


def test_truncated_table_dividends():
    t = synth_traces(
        GeneratorSpec("independent_uniform", num_samples=30, num_heads=5, num_symbols=2), 3
    )
    u = [HeadId(0, i) for i in range(5)]
    e = build_energy_table(t, u, 2)  # truncated: forces the enumeration path
    d = mobius_dividends(e, SignConvention.RAW)
    assert d.max_order == 2
    assert set(map(len, d.dividends)) == {0, 1, 2}

"""One test per acceptance criterion; each prints a pass/fail line."""

import csv
import math
import os

import numpy as np
import pytest

from headsynergy import (
    GeneratorSpec,
    HeadId,
    SignConvention,
    build_energy_table,
    collective_free_energy,
    flop_estimate,
    full_shapley,
    gibbs_distribution,
    gibbs_optimality_audit,
    load_traces,
    mobius_dividends,
    permutation_shapley_oracle,
    reconstruct_energy,
    select_heads,
    synth_traces,
    truncated_shapley,
)
from headsynergy.cli import main as cli_main
from headsynergy.pruning import ModelGeometry

from gametools import game_from_dividends, random_game

FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures", "sample_traces.jsonl")


def report(name, ok):
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


def test_mobius_round_trip():
    rng = np.random.default_rng(1)
    ok = True
    for _ in range(100):
        n = int(rng.integers(3, 7))
        g = random_game(rng, n)
        d = mobius_dividends(g, SignConvention.RAW)
        for c in g.coalitions():
            if abs(reconstruct_energy(d, c) - g.energies[c]) > 1e-9:
                ok = False
    report("Moebius round-trip (100 random games, |U| 3-6, tol 1e-9)", ok)


def test_pairwise_nonnegativity():
    trace_sets = [
        synth_traces(GeneratorSpec("independent_uniform", num_samples=80,
                                   num_heads=5, num_symbols=3), 0),
        synth_traces(GeneratorSpec("duplicate_head", num_samples=80,
                                   num_heads=4, num_symbols=4), 1),
        synth_traces(GeneratorSpec("constant_head", num_samples=80, num_heads=3), 2),
        synth_traces(GeneratorSpec("xor_triple", num_samples=80), 3),
        load_traces(FIXTURE),
    ]
    ok = True
    for t in trace_sets:
        d = mobius_dividends(
            build_energy_table(t, list(t.heads()), 2), SignConvention.PAPER
        )
        for c, v in d.dividends.items():
            if len(c) == 2 and v < -1e-9:
                ok = False
    report("PAPER pair dividends >= -1e-9 on all trace sets", ok)


def test_interaction_information_oracles():
    u = [HeadId(0, i) for i in range(3)]
    xor = synth_traces(GeneratorSpec("xor_triple", num_samples=4000, exact=True), 7)
    d_xor = mobius_dividends(build_energy_table(xor, u, 3), SignConvention.PAPER)
    dup = synth_traces(
        GeneratorSpec("duplicate_head", num_samples=512, num_heads=3,
                      num_symbols=2, exact=True), 5,
    )
    d_dup = mobius_dividends(build_energy_table(dup, u, 3), SignConvention.PAPER)
    ok = (
        abs(d_xor.dividend(u) - 1.0) <= 1e-9
        and abs(d_dup.dividend(u) - (-1.0)) <= 1e-9
    )
    report("interaction-information signs: xor +1.0, triple-duplicate -1.0", ok)


def test_shapley_efficiency_and_oracle():
    rng = np.random.default_rng(2)
    ok = True
    for _ in range(100):
        n = int(rng.integers(2, 7))
        g = random_game(rng, n)
        eta = full_shapley(mobius_dividends(g, SignConvention.RAW))
        if abs(sum(eta.scores.values()) - g.energies[g.universe]) > 1e-9:
            ok = False
        oracle = permutation_shapley_oracle(g)
        for h in g.universe:
            if abs(eta.scores[h] - oracle.scores[h]) > 1e-9:
                ok = False
    report("Shapley efficiency and permutation-oracle equivalence (100 games)", ok)


def test_truncation_consistency():
    rng = np.random.default_rng(3)
    ok = True
    for _ in range(25):
        n = int(rng.integers(3, 7))
        heads = [HeadId(0, i) for i in range(n)]
        dividends = {(h,): float(rng.uniform(0, 2)) for h in heads}
        for i in range(n):
            for j in range(i + 1, n):
                dividends[(heads[i], heads[j])] = float(rng.uniform(-1, 1))
        g = game_from_dividends(dividends)
        d = mobius_dividends(g, SignConvention.RAW)
        eta, phi = full_shapley(d), truncated_shapley(d)
        for h in heads:
            if abs(eta.scores[h] - phi.scores[h]) > 1e-9:
                ok = False
    report("truncated phi equals full eta when dividends vanish for |B| >= 3", ok)


def test_gibbs_audit():
    rng = np.random.default_rng(4)
    ok = True
    for trial in range(20):
        n = int(rng.integers(2, 11))
        g = random_game(rng, n)
        beta = float(rng.uniform(0.3, 3.0))
        m = gibbs_distribution(g, beta)
        f_direct = collective_free_energy(m.probs, g, beta)
        if abs(f_direct - (-m.log_partition / beta)) > 1e-9:
            ok = False
        audit = gibbs_optimality_audit(m, trials=1000, seed=trial)
        if audit.violations != 0:
            ok = False
    report("Gibbs identity F(P*) = -(1/beta) ln Z and optimality over 1000 "
           "perturbations x 20 tables", ok)


def test_pruning_pipeline():
    # plant one constant head in an otherwise-uniform 8-head layer
    base = synth_traces(
        GeneratorSpec("independent_uniform", num_samples=120, num_heads=8,
                      num_symbols=4), 9,
    )
    planted = 5
    cols = np.stack([base.column(h) for h in base.heads()])
    cols[planted] = 0
    from headsynergy import TraceHeader, TraceSet
    header = TraceHeader("planted", 1, 8, 120)
    traces = TraceSet.from_raw(
        header,
        {(s, 0, h): (int(cols[h, s]),) for h in range(8) for s in range(120)},
    )

    universe = list(traces.heads())
    phi = truncated_shapley(
        mobius_dividends(build_energy_table(traces, universe, 2), SignConvention.PAPER)
    )
    const_head = HeadId(0, planted)
    lowest = min(universe, key=lambda h: (phi.scores[h], h))
    ok = lowest == const_head and all(
        phi.scores[const_head] < phi.scores[h] for h in universe if h != const_head
    )

    masks = [select_heads(phi, r, "per_layer_ceil") for r in (0.05, 0.10, 0.20)]
    ok = ok and all(const_head in m.pruned for m in masks)
    ok = ok and masks[0].pruned <= masks[1].pruned <= masks[2].pruned

    geom = ModelGeometry("planted", 1, 8, head_dim=16, model_dim=128, seq_len=64)
    for m in masks:
        rep = flop_estimate(geom, m)
        if abs(rep.attention_flops_saved_fraction - len(m.pruned) / 8) > 1e-9:
            ok = False
    report("planted constant head: lowest phi, pruned at every rate, nested "
           "masks, proportional attention FLOP savings", ok)


def test_binomial_bookkeeping(tmp_path):
    traces = synth_traces(
        GeneratorSpec("independent_uniform", num_samples=50, num_heads=12,
                      num_symbols=3), 10,
    )
    u = [HeadId(0, i) for i in range(12)]
    d = mobius_dividends(build_energy_table(traces, u, 3), SignConvention.PAPER)
    n_pairs = sum(1 for c in d.dividends if len(c) == 2)
    n_triples = sum(1 for c in d.dividends if len(c) == 3)
    ok = n_pairs == 66 and n_triples == 220

    from headsynergy.trace_store import write_traces
    tf = str(tmp_path / "t.jsonl")
    write_traces(traces, tf)
    out = str(tmp_path / "out")
    ok = ok and cli_main(["analyze", "--traces", tf, "--max-order", "3",
                          "--out", out]) == 0
    with open(os.path.join(out, "dividends_pairs.csv"), newline="") as f:
        ok = ok and sum(1 for _ in csv.DictReader(f)) == 66
    with open(os.path.join(out, "dividends_triples.csv"), newline="") as f:
        ok = ok and sum(1 for _ in csv.DictReader(f)) == 220
    report("12-head universe at order 3: 66 pair and 220 triple dividends, "
           "in-memory and in analyze CSVs", ok)

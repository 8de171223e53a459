"""Command-line pipeline: synth / analyze / prune / gibbs / report.

Exit codes: 0 success, 2 input or format error, 3 combinatorial guard
violation, 4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import glob
import hashlib
import json
import os
import sys

import numpy as np

from . import report as rpt
from .entropy import build_energy_table
from .errors import FormatError, GuardError, InputError, IntegrityError, ToolkitError
from .gibbs import gibbs_distribution, gibbs_optimality_audit, pruning_delta_audit
from .harsanyi import SignConvention, mobius_dividends
from .pruning import (
    ModelGeometry,
    geometry_from_scores,
    load_mask,
    random_mask,
    select_heads,
    write_mask,
)
from .shapley import full_shapley, truncated_shapley
from .trace_store import (
    GeneratorSpec,
    HeadId,
    load_traces,
    synth_traces,
    write_traces,
)


def _parse_heads(arg: str) -> list[HeadId]:
    return [HeadId.parse(tok) for tok in arg.split(",") if tok]


def _select_universe(args, traces) -> dict[int, list[HeadId]]:
    """Map layer -> universe for that layer (one entry unless all-layers)."""
    if args.heads:
        heads = _parse_heads(args.heads)
        layers = {h.layer for h in heads}
        return {l: [h for h in heads if h.layer == l] for l in sorted(layers)}
    if getattr(args, "all_layers_pairwise", False):
        return {
            l: [HeadId(l, h) for h in range(traces.heads_per_layer)]
            for l in range(traces.num_layers)
        }
    layer = args.layer
    if not 0 <= layer < traces.num_layers:
        raise InputError(f"layer {layer} outside trace geometry")
    return {layer: [HeadId(layer, h) for h in range(traces.heads_per_layer)]}


def cmd_synth(args) -> int:
    table = None
    if args.table:
        with open(args.table, "r", encoding="utf-8") as f:
            raw = json.load(f)
        table = {tuple(int(x) for x in k.split(",")): float(v) for k, v in raw.items()}
    spec = GeneratorSpec(
        name=args.generator,
        num_samples=args.samples,
        num_heads=args.heads,
        num_symbols=args.symbols,
        source_head=args.source_head,
        table=table,
        exact=args.exact,
    )
    traces = synth_traces(spec, args.seed)
    write_traces(traces, args.out)
    print(f"wrote {args.out}: {traces.num_layers}x{traces.heads_per_layer} heads, "
          f"{traces.num_samples} samples")
    return 0


def cmd_analyze(args) -> int:
    traces = load_traces(args.traces)
    per_layer = _select_universe(args, traces)
    convention = SignConvention(args.convention)
    max_order = 2 if getattr(args, "all_layers_pairwise", False) else args.max_order

    os.makedirs(args.out, exist_ok=True)
    energy_tables, dividend_tables, score_tables = [], [], []
    for layer in sorted(per_layer):
        universe = per_layer[layer]
        energies = build_energy_table(traces, universe, min(max_order, len(universe)))
        dividends = mobius_dividends(energies, convention)
        energy_tables.append(energies)
        dividend_tables.append(dividends)
        score_tables.append(truncated_shapley(dividends))

    rpt.write_entropy_csv(energy_tables, os.path.join(args.out, "entropy.csv"))
    rpt.write_pair_dividends_csv(
        dividend_tables, os.path.join(args.out, "dividends_pairs.csv")
    )
    if max_order >= 3:
        rpt.write_triple_dividends_csv(
            dividend_tables, os.path.join(args.out, "dividends_triples.csv")
        )
    rpt.write_scores_csv(score_tables, os.path.join(args.out, "scores.csv"))
    print(f"analyze: wrote CSVs for {len(energy_tables)} layer(s) to {args.out}")
    return 0


def cmd_prune(args) -> int:
    scores_path = args.scores
    if os.path.isdir(scores_path):
        scores_path = os.path.join(scores_path, "scores.csv")
    if not os.path.exists(scores_path):
        raise InputError(f"missing scores file {scores_path}")
    scores = rpt.read_scores_csv(scores_path)
    geom = geometry_from_scores(scores, args.model)

    rates = [float(r) for r in args.rates.split(",") if r]
    modes = args.mode.split(",") if args.mode else ["per_layer_ceil"]
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [args.seed]

    os.makedirs(args.out, exist_ok=True)
    masks = []
    for mode in modes:
        for rate in rates:
            m = select_heads(scores, rate, mode, model_name=args.model)
            fname = f"mask_harsanyi_{mode}_{rate:g}.json"
            write_mask(m, os.path.join(args.out, fname))
            masks.append(m)
            for seed in seeds:
                r = random_mask(geom, rate, mode, seed)
                fname = f"mask_random_{mode}_{rate:g}_s{seed}.json"
                write_mask(r, os.path.join(args.out, fname))
                masks.append(r)
    rpt.write_masks_grid_csv(
        masks, geom.num_layers, geom.heads_per_layer,
        os.path.join(args.out, "masks_grid.csv"),
    )
    print(f"prune: wrote {len(masks)} masks to {args.out}")
    return 0


def cmd_gibbs(args) -> int:
    traces = load_traces(args.traces)
    per_layer = _select_universe(args, traces)
    universe = [h for layer in sorted(per_layer) for h in per_layer[layer]]
    if len(universe) > 20:
        raise GuardError(f"gibbs universe of {len(universe)} heads exceeds 20")

    energies = build_energy_table(traces, universe, max_order=len(universe))
    model = gibbs_distribution(energies, args.beta)
    audit = gibbs_optimality_audit(model, args.trials, args.seed)

    eta = full_shapley(mobius_dividends(energies, SignConvention.RAW))
    lowest = min(universe, key=lambda h: (abs(eta.scores[h]), h))
    pruning = None
    if len(universe) > 1:
        pa = pruning_delta_audit(energies, [lowest], eta, args.beta)
        pruning = {
            "pruned": [str(h) for h in pa.pruned],
            "free_energy_before": pa.free_energy_before,
            "free_energy_after": pa.free_energy_after,
            "delta_f": pa.delta_f,
            "eta_abs_sum": pa.eta_abs_sum,
            "ratio": pa.ratio,
        }

    items = sorted(model.items(), key=lambda cp: (-cp[1], cp[0]))[: args.top]
    rpt.write_gibbs_json(
        args.out,
        beta=args.beta,
        universe=energies.universe,
        log_partition=model.log_partition,
        free_energy=model.free_energy,
        top_coalitions=items,
        optimality_trials=audit.trials,
        violations=audit.violations,
        pruning_audit=pruning,
    )
    print(f"gibbs: lnZ={model.log_partition:.6f} F={model.free_energy:.6f} "
          f"violations={audit.violations}/{audit.trials} -> {args.out}")
    return 0


def cmd_report(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    indir = args.dir
    missing_inputs = [
        name
        for name in ("dividends_pairs.csv", "scores.csv")
        if not os.path.exists(os.path.join(indir, name))
    ]
    if missing_inputs:
        raise InputError(f"missing analyze outputs in {indir}: {missing_inputs}")

    # pair-dividend heatmap per layer
    pairs: dict[int, dict[tuple[int, int], float]] = {}
    with open(os.path.join(indir, "dividends_pairs.csv"), newline="") as f:
        for row in csv.DictReader(f):
            hi, hj = HeadId.parse(row["head_i"]), HeadId.parse(row["head_j"])
            if hi.layer == hj.layer:
                pairs.setdefault(hi.layer, {})[(hi.head, hj.head)] = float(
                    row["dividend_bits"]
                )
    for layer, entries in sorted(pairs.items()):
        size = max(max(i, j) for i, j in entries) + 1
        m = np.full((size, size), np.nan)
        for (i, j), v in entries.items():
            m[i, j] = m[j, i] = v
        rpt.render_grid_svg(
            m,
            os.path.join(args.out, f"pair_dividends_layer{layer}.svg"),
            title=f"pairwise dividends, layer {layer}",
            row_label="head",
            col_label="head",
        )

    # layer x head score map
    scores = rpt.read_scores_csv(os.path.join(indir, "scores.csv"))
    layers = max(h.layer for h in scores.universe) + 1
    width = max(h.head for h in scores.universe) + 1
    rpt.render_grid_svg(
        rpt.score_matrix(scores, layers, width),
        os.path.join(args.out, "score_map.svg"),
        title=f"head importance ({scores.kind}, {scores.convention.value})",
        row_label="layer",
        col_label="head",
    )

    # mask grids + comparison table
    mask_files = sorted(glob.glob(os.path.join(indir, "mask_*.json")))
    masks = []
    for mf in mask_files:
        mask = load_mask(mf)
        masks.append((mask, os.path.basename(mf)))
        grid = np.zeros((layers, width))
        for h in mask.pruned:
            grid[h.layer, h.head] = 1.0
        name = os.path.splitext(os.path.basename(mf))[0]
        rpt.render_grid_svg(
            grid,
            os.path.join(args.out, f"{name}.svg"),
            title=name,
            row_label="layer",
            col_label="head",
        )

    evals: dict[str, dict] = {}
    for ef in args.eval or []:
        with open(ef, "r", encoding="utf-8") as f:
            ev = json.load(f)
        digest = ev.get("mask_digest")
        for mf in mask_files:
            if _digest(mf) == digest:
                evals[os.path.basename(mf)] = ev
    missing = rpt.write_pruning_comparison_csv(
        masks, evals, os.path.join(args.out, "pruning_comparison.csv")
    )
    if missing and masks:
        print(f"warning: no perplexity results for {len(missing)} mask(s)", file=sys.stderr)
    print(f"report: wrote figures and comparison table to {args.out}")
    return 0


def _digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="headsynergy",
        description=(
            "Information-theoretic analysis of attention-head cooperation: "
            "joint entropies, Harsanyi dividends, Shapley-style importances, "
            "Gibbs coalition equilibria, and pruning masks. "
            "File schemas: HTRC v1 trace JSONL (header line {htrc,model,layers,"
            "heads,samples,granularity} then one record {s,l,h,a} per head per "
            "sample); entropy.csv(coalition,order,entropy_bits); "
            "dividends_pairs.csv(head_i,head_j,dividend_bits,convention); "
            "dividends_triples.csv(+head_k); scores.csv(layer,head,score_bits,"
            "kind,convention); mask.json(model,rate,mode,method,seed,pruned); "
            "masks_grid.csv(layer,head,<one column per mask>); gibbs.json; "
            "pruning_comparison.csv(rate,mode,method,seed,mask_file,perplexity,"
            "tokens,tokens_per_second)."
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="generate a synthetic HTRC trace file")
    ps.add_argument("--generator", required=True,
                    choices=["independent_uniform", "duplicate_head",
                             "constant_head", "xor_triple", "explicit"])
    ps.add_argument("--samples", type=int, default=500)
    ps.add_argument("--heads", type=int, default=1)
    ps.add_argument("--symbols", type=int, default=2)
    ps.add_argument("--source-head", type=int, default=0)
    ps.add_argument("--table", help="JSON file mapping 'a,b,...' tuples to probabilities")
    ps.add_argument("--exact", action="store_true")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_synth)

    pa = sub.add_parser("analyze", help="entropies, dividends, and scores to CSV")
    pa.add_argument("--traces", required=True)
    pa.add_argument("--layer", type=int, default=0)
    pa.add_argument("--heads", help="explicit universe, e.g. 0.0,0.3,1.2")
    pa.add_argument("--all-layers-pairwise", action="store_true",
                    help="pairwise analysis of every layer")
    pa.add_argument("--max-order", type=int, default=3)
    pa.add_argument("--convention", choices=["raw", "paper"], default="paper")
    pa.add_argument("--out", required=True)
    pa.set_defaults(func=cmd_analyze)

    pp = sub.add_parser("prune", help="masks from scores.csv, plus random baselines")
    pp.add_argument("--scores", required=True, help="scores.csv or its directory")
    pp.add_argument("--rates", default="0.05,0.10,0.20")
    pp.add_argument("--mode", default="per_layer_ceil",
                    help="comma list of per_layer_ceil,global_floor")
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--seeds", help="comma list of random-baseline seeds")
    pp.add_argument("--model", default="unknown")
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=cmd_prune)

    pg = sub.add_parser("gibbs", help="exact Gibbs equilibrium audit")
    pg.add_argument("--traces", required=True)
    pg.add_argument("--layer", type=int, default=0)
    pg.add_argument("--heads", help="explicit universe, e.g. 0.0,0.1")
    pg.add_argument("--beta", type=float, default=1.0)
    pg.add_argument("--trials", type=int, default=1000)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--top", type=int, default=10)
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=cmd_gibbs)

    pr = sub.add_parser("report", help="SVG figures and the pruning comparison table")
    pr.add_argument("--dir", required=True, help="directory with analyze/prune outputs")
    pr.add_argument("--eval", action="append",
                    help="eval.json from a perplexity run (repeatable)")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, IntegrityError, InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 3
    except ToolkitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""CSV and SVG emission: the interchange surface of the pipeline.

CSV schemas (header row always present):

* entropy.csv          coalition, order, entropy_bits
* dividends_pairs.csv  head_i, head_j, dividend_bits, convention
* dividends_triples.csv head_i, head_j, head_k, dividend_bits, convention
* scores.csv           layer, head, score_bits, kind, convention
* masks_grid.csv       layer, head, then one boolean column per mask label
* pruning_comparison.csv  rate, mode, method, seed, mask_file, perplexity,
                          tokens, tokens_per_second

Coalitions are semicolon-joined "layer.head" tokens, e.g. "0.1;0.4".
"""

from __future__ import annotations

import csv
import json
from typing import Iterable, Sequence

import numpy as np

from .entropy import Coalition, EnergyTable
from .errors import FormatError, InputError
from .harsanyi import DividendTable, SignConvention
from .pruning import PruneMask
from .shapley import ScoreTable
from .trace_store import HeadId

SVG_GENERATOR_VERSION = "headsynergy-svg/1"


def coalition_token(c: Coalition) -> str:
    return ";".join(str(h) for h in c)


def parse_coalition_token(token: str) -> Coalition:
    if not token:
        return ()
    return tuple(HeadId.parse(t) for t in token.split(";"))


def write_entropy_csv(tables: Iterable[EnergyTable], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["coalition", "order", "entropy_bits"])
        for energies in tables:
            for c in energies.coalitions():
                if c:
                    w.writerow([coalition_token(c), len(c), repr(energies.energies[c])])


def write_pair_dividends_csv(tables: Iterable[DividendTable], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["head_i", "head_j", "dividend_bits", "convention"])
        for t in tables:
            for c in sorted(t.dividends):
                if len(c) == 2:
                    w.writerow([str(c[0]), str(c[1]), repr(t.dividends[c]), t.convention.value])


def write_triple_dividends_csv(tables: Iterable[DividendTable], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["head_i", "head_j", "head_k", "dividend_bits", "convention"])
        for t in tables:
            for c in sorted(t.dividends):
                if len(c) == 3:
                    w.writerow(
                        [str(c[0]), str(c[1]), str(c[2]), repr(t.dividends[c]), t.convention.value]
                    )


def write_scores_csv(tables: Iterable[ScoreTable], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["layer", "head", "score_bits", "kind", "convention"])
        for t in tables:
            for h in t.universe:
                w.writerow([h.layer, h.head, repr(t.scores[h]), t.kind, t.convention.value])


def read_scores_csv(path: str) -> ScoreTable:
    """Re-parse scores.csv; all rows must share one kind and convention."""
    scores: dict[HeadId, float] = {}
    kinds, convs = set(), set()
    with open(path, "r", newline="", encoding="utf-8") as f:
        r = csv.DictReader(f)
        required = {"layer", "head", "score_bits", "kind", "convention"}
        if r.fieldnames is None or not required.issubset(r.fieldnames):
            raise FormatError(f"{path}: missing scores.csv columns")
        for row in r:
            try:
                hid = HeadId(int(row["layer"]), int(row["head"]))
                scores[hid] = float(row["score_bits"])
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path}: bad row {row}") from exc
            kinds.add(row["kind"])
            convs.add(row["convention"])
    if not scores:
        raise FormatError(f"{path}: no score rows")
    if len(kinds) != 1 or len(convs) != 1:
        raise InputError(f"{path}: mixed kinds {kinds} or conventions {convs}")
    return ScoreTable(
        universe=tuple(sorted(scores)),
        scores=scores,
        kind=kinds.pop(),
        convention=SignConvention(convs.pop()),
        metadata={"source": path},
    )


def write_masks_grid_csv(
    masks: Sequence[PruneMask], num_layers: int, heads_per_layer: int, path: str
) -> None:
    labels = [_mask_label(m) for m in masks]
    if len(set(labels)) != len(labels):
        raise InputError("mask labels collide; differentiate rate/mode/method/seed")
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["layer", "head", *labels])
        for l in range(num_layers):
            for h in range(heads_per_layer):
                hid = HeadId(l, h)
                w.writerow([l, h, *[int(m.is_pruned(hid)) for m in masks]])


def _mask_label(m: PruneMask) -> str:
    label = f"{m.method}_{m.mode}_{m.rate:g}"
    if m.seed is not None:
        label += f"_s{m.seed}"
    return label


def write_pruning_comparison_csv(
    masks: Sequence[tuple[PruneMask, str]],
    evals: dict[str, dict],
    path: str,
) -> list[str]:
    """Join mask metadata with eval.json results keyed by mask file name.

    Returns the list of mask files that had no matching evaluation.
    """
    missing = []
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(
            ["rate", "mode", "method", "seed", "mask_file",
             "perplexity", "tokens", "tokens_per_second"]
        )
        for mask, fname in masks:
            ev = evals.get(fname, {})
            if not ev:
                missing.append(fname)
            w.writerow(
                [
                    mask.rate,
                    mask.mode,
                    mask.method,
                    "" if mask.seed is None else mask.seed,
                    fname,
                    ev.get("perplexity", ""),
                    ev.get("tokens", ""),
                    ev.get("tokens_per_second", ""),
                ]
            )
    return missing


# -- minimal SVG rendering --------------------------------------------------


def _color(v: float, vmin: float, vmax: float) -> str:
    """Dark blue (low) to bright yellow (high)."""
    t = 0.0 if vmax <= vmin else (v - vmin) / (vmax - vmin)
    r = int(255 * t)
    g = int(60 + 180 * t)
    b = int(140 * (1.0 - t) + 40)
    return f"rgb({r},{g},{b})"


def render_grid_svg(
    values: np.ndarray,
    path: str,
    title: str,
    row_label: str = "row",
    col_label: str = "col",
    cell: int = 22,
    mask_missing: np.ndarray | None = None,
) -> None:
    """Write a labeled heatmap grid; NaN cells (or mask_missing) stay empty."""
    values = np.asarray(values, dtype=float)
    rows, cols = values.shape
    finite = values[np.isfinite(values)]
    vmin = float(finite.min()) if finite.size else 0.0
    vmax = float(finite.max()) if finite.size else 1.0
    left, top = 60, 40
    width = left + cols * cell + 20
    height = top + rows * cell + 40
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f"<!-- generator: {SVG_GENERATOR_VERSION} -->",
        f'<text x="{left}" y="20" font-size="14">{title}</text>',
        f'<text x="6" y="{top + rows * cell / 2:.0f}" font-size="11">{row_label}</text>',
        f'<text x="{left + cols * cell / 2:.0f}" y="{height - 10}" font-size="11">{col_label}</text>',
    ]
    for i in range(rows):
        for j in range(cols):
            v = values[i, j]
            skip = not np.isfinite(v) or (
                mask_missing is not None and mask_missing[i, j]
            )
            x, y = left + j * cell, top + i * cell
            if skip:
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell - 1}" height="{cell - 1}" '
                    'fill="none" stroke="#ccc"/>'
                )
            else:
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell - 1}" height="{cell - 1}" '
                    f'fill="{_color(v, vmin, vmax)}"/>'
                )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts) + "\n")


def pair_matrix(table: DividendTable, layer: int, heads_per_layer: int) -> np.ndarray:
    """Symmetric pair-dividend matrix for one layer, NaN on the diagonal."""
    m = np.full((heads_per_layer, heads_per_layer), np.nan)
    for c, v in table.dividends.items():
        if len(c) == 2 and c[0].layer == layer and c[1].layer == layer:
            m[c[0].head, c[1].head] = v
            m[c[1].head, c[0].head] = v
    return m


def score_matrix(scores: ScoreTable, num_layers: int, heads_per_layer: int) -> np.ndarray:
    m = np.full((num_layers, heads_per_layer), np.nan)
    for h, v in scores.scores.items():
        m[h.layer, h.head] = v
    return m


def write_gibbs_json(
    path: str,
    beta: float,
    universe: Coalition,
    log_partition: float,
    free_energy: float,
    top_coalitions: list[tuple[Coalition, float]],
    optimality_trials: int,
    violations: int,
    pruning_audit: dict | None,
) -> None:
    obj = {
        "beta": beta,
        "universe": [str(h) for h in universe],
        "log_partition": log_partition,
        "free_energy": free_energy,
        "top_coalitions": [
            {"coalition": coalition_token(c), "probability": p} for c, p in top_coalitions
        ],
        "optimality_trials": optimality_trials,
        "violations": violations,
        "pruning_audit": pruning_audit,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")

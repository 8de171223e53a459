"""Pruning masks from score tables, random baselines, and FLOP accounting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InputError
from .shapley import ScoreTable
from .trace_store import HeadId

MODES = ("per_layer_ceil", "global_floor")
METHODS = ("harsanyi", "random")


@dataclass(frozen=True)
class ModelGeometry:
    model_name: str
    num_layers: int
    heads_per_layer: int
    head_dim: int | None = None
    model_dim: int | None = None
    seq_len: int | None = None

    @property
    def total_heads(self) -> int:
        return self.num_layers * self.heads_per_layer


@dataclass(frozen=True)
class PruneMask:
    model_name: str
    rate: float
    mode: str
    method: str
    seed: int | None
    pruned: frozenset[HeadId]

    def is_pruned(self, head: HeadId) -> bool:
        return head in self.pruned


def _check_rate_mode(rate: float, mode: str) -> None:
    if not 0.0 < rate < 1.0:
        raise InputError(f"rate must be in (0, 1), got {rate}")
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}")


def _count_per_layer(rate: float, heads_per_layer: int) -> int:
    return math.ceil(rate * heads_per_layer)


def _count_global(rate: float, total_heads: int) -> int:
    return math.floor(rate * total_heads)


def geometry_from_scores(scores: ScoreTable, model_name: str = "unknown") -> ModelGeometry:
    """Require the score universe to be a complete layer x head grid."""
    layers = sorted({h.layer for h in scores.universe})
    if layers != list(range(len(layers))):
        raise InputError("score table layers are not contiguous from 0")
    per_layer = {l: sorted(h.head for h in scores.universe if h.layer == l) for l in layers}
    widths = {tuple(v) for v in per_layer.values()}
    if len(widths) != 1 or next(iter(widths)) != tuple(range(len(next(iter(widths))))):
        raise InputError("score table does not cover a full layer x head grid")
    return ModelGeometry(
        model_name=model_name,
        num_layers=len(layers),
        heads_per_layer=len(next(iter(widths))),
    )


def select_heads(
    scores: ScoreTable,
    rate: float,
    mode: str = "per_layer_ceil",
    model_name: str = "unknown",
) -> PruneMask:
    """Prune the lowest-scoring heads; ties broken by ascending (layer, head)."""
    _check_rate_mode(rate, mode)
    geom = geometry_from_scores(scores, model_name)
    ranked = scores.ranking()  # lowest first, deterministic tie-break
    if mode == "per_layer_ceil":
        k = _count_per_layer(rate, geom.heads_per_layer)
        pruned = set()
        for l in range(geom.num_layers):
            layer_ranked = [h for h in ranked if h.layer == l]
            pruned.update(layer_ranked[:k])
    else:
        k = _count_global(rate, geom.total_heads)
        pruned = set(ranked[:k])
    return PruneMask(
        model_name=model_name,
        rate=rate,
        mode=mode,
        method="harsanyi",
        seed=None,
        pruned=frozenset(pruned),
    )


def random_mask(
    geometry: ModelGeometry, rate: float, mode: str, seed: int
) -> PruneMask:
    """Uniform random baseline with the same per-mode head counts."""
    _check_rate_mode(rate, mode)
    rng = np.random.default_rng(seed)
    if mode == "per_layer_ceil":
        k = _count_per_layer(rate, geometry.heads_per_layer)
        pruned = set()
        for l in range(geometry.num_layers):
            picks = rng.choice(geometry.heads_per_layer, size=k, replace=False)
            pruned.update(HeadId(l, int(h)) for h in picks)
    else:
        k = _count_global(rate, geometry.total_heads)
        picks = rng.choice(geometry.total_heads, size=k, replace=False)
        pruned = {
            HeadId(int(i) // geometry.heads_per_layer, int(i) % geometry.heads_per_layer)
            for i in picks
        }
    return PruneMask(
        model_name=geometry.model_name,
        rate=rate,
        mode=mode,
        method="random",
        seed=seed,
        pruned=frozenset(pruned),
    )


@dataclass
class FlopReport:
    geometry: ModelGeometry
    attention_flops_saved_fraction: float
    total_flops_saved_fraction: float
    formula: str
    throughput_note: str = (
        "throughput gains depend on kernel/runtime details and are measured, "
        "not derived, from this analytic model"
    )


def flop_estimate(geometry: ModelGeometry, mask: PruneMask) -> FlopReport:
    """Analytic proportional FLOP model.

    Per layer, per token: attention projections 4*d^2 plus score/context
    products 2*seq*head_dim*H, both proportional to the active head count;
    MLP 8*d^2, unaffected by head pruning.
    """
    if geometry.model_dim is None or geometry.head_dim is None or geometry.seq_len is None:
        raise InputError("flop_estimate needs head_dim, model_dim, and seq_len")
    for h in mask.pruned:
        if not (0 <= h.layer < geometry.num_layers and 0 <= h.head < geometry.heads_per_layer):
            raise InputError(f"mask head {h} outside the model geometry")

    d, hd, seq = geometry.model_dim, geometry.head_dim, geometry.seq_len
    H, L = geometry.heads_per_layer, geometry.num_layers
    attn_per_layer = 4 * d * d + 2 * seq * hd * H  # per token, all heads active
    mlp_per_layer = 8 * d * d
    total = L * (attn_per_layer + mlp_per_layer)

    pruned_fraction_total = len(mask.pruned) / geometry.total_heads
    saved = sum(
        attn_per_layer
        * (sum(1 for h in mask.pruned if h.layer == l) / H)
        for l in range(L)
    )
    attn_total = L * attn_per_layer
    return FlopReport(
        geometry=geometry,
        attention_flops_saved_fraction=saved / attn_total if attn_total else 0.0,
        total_flops_saved_fraction=saved / total if total else 0.0,
        formula=(
            "per layer per token: attention = 4*d^2 + 2*seq*head_dim*H "
            "(proportional to active heads), mlp = 8*d^2 (unaffected); "
            f"d={d}, head_dim={hd}, seq={seq}, H={H}, L={L}; "
            f"pruned fraction = {pruned_fraction_total:.4f}"
        ),
    )


# -- mask.json --------------------------------------------------------------


def mask_to_json(mask: PruneMask) -> dict:
    return {
        "model": mask.model_name,
        "rate": mask.rate,
        "mode": mask.mode,
        "method": mask.method,
        "seed": mask.seed,
        "pruned": [
            {"layer": h.layer, "head": h.head} for h in sorted(mask.pruned)
        ],
    }


def write_mask(mask: PruneMask, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(mask_to_json(mask), f, indent=2)
        f.write("\n")


def load_mask(path: str) -> PruneMask:
    with open(path, "r", encoding="utf-8") as f:
        obj = json.load(f)
    try:
        pruned = frozenset(HeadId(int(e["layer"]), int(e["head"])) for e in obj["pruned"])
        return PruneMask(
            model_name=str(obj["model"]),
            rate=float(obj["rate"]),
            mode=str(obj["mode"]),
            method=str(obj["method"]),
            seed=None if obj.get("seed") is None else int(obj["seed"]),
            pruned=pruned,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed mask file") from exc

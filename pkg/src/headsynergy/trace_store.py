"""Discrete attention-head traces: file format, interning, synthetic generators.

The on-disk format is HTRC v1 (JSON Lines).  Line 1 is the header::

    {"htrc": 1, "model": <text>, "layers": L, "heads": H, "samples": N,
     "granularity": "sequence" | "token"}

and every following line is one record::

    {"s": <sample>, "l": <layer>, "h": <head>, "a": [<argmax key index>, ...]}

Exactly N*L*H records are required, in any order, with no duplicates.  In
"sequence" granularity the whole "a" array is one discrete symbol; in "token"
granularity each element of "a" is one symbol and, for a fixed (s, l), array
lengths must agree across heads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import FormatError, InputError, IntegrityError

GRANULARITIES = ("sequence", "token")


class HeadId(NamedTuple):
    layer: int
    head: int

    def __str__(self) -> str:
        return f"{self.layer}.{self.head}"

    @classmethod
    def parse(cls, token: str) -> "HeadId":
        try:
            layer_s, head_s = token.split(".")
            return cls(int(layer_s), int(head_s))
        except ValueError as exc:
            raise InputError(f"bad head token {token!r}, expected 'layer.head'") from exc


@dataclass(frozen=True)
class TraceHeader:
    model_name: str
    num_layers: int
    heads_per_layer: int
    num_samples: int
    granularity: str = "sequence"

    def __post_init__(self) -> None:
        if self.num_layers < 1 or self.heads_per_layer < 1 or self.num_samples < 1:
            raise FormatError("header counts must all be >= 1")
        if self.granularity not in GRANULARITIES:
            raise FormatError(f"granularity must be one of {GRANULARITIES}")


class TraceSet:
    """Immutable (layer, head, sample) table of interned discrete symbols.

    Symbol ids are dense per head: within one head, two raw sequences share an
    id iff they are element-wise equal.  Ids carry no meaning across heads.
    """

    def __init__(
        self,
        header: TraceHeader,
        symbols: np.ndarray,
        intern_tables: Sequence[Sequence[tuple[int, ...]]],
        token_lengths: np.ndarray | None = None,
    ) -> None:
        symbols = np.asarray(symbols, dtype=np.int64)
        expected = (header.num_layers, header.heads_per_layer, header.num_samples)
        if symbols.shape != expected:
            raise IntegrityError(
                f"symbol table shape {symbols.shape} != header dimensions {expected}"
            )
        self.header = header
        self._symbols = symbols
        self._symbols.flags.writeable = False
        # intern_tables[l * H + h][sid] -> raw sequence for that symbol id
        self._intern = [tuple(t) for t in intern_tables]
        if len(self._intern) != header.num_layers * header.heads_per_layer:
            raise IntegrityError("one intern table required per head")
        self._token_lengths = token_lengths

    # -- geometry -----------------------------------------------------------

    @property
    def num_layers(self) -> int:
        return self.header.num_layers

    @property
    def heads_per_layer(self) -> int:
        return self.header.heads_per_layer

    @property
    def num_samples(self) -> int:
        return self.header.num_samples

    def heads(self) -> Iterator[HeadId]:
        for l in range(self.num_layers):
            for h in range(self.heads_per_layer):
                yield HeadId(l, h)

    def has_head(self, head: HeadId) -> bool:
        return 0 <= head.layer < self.num_layers and 0 <= head.head < self.heads_per_layer

    # -- data access --------------------------------------------------------

    def column(self, head: HeadId) -> np.ndarray:
        """All symbol ids of one head, in sample order (read-only view)."""
        if not self.has_head(head):
            raise InputError(f"unknown head {head} for this trace set")
        return self._symbols[head.layer, head.head]

    def symbol(self, head: HeadId, sample: int) -> int:
        return int(self.column(head)[sample])

    def raw_sequence(self, head: HeadId, sample: int) -> tuple[int, ...]:
        return self._intern[head.layer * self.heads_per_layer + head.head][
            self.symbol(head, sample)
        ]

    def symbol_count(self, head: HeadId) -> int:
        """Number of distinct symbols K_h observed for one head."""
        if not self.has_head(head):
            raise InputError(f"unknown head {head} for this trace set")
        return len(self._intern[head.layer * self.heads_per_layer + head.head])

    # -- construction -------------------------------------------------------

    @classmethod
    def from_raw(
        cls,
        header: TraceHeader,
        raw: Mapping[tuple[int, int, int], tuple[int, ...]],
        token_lengths: np.ndarray | None = None,
    ) -> "TraceSet":
        """Intern raw per-(sample, layer, head) sequences into dense ids."""
        L, H, N = header.num_layers, header.heads_per_layer, header.num_samples
        symbols = np.empty((L, H, N), dtype=np.int64)
        intern_tables: list[list[tuple[int, ...]]] = []
        for l in range(L):
            for h in range(H):
                ids: dict[tuple[int, ...], int] = {}
                table: list[tuple[int, ...]] = []
                for s in range(N):
                    try:
                        seq = raw[(s, l, h)]
                    except KeyError:
                        raise IntegrityError(f"missing record (s={s}, l={l}, h={h})")
                    sid = ids.get(seq)
                    if sid is None:
                        sid = len(table)
                        ids[seq] = sid
                        table.append(seq)
                    symbols[l, h, s] = sid
                intern_tables.append(table)
        return cls(header, symbols, intern_tables, token_lengths)


def load_traces(path: str) -> TraceSet:
    """Load and fully validate an HTRC v1 trace file."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            head_line = f.readline()
            header_obj = json.loads(head_line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: header line is not valid JSON") from exc
        if not isinstance(header_obj, dict) or header_obj.get("htrc") != 1:
            raise FormatError(f"{path}: missing or unsupported htrc version marker")
        try:
            header = TraceHeader(
                model_name=str(header_obj["model"]),
                num_layers=int(header_obj["layers"]),
                heads_per_layer=int(header_obj["heads"]),
                num_samples=int(header_obj["samples"]),
                granularity=str(header_obj["granularity"]),
            )
        except KeyError as exc:
            raise FormatError(f"{path}: header missing field {exc}") from exc

        L, H, N = header.num_layers, header.heads_per_layer, header.num_samples
        records: dict[tuple[int, int, int], tuple[int, ...]] = {}
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                s, l, h = int(rec["s"]), int(rec["l"]), int(rec["h"])
                a = tuple(int(x) for x in rec["a"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed record") from exc
            if not (0 <= s < N and 0 <= l < L and 0 <= h < H):
                raise IntegrityError(f"{path}:{lineno}: record index out of range")
            if any(x < 0 for x in a):
                raise FormatError(f"{path}:{lineno}: negative argmax index")
            if (s, l, h) in records:
                raise IntegrityError(f"{path}:{lineno}: duplicate record (s={s}, l={l}, h={h})")
            records[(s, l, h)] = a

    if len(records) != N * L * H:
        raise IntegrityError(
            f"{path}: expected {N * L * H} records, found {len(records)}"
        )

    if header.granularity == "sequence":
        return TraceSet.from_raw(header, records)
    return _assemble_token_mode(header, records)


def _assemble_token_mode(
    header: TraceHeader, records: Mapping[tuple[int, int, int], tuple[int, ...]]
) -> TraceSet:
    """Flatten token-granularity records: each valid position is one sample."""
    L, H, N = header.num_layers, header.heads_per_layer, header.num_samples
    lengths = np.zeros((N, L), dtype=np.int64)
    for s in range(N):
        for l in range(L):
            n0 = len(records[(s, l, 0)])
            for h in range(1, H):
                if len(records[(s, l, h)]) != n0:
                    raise IntegrityError(
                        f"token-mode length mismatch at (s={s}, l={l}): "
                        f"head {h} has {len(records[(s, l, h)])}, head 0 has {n0}"
                    )
            lengths[s, l] = n0
    per_layer_totals = lengths.sum(axis=0)
    if len(set(per_layer_totals.tolist())) != 1:
        raise IntegrityError(
            f"token-mode totals differ across layers: {per_layer_totals.tolist()}"
        )
    total = int(per_layer_totals[0])
    if total == 0:
        raise IntegrityError("token-mode trace contains no valid positions")

    flat_header = TraceHeader(
        model_name=header.model_name,
        num_layers=L,
        heads_per_layer=H,
        num_samples=total,
        granularity="token",
    )
    raw: dict[tuple[int, int, int], tuple[int, ...]] = {}
    for l in range(L):
        for h in range(H):
            pos = 0
            for s in range(N):
                for x in records[(s, l, h)]:
                    raw[(pos, l, h)] = (x,)
                    pos += 1
    return TraceSet.from_raw(flat_header, raw, token_lengths=lengths)


def write_traces(traces: TraceSet, path: str) -> None:
    """Write a TraceSet back to HTRC v1; inverse of load_traces."""
    header = traces.header
    token_lengths = traces._token_lengths
    if header.granularity == "token" and token_lengths is None:
        raise InputError("token-mode TraceSet lacks example boundaries; cannot serialize")

    with open(path, "w", encoding="utf-8") as f:
        if header.granularity == "sequence":
            n_examples = header.num_samples
        else:
            n_examples = token_lengths.shape[0]
        f.write(
            json.dumps(
                {
                    "htrc": 1,
                    "model": header.model_name,
                    "layers": header.num_layers,
                    "heads": header.heads_per_layer,
                    "samples": n_examples,
                    "granularity": header.granularity,
                }
            )
            + "\n"
        )
        for s in range(n_examples):
            for l in range(header.num_layers):
                for h in range(header.heads_per_layer):
                    if header.granularity == "sequence":
                        a = list(traces.raw_sequence(HeadId(l, h), s))
                    else:
                        start = int(token_lengths[:s, l].sum())
                        a = [
                            traces.raw_sequence(HeadId(l, h), start + k)[0]
                            for k in range(int(token_lengths[s, l]))
                        ]
                    f.write(json.dumps({"s": s, "l": l, "h": h, "a": a}) + "\n")


# -- synthetic generators ---------------------------------------------------

GENERATOR_NAMES = (
    "independent_uniform",
    "duplicate_head",
    "constant_head",
    "xor_triple",
    "explicit",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Configuration for synth_traces.

    name: one of GENERATOR_NAMES.
    num_samples: samples to draw.
    num_heads: head count (independent_uniform, duplicate_head, constant_head).
    num_symbols: alphabet size K (independent_uniform, duplicate_head source).
    source_head: which head the others copy (duplicate_head).
    table: explicit joint distribution, mapping symbol tuples -> probability.
    exact: lay out symbol counts deterministically (largest-remainder rounding
        of N*p) instead of iid sampling; the empirical distribution then
        matches the target exactly whenever N*p is integral.
    """

    name: str
    num_samples: int = 500
    num_heads: int = 1
    num_symbols: int = 2
    source_head: int = 0
    table: Mapping[tuple[int, ...], float] | None = None
    exact: bool = False


def synth_traces(spec: GeneratorSpec, seed: int) -> TraceSet:
    """Deterministic synthetic TraceSet (single layer) for tests and demos."""
    if spec.name not in GENERATOR_NAMES:
        raise InputError(f"unknown generator {spec.name!r}")
    if spec.num_samples < 1:
        raise InputError("num_samples must be >= 1")
    rng = np.random.default_rng(seed)
    N = spec.num_samples

    if spec.name == "constant_head":
        cols = np.zeros((spec.num_heads, N), dtype=np.int64)
    elif spec.name == "independent_uniform":
        cols = _sample_columns(
            rng,
            heads=spec.num_heads,
            table={
                (k,): 1.0 / spec.num_symbols for k in range(spec.num_symbols)
            },
            n=N,
            exact=spec.exact,
            independent=True,
        )
    elif spec.name == "duplicate_head":
        if not 0 <= spec.source_head < spec.num_heads:
            raise InputError("source_head outside head range")
        base = _sample_columns(
            rng,
            heads=1,
            table={(k,): 1.0 / spec.num_symbols for k in range(spec.num_symbols)},
            n=N,
            exact=spec.exact,
            independent=True,
        )
        cols = np.tile(base, (spec.num_heads, 1))
    elif spec.name == "xor_triple":
        pairs = _sample_columns(
            rng,
            heads=2,
            table={(a, b): 0.25 for a in (0, 1) for b in (0, 1)},
            n=N,
            exact=spec.exact,
            independent=False,
        )
        cols = np.vstack([pairs, pairs[0] ^ pairs[1]])
    else:  # explicit
        if spec.table is None:
            raise InputError("explicit generator requires a distribution table")
        total = sum(spec.table.values())
        if abs(total - 1.0) > 1e-9:
            raise InputError(f"explicit distribution sums to {total}, not 1")
        if any(p < 0 for p in spec.table.values()):
            raise InputError("explicit distribution has negative mass")
        widths = {len(k) for k in spec.table}
        if len(widths) != 1:
            raise InputError("explicit table keys must all have the same arity")
        heads = widths.pop()
        cols = _sample_columns(
            rng, heads=heads, table=spec.table, n=N, exact=spec.exact, independent=False
        )

    header = TraceHeader(
        model_name=f"synthetic:{spec.name}",
        num_layers=1,
        heads_per_layer=cols.shape[0],
        num_samples=N,
    )
    raw = {
        (s, 0, h): (int(cols[h, s]),)
        for h in range(cols.shape[0])
        for s in range(N)
    }
    return TraceSet.from_raw(header, raw)


def _sample_columns(
    rng: np.random.Generator,
    heads: int,
    table: Mapping[tuple[int, ...], float],
    n: int,
    exact: bool,
    independent: bool,
) -> np.ndarray:
    """Draw n joint outcomes from a discrete table, one row per head.

    With independent=True the same marginal table is sampled separately per
    head; otherwise the table is a joint over all heads at once.
    """
    outcomes = sorted(table)
    probs = np.array([table[o] for o in outcomes], dtype=float)

    def draw_indices() -> np.ndarray:
        if exact:
            counts = _largest_remainder_counts(probs, n)
            idx = np.repeat(np.arange(len(outcomes)), counts)
            rng.shuffle(idx)
            return idx
        return rng.choice(len(outcomes), size=n, p=probs / probs.sum())

    if independent:
        cols = np.empty((heads, n), dtype=np.int64)
        for h in range(heads):
            idx = draw_indices()
            cols[h] = np.array([outcomes[i][0] for i in idx], dtype=np.int64)
        return cols
    idx = draw_indices()
    joint = np.array([outcomes[i] for i in idx], dtype=np.int64)  # (n, heads)
    return joint.T.copy()


def _largest_remainder_counts(probs: np.ndarray, n: int) -> np.ndarray:
    scaled = probs * n
    counts = np.floor(scaled).astype(np.int64)
    short = n - int(counts.sum())
    if short:
        order = np.argsort(-(scaled - counts), kind="stable")
        counts[order[:short]] += 1
    return counts

import json
import os

import numpy as np
import pytest

from headsynergy import (
    FormatError,
    GeneratorSpec,
    HeadId,
    InputError,
    IntegrityError,
    TraceHeader,
    joint_entropy,
    load_traces,
    synth_traces,
    write_traces,
)

FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures", "sample_traces.jsonl")


def write_file(path, header, records):
    with open(path, "w") as f:
        f.write(json.dumps(header) + "\n")
        for rec in records:
            f.write(json.dumps(rec) + "\n")


def make_records(L, H, N, seq=lambda s, l, h: [s, l, h]):
    return [
        {"s": s, "l": l, "h": h, "a": seq(s, l, h)}
        for s in range(N)
        for l in range(L)
        for h in range(H)
    ]


HEADER = {"htrc": 1, "model": "m", "layers": 1, "heads": 2, "samples": 3,
          "granularity": "sequence"}


def test_load_dimensions(tmp_path):
    p = tmp_path / "t.jsonl"
    write_file(p, HEADER, make_records(1, 2, 3))
    t = load_traces(str(p))
    assert (t.num_layers, t.heads_per_layer, t.num_samples) == (1, 2, 3)


def test_interning_identical_sequences_share_symbol(tmp_path):
    p = tmp_path / "t.jsonl"
    recs = make_records(1, 2, 3)
    for rec in recs:
        if rec["h"] == 0 and rec["s"] in (0, 1):
            rec["a"] = [7, 7]
    write_file(p, HEADER, recs)
    t = load_traces(str(p))
    h0 = HeadId(0, 0)
    assert t.symbol(h0, 0) == t.symbol(h0, 1)
    assert t.symbol(h0, 0) != t.symbol(h0, 2)


def test_missing_record_is_integrity_error(tmp_path):
    p = tmp_path / "t.jsonl"
    recs = [r for r in make_records(1, 2, 3) if not (r["s"] == 2 and r["h"] == 1)]
    write_file(p, HEADER, recs)
    with pytest.raises(IntegrityError):
        load_traces(str(p))


def test_duplicate_record_is_integrity_error(tmp_path):
    p = tmp_path / "t.jsonl"
    recs = make_records(1, 2, 3)
    write_file(p, HEADER, recs + [recs[0]])
    with pytest.raises(IntegrityError):
        load_traces(str(p))


def test_malformed_header_is_format_error(tmp_path):
    p = tmp_path / "t.jsonl"
    write_file(p, {"htrc": 2, "model": "m"}, [])
    with pytest.raises(FormatError):
        load_traces(str(p))
    p2 = tmp_path / "t2.jsonl"
    write_file(p2, dict(HEADER, granularity="word"), make_records(1, 2, 3))
    with pytest.raises(FormatError):
        load_traces(str(p2))


def test_zero_samples_rejected(tmp_path):
    p = tmp_path / "t.jsonl"
    write_file(p, dict(HEADER, samples=0), [])
    with pytest.raises(FormatError):
        load_traces(str(p))


def test_token_mode_flattens_positions(tmp_path):
    p = tmp_path / "t.jsonl"
    header = dict(HEADER, granularity="token", samples=2)
    lengths = {0: 3, 1: 2}
    recs = [
        {"s": s, "l": 0, "h": h, "a": [h + k for k in range(lengths[s])]}
        for s in range(2)
        for h in range(2)
    ]
    write_file(p, header, recs)
    t = load_traces(str(p))
    assert t.num_samples == 5  # 3 + 2 positions
    assert t.raw_sequence(HeadId(0, 1), 0) == (1,)


def test_token_mode_length_mismatch(tmp_path):
    p = tmp_path / "t.jsonl"
    header = dict(HEADER, granularity="token", samples=1)
    recs = [
        {"s": 0, "l": 0, "h": 0, "a": [1, 2, 3]},
        {"s": 0, "l": 0, "h": 1, "a": [1, 2]},
    ]
    write_file(p, header, recs)
    with pytest.raises(IntegrityError):
        load_traces(str(p))


def test_round_trip(tmp_path):
    t = load_traces(FIXTURE)
    out = tmp_path / "again.jsonl"
    write_traces(t, str(out))
    t2 = load_traces(str(out))
    assert t2.header == t.header
    for h in t.heads():
        for s in range(t.num_samples):
            assert t2.raw_sequence(h, s) == t.raw_sequence(h, s)


def test_token_round_trip(tmp_path):
    p = tmp_path / "t.jsonl"
    header = dict(HEADER, granularity="token", samples=2)
    recs = [
        {"s": s, "l": 0, "h": h, "a": [s + h, 2 * s]}
        for s in range(2)
        for h in range(2)
    ]
    write_file(p, header, recs)
    t = load_traces(str(p))
    out = tmp_path / "again.jsonl"
    write_traces(t, str(out))
    t2 = load_traces(str(out))
    np.testing.assert_array_equal(t2.column(HeadId(0, 0)), t.column(HeadId(0, 0)))


def test_interning_preserves_entropy(tmp_path):
    # entropy from interned ids equals entropy computed from raw sequences
    t = load_traces(FIXTURE)
    h = HeadId(1, 0)
    raws = [t.raw_sequence(h, s) for s in range(t.num_samples)]
    _, counts = np.unique([hash(r) for r in raws], return_counts=True)
    p = counts / t.num_samples
    expected = float(-(p * np.log2(p)).sum())
    assert joint_entropy(t, [h]) == pytest.approx(expected, abs=1e-12)


# -- synthetic generators ---------------------------------------------------


def test_synth_reproducible():
    spec = GeneratorSpec("independent_uniform", num_samples=200, num_heads=3, num_symbols=4)
    a = synth_traces(spec, 42)
    b = synth_traces(spec, 42)
    for h in a.heads():
        np.testing.assert_array_equal(a.column(h), b.column(h))


def test_constant_head_all_zero():
    t = synth_traces(GeneratorSpec("constant_head", num_samples=500), 0)
    assert not t.column(HeadId(0, 0)).any()


def test_duplicate_head_columns_equal():
    t = synth_traces(
        GeneratorSpec("duplicate_head", num_samples=300, num_heads=2, num_symbols=5), 3
    )
    np.testing.assert_array_equal(t.column(HeadId(0, 0)), t.column(HeadId(0, 1)))


def test_xor_triple_distribution():
    t = synth_traces(GeneratorSpec("xor_triple", num_samples=4000), 7)
    cols = np.stack([t.column(HeadId(0, i)) for i in range(3)])
    assert ((cols[0] ^ cols[1]) == cols[2]).all()
    _, counts = np.unique(cols.T, axis=0, return_counts=True)
    freqs = counts / 4000
    assert len(freqs) == 4
    assert (np.abs(freqs - 0.25) < 0.05).all()


def test_explicit_generator_and_validation():
    table = {(0, 0): 0.5, (1, 1): 0.5}
    t = synth_traces(GeneratorSpec("explicit", num_samples=100, table=table), 1)
    np.testing.assert_array_equal(t.column(HeadId(0, 0)), t.column(HeadId(0, 1)))
    with pytest.raises(InputError):
        synth_traces(GeneratorSpec("explicit", num_samples=10, table={(0,): 0.9}), 1)
    with pytest.raises(InputError):
        synth_traces(GeneratorSpec("nonsense", num_samples=10), 1)


def test_exact_mode_counts():
    t = synth_traces(
        GeneratorSpec("independent_uniform", num_samples=100, num_heads=1,
                      num_symbols=4, exact=True),
        9,
    )
    _, counts = np.unique(t.column(HeadId(0, 0)), return_counts=True)
    assert sorted(counts) == [25, 25, 25, 25]


def test_header_validation():
    with pytest.raises(FormatError):
        TraceHeader("m", 0, 1, 1)
    with pytest.raises(FormatError):
        TraceHeader("m", 1, 1, 1, granularity="chunk")

"""Record per-head argmax attention traces into HTRC v1 files.

For every example, layer, and head we take the attention matrix
(queries x keys), restrict it to valid (non-padding) positions, and keep the
index of the maximum-weight key per query.  Ties resolve to the lowest key
index.  Causal masking is already baked into the returned weights, so the
argmax of a causal model never exceeds the query position.
"""

from __future__ import annotations

import json
from typing import Iterable, Iterator, Sequence

import torch

from .jobs import ExtractionJob


def argmax_rows(
    attn: torch.Tensor, valid_len: int
) -> list[int]:
    """Per-query argmax key index over the first valid_len keys.

    attn: (queries, keys) weights for one head of one example.
    """
    if valid_len < 1:
        return []
    block = attn[:valid_len, :valid_len]
    return block.argmax(dim=-1).tolist()  # torch.argmax returns the first max


@torch.no_grad()
def collect_argmax_records(
    model,
    batches: Iterable[tuple[torch.Tensor, torch.Tensor]],
    layers: Sequence[int] | None = None,
) -> Iterator[tuple[int, int, int, list[int]]]:
    """Yield (sample, layer_slot, head, argmax_sequence) records.

    batches: (input_ids, attention_mask) pairs; right-padding assumed.
    layer_slot is the position within the selected layer list, so the
    emitted file is always indexed 0..len(layers)-1.
    """
    model.eval()
    sample = 0
    for input_ids, attention_mask in batches:
        out = model(
            input_ids=input_ids,
            attention_mask=attention_mask,
            output_attentions=True,
        )
        attentions = out.attentions  # tuple per layer: (batch, heads, q, k)
        selected = layers if layers is not None else range(len(attentions))
        batch_size = input_ids.shape[0]
        for b in range(batch_size):
            valid = int(attention_mask[b].sum().item())
            for slot, layer in enumerate(selected):
                layer_attn = attentions[layer][b]  # (heads, q, k)
                for head in range(layer_attn.shape[0]):
                    yield sample + b, slot, head, argmax_rows(layer_attn[head], valid)
        sample += batch_size


def write_htrc(
    records: Iterable[tuple[int, int, int, list[int]]],
    path: str,
    model_name: str,
    num_layers: int,
    num_heads: int,
    num_samples: int,
    granularity: str = "sequence",
) -> None:
    """Append-then-finalize HTRC v1 writer."""
    tmp = path + ".partial"
    count = 0
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(
            json.dumps(
                {
                    "htrc": 1,
                    "model": model_name,
                    "layers": num_layers,
                    "heads": num_heads,
                    "samples": num_samples,
                    "granularity": granularity,
                }
            )
            + "\n"
        )
        for s, l, h, a in records:
            f.write(json.dumps({"s": s, "l": l, "h": h, "a": a}) + "\n")
            count += 1
    expected = num_samples * num_layers * num_heads
    if count != expected:
        raise RuntimeError(f"wrote {count} records, expected {expected}")
    import os

    os.replace(tmp, path)


def extract_traces_from_ids(
    model,
    batches: Iterable[tuple[torch.Tensor, torch.Tensor]],
    path: str,
    model_name: str,
    num_samples: int,
    layers: Sequence[int] | None = None,
    granularity: str = "sequence",
) -> str:
    """Extraction core, independent of tokenizers and dataset loading."""
    cfg = model.config
    num_layers_total = getattr(cfg, "num_hidden_layers", None) or cfg.n_layer
    num_heads = getattr(cfg, "num_attention_heads", None) or cfg.n_head
    selected = list(layers) if layers is not None else list(range(num_layers_total))
    for l in selected:
        if not 0 <= l < num_layers_total:
            raise ValueError(f"layer {l} outside the model's {num_layers_total} layers")
    name = model_name
    if layers is not None:
        name += f"[layers={','.join(map(str, selected))}]"
    write_htrc(
        collect_argmax_records(model, batches, selected),
        path,
        model_name=name,
        num_layers=len(selected),
        num_heads=num_heads,
        num_samples=num_samples,
        granularity=granularity,
    )
    return path


def load_texts(dataset: str, num_samples: int, shuffle_seed: int) -> list[str]:
    import random

    if dataset.startswith("jsonl:"):
        parts = dataset.split(":")
        path, field = parts[1], (parts[2] if len(parts) > 2 else "text")
        texts = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    texts.append(str(json.loads(line)[field]))
    elif dataset.startswith("hf:"):
        from datasets import load_dataset  # optional dependency, needs hub access

        _, name, config, split, *rest = dataset.split(":")
        field = rest[0] if rest else "text"
        ds = load_dataset(name, config or None, split=split)
        texts = [str(r[field]) for r in ds]
    else:
        raise ValueError(f"unsupported dataset spec {dataset!r}")
    if not texts:
        raise ValueError(f"dataset {dataset!r} produced no examples")
    rng = random.Random(shuffle_seed)
    rng.shuffle(texts)
    return texts[:num_samples]


def batches_from_texts(
    tokenizer, texts: list[str], max_length: int, batch_size: int, device: str
) -> Iterator[tuple[torch.Tensor, torch.Tensor]]:
    for i in range(0, len(texts), batch_size):
        enc = tokenizer(
            texts[i : i + batch_size],
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=max_length,
        )
        yield enc["input_ids"].to(device), enc["attention_mask"].to(device)


def extract_traces(job: ExtractionJob, batch_size: int = 8) -> str:
    """End-to-end: load model/tokenizer/dataset, trace, write HTRC."""
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(job.model_id)
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
    model = AutoModel.from_pretrained(job.model_id, attn_implementation="eager")
    model.to(job.device)

    texts = load_texts(job.dataset, job.num_samples, job.shuffle_seed)
    if len(texts) < job.num_samples:
        raise ValueError(
            f"dataset slice has only {len(texts)} examples, need {job.num_samples}"
        )
    return extract_traces_from_ids(
        model,
        batches_from_texts(tokenizer, texts, job.max_length, batch_size, job.device),
        path=job.output_path,
        model_name=job.model_id,
        num_samples=len(texts),
        layers=job.layers,
        granularity=job.granularity,
    )

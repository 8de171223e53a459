"""Masked perplexity evaluation.

Pruned heads are disabled by zeroing their slice of the attention output
just before the output projection, which is equivalent (in exact
arithmetic) to deleting the corresponding columns of that projection.
Perplexity is exp(mean token-level negative log-likelihood) over the slice.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import time
from typing import Iterable

import torch
import torch.nn.functional as F

from .jobs import EvalResult

_PROJ_NAMES = ("c_proj", "o_proj", "out_proj", "dense")


def _attention_projections(model) -> list[torch.nn.Module]:
    """Output projections of each self-attention block, in layer order.

    A block qualifies if it knows its head geometry (``head_dim``) and
    contains one of the conventional output-projection submodule names.
    Cross-attention blocks are excluded by requiring self-attention to come
    first within each decoder layer, which holds for the supported
    (GPT-2-style) decoder-only models.
    """
    projections = []
    for module in model.modules():
        if getattr(module, "head_dim", None) is None:
            continue
        for name in _PROJ_NAMES:
            proj = getattr(module, name, None)
            if isinstance(proj, torch.nn.Module):
                projections.append((module, proj))
                break
    return [proj for _, proj in projections]


@contextlib.contextmanager
def masked_heads(model, head_mask: torch.Tensor | None):
    """Temporarily zero pruned heads' contributions to the residual stream.

    ``head_mask`` is a (layers, heads) multiplier of ones and zeros, as
    produced by :func:`head_mask_from_file`.  Hooks on each attention
    block's output projection zero the per-head slices of its input, so the
    masked heads contribute nothing regardless of attention implementation
    or transformers version.
    """
    if head_mask is None:
        yield
        return
    projections = _attention_projections(model)
    if len(projections) != head_mask.shape[0]:
        raise ValueError(
            f"found {len(projections)} attention blocks but mask has "
            f"{head_mask.shape[0]} layers"
        )
    handles = []
    try:
        for proj, row in zip(projections, head_mask):
            if bool(row.all()):
                continue

            def hook(module, args, row=row):
                x = args[0]
                head_dim = x.shape[-1] // row.shape[0]
                mult = row.to(x.dtype).to(x.device)
                mult = mult.repeat_interleave(head_dim)
                return (x * mult,) + tuple(args[1:])

            handles.append(proj.register_forward_pre_hook(hook))
        yield
    finally:
        for handle in handles:
            handle.remove()


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def head_mask_from_file(mask_path: str, num_layers: int, num_heads: int) -> torch.Tensor:
    """Build a (layers, heads) multiplier tensor from a mask.json file."""
    with open(mask_path, "r", encoding="utf-8") as f:
        obj = json.load(f)
    mask = torch.ones(num_layers, num_heads)
    for entry in obj["pruned"]:
        l, h = int(entry["layer"]), int(entry["head"])
        if not (0 <= l < num_layers and 0 <= h < num_heads):
            raise ValueError(
                f"mask head ({l},{h}) outside model geometry "
                f"{num_layers}x{num_heads}"
            )
        mask[l, h] = 0.0
    return mask


@torch.no_grad()
def perplexity_from_ids(
    model,
    batches: Iterable[tuple[torch.Tensor, torch.Tensor]],
    head_mask: torch.Tensor | None = None,
) -> tuple[float, int, float]:
    """Returns (perplexity, tokens_scored, tokens_per_second).

    Causal LM scoring: each non-padding token after the first is predicted
    from its prefix; padding positions are excluded from the loss.
    """
    model.eval()
    total_nll = 0.0
    total_tokens = 0
    start = time.perf_counter()
    with masked_heads(model, head_mask):
        for input_ids, attention_mask in batches:
            out = model(input_ids=input_ids, attention_mask=attention_mask)
            logits = out.logits[:, :-1, :]
            targets = input_ids[:, 1:]
            target_mask = attention_mask[:, 1:].bool()
            nll = F.cross_entropy(
                logits.reshape(-1, logits.shape[-1]),
                targets.reshape(-1),
                reduction="none",
            ).reshape(targets.shape)
            total_nll += float(nll[target_mask].sum().item())
            total_tokens += int(target_mask.sum().item())
    elapsed = time.perf_counter() - start
    if total_tokens == 0:
        raise ValueError("evaluation slice scored zero tokens")
    ppl = float(torch.exp(torch.tensor(total_nll / total_tokens)).item())
    return ppl, total_tokens, total_tokens / elapsed if elapsed > 0 else 0.0


def eval_perplexity_from_ids(
    model,
    batches: Iterable[tuple[torch.Tensor, torch.Tensor]],
    mask_path: str | None,
    model_id: str = "in-memory",
    dataset: str = "in-memory",
    samples: int = 0,
) -> EvalResult:
    cfg = model.config
    num_layers = getattr(cfg, "num_hidden_layers", None) or cfg.n_layer
    num_heads = getattr(cfg, "num_attention_heads", None) or cfg.n_head
    head_mask = None
    digest = ""
    if mask_path is not None:
        head_mask = head_mask_from_file(mask_path, num_layers, num_heads)
        digest = file_digest(mask_path)
    ppl, tokens, tps = perplexity_from_ids(model, batches, head_mask)
    return EvalResult(
        model_id=model_id,
        mask_digest=digest,
        dataset=dataset,
        samples=samples,
        perplexity=ppl,
        tokens=tokens,
        tokens_per_second=tps,
    )


def eval_perplexity(
    model_id: str,
    mask_path: str | None,
    dataset: str,
    num_samples: int,
    output_path: str | None = None,
    max_length: int = 512,
    batch_size: int = 8,
    shuffle_seed: int = 0,
    device: str = "cpu",
) -> EvalResult:
    """End-to-end: load a causal LM, score a dataset slice under a mask."""
    from transformers import AutoModelForCausalLM, AutoTokenizer

    from .extract import batches_from_texts, load_texts

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
    model = AutoModelForCausalLM.from_pretrained(model_id, attn_implementation="eager")
    model.to(device)

    texts = load_texts(dataset, num_samples, shuffle_seed)
    result = eval_perplexity_from_ids(
        model,
        batches_from_texts(tokenizer, texts, max_length, batch_size, device),
        mask_path,
        model_id=model_id,
        dataset=dataset,
        samples=len(texts),
    )
    if output_path:
        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(result.to_json(), f, indent=2)
            f.write("\n")
    return result

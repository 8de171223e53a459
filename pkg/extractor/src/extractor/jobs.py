"""Job and result records for extraction and evaluation runs."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ExtractionJob:
    """What to trace: which model, which data slice, which layers.

    dataset accepts "jsonl:<path>[:<field>]" (one JSON object per line,
    default field "text") or "hf:<name>:<config>:<split>[:<field>]" when the
    datasets library and hub access are available.  Examples are taken in
    order after shuffling with shuffle_seed, so runs are reproducible.
    """

    model_id: str
    dataset: str
    num_samples: int
    output_path: str
    layers: tuple[int, ...] | None = None  # None = all layers
    granularity: str = "sequence"
    max_length: int = 512
    shuffle_seed: int = 0
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.granularity not in ("sequence", "token"):
            raise ValueError("granularity must be 'sequence' or 'token'")


@dataclass
class EvalResult:
    model_id: str
    mask_digest: str
    dataset: str
    samples: int
    perplexity: float
    tokens: int
    tokens_per_second: float

    def to_json(self) -> dict:
        return {
            "model": self.model_id,
            "mask_digest": self.mask_digest,
            "dataset": self.dataset,
            "samples": self.samples,
            "perplexity": self.perplexity,
            "tokens": self.tokens,
            "tokens_per_second": self.tokens_per_second,
        }

"""Transformer instrumentation: argmax trace extraction and masked perplexity."""

from .evaluate import (
    EvalResult,
    eval_perplexity,
    eval_perplexity_from_ids,
    head_mask_from_file,
    masked_heads,
    perplexity_from_ids,
)
from .extract import (
    argmax_rows,
    collect_argmax_records,
    extract_traces,
    extract_traces_from_ids,
    write_htrc,
)
from .jobs import ExtractionJob

__version__ = "0.1.0"

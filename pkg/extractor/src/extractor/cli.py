"""CLI: extract argmax traces or evaluate masked perplexity."""

from __future__ import annotations

import argparse
import sys

from .evaluate import eval_perplexity
from .extract import extract_traces
from .jobs import ExtractionJob


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="headsynergy-extract")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("extract", help="record argmax attention traces (HTRC v1)")
    pe.add_argument("--model", required=True)
    pe.add_argument("--dataset", required=True,
                    help="jsonl:<path>[:field] or hf:<name>:<config>:<split>[:field]")
    pe.add_argument("--samples", type=int, default=500)
    pe.add_argument("--layers", help="comma list; default all")
    pe.add_argument("--granularity", choices=["sequence", "token"], default="sequence")
    pe.add_argument("--max-length", type=int, default=512)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--device", default="cpu")
    pe.add_argument("--out", required=True)

    pv = sub.add_parser("eval", help="perplexity under a mask.json")
    pv.add_argument("--model", required=True)
    pv.add_argument("--dataset", required=True)
    pv.add_argument("--samples", type=int, default=500)
    pv.add_argument("--mask", help="mask.json; omit for the unpruned baseline")
    pv.add_argument("--max-length", type=int, default=512)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--device", default="cpu")
    pv.add_argument("--out", required=True)

    args = p.parse_args(argv)
    try:
        if args.command == "extract":
            job = ExtractionJob(
                model_id=args.model,
                dataset=args.dataset,
                num_samples=args.samples,
                output_path=args.out,
                layers=tuple(int(x) for x in args.layers.split(",")) if args.layers else None,
                granularity=args.granularity,
                max_length=args.max_length,
                shuffle_seed=args.seed,
                device=args.device,
            )
            extract_traces(job)
            print(f"wrote {args.out}")
        else:
            result = eval_perplexity(
                model_id=args.model,
                mask_path=args.mask,
                dataset=args.dataset,
                num_samples=args.samples,
                output_path=args.out,
                max_length=args.max_length,
                shuffle_seed=args.seed,
                device=args.device,
            )
            print(f"perplexity {result.perplexity:.4f} over {result.tokens} tokens "
                  f"-> {args.out}")
        return 0
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

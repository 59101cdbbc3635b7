"""export-embeddings: run a model over a dataset directory and write the
embedding interchange directory."""

from __future__ import annotations

import argparse
import sys

from .errors import BridgeError, ModelLoadError
from .export import BridgeConfig, export_embeddings


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-embeddings",
        description="Export per-token embeddings for every dataset cell.",
    )
    parser.add_argument("--dataset", required=True, help="dataset directory (manifest.json + signals/)")
    parser.add_argument(
        "--model",
        required=True,
        help="model id: surrogate-transformer[:k=v,...] or moirai:<hf-id>",
    )
    parser.add_argument("--out", required=True, help="output embedding directory")
    parser.add_argument("--device", default="cpu", help="torch device (default: cpu)")
    parser.add_argument("--batch-size", type=int, default=32, help="series per inference batch")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = BridgeConfig(
            model=args.model,
            dataset_dir=args.dataset,
            out_dir=args.out,
            device=args.device,
            batch_size=args.batch_size,
        )
        out_dir = export_embeddings(config)
    except ModelLoadError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    except BridgeError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    print(out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())

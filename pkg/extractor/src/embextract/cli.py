"""embextract: embed an image directory into a .emb file."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExtractError
from .extract import DEFAULT_PATTERNS, ExtractSpec, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embextract",
        description="Run a vision-transformer encoder over an image directory "
                    "and write the .emb embedding format plus item manifest.",
    )
    parser.add_argument("--input", required=True, help="image directory")
    parser.add_argument("--out", required=True, help="output .emb path")
    parser.add_argument("--model", default="vit_b_16")
    parser.add_argument("--pool", choices=("mean", "cls"), default="mean")
    parser.add_argument("--batch", type=int, default=8)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--glob", action="append", default=None,
                        help="file pattern (repeatable); default common image types")
    parser.add_argument("--no-pretrained", action="store_true",
                        help="use seeded-random weights instead of downloading")
    parser.add_argument("--init-seed", type=int, default=0, dest="init_seed")
    parser.add_argument("--image-size", type=int, default=224, dest="image_size")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExtractSpec(
        input_dir=Path(args.input),
        out_path=Path(args.out),
        patterns=tuple(args.glob) if args.glob else DEFAULT_PATTERNS,
        model=args.model,
        pool=args.pool,
        pretrained=not args.no_pretrained,
        init_seed=args.init_seed,
        image_size=args.image_size,
        batch_size=args.batch,
        device=args.device,
    )
    try:
        result = extract(spec)
    except (ExtractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"embedded {result.written} images (dim {result.dim}) -> {result.out_path}; "
          f"skipped {len(result.skipped)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Exporter CLI: corpus jsonl in, embedding file out.

Exit codes: 0 success, 2 usage/validation (including encoder unavailable),
3 I/O.
"""

import argparse
import os
import sys

from .encoders import EncoderUnavailable
from .export import FORMATS, encode_corpus


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ideal-export",
        description="Encode a text corpus and export embedding files.",
    )
    parser.add_argument(
        "--input", required=True, help="corpus jsonl ({id, text} per line)"
    )
    parser.add_argument(
        "--model",
        default="sentence-transformers/all-mpnet-base-v2",
        help="sentence-transformers model name, or hash:<dim> for the "
        "built-in offline encoder (default: "
        "sentence-transformers/all-mpnet-base-v2)",
    )
    parser.add_argument(
        "--batch-size",
        type=int,
        default=32,
        help="records per encoder call; affects throughput only (default: 32)",
    )
    parser.add_argument("--out", required=True, help="output embedding path")
    parser.add_argument(
        "--format",
        default="jsonl",
        choices=FORMATS,
        help="output format (default: jsonl); raw-f32 drops string ids",
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    if not os.path.isfile(args.input):
        print(f"usage error: input file not found: {args.input}", file=sys.stderr)
        return 2
    try:
        n = encode_corpus(
            args.input, args.model, args.batch_size, args.out, args.format
        )
    except (UsageError, EncoderUnavailable, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    print(f"encoded {n} records with {args.model} -> {args.out}")
    return 0


def entry() -> None:
    sys.exit(main())

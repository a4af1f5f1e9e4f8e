"""Command line entry point: ``encoder-adapter <variant> [options]``."""

from __future__ import annotations

import argparse

from .models import variants
from .protocol import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="encoder-adapter",
        description="serve an image encoder over the feature-exchange "
                    "protocol (JSON lines on stdin/stdout)")
    parser.add_argument("variant", nargs="?",
                        help="registry variant, see --list")
    parser.add_argument("--list", action="store_true",
                        help="print known variants and exit")
    parser.add_argument("--device", default=None,
                        help="torch device override (default: per variant)")
    parser.add_argument("--no-normalize", action="store_true",
                        help="skip the model's published channel "
                             "normalization (recorded in provenance)")
    parser.add_argument("--tokens", choices=("full", "cls"), default="full",
                        help="transformer feature map: all tokens or the "
                             "class token only")
    args = parser.parse_args(argv)

    if args.list:
        for name in variants():
            print(name)
        return 0
    if args.variant is None:
        parser.error("a variant is required (or use --list)")
    return serve(args.variant, device=args.device,
                 apply_normalization=not args.no_normalize,
                 tokens=args.tokens)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())

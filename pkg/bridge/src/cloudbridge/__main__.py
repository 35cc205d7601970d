"""CLI entry: `python -m cloudbridge --handler constant:2 --classes 3`."""

from __future__ import annotations

import argparse
import sys

from .handlers import centroid_from_file, constant, identity_completion, lookup_from_file
from .server import BridgeConfig, serve


def build_config(spec: str, classes: int | None) -> BridgeConfig:
    if spec.startswith("constant:"):
        if classes is None:
            raise SystemExit("constant handler needs --classes")
        handler, c = constant(int(spec.split(":", 1)[1]), classes)
        return BridgeConfig(classes=c, handler=handler)
    if spec.startswith("lookup:"):
        handler, c = lookup_from_file(spec.split(":", 1)[1])
        return BridgeConfig(classes=c, handler=handler)
    if spec.startswith("centroid:"):
        handler, c = centroid_from_file(spec.split(":", 1)[1])
        return BridgeConfig(classes=c, handler=handler)
    if spec == "identity-completion":
        return BridgeConfig(classes=0, handler=identity_completion(), mode="complete")
    raise SystemExit(f"unknown handler spec: {spec}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cloudbridge")
    parser.add_argument(
        "--handler",
        required=True,
        help="constant:<label> | lookup:<file> | centroid:<file> | identity-completion",
    )
    parser.add_argument("--classes", type=int, default=None)
    args = parser.parse_args(argv)
    config = build_config(args.handler, args.classes)
    return serve(config, sys.stdin, sys.stdout)


if __name__ == "__main__":
    sys.exit(main())

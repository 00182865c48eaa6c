"""clide-embed: image folder -> EMBF embeddings for the clide pipeline."""

from __future__ import annotations

import argparse
import json
import logging
import sys


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="clide-embed", description=__doc__)
    parser.add_argument("--input", required=True, help="image folder")
    parser.add_argument("--out", required=True, help="output .embf path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--l2-normalize", action="store_true",
                        help="unit-normalize rows before writing (experiment toggle; "
                             "changes likelihoods, not neighbor selection)")
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"])
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(message)s")

    try:
        from .encoder import ClipEncoder
        from .extract import extract

        encoder = ClipEncoder(device=args.device)
        manifest = extract(
            args.input,
            args.out,
            batch_size=args.batch_size,
            encoder=encoder,
            l2_normalize=args.l2_normalize,
        )
    except FileNotFoundError as exc:
        print(json.dumps({"error": "IoError", "message": str(exc)}), file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    logging.getLogger("clide_embed").info(
        "embedded %d images (%d skipped) -> %s", manifest.n, len(manifest.skipped), args.out
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

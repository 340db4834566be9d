"""`vlm-extract`: batch image/prompt embedding extraction.

    vlm-extract --images DIR --backend clip --model openai/clip-vit-base-patch32 \
        --prompts prompts.json --out outdir [--views N] [--strict]

Exit codes: 0 success, 1 runtime failure (bad image in --strict, missing
weights), 2 bad arguments.
"""

import argparse
import logging
import sys
from pathlib import Path

from .backends import BACKENDS, make_backend
from .errors import ConfigError, ExtractorError
from .jobs import ExtractJob, run_job


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vlm-extract",
                                 description="encode images and prompts to FEMB files")
    ap.add_argument("--images", required=True, type=Path,
                    help="image directory or text file listing image paths")
    ap.add_argument("--out", "-o", required=True, type=Path, help="output directory")
    ap.add_argument("--backend", choices=BACKENDS, default="clip")
    ap.add_argument("--model", default=None,
                    help="model identifier, e.g. openai/clip-vit-base-patch32 "
                         "(required for clip/blip)")
    ap.add_argument("--prompts", type=Path, default=None, help="prompt set JSON")
    ap.add_argument("--views", type=int, default=1,
                    help="augmented views per image (flip/grayscale cycle)")
    ap.add_argument("--batch-size", type=int, default=32)
    ap.add_argument("--device", default="cpu")
    ap.add_argument("--strict", action="store_true",
                    help="fail on the first undecodable image instead of skipping")
    ap.add_argument("--raw-norms", action="store_true",
                    help="export raw feature norms instead of L2-normalized rows")
    ap.add_argument("--stub-dim", type=int, default=64,
                    help="feature dim for --backend stub")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.backend in ("clip", "blip") and not args.model:
            raise ConfigError(f"--model is required for backend '{args.backend}'")
        job = ExtractJob(
            images=args.images, out=args.out, backend=args.backend,
            model_id=args.model, prompt_file=args.prompts,
            batch_size=args.batch_size, device=args.device, views=args.views,
            strict=args.strict, raw_norms=args.raw_norms, stub_dim=args.stub_dim,
        )
        backend = make_backend(args.backend, args.model,
                               dim=args.stub_dim, device=args.device)
        result = run_job(job, backend)
    except ConfigError as exc:
        print(f"vlm-extract: {exc}", file=sys.stderr)
        return 2
    except ExtractorError as exc:
        print(f"vlm-extract: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"vlm-extract: {exc}", file=sys.stderr)
        return 1

    note = f", skipped {len(result.skipped)}" if result.skipped else ""
    prompts = f" + {result.prompt_file.name}" if result.prompt_file else ""
    print(f"wrote {len(result.ids)} rows to {result.image_file}{prompts}{note}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

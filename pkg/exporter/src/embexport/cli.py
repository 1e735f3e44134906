"""Command line for the exporter: pretrain the tiny model, render sample
data, and run export jobs."""

from __future__ import annotations

import argparse
import sys

from .dgem import DgemWriteError
from .encoders import ModelLoadError
from .export import (
    ExportError,
    ExportJob,
    export_anchor_pairs,
    export_image_embeddings,
    export_text_embeddings,
)
from .manifest import ManifestError, read_image_manifest, read_text_manifest


def cmd_text(args) -> int:
    entries = read_text_manifest(args.manifest)
    export_text_embeddings(ExportJob(args.model, tuple(entries), "text",
                                     args.out, args.batch_size))
    print(f"wrote {args.out}.emb ({len(entries)} rows)")
    return 0


def cmd_image(args) -> int:
    entries = read_image_manifest(args.manifest)
    export_image_embeddings(ExportJob(args.model, tuple(entries), "image",
                                      args.out, args.batch_size))
    print(f"wrote {args.out}.emb ({len(entries)} rows)")
    return 0


def cmd_anchors(args) -> int:
    cap_out, img_out = export_anchor_pairs(
        args.captions, args.images, args.model, args.out_dir, args.batch_size
    )
    print(f"wrote {cap_out}.emb and {img_out}.emb")
    return 0


def cmd_pretrain_tiny(args) -> int:
    from .pretrain import pretrain_tiny

    path = pretrain_tiny(args.out, dim=args.dim, steps=args.steps, seed=args.seed)
    print(f"saved checkpoint to {path}")
    return 0


def cmd_sample_data(args) -> int:
    from .pretrain import write_sample_dataset

    captions, images = write_sample_dataset(args.out, count=args.count)
    print(f"wrote {captions} and {images}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embexport",
        description="Produce binary embedding stores from a CLIP-style "
        "dual-encoder checkpoint.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("text", help="encode a text manifest (id,text)")
    p.add_argument("manifest")
    p.add_argument("--model", required=True, help="checkpoint directory")
    p.add_argument("--out", required=True, help="output path (writes .emb/.ids)")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_text)

    p = sub.add_parser("image", help="encode an image manifest (id,image_path)")
    p.add_argument("manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_image)

    p = sub.add_parser("anchors", help="export an aligned caption/image anchor set")
    p.add_argument("--captions", required=True, help="caption manifest")
    p.add_argument("--images", required=True, help="image manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("pretrain-tiny",
                       help="contrastively pretrain the bundled tiny dual encoder")
    p.add_argument("--out", required=True, help="checkpoint directory to create")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_pretrain_tiny)

    p = sub.add_parser("sample-data",
                       help="render the procedural caption/image sample set")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=None)
    p.set_defaults(func=cmd_sample_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, ExportError, DgemWriteError, ModelLoadError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: validate, split, train, eval, gradcheck, report.

Exit codes: 0 success, 1 validation failure, 2 I/O or format error,
3 numerical abort.  Diagnostics go to stderr; results to stdout or files.
Every training/eval run writes a manifest echoing the resolved
configuration, the seed, and sha256 digests of its inputs, so runs are
auditable and reproducible from the manifest alone.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from .adapter import CheckpointError, save_checkpoint
from .dataset import (
    DatasetError,
    DatasetFormatError,
    apply_annotation_filter,
    load_annotations,
    load_dataset,
    read_split,
    split_dataset,
    write_split,
)
from .evaluation import (
    MEAN_OF_PAIR_DROPS,
    RATIO_OF_AVERAGES,
    EvaluationError,
    ScoreFormatError,
    build_report,
    pearson_r,
    read_score_csv,
    render_markdown,
    report_csv,
)
from .optim import NumericalError
from .store import StoreError, StoreFormatError, read_store
from .trainer import (
    TrainerConfig,
    TrainingDataError,
    assemble_training_data,
    finite_difference_gradcheck,
    history_csv,
    train,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FORMAT = 2
EXIT_NUMERIC = 3

GRADCHECK_TOLERANCE = 1e-4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    pairs = load_dataset(args.dataset)
    by_dialect = pairs.by_dialect()
    print(f"pairs: {len(pairs)}")
    for dialect in sorted(by_dialect):
        print(f"  {dialect}: {len(by_dialect[dialect])}")
    print(f"polysemy-carrying: {pairs.polysemy_count}")
    print(f"prompt strings: {pairs.prompt_count}")

    for w in pairs.style_warnings:
        print(f"style warning: {w}", file=sys.stderr)
    if pairs.style_warnings:
        print(f"style warnings: {len(pairs.style_warnings)}")

    if args.annotations:
        annotations = load_annotations(args.annotations)
        retained, rejections = apply_annotation_filter(pairs, annotations)
        rejected = sum(len(v) for v in rejections.values())
        print(f"retained {len(retained)} / rejected {rejected}")
        for reason in sorted(rejections):
            print(f"  {reason}: {len(rejections[reason])}")

    if pairs.violations:
        for v in pairs.violations:
            print(f"violation: {v}", file=sys.stderr)
        print(f"invariant violations: {len(pairs.violations)}")
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# split


def cmd_split(args) -> int:
    pairs = load_dataset(args.dataset)
    if pairs.violations:
        for v in pairs.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    ratios = tuple(float(r) for r in args.ratios.split(","))
    assignment = split_dataset(
        pairs, ratios=ratios, seed=args.seed, group_by_lexeme=args.group_by_lexeme
    )
    write_split(assignment, args.out)
    n_train, n_val, n_test = assignment.sizes()
    print(f"wrote {args.out}: train {n_train} / val {n_val} / test {n_test}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def _config_from_args(args) -> TrainerConfig:
    weights = tuple(float(w) for w in args.loss_weights.split(","))
    if len(weights) != 3:
        raise ValueError("--loss-weights needs three comma-separated values")
    return TrainerConfig(
        learning_rate=args.lr,
        beta1=args.beta1,
        beta2=args.beta2,
        epsilon=args.epsilon,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        batch_size=args.batch_size,
        anchor_count=args.anchor_count,
        kl_anchor_batch_size=args.kl_anchor_batch,
        loss_weights=weights,
        temperature=args.temperature,
        use_image_anchors=args.use_image_anchors,
        seed=args.seed,
        lr_min=args.lr_min,
        allow_anchor_truncation=args.allow_anchor_truncation,
    )


def _load_anchor_dir(path: str):
    from .store import AnchorSet

    captions = read_store(os.path.join(path, "captions"))
    images = None
    if os.path.exists(os.path.join(path, "images.emb")):
        images = read_store(os.path.join(path, "images"))
    return AnchorSet(captions, images)


def cmd_train(args) -> int:
    config = _config_from_args(args)
    dataset = load_dataset(args.dataset)
    if dataset.violations:
        for v in dataset.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    assignment = read_split(args.split)
    unknown = [pid for pid in assignment.mapping if pid not in dataset]
    if unknown:
        _err(f"split references pair ids missing from the dataset: {unknown[0]!r} ...")
        return EXIT_VALIDATION

    store = read_store(os.path.join(args.embeddings, "prompts"))
    anchors = _load_anchor_dir(args.anchors)
    try:
        data = assemble_training_data(store, assignment)
    except TrainingDataError as e:
        # incomplete input artifact (e.g. an embedding id the split needs)
        _err(str(e))
        return EXIT_FORMAT
    result = train(config, data, anchors)

    os.makedirs(args.out, exist_ok=True)
    ckpt_path = os.path.join(args.out, "checkpoint.dgad")
    hist_path = os.path.join(args.out, "history.csv")
    save_checkpoint(result.best_adapter, ckpt_path)
    with open(hist_path, "w", encoding="utf-8") as f:
        f.write(history_csv(result))

    manifest = {
        "command": "train",
        "version": __version__,
        "config": {
            "learning_rate": config.learning_rate,
            "beta1": config.beta1,
            "beta2": config.beta2,
            "epsilon": config.epsilon,
            "weight_decay": config.weight_decay,
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "anchor_count": config.anchor_count,
            "kl_anchor_batch_size": config.kl_anchor_batch_size,
            "loss_weights": list(config.loss_weights),
            "temperature": config.temperature,
            "use_image_anchors": config.use_image_anchors,
            "seed": config.seed,
            "lr_min": config.lr_min,
        },
        "inputs": {
            "dataset": _sha256(args.dataset),
            "split": _sha256(args.split),
            "prompt_embeddings": _sha256(os.path.join(args.embeddings, "prompts.emb")),
            "anchor_captions": _sha256(os.path.join(args.anchors, "captions.emb")),
        },
        "best_epoch": result.best_epoch,
        "best_val_total": result.history[result.best_epoch].val.total,
        "notes": (
            "validation total includes all three loss components; "
            "polysemy prompts share their parent pair's split"
        ),
    }
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    print(
        f"trained {config.epochs} epochs; best epoch {result.best_epoch} "
        f"(val total {result.history[result.best_epoch].val.total:.6g}); "
        f"wrote {ckpt_path}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval / report


def cmd_eval(args) -> int:
    scores = read_score_csv(args.scores)
    dataset = load_dataset(args.dataset)
    model = args.model or os.path.splitext(os.path.basename(args.scores))[0]
    report = build_report(
        scores, dataset, metric=args.metric, style=args.style, mode=args.mode,
        model=model,
    )
    markdown = render_markdown([report])
    csv_text = report_csv([report])
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.csv"), "w", encoding="utf-8") as f:
            f.write(csv_text)
        with open(os.path.join(args.out, "report.md"), "w", encoding="utf-8") as f:
            f.write(markdown)
        print(f"wrote {os.path.join(args.out, 'report.csv')}")
    else:
        print(markdown, end="")
    if report.incomplete_pairs:
        print(f"incomplete pairs skipped: {report.incomplete_pairs}", file=sys.stderr)
    if report.excluded_pairs:
        print(f"zero-performance pairs excluded: {report.excluded_pairs}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    dataset = load_dataset(args.dataset)
    metrics = [m.strip().lower() for m in args.metrics.split(",")]
    reports = []
    overall: dict[str, dict[str, float]] = {m: {} for m in metrics}
    for path in args.scores:
        scores = read_score_csv(path)
        model = os.path.splitext(os.path.basename(path))[0]
        for metric in metrics:
            try:
                rep = build_report(
                    scores, dataset, metric=metric, style=args.style,
                    mode=args.mode, model=model,
                )
            except EvaluationError:
                continue
            reports.append(rep)
            overall[metric][model] = rep.overall_drop
    if not reports:
        raise EvaluationError("no complete pairs")

    markdown = render_markdown(reports)
    lines = [markdown]
    for i, m1 in enumerate(metrics):
        for m2 in metrics[i + 1:]:
            shared = sorted(set(overall[m1]) & set(overall[m2]))
            if len(shared) >= 2:
                r = pearson_r(
                    [overall[m1][s] for s in shared],
                    [overall[m2][s] for s in shared],
                )
                lines.append(
                    f"pearson r({m1}, {m2}) over {len(shared)} models: {r:.3f}"
                )
    text = "\n".join(lines)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.csv"), "w", encoding="utf-8") as f:
            f.write(report_csv(reports))
        with open(os.path.join(args.out, "report.md"), "w", encoding="utf-8") as f:
            f.write(text + "\n")
        print(f"wrote {os.path.join(args.out, 'report.md')}")
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gradcheck


def cmd_gradcheck(args) -> int:
    result = finite_difference_gradcheck(
        dim=args.dim,
        n_pairs=args.pairs,
        m_anchors=args.anchors,
        seed=args.seed,
        _corrupt=args.corrupt,
    )
    for comp in sorted(result.per_component):
        print(f"{comp}: max relative error {result.per_component[comp]:.3e}")
    print(f"max relative error: {result.max_rel_error:.3e}")
    if result.max_rel_error < GRADCHECK_TOLERANCE:
        print(f"PASS (< {GRADCHECK_TOLERANCE:g})")
        return EXIT_OK
    print(f"FAIL (>= {GRADCHECK_TOLERANCE:g})", file=sys.stderr)
    return EXIT_VALIDATION


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialectkit",
        description="Dialect-robustness toolkit: corpus validation, adapter "
        "training, gradient checking, and benchmark drop reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus file and print counts")
    p.add_argument("dataset", help="line-delimited JSON corpus file")
    p.add_argument("--annotations", help="annotation file for the two-question filter")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("split", help="deterministic train/val/test split")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="output split file (pair_id<TAB>split)")
    p.add_argument("--ratios", default="0.8,0.1,0.1",
                   help="train,val,test ratios (default 0.8,0.1,0.1)")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed (default 0)")
    p.add_argument("--group-by-lexeme", action="store_true",
                   help="keep pairs sharing a standard lexeme in one split")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the linear adapter on frozen embeddings")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True, help="split file from the split command")
    p.add_argument("--embeddings", required=True,
                   help="directory holding prompts.emb/prompts.ids")
    p.add_argument("--anchors", required=True,
                   help="directory holding captions.emb/.ids and optional images.emb/.ids")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--lr", type=float, default=1e-4, help="learning rate (default 1e-4)")
    p.add_argument("--beta1", type=float, default=0.9, help="Adam beta1 (default 0.9)")
    p.add_argument("--beta2", type=float, default=0.999, help="Adam beta2 (default 0.999)")
    p.add_argument("--epsilon", type=float, default=1e-8, help="Adam epsilon (default 1e-8)")
    p.add_argument("--weight-decay", type=float, default=0.0,
                   help="decoupled weight decay (default 0)")
    p.add_argument("--epochs", type=int, default=30, help="training epochs (default 30)")
    p.add_argument("--batch-size", type=int, default=32, help="pairs per step (default 32)")
    p.add_argument("--anchor-count", type=int, default=1024,
                   help="reference anchors for the KL term (default 1024)")
    p.add_argument("--kl-anchor-batch", type=int, default=None,
                   help="anchors per step for the KL term (default: all)")
    p.add_argument("--loss-weights", default="1,1,1",
                   help="dialect,polysemy,kl weights (default 1,1,1)")
    p.add_argument("--temperature", type=float, default=1.0,
                   help="surrogate-logit temperature (default 1.0)")
    p.add_argument("--use-image-anchors", action="store_true",
                   help="compare against anchor image rows instead of captions")
    p.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    p.add_argument("--lr-min", type=float, default=0.0,
                   help="annealing floor (default 0)")
    p.add_argument("--allow-anchor-truncation", action="store_true",
                   help="use the first anchor-count rows of a larger anchor set")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-dialect drop report for one score file")
    p.add_argument("scores", help="score CSV (pair_id,variant,metric,sample_index,score)")
    p.add_argument("--dataset", required=True)
    p.add_argument("--metric", default="vqascore", help="metric name (default vqascore)")
    p.add_argument("--style", default="all", choices=["concise", "detailed", "all"],
                   help="prompt style scope (default all)")
    p.add_argument("--mode", default=RATIO_OF_AVERAGES,
                   choices=[RATIO_OF_AVERAGES, MEAN_OF_PAIR_DROPS],
                   help="aggregation mode (default ratio_of_averages)")
    p.add_argument("--model", default=None, help="model label (default: file stem)")
    p.add_argument("--out", default=None, help="directory for report.csv/report.md")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="multi-model drop table plus metric correlations")
    p.add_argument("scores", nargs="+", help="one score CSV per model")
    p.add_argument("--dataset", required=True)
    p.add_argument("--metrics", default="vqascore,clipscore",
                   help="comma-separated metrics (default vqascore,clipscore)")
    p.add_argument("--style", default="all", choices=["concise", "detailed", "all"])
    p.add_argument("--mode", default=RATIO_OF_AVERAGES,
                   choices=[RATIO_OF_AVERAGES, MEAN_OF_PAIR_DROPS])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gradcheck", help="finite-difference check of the loss gradients")
    p.add_argument("--dim", type=int, default=8, help="embedding dimension (default 8)")
    p.add_argument("--pairs", type=int, default=4, help="prompt pairs (default 4)")
    p.add_argument("--anchors", type=int, default=6, help="anchor count (default 6)")
    p.add_argument("--seed", type=int, default=7, help="instance seed (default 7)")
    p.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetFormatError, ScoreFormatError, StoreFormatError, CheckpointError) as e:
        _err(str(e))
        return EXIT_FORMAT
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        _err(f"{e.filename}: {e.strerror}" if e.filename else str(e))
        return EXIT_FORMAT
    except (DatasetError, EvaluationError, TrainingDataError) as e:
        _err(str(e))
        return EXIT_VALIDATION
    except (StoreError, ValueError) as e:
        _err(str(e))
        return EXIT_VALIDATION
    except NumericalError as e:
        _err(str(e))
        return EXIT_NUMERIC
    except FloatingPointError as e:  # numpy error states, if enabled
        _err(str(e))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point for the full pipeline.

Subcommands: gen, ingest, train, cv, grid, stats, report. Every output
lands under --out, carries the config fingerprint and seed in a comment
header, and contains nothing time- or host-dependent, so identical
invocations produce byte-identical files.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from .config import (
    ArchKind,
    GraphType,
    ModelConfig,
    SchedulerKind,
    TrainConfig,
    config_fingerprint,
)
from .evaluate import (
    GridSpec,
    RunSummary,
    cross_validate,
    read_fold_csv,
    run_grid,
    stratified_folds,
    write_fold_csv,
    write_summary_csv,
)
from .features import FeatureMode
from .graphs import ValidationError, load_dataset, store_dataset
from .model import save_params
from .stats import compare_groups, top_k_by_group, write_boxplot_csv, write_test_report
from .synth import GenSpec, SignalMode, generate
from .train import train_run, write_run_log

GRAPH_CHOICES = [g.value for g in GraphType]
FEATURE_CHOICES = [f.value for f in FeatureMode]
ARCH_CHOICES = [a.value for a in ArchKind]
SCHEDULER_CHOICES = [s.value for s in SchedulerKind]


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", choices=GRAPH_CHOICES, required=True, help="input modality")
    p.add_argument("--feature", choices=FEATURE_CHOICES, default="ldp+entropy",
                   help="node feature mode (default: %(default)s)")
    p.add_argument("--arch", choices=ARCH_CHOICES, default="gcn",
                   help="encoder architecture (default: %(default)s)")
    p.add_argument("--layers", type=int, default=4,
                   help="propagation steps per branch (default: %(default)s)")
    p.add_argument("--fc", type=int, default=2,
                   help="fully connected head layers (default: %(default)s)")
    p.add_argument("--dim", type=int, default=32,
                   help="hidden dimension (default: %(default)s)")
    p.add_argument("--scheduler", choices=SCHEDULER_CHOICES, default="onecycle",
                   help="learning-rate schedule (default: %(default)s)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=100, help="default: %(default)s")
    p.add_argument("--batch-size", type=int, default=32, help="default: %(default)s")
    p.add_argument("--lr", type=float, default=1e-3,
                   help="peak (onecycle) or starting (plateau) rate (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="default: %(default)s")


def _model_config(args: argparse.Namespace) -> ModelConfig:
    return ModelConfig(
        graph_type=GraphType.parse(args.graph),
        feature=FeatureMode.parse(args.feature),
        model_arch=ArchKind.parse(args.arch),
        layer=args.layers,
        fc=args.fc,
        dim=args.dim,
        scheduler=SchedulerKind.parse(args.scheduler),
    )


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, base_lr=args.lr, seed=args.seed
    )


def _parse_list(text: str, parse, flag: str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValidationError(f"{flag} must list at least one value")
    return tuple(parse(t) for t in items)


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    def parse(t: str) -> int:
        try:
            return int(t)
        except ValueError:
            raise ValidationError(f"{flag}: {t!r} is not an integer") from None

    return _parse_list(text, parse, flag)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualgraph",
        description="Dual-modality graph classification: data, training, "
        "cross-validation, and statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic labeled dataset")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--mode", choices=[m.value for m in SignalMode],
                   default="complementary", help="where the class signal lives "
                   "(default: %(default)s)")
    p.add_argument("--balance", type=float, default=0.5,
                   help="malicious fraction (default: %(default)s)")
    p.add_argument("--strength", type=float, default=0.8,
                   help="cue strength in [0, 1] (default: %(default)s)")
    p.add_argument("--no-entropy-shift", action="store_true",
                   help="draw both classes' entropy from the same distribution")
    p.add_argument("--seed", type=int, default=0, help="default: %(default)s")
    p.add_argument("--out", required=True, help="output dataset directory")

    p = sub.add_parser("ingest", help="validate a dataset, optionally re-store it")
    p.add_argument("--data", required=True, help="dataset directory to load")
    p.add_argument("--out", help="write the dataset back in canonical form")

    p = sub.add_parser("train", help="train one model on a fixed 80/20 split")
    p.add_argument("--data", required=True)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="directory for run log and checkpoint")

    p = sub.add_parser("cv", help="5-fold cross-validate one configuration")
    p.add_argument("--data", required=True)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--folds", type=int, default=5, help="default: %(default)s")
    p.add_argument("--out", required=True)

    p = sub.add_parser("grid", help="cross-validate a grid of configurations")
    p.add_argument("--data", required=True)
    p.add_argument("--graphs", default="dual,merged,fcg,pcg",
                   help="comma-separated (default: %(default)s)")
    p.add_argument("--features", default="ldp+entropy",
                   help="comma-separated (default: %(default)s)")
    p.add_argument("--archs", default="gcn", help="comma-separated (default: %(default)s)")
    p.add_argument("--layers", default="4", help="comma-separated (default: %(default)s)")
    p.add_argument("--fcs", default="2", help="comma-separated (default: %(default)s)")
    p.add_argument("--dims", default="32", help="comma-separated (default: %(default)s)")
    p.add_argument("--schedulers", default="onecycle",
                   help="comma-separated (default: %(default)s)")
    _add_train_flags(p)
    p.add_argument("--folds", type=int, default=5, help="default: %(default)s")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel grid cells (default: %(default)s)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="rank-based group comparison over run outputs")
    p.add_argument("--runs", required=True, help="directory holding folds-*.csv files")
    p.add_argument("--group-by", choices=["graph_type", "feature"], default="graph_type")
    p.add_argument("--top-k", type=int, default=100, help="default: %(default)s")
    p.add_argument("--source", choices=["means", "folds"], default="means",
                   help="score pool per group (default: %(default)s)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="merge run outputs into one ranked summary")
    p.add_argument("--runs", required=True, help="directory holding folds-*.csv files")
    p.add_argument("--top", type=int, default=20,
                   help="rows to print to stdout (default: %(default)s)")
    p.add_argument("--out", required=True)
    return parser


def _ensure_out(path: str) -> None:
    os.makedirs(path, exist_ok=True)


def _cmd_gen(args) -> int:
    spec = GenSpec(
        n_samples=args.n,
        balance=args.balance,
        seed=args.seed,
        mode=SignalMode.parse(args.mode),
        strength=args.strength,
        entropy_shift=not args.no_entropy_shift,
    )
    dataset = generate(spec)
    _ensure_out(args.out)
    store_dataset(dataset, args.out)
    print(f"wrote {len(dataset.samples)} samples to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    dataset = load_dataset(args.data)
    if args.out:
        _ensure_out(args.out)
        store_dataset(dataset, args.out)
        print(f"loaded {len(dataset.samples)} samples, canonicalized into {args.out}")
    else:
        print(f"loaded {len(dataset.samples)} samples from {args.data}")
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    config = _model_config(args)
    train_cfg = _train_config(args)
    folds = stratified_folds(dataset.labels(), 5, train_cfg.seed)
    held = set(folds[0])
    train_samples = [s for i, s in enumerate(dataset.samples) if i not in held]
    val_samples = [dataset.samples[i] for i in folds[0]]
    result = train_run(train_samples, val_samples, config, train_cfg)
    _ensure_out(args.out)
    fp = config_fingerprint(config, train_cfg)
    log_path = os.path.join(args.out, f"run-{fp}.csv")
    ckpt_path = os.path.join(args.out, f"model-{fp}.ckpt")
    write_run_log(log_path, result.records, config, train_cfg)
    save_params(ckpt_path, result.best_params, fp)
    print(f"best epoch {result.best_epoch} val_f1 {result.best_f1!r}")
    print(f"wrote {log_path} and {ckpt_path}")
    return 0


def _cmd_cv(args) -> int:
    dataset = load_dataset(args.data)
    config = _model_config(args)
    train_cfg = _train_config(args)
    summary = cross_validate(dataset, config, train_cfg, k=args.folds)
    _ensure_out(args.out)
    fp = config_fingerprint(config, train_cfg)
    comment = f"config={fp} seed={train_cfg.seed}"
    summary_path = os.path.join(args.out, f"summary-{fp}.csv")
    folds_path = os.path.join(args.out, f"folds-{fp}.csv")
    write_summary_csv(summary_path, [summary], comment)
    write_fold_csv(folds_path, [summary], comment)
    print(f"mean f1 {summary.mean!r} over {args.folds} folds")
    print(f"wrote {summary_path} and {folds_path}")
    return 0


def _cmd_grid(args) -> int:
    dataset = load_dataset(args.data)
    grid = GridSpec(
        graph_types=_parse_list(args.graphs, GraphType.parse, "--graphs"),
        features=_parse_list(args.features, FeatureMode.parse, "--features"),
        archs=_parse_list(args.archs, ArchKind.parse, "--archs"),
        layers=_parse_int_list(args.layers, "--layers"),
        fcs=_parse_int_list(args.fcs, "--fcs"),
        dims=_parse_int_list(args.dims, "--dims"),
        schedulers=_parse_list(args.schedulers, SchedulerKind.parse, "--schedulers"),
    )
    train_cfg = _train_config(args)
    if args.jobs < 1:
        raise ValidationError(f"--jobs must be >= 1, got {args.jobs}")
    summaries = run_grid(dataset, grid, train_cfg, k=args.folds, jobs=args.jobs)
    _ensure_out(args.out)
    payload = json.dumps(
        {
            "grid": [c.describe() for c in grid.cells()],
            "seed": train_cfg.seed,
            "epochs": train_cfg.epochs,
            "batch_size": train_cfg.batch_size,
            "base_lr": train_cfg.base_lr,
            "folds": args.folds,
        },
        sort_keys=True,
        default=str,
    )
    fp = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
    comment = f"grid={fp} seed={train_cfg.seed}"
    summary_path = os.path.join(args.out, f"summary-grid-{fp}.csv")
    folds_path = os.path.join(args.out, f"folds-grid-{fp}.csv")
    write_summary_csv(summary_path, summaries, comment)
    write_fold_csv(folds_path, summaries, comment)
    print(f"ran {len(summaries)} configurations")
    print(f"wrote {summary_path} and {folds_path}")
    return 0


def _load_runs(runs_dir: str) -> list[RunSummary]:
    names = sorted(
        n for n in os.listdir(runs_dir) if n.startswith("folds-") and n.endswith(".csv")
    )
    if not names:
        raise ValidationError(f"no folds-*.csv files under {runs_dir}")
    summaries: list[RunSummary] = []
    for name in names:
        summaries.extend(read_fold_csv(os.path.join(runs_dir, name)))
    return summaries


def _cmd_stats(args) -> int:
    summaries = _load_runs(args.runs)
    groups = top_k_by_group(summaries, args.group_by, args.top_k, args.source)
    if len(groups) < 2:
        raise ValidationError(
            f"grouping by {args.group_by} found {len(groups)} group(s); need >= 2"
        )
    report = compare_groups(groups)
    _ensure_out(args.out)
    comment = f"group_by={args.group_by} top_k={args.top_k} source={args.source}"
    report_path = os.path.join(args.out, f"tests-{args.group_by}.csv")
    box_path = os.path.join(args.out, f"boxplot-{args.group_by}.csv")
    write_test_report(report_path, report, comment)
    write_boxplot_csv(box_path, groups, comment)
    print(f"omnibus H {float(report.omnibus_h):.6g} p {float(report.omnibus_p):.6g}")
    print(f"wrote {report_path} and {box_path}")
    return 0


def _cmd_report(args) -> int:
    summaries = _load_runs(args.runs)
    ranked = sorted(summaries, key=lambda s: -s.mean)
    _ensure_out(args.out)
    out_path = os.path.join(args.out, "report-summary.csv")
    write_summary_csv(out_path, ranked, f"merged_from={args.runs}")
    print("graph_type,feature,model_arch,layer,fc,dim,scheduler,mean,std,min,median,max")
    for s in ranked[: args.top]:
        c = s.config
        print(
            f"{c.graph_type.value},{c.feature.value},{c.model_arch.value},"
            f"{c.layer},{c.fc},{c.dim},{c.scheduler.value},"
            f"{s.mean:.4f},{s.std:.4f},{s.min:.4f},{s.median:.4f},{s.max:.4f}"
        )
    print(f"wrote {out_path}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "cv": _cmd_cv,
    "grid": _cmd_grid,
    "stats": _cmd_stats,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

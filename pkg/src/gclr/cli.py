"""Command-line front end.

Subcommands: generate-data, train, eval, gradcheck, oracle-compare, sweep.
Exit codes: 0 success, 2 configuration error, 3 numeric abort.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_mod
from . import data as data_mod
from . import experiment
from .config import ExperimentConfig, load_config
from .errors import ConfigError, GclrError, NumericAbortError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="config file path")
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    parser.add_argument("--out", type=str, default="runs/out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gclr",
        description="Bimodal contrastive objectives on synthetic paired data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="generate and save a dataset file")
    _common_flags(p)
    p.add_argument("--dataset-out", type=str, default=None,
                   help="dataset file path (default: <out>/dataset.gcld)")

    p = sub.add_parser("train", help="train one configuration")
    _common_flags(p)
    p.add_argument("--resume", type=str, default=None, help="checkpoint to resume from")

    p = sub.add_parser("eval", help="evaluate a checkpoint on the held-out split")
    _common_flags(p)
    p.add_argument("--checkpoint", type=str, required=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    _common_flags(p)
    p.add_argument("--probes", type=int, default=200)

    p = sub.add_parser("oracle-compare", help="exact-objective identity checks")
    _common_flags(p)

    p = sub.add_parser("sweep", help="train a variant x optimizer grid")
    _common_flags(p)
    p.add_argument("--variants", type=str, default="sogclr,amclr",
                   help="comma-separated variant list")
    p.add_argument("--optimizers", type=str, default="adamw",
                   help="comma-separated optimizer list")
    p.add_argument("--seeds", type=str, default=None,
                   help="comma-separated seeds (default: the run seed)")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg.validate()


def cmd_generate_data(args) -> int:
    cfg = resolve_config(args)
    dataset = data_mod.generate(cfg.gen_config())
    out = Path(args.dataset_out) if args.dataset_out else Path(args.out) / "dataset.gcld"
    out.parent.mkdir(parents=True, exist_ok=True)
    data_mod.save(dataset, out)
    print(f"wrote {out} (n={dataset.n}, classes={dataset.class_count})")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    arts = experiment.train(cfg, args.out, resume_from=args.resume)
    final = [r for r in arts.metrics if r.epoch == cfg.epochs - 1]
    for r in final:
        print(f"{r.task}: top1={r.top1:.4f} top5={r.top5:.4f} top10={r.top10:.4f}")
    print(f"artifacts in {arts.out_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    ck = ckpt_mod.load(args.checkpoint)
    dataset = experiment.load_or_generate_dataset(cfg)
    _, eval_idx = experiment.split_indices(cfg, dataset.n)
    eval_ds = dataset.take(eval_idx)
    prototypes = (
        data_mod.make_class_prototypes(dataset)
        if dataset.gen_config is not None
        else None
    )
    meta = experiment.RunMeta(cfg.variant, cfg.optimizer, cfg.seed, max(ck.epoch - 1, 0))
    records = experiment.evaluate_split(ck.params, eval_ds, prototypes, meta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = experiment.metrics_csv_rows(records)
    (out / "eval_metrics.csv").write_text(
        "\n".join([experiment.METRICS_CSV_HEADER] + rows) + "\n"
    )
    for r in records:
        print(f"{r.task}: top1={r.top1:.4f} top5={r.top5:.4f} top10={r.top10:.4f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = resolve_config(args)
    report = experiment.gradcheck(cfg, n_probe=args.probes)
    label = "2-layer tanh" if report.hidden else "linear"
    print(f"gradcheck ({label} encoders, {args.probes} probes per variant)")
    for e in report.entries:
        print(
            f"  {e.variant:8s} max rel err {e.max_rel_err:.3e} "
            f"(worst coordinate {e.worst_coordinate})"
        )
    print(f"elapsed {report.elapsed_seconds:.2f}s")
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    cfg = resolve_config(args)
    report = experiment.oracle_compare(cfg)
    print(f"n={report.n} batch_size={report.batch_size}")
    print(f"exact objective          {report.exact_objective!r}")
    print(f"mean batch loss          {report.mean_batch_loss!r}")
    print(f"objective rel diff       {report.objective_rel_diff:.3e}")
    print(f"gradient rel err (g=1)   {report.gradient_rel_err:.3e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    optimizer_names = [o.strip() for o in args.optimizers.split(",") if o.strip()]
    seeds = (
        [int(s) for s in args.seeds.split(",")] if args.seeds else [cfg.seed]
    )
    result = experiment.sweep(cfg, variants, optimizer_names, seeds, args.out)
    print(f"wrote {Path(args.out) / 'sweep.csv'} ({len(result.rows)} metric rows)")
    for cell in result.summary["cells"]:
        std = f" +/- {cell['top1_std']:.2f}" if cell["seeds"] > 1 else ""
        print(
            f"  {cell['variant']:8s} {cell['optimizer']:8s} {cell['task']:15s} "
            f"top1 {cell['top1_mean']:.2f}{std}"
        )
    for cell, err in result.failures:
        print(f"  FAILED {cell}: {err}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "generate-data": cmd_generate_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "oracle-compare": cmd_oracle_compare,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NumericAbortError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        if exc.batch_indices:
            print(f"offending batch indices: {exc.batch_indices}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GclrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

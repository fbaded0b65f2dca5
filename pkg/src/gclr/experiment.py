"""Training loop, verification harnesses, and the sweep comparison runner.

Every run is a pure function of (config, seed): shuffling and augmentation
draw from counter-keyed streams, so identical configs give byte-identical
loss logs, and a checkpoint (parameters, optimizer moments, estimator state,
loop counters) resumes the interrupted trajectory bit-exactly.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import checkpoint as ckpt_mod
from . import data as data_mod
from . import encoders, estimator, evaluation, objectives, optimizers
from .config import ESTIMATOR_VARIANTS, ExperimentConfig, serialize_config
from .errors import ConfigError, NumericAbortError, OracleScaleError
from .evaluation import MetricsRecord, RunMeta
from .numerics import Rng

METRICS_CSV_HEADER = "variant,optimizer,task,seed,epoch,top1,top5,top10,mean"


def build_arch(config: ExperimentConfig) -> encoders.EncoderArch:
    return encoders.EncoderArch(
        d_img=config.d_img,
        d_txt=config.d_txt,
        embed_dim=config.embed_dim,
        hidden_dim=config.hidden_dim if config.hidden_dim > 0 else None,
        normalize=config.normalize,
    )


def build_optimizer(config: ExperimentConfig, arch: encoders.EncoderArch) -> optimizers.OptimizerState:
    n = encoders.param_count(arch)
    if config.optimizer == "momentum":
        return optimizers.momentum_state(n, lr=config.lr, beta=config.momentum_beta)
    if config.optimizer == "adamw":
        return optimizers.adamw_state(
            n, lr=config.lr, beta1=config.beta1, beta2=config.beta2,
            eps=config.eps, weight_decay=config.weight_decay,
        )
    return optimizers.adamp_state(
        n, encoders.scale_invariant_groups(arch), lr=config.lr,
        beta1=config.beta1, beta2=config.beta2, eps=config.eps,
        weight_decay=config.weight_decay,
    )


def load_or_generate_dataset(config: ExperimentConfig) -> data_mod.BimodalDataset:
    if config.dataset_path:
        return data_mod.load(config.dataset_path)
    return data_mod.generate(config.gen_config())


def split_indices(config: ExperimentConfig, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint (train, eval) index sets, fixed by the dataset seed."""
    n_eval = int(round(n * config.eval_fraction))
    if not (0 < n_eval < n):
        raise ConfigError(f"eval_fraction {config.eval_fraction} leaves no split at n={n}")
    perm = Rng(config.data_seed).child("split").permutation(n)
    return np.sort(perm[n_eval:]), np.sort(perm[:n_eval])


def evaluate_split(
    params: encoders.EncoderParams,
    eval_ds: data_mod.BimodalDataset,
    prototypes: np.ndarray | None,
    meta: RunMeta,
) -> list[MetricsRecord]:
    """Retrieval in both directions plus zero-shot against class prototypes."""
    emb_img, _ = encoders.forward(params, eval_ds.images, "image")
    emb_txt, _ = encoders.forward(params, eval_ds.texts, "text")
    truth = np.arange(eval_ds.n)
    records = [
        evaluation.retrieval_topk(emb_img, emb_txt, truth, "retrieval_text", meta=meta),
        evaluation.retrieval_topk(emb_txt, emb_img, truth, "retrieval_image", meta=meta),
    ]
    if prototypes is not None:
        emb_proto, _ = encoders.forward(params, prototypes, "text")
        records.append(
            evaluation.zero_shot_classify(emb_img, emb_proto, eval_ds.labels, meta=meta)
        )
    return records


def metrics_csv_rows(records: list[MetricsRecord]) -> list[str]:
    rows = []
    for r in records:
        mean = "" if r.mean is None else f"{r.mean:.4f}"
        rows.append(
            f"{r.variant},{r.optimizer},{r.task},{r.seed},{r.epoch},"
            f"{r.top1:.4f},{r.top5:.4f},{r.top10:.4f},{mean}"
        )
    return rows


@dataclass
class RunArtifacts:
    out_dir: str
    config_text: str
    metrics: list[MetricsRecord]
    loss_rows: list[str]  # includes the header row
    checkpoint_path: str
    final_params: encoders.EncoderParams
    stopped_early: bool = False


def _loss_header(variant: str, kappa: int) -> str:
    cols = ["global_step", "epoch", "step_in_epoch", "F_total"]
    if variant in ESTIMATOR_VARIANTS:
        cols += [f"F_{k + 1}" for k in range(kappa)]
    return ",".join(cols)


def train(
    config: ExperimentConfig,
    out_dir,
    resume_from: str | None = None,
    stop_after_step: int | None = None,
) -> RunArtifacts:
    """Run the full training protocol and write all artifacts to ``out_dir``.

    ``stop_after_step`` halts after that many optimizer steps (writing a
    checkpoint), and ``resume_from`` continues a halted run bit-exactly.
    """
    config.validate()
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_text = serialize_config(config)

    dataset = load_or_generate_dataset(config)
    train_idx, eval_idx = split_indices(config, dataset.n)
    train_ds = dataset.take(train_idx)
    eval_ds = dataset.take(eval_idx)
    prototypes = (
        data_mod.make_class_prototypes(dataset)
        if dataset.gen_config is not None
        else None
    )
    arch = build_arch(config)
    plan = config.augment_plan()
    exclude = config.exclude_positive
    uses_estimator = config.variant in ESTIMATOR_VARIANTS
    root_rng = Rng(config.seed)

    if resume_from is not None:
        ck = ckpt_mod.load(resume_from)
        if ck.config_text != config_text:
            raise ConfigError("checkpoint was written under a different config")
        params, opt_state, est_state = ck.params, ck.optimizer, ck.estimator
        start_epoch, start_step = ck.epoch, ck.step_in_epoch
        global_step = ck.global_step
    else:
        params = encoders.init(arch, seed=config.seed)
        opt_state = build_optimizer(config, arch)
        est_state = (
            estimator.init_state(train_ds.n, config.gamma) if uses_estimator else None
        )
        start_epoch, start_step, global_step = 0, 0, 0

    m = config.batch_size
    steps_per_epoch = math.ceil(train_ds.n / m)
    if exclude and train_ds.n % m == 1:
        raise ConfigError(
            "the trailing batch would hold a single sample, which the "
            "exclusive denominator cannot contrast; adjust batch_size"
        )
    kappa = (
        len(objectives.enumerate_combinations(config.omega, config.variant))
        if uses_estimator
        else 0
    )
    loss_rows = [_loss_header(config.variant, kappa)]
    metrics: list[MetricsRecord] = []
    stopped = False

    def write_artifacts() -> str:
        (out / "config_resolved.cfg").write_text(config_text)
        (out / "loss_log.csv").write_text("\n".join(loss_rows) + "\n")
        (out / "metrics.csv").write_text(
            "\n".join([METRICS_CSV_HEADER] + metrics_csv_rows(metrics)) + "\n"
        )
        with open(out / "metrics.jsonl", "w") as fh:
            for r in metrics:
                fh.write(json.dumps(r.to_json_dict(), sort_keys=True) + "\n")
        ck_path = out / "checkpoint.gclc"
        ckpt_mod.save(
            ckpt_mod.Checkpoint(
                params=params,
                optimizer=opt_state,
                estimator=est_state,
                epoch=epoch_next,
                step_in_epoch=step_next,
                global_step=global_step,
                config_text=config_text,
            ),
            ck_path,
        )
        return str(ck_path)

    epoch_next, step_next = start_epoch, start_step
    for epoch in range(start_epoch, config.epochs):
        order = root_rng.child("shuffle", epoch).permutation(train_ds.n)
        first_step = start_step if epoch == start_epoch else 0
        for step_i in range(first_step, steps_per_epoch):
            batch_idx = order[step_i * m : (step_i + 1) * m]
            images = train_ds.images[batch_idx]
            texts = train_ds.texts[batch_idx]
            if uses_estimator:
                if config.variant == "sogclr":
                    m_t, est_state, report = estimator.sogclr_step(
                        params, images, texts, batch_idx, est_state, config.tau,
                        exclude=exclude,
                    )
                elif config.variant == "amclr":
                    m_t, est_state, report = estimator.amclr_step(
                        params, images, texts, batch_idx, est_state, config.tau,
                        plan, epoch, root_rng, exclude=exclude,
                    )
                else:
                    m_t, est_state, report = estimator.xamclr_step(
                        params, images, texts, batch_idx, est_state, config.tau,
                        plan, epoch, root_rng, exclude=exclude,
                    )
                loss_value = float(report.breakdown.total)
                extra = [repr(float(v)) for v in report.breakdown.values()]
                grad = m_t
            else:
                loss_value, grad = objectives.variant_batch_loss_and_gradient(
                    params, [images], [texts], config.tau, config.variant
                )
                extra = []
            if not (np.isfinite(loss_value) and np.isfinite(grad).all()):
                dump = {
                    "epoch": epoch,
                    "step_in_epoch": step_i,
                    "global_step": global_step,
                    "batch_indices": batch_idx.tolist(),
                    "loss": None if not np.isfinite(loss_value) else loss_value,
                }
                (out / "numeric_abort.json").write_text(json.dumps(dump, indent=2))
                raise NumericAbortError(
                    f"non-finite loss at epoch {epoch} step {step_i}; "
                    f"diagnostics in {out / 'numeric_abort.json'}",
                    batch_indices=batch_idx,
                )
            w = encoders.flatten(params)
            opt_state, w = optimizers.apply_step(opt_state, w, grad)
            params = encoders.unflatten(arch, w)
            loss_rows.append(
                ",".join([str(global_step), str(epoch), str(step_i), repr(loss_value)] + extra)
            )
            global_step += 1
            at_epoch_end = step_i + 1 == steps_per_epoch
            if at_epoch_end:
                epoch_next, step_next = epoch + 1, 0
                meta = RunMeta(config.variant, config.optimizer, config.seed, epoch)
                metrics.extend(evaluate_split(params, eval_ds, prototypes, meta))
            else:
                epoch_next, step_next = epoch, step_i + 1
            if stop_after_step is not None and global_step >= stop_after_step:
                stopped = True
                break
        if stopped:
            break

    ck_path = write_artifacts()
    return RunArtifacts(
        out_dir=str(out),
        config_text=config_text,
        metrics=metrics,
        loss_rows=loss_rows,
        checkpoint_path=ck_path,
        final_params=params,
        stopped_early=stopped,
    )


@dataclass
class GradcheckEntry:
    variant: str
    max_rel_err: float
    worst_coordinate: int
    n_probe: int


@dataclass
class GradcheckReport:
    hidden: bool
    entries: list[GradcheckEntry]
    elapsed_seconds: float

    @property
    def max_rel_err(self) -> float:
        return max(e.max_rel_err for e in self.entries)


def _gradcheck_views(
    arch: encoders.EncoderArch, omega: int, m: int, rng: Rng
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    from .augment import AugmentPlan, AugmentSpec, augment_batch

    images = rng.child("img").normal((m, arch.d_img))
    texts = rng.child("txt").normal((m, arch.d_txt))
    if omega == 0:
        return [images], [texts]
    spec = (AugmentSpec("gaussian_noise", sigma=0.2),)
    plan = AugmentPlan(omega=omega, image_specs=spec, text_specs=spec)
    return augment_batch(plan, images, texts, np.arange(m), 0, rng.child("aug"))


def relative_error(a: float, b: float) -> float:
    """|a - b| normalized by max(1, |a|, |b|); the losses here are O(1), so
    this is scale-honest while absorbing finite-difference roundoff on
    near-zero coordinates."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


def gradcheck(
    config: ExperimentConfig,
    n_probe: int = 200,
    hidden: bool | None = None,
    eps: float = 1e-5,
    batch: int = 8,
) -> GradcheckReport:
    """Analytic batch-loss gradients vs central finite differences.

    Dimensions are forced small so the probe sweep stays fast; ``hidden``
    selects the two-layer tanh or single linear architecture (defaults to
    the config's choice).
    """
    if hidden is None:
        hidden = config.hidden_dim > 0
    arch = encoders.EncoderArch(
        d_img=16, d_txt=14, embed_dim=6 if hidden else 8,
        hidden_dim=8 if hidden else None, normalize=config.normalize,
    )
    rng = Rng(config.seed).child("gradcheck")
    t0 = time.perf_counter()
    entries = []
    for variant in ("clip", "infonce", "sogclr", "amclr", "xamclr"):
        omega = 1 if variant in ("amclr", "xamclr") else 0
        img_views, txt_views = _gradcheck_views(arch, omega, batch, rng.child(variant))
        params = encoders.init(arch, seed=config.seed + 1)
        _, analytic = objectives.variant_batch_loss_and_gradient(
            params, img_views, txt_views, config.tau, variant,
            exclude=config.exclude_positive,
        )
        w0 = encoders.flatten(params)
        dim = len(w0)
        coords = rng.child("coords", variant).permutation(dim)[:n_probe]
        if len(coords) < n_probe:  # probe with repetition if dim < n_probe
            extra = rng.child("extra", variant).integers(0, dim, n_probe - len(coords))
            coords = np.concatenate([coords, extra])
        worst_err, worst_coord = 0.0, -1
        for c in coords:
            c = int(c)
            fd = _central_difference(
                w0, c, eps, arch, img_views, txt_views, config, variant
            )
            err = relative_error(analytic[c], fd)
            if err > worst_err:
                worst_err, worst_coord = err, c
        entries.append(GradcheckEntry(variant, worst_err, worst_coord, len(coords)))
    return GradcheckReport(hidden, entries, time.perf_counter() - t0)


def _central_difference(w0, coord, eps, arch, img_views, txt_views, config, variant):
    def loss_at(w):
        p = encoders.unflatten(arch, w)
        value, _ = objectives.variant_batch_loss_and_gradient(
            p, img_views, txt_views, config.tau, variant,
            exclude=config.exclude_positive,
        )
        return value

    w_plus = w0.copy()
    w_plus[coord] += eps
    w_minus = w0.copy()
    w_minus[coord] -= eps
    return (loss_at(w_plus) - loss_at(w_minus)) / (2.0 * eps)


@dataclass
class OracleCompareReport:
    n: int
    batch_size: int
    exact_objective: float
    mean_batch_loss: float
    objective_rel_diff: float
    gradient_rel_err: float


def oracle_compare(config: ExperimentConfig) -> OracleCompareReport:
    """Two exact-identity checks against the dataset-wide objective.

    (a) the average of per-batch losses over one epoch's batches vs the
    exact objective (equal when one batch covers the dataset); (b) the
    estimator's m_t with gamma = 1 on a full-dataset batch vs the exact
    gradient. Both use positive-included denominators and no augmentation,
    matching the dataset-wide objective's definition.
    """
    config.validate()
    if config.n_samples > 512:
        raise OracleScaleError("oracle comparison limited to n_samples <= 512")
    dataset = load_or_generate_dataset(config)
    n = dataset.n
    arch = build_arch(config)
    params = encoders.init(arch, seed=config.seed)

    exact = objectives.global_objective_exact(params, dataset, config.tau)
    exact_grad = objectives.global_objective_exact_gradient(params, dataset, config.tau)

    state = estimator.init_state(n, gamma=1.0)
    m_t, _, _ = estimator.sogclr_step(
        params, dataset.images, dataset.texts, np.arange(n), state, config.tau,
        exclude=False,
    )
    grad_rel = float(
        np.linalg.norm(m_t - exact_grad) / max(np.linalg.norm(exact_grad), 1e-300)
    )

    m = config.batch_size
    order = Rng(config.seed).child("shuffle", 0).permutation(n)
    losses = []
    for start in range(0, n, m):
        idx = order[start : start + m]
        emb_i, _ = encoders.forward(params, dataset.images[idx], "image")
        emb_t, _ = encoders.forward(params, dataset.texts[idx], "text")
        views = objectives.EmbeddedViews([emb_i], [emb_t])
        losses.append(objectives.amclr_batch_loss(views, config.tau, exclude=False).total)
    mean_batch = float(np.mean(losses))
    rel_diff = abs(mean_batch - exact) / max(abs(exact), 1e-300)
    return OracleCompareReport(
        n=n,
        batch_size=m,
        exact_objective=exact,
        mean_batch_loss=mean_batch,
        objective_rel_diff=rel_diff,
        gradient_rel_err=grad_rel,
    )


@dataclass
class SweepResult:
    rows: list[str]  # CSV rows (without header)
    summary: dict
    failures: list[tuple[str, str]]


def sweep_cell_config(
    base: ExperimentConfig, variant: str, optimizer: str, seed: int
) -> ExperimentConfig:
    omega = base.omega if variant in ("amclr", "xamclr") else 0
    if variant in ("amclr", "xamclr") and omega < 1:
        omega = 1
    return replace(base, variant=variant, optimizer=optimizer, seed=seed, omega=omega)


def sweep(
    base: ExperimentConfig,
    variants: list[str],
    optimizer_names: list[str],
    seeds: list[int],
    out_root,
) -> SweepResult:
    """Train every (variant, optimizer, seed) cell on the shared dataset.

    Emits final-epoch metric rows per cell; a failed cell is recorded and
    skipped, not fatal. The summary aggregates mean/std of Top-1 per cell
    across seeds.
    """
    from pathlib import Path

    if not variants or not optimizer_names or not seeds:
        raise ConfigError("sweep needs at least one variant, optimizer, and seed")
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    rows: list[str] = []
    failures: list[tuple[str, str]] = []
    top1: dict[tuple[str, str, str], list[float]] = {}
    for seed in seeds:
        for variant in variants:
            for optimizer_name in optimizer_names:
                cell = f"{variant}_{optimizer_name}_seed{seed}"
                cfg = sweep_cell_config(base, variant, optimizer_name, seed)
                try:
                    arts = train(cfg, out_root / cell)
                except Exception as exc:  # record, keep sweeping
                    failures.append((cell, f"{type(exc).__name__}: {exc}"))
                    continue
                final_epoch = cfg.epochs - 1
                finals = [r for r in arts.metrics if r.epoch == final_epoch]
                rows.extend(metrics_csv_rows(finals))
                for r in finals:
                    top1.setdefault((variant, optimizer_name, r.task), []).append(r.top1)
    summary = {
        "cells": [
            {
                "variant": v,
                "optimizer": o,
                "task": t,
                "seeds": len(vals),
                "top1_mean": float(np.mean(vals)),
                "top1_std": float(np.std(vals)),
            }
            for (v, o, t), vals in sorted(top1.items())
        ],
        "failures": [{"cell": c, "error": e} for c, e in failures],
    }
    (out_root / "sweep.csv").write_text(
        "\n".join([METRICS_CSV_HEADER] + rows) + "\n"
    )
    (out_root / "sweep_summary.json").write_text(json.dumps(summary, indent=2))
    return SweepResult(rows=rows, summary=summary, failures=failures)

"""Acceptance suite: one test per release criterion, with a printed verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the PASS/FAIL line
per criterion. The training-based criteria use the default synthetic
benchmark (2000 train / 500 eval samples, 50 classes, batch 128, 30 epochs).
"""

import math
import time

import numpy as np
import pytest

from gclr import augment, data, encoders, estimator, evaluation, experiment, objectives
from gclr.config import ExperimentConfig
from gclr.numerics import Rng
from gclr.objectives import EmbeddedViews, enumerate_combinations

BENCHMARK_SEEDS = [1, 2, 3, 4, 5]
RANDOM_TOP1_PCT = 100.0 * 1.0 / 500.0  # 500 held-out candidates
EFFICACY_FLOOR_PCT = 10.0 * RANDOM_TOP1_PCT  # 2%

_RUN_CACHE: dict = {}


def report(name: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"[acceptance] {name}: {verdict} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


def benchmark_config(variant: str, seed: int) -> ExperimentConfig:
    omega = 1 if variant in ("amclr", "xamclr") else 0
    return ExperimentConfig(variant=variant, omega=omega, seed=seed).validate()


def run_benchmark(variant: str, seed: int, tmp_root) -> tuple[dict, float]:
    """Train one benchmark cell (memoized); returns final metrics and runtime."""
    key = (variant, seed)
    if key not in _RUN_CACHE:
        cfg = benchmark_config(variant, seed)
        t0 = time.perf_counter()
        arts = experiment.train(cfg, tmp_root / f"{variant}_s{seed}")
        elapsed = time.perf_counter() - t0
        finals = {
            r.task: r for r in arts.metrics if r.epoch == cfg.epochs - 1
        }
        _RUN_CACHE[key] = (finals, elapsed)
    return _RUN_CACHE[key]


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance-runs")


def test_gradient_correctness():
    cfg = ExperimentConfig()
    t0 = time.perf_counter()
    tanh_report = experiment.gradcheck(cfg, n_probe=200, hidden=True)
    linear_report = experiment.gradcheck(cfg, n_probe=200, hidden=False)
    elapsed = time.perf_counter() - t0
    detail = (
        f"(2-layer tanh max {tanh_report.max_rel_err:.2e} < 1e-4, "
        f"linear max {linear_report.max_rel_err:.2e} < 1e-7, "
        f"{elapsed:.1f}s < 120s)"
    )
    ok = (
        tanh_report.max_rel_err < 1e-4
        and linear_report.max_rel_err < 1e-7
        and elapsed < 120.0
        and all(e.n_probe >= 200 for e in tanh_report.entries + linear_report.entries)
    )
    report("gradient correctness (5 variants x 2 encoder depths)", ok, detail)


def test_estimator_oracle_identity():
    cfg = data.GenConfig(
        n=128, class_count=8, latent_dim=4, d_img=16, d_txt=12, noise_sigma=0.3
    )
    ds = data.generate(cfg)
    arch = encoders.EncoderArch(d_img=16, d_txt=12, embed_dim=8, hidden_dim=24)
    params = encoders.init(arch, seed=7)
    tau = 0.1
    exact = objectives.global_objective_exact_gradient(params, ds, tau)
    state = estimator.init_state(ds.n, gamma=1.0)
    m_t, _, _ = estimator.sogclr_step(
        params, ds.images, ds.texts, np.arange(ds.n), state, tau, exclude=False
    )
    rel = float(np.linalg.norm(m_t - exact) / np.linalg.norm(exact))
    report(
        "estimator oracle identity (gamma=1, full batch, n=128)",
        rel < 1e-8,
        f"(rel err {rel:.2e} < 1e-8)",
    )


def test_combination_counting():
    ok = True
    for omega in range(5):
        ok &= len(enumerate_combinations(omega, "amclr")) == 2 * (omega + 1) ** 2
        ok &= len(enumerate_combinations(omega, "xamclr")) == 2 * (omega + 1) ** 2 + 4 * math.comb(omega + 1, 2)
    ok &= len(enumerate_combinations(1, "amclr")) == 8
    ok &= len(enumerate_combinations(1, "xamclr")) == 12

    # structural one-to-one match with the twelve written-out combinations
    expected = [
        ("image", 0, "text", 0), ("image", 0, "text", 1),
        ("image", 1, "text", 0), ("image", 1, "text", 1),
        ("text", 0, "image", 0), ("text", 0, "image", 1),
        ("text", 1, "image", 0), ("text", 1, "image", 1),
        ("image", 0, "image", 1), ("image", 1, "image", 0),
        ("text", 0, "text", 1), ("text", 1, "text", 0),
    ]
    got = [
        (c.anchor.modality, c.anchor.variant, c.contrast.modality, c.contrast.variant)
        for c in enumerate_combinations(1, "xamclr")
    ]
    ok &= got == expected
    ok &= got[:8] == [
        (c.anchor.modality, c.anchor.variant, c.contrast.modality, c.contrast.variant)
        for c in enumerate_combinations(1, "amclr")
    ]
    report(
        "combination counting (kappa formulas, omega 0..4; kappa=8/12 at omega=1)",
        ok,
    )


def test_reduction_invariants():
    rng = Rng(61)
    arch = encoders.EncoderArch(d_img=12, d_txt=10, embed_dim=8, hidden_dim=16)
    params = encoders.init(arch, seed=8)
    m = 16
    images = rng.child("i").normal((m, 12))
    texts = rng.child("t").normal((m, 10))
    state = estimator.init_state(m, gamma=0.9)
    idx = np.arange(m)
    tau = 0.1

    m_so, st_so, rep_so = estimator.sogclr_step(params, images, texts, idx, state, tau)
    m_am0, st_am0, _ = estimator.amclr_step(
        params, images, texts, idx, state, tau, augment.identity_plan(0), 0, rng
    )
    reduction = float(np.max(np.abs(m_so - m_am0)))
    u_match = float(np.max(np.abs(st_so.u_img - st_am0.u_img)))

    plan = augment.AugmentPlan(
        1,
        (augment.AugmentSpec("gaussian_noise", sigma=0.15),),
        (augment.AugmentSpec("gaussian_noise", sigma=0.15),),
    )
    _, _, rep_am = estimator.amclr_step(
        params, images, texts, idx, state, tau, plan, 0, Rng(62)
    )
    _, _, rep_xa = estimator.xamclr_step(
        params, images, texts, idx, state, tau, plan, 0, Rng(62)
    )
    containment = float(
        np.max(np.abs(rep_xa.breakdown.values()[:8] - rep_am.breakdown.values()))
    )

    emb_i, _ = encoders.forward(params, images, "image")
    emb_t, _ = encoders.forward(params, texts, "text")
    dup = EmbeddedViews([emb_i, emb_i.copy()], [emb_t, emb_t.copy()])
    values = objectives.amclr_batch_loss(dup, tau).values()
    collapse = max(
        max(abs(values[k] - values[0]) for k in (1, 2, 3)),
        max(abs(values[k] - values[4]) for k in (5, 6, 7)),
    )
    ok = reduction < 1e-12 and u_match < 1e-12 and containment < 1e-12 and collapse < 1e-12
    report(
        "reduction invariants (omega=0 equivalence, containment, identity collapse)",
        ok,
        f"(max deviations {max(reduction, u_match, containment, collapse):.2e} < 1e-12)",
    )


def test_difference_form_identity():
    rng = Rng(63)
    worst = 0.0
    for trial in range(10):
        m = int(rng.child("m", trial).integers(2, 24))
        a = rng.child("a", trial).normal((m, 7))
        b = rng.child("b", trial).normal((m, 7))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        clip = objectives.clip_batch_loss(a, b, 0.1)
        rows = objectives.infonce_loss(a, b, 0.1) + objectives.infonce_loss(b, a, 0.1)
        worst = max(worst, abs(clip - rows))
    report(
        "difference-form identity (clip = summed directional softmax losses)",
        worst < 1e-10,
        f"(max |diff| {worst:.2e} < 1e-10 over 10 random batches)",
    )


def test_moving_average_law():
    gamma = 0.35
    u0, g = 7.5, 2.25
    state = estimator.EstimatorState(np.array([u0]), np.array([u0]), gamma=gamma)
    worst = 0.0
    for t in range(1, 51):
        state = estimator.update_u(state, np.array([0]), np.array([g]), np.array([g]))
        expected = (1.0 - gamma) ** t * abs(u0 - g)
        worst = max(worst, abs(abs(float(state.u_img[0]) - g) - expected))
    report(
        "moving-average law |u_t - g| = (1-gamma)^t |u_0 - g|",
        worst < 1e-12,
        f"(max deviation {worst:.2e} over 50 steps)",
    )


@pytest.mark.parametrize("variant", ["clip", "infonce", "sogclr", "amclr", "xamclr"])
def test_training_efficacy(variant, bench_dir):
    finals, elapsed = run_benchmark(variant, BENCHMARK_SEEDS[0], bench_dir)
    text_top1 = finals["retrieval_text"].top1
    image_top1 = finals["retrieval_image"].top1
    ok = (
        text_top1 >= EFFICACY_FLOOR_PCT
        and image_top1 >= EFFICACY_FLOOR_PCT
        and elapsed < 600.0
    )
    report(
        f"training efficacy [{variant}]",
        ok,
        f"(text {text_top1:.1f}%, image {image_top1:.1f}% >= {EFFICACY_FLOOR_PCT}%; "
        f"{elapsed:.0f}s < 600s)",
    )


def test_directional_comparison(bench_dir):
    sog, amc = [], []
    for seed in BENCHMARK_SEEDS:
        sog.append(run_benchmark("sogclr", seed, bench_dir)[0]["retrieval_text"].top1)
        amc.append(run_benchmark("amclr", seed, bench_dir)[0]["retrieval_text"].top1)
    sog_mean, amc_mean = float(np.mean(sog)), float(np.mean(amc))
    ordering = "reproduced" if amc_mean > sog_mean else "NOT reproduced"
    print(
        f"[acceptance] directional report: text-retrieval Top-1 over "
        f"{len(BENCHMARK_SEEDS)} paired seeds: amclr {amc_mean:.2f}% "
        f"(per-seed {['%.1f' % v for v in amc]}), sogclr {sog_mean:.2f}% "
        f"(per-seed {['%.1f' % v for v in sog]}); amclr > sogclr ordering {ordering}"
    )
    report(
        "directional comparison (amclr within 0.5pp of sogclr or better)",
        amc_mean >= sog_mean - 0.5,
        f"(amclr {amc_mean:.2f}% vs sogclr {sog_mean:.2f}%)",
    )


def test_determinism_and_resume(tmp_path):
    cfg = ExperimentConfig(
        variant="amclr", omega=1, epochs=3, batch_size=64, n_samples=400,
        class_count=10, latent_dim=4, d_img=16, d_txt=12, hidden_dim=24,
        embed_dim=8, seed=11,
    ).validate()
    a = experiment.train(cfg, tmp_path / "a")
    b = experiment.train(cfg, tmp_path / "b")
    identical = (tmp_path / "a" / "loss_log.csv").read_bytes() == (
        tmp_path / "b" / "loss_log.csv"
    ).read_bytes()

    stop_at = 7  # mid-epoch (5 steps per epoch)
    partial = experiment.train(cfg, tmp_path / "part", stop_after_step=stop_at)
    resumed = experiment.train(
        cfg, tmp_path / "resume", resume_from=partial.checkpoint_path
    )
    tail_exact = resumed.loss_rows[1:] == a.loss_rows[1 + stop_at :]
    params_exact = np.array_equal(
        encoders.flatten(resumed.final_params), encoders.flatten(a.final_params)
    )
    report(
        "determinism and checkpoint resume",
        identical and tail_exact and params_exact,
        "(byte-identical logs; resumed tail and parameters bit-exact)",
    )


def test_metric_sanity(bench_dir):
    finals, _ = run_benchmark("sogclr", BENCHMARK_SEEDS[0], bench_dir)
    monotone = all(
        0.0 <= r.top1 <= r.top5 <= r.top10 <= 100.0 for r in finals.values()
    )
    spot = evaluation.MetricsRecord(
        "retrieval_text", 13.1, 33.36, 45.1, (13.1 + 33.36 + 45.1) / 3.0, 100
    )
    spot_ok = abs(spot.mean - 30.52) < 1e-9
    retrieval_means_present = all(
        finals[t].mean is not None for t in ("retrieval_text", "retrieval_image")
    )
    report(
        "metric sanity (top-k monotone; mean column arithmetic, spot 30.52)",
        monotone and spot_ok and retrieval_means_present,
    )

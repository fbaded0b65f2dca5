#!/usr/bin/env python3
"""A variant x optimizer sweep producing the comparison CSV.

Runs a small grid on a shared dataset and prints the resulting table. The
emitted ``sweep.csv`` is the input format of the plotting frontend
(``frontend/``), which renders grouped bar charts per task from it.
"""

import sys
import tempfile
from pathlib import Path

from gclr import experiment
from gclr.config import ExperimentConfig

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else None

base = ExperimentConfig(
    variant="sogclr",
    epochs=6,
    batch_size=128,
    n_samples=1200,
    class_count=20,
    omega=0,
    seed=0,
).validate()

variants = ["clip", "sogclr", "amclr", "xamclr"]
optimizers = ["adamw", "adamp"]

with tempfile.TemporaryDirectory() as td:
    root = out_dir if out_dir is not None else Path(td)
    result = experiment.sweep(base, variants, optimizers, [base.seed], root)
    print(f"{len(result.rows)} metric rows -> {root / 'sweep.csv'}")
    print()
    header = f"{'variant':8s} {'optimizer':9s} {'task':16s} {'top1':>7s}"
    print(header)
    print("-" * len(header))
    for cell in result.summary["cells"]:
        print(f"{cell['variant']:8s} {cell['optimizer']:9s} {cell['task']:16s} "
              f"{cell['top1_mean']:6.2f}%")
    for name, err in result.failures:
        print(f"FAILED {name}: {err}")
    if out_dir is None:
        print()
        print("pass an output directory to keep the CSV, e.g.")
        print("  python demos/04_sweep_comparison.py runs/demo-sweep")

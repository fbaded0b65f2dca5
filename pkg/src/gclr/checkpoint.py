"""Checkpoint files: everything needed to resume training bit-exactly.

Same container conventions as the dataset format (magic, u32 version,
payload, trailing CRC32). All training randomness is derived from counters
and the run seed, so the stored counters fully capture the stream position.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import container
from .encoders import EncoderArch, EncoderParams, flatten, param_count, unflatten
from .errors import DataFormatError
from .estimator import EstimatorState
from .optimizers import OptimizerState

MAGIC = b"GCLC"


@dataclass
class Checkpoint:
    params: EncoderParams
    optimizer: OptimizerState
    estimator: EstimatorState | None  # None for clip/infonce runs
    epoch: int  # next epoch to run
    step_in_epoch: int  # next step within that epoch
    global_step: int
    config_text: str  # serialized effective config


def save(ckpt: Checkpoint, path) -> None:
    meta = {
        "arch": ckpt.params.arch.to_json(),
        "epoch": ckpt.epoch,
        "step_in_epoch": ckpt.step_in_epoch,
        "global_step": ckpt.global_step,
        "config_text": ckpt.config_text,
        "optimizer": {
            "rule": ckpt.optimizer.rule,
            "lr": ckpt.optimizer.lr,
            "beta1": ckpt.optimizer.beta1,
            "beta2": ckpt.optimizer.beta2,
            "eps": ckpt.optimizer.eps,
            "weight_decay": ckpt.optimizer.weight_decay,
            "step": ckpt.optimizer.step,
            "has_m2": ckpt.optimizer.m2 is not None,
            "scale_invariant": list(ckpt.optimizer.scale_invariant),
        },
        "estimator": None
        if ckpt.estimator is None
        else {"gamma": ckpt.estimator.gamma, "step": ckpt.estimator.step,
              "n": ckpt.estimator.n},
    }
    parts = [container.pack_blob(json.dumps(meta, sort_keys=True).encode())]
    parts.append(container.pack_f64_array(flatten(ckpt.params)))
    parts.append(container.pack_f64_array(ckpt.optimizer.m1))
    if ckpt.optimizer.m2 is not None:
        parts.append(container.pack_f64_array(ckpt.optimizer.m2))
    if ckpt.estimator is not None:
        parts.append(container.pack_f64_array(ckpt.estimator.u_img))
        parts.append(container.pack_f64_array(ckpt.estimator.u_txt))
    container.write_file(path, MAGIC, b"".join(parts))


def load(path) -> Checkpoint:
    r = container.read_file(path, MAGIC)
    meta = json.loads(r.blob().decode())
    arch = EncoderArch.from_json(meta["arch"])
    n_params = param_count(arch)
    params = unflatten(arch, r.f64_array(n_params))
    opt_meta = meta["optimizer"]
    m1 = r.f64_array(n_params)
    m2 = r.f64_array(n_params) if opt_meta["has_m2"] else None
    optimizer = OptimizerState(
        rule=opt_meta["rule"],
        lr=opt_meta["lr"],
        beta1=opt_meta["beta1"],
        beta2=opt_meta["beta2"],
        eps=opt_meta["eps"],
        weight_decay=opt_meta["weight_decay"],
        m1=m1,
        m2=m2,
        step=opt_meta["step"],
        scale_invariant=tuple(tuple(g) for g in opt_meta["scale_invariant"]),
    )
    est_meta = meta["estimator"]
    est = None
    if est_meta is not None:
        n = est_meta["n"]
        est = EstimatorState(
            u_img=r.f64_array(n),
            u_txt=r.f64_array(n),
            gamma=est_meta["gamma"],
            step=est_meta["step"],
        )
    if r.pos != len(r.data):
        raise DataFormatError(f"{path}: {len(r.data) - r.pos} trailing bytes")
    return Checkpoint(
        params=params,
        optimizer=optimizer,
        estimator=est,
        epoch=meta["epoch"],
        step_in_epoch=meta["step_in_epoch"],
        global_step=meta["global_step"],
        config_text=meta["config_text"],
    )

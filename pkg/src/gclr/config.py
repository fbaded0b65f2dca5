"""Experiment configuration: flat ``key = value`` files with strict keys.

Unknown keys are errors (fail-fast against typos), ``#`` starts a comment,
and serialization is canonical so a resolved config re-serializes to
byte-identical text.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from . import data as data_mod
from .augment import AugmentPlan, AugmentSpec
from .errors import ConfigError

ESTIMATOR_VARIANTS = ("sogclr", "amclr", "xamclr")
ALL_VARIANTS = ("clip", "infonce") + ESTIMATOR_VARIANTS
OPTIMIZERS = ("momentum", "adamw", "adamp")
DENOMINATOR_MODES = ("exclusive", "inclusive")


@dataclass
class ExperimentConfig:
    # objective / training
    variant: str = "sogclr"
    optimizer: str = "adamw"
    tau: float = 0.1
    gamma: float = 0.9
    omega: int = 0
    denominator: str = "exclusive"
    batch_size: int = 128
    epochs: int = 30
    seed: int = 0
    # data: either a dataset file, or generation parameters
    dataset_path: str = ""
    n_samples: int = 2500
    class_count: int = 50
    latent_dim: int = 8
    d_img: int = 32
    d_txt: int = 24
    noise_sigma: float = data_mod.DEFAULT_NOISE_SIGMA
    map_seed: int = 7
    data_seed: int = 11
    eval_fraction: float = 0.2
    # encoders
    hidden_dim: int = 64  # 0 selects a single linear layer
    embed_dim: int = 16
    normalize: bool = True
    # optimizer hyperparameters
    lr: float = 2e-3
    momentum_beta: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    # augmentation (comma-separated family:param specs)
    image_augs: str = "gaussian_noise:0.1"
    text_augs: str = "gaussian_noise:0.1"

    def validate(self) -> "ExperimentConfig":
        if self.variant not in ALL_VARIANTS:
            raise ConfigError(f"variant must be one of {ALL_VARIANTS}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
        if self.denominator not in DENOMINATOR_MODES:
            raise ConfigError(f"denominator must be one of {DENOMINATOR_MODES}")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not (0 < self.gamma <= 1):
            raise ConfigError("gamma must be in (0, 1]")
        if self.tau <= 0:
            raise ConfigError("tau must be > 0")
        if not (0 < self.eval_fraction < 1):
            raise ConfigError("eval_fraction must be in (0, 1)")
        if self.variant in ("clip", "infonce", "sogclr") and self.omega != 0:
            raise ConfigError(f"variant {self.variant} forces omega = 0")
        if self.variant in ("amclr", "xamclr"):
            if self.omega < 1:
                raise ConfigError(
                    f"variant {self.variant} needs omega >= 1 (got {self.omega})"
                )
            self.augment_plan().check_batch_size(self.batch_size)
        return self

    @property
    def exclude_positive(self) -> bool:
        return self.denominator == "exclusive"

    def augment_plan(self) -> AugmentPlan:
        if self.omega == 0:
            return AugmentPlan(0)
        return AugmentPlan(
            omega=self.omega,
            image_specs=_parse_specs(self.image_augs),
            text_specs=_parse_specs(self.text_augs),
        )

    def gen_config(self) -> data_mod.GenConfig:
        return data_mod.GenConfig(
            n=self.n_samples,
            class_count=self.class_count,
            latent_dim=self.latent_dim,
            d_img=self.d_img,
            d_txt=self.d_txt,
            noise_sigma=self.noise_sigma,
            map_seed=self.map_seed,
            data_seed=self.data_seed,
        )


def _parse_specs(text: str) -> tuple[AugmentSpec, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    return tuple(AugmentSpec.parse(item) for item in items)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(name: str, text: str):
    kind = _FIELDS[name].type
    try:
        if kind == "bool":
            lowered = text.lower()
            if lowered not in ("true", "false"):
                raise ValueError("expected true/false")
            return lowered == "true"
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r} ({exc})") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; every key must be a known field."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value)
    return ExperimentConfig(**values).validate()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form: every field, declaration order, one per line."""
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(config, f.name)
        if f.type == "bool":
            text = "true" if value else "false"
        elif f.type == "float":
            text = repr(float(value))
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"

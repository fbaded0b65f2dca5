"""Parameter-update rules consuming the gradient (or estimator) vector.

Three rules over flat parameter vectors, all pure functions of
``(state, params, gradient)``:

* ``momentum``: v = (1 - beta) v + beta g, then w -= lr * v. Note the *new*
  gradient is weighted by beta, so beta = 1 is plain gradient descent.
* ``adamw``: bias-corrected adaptive moments with decoupled weight decay
  applied to the weights before the adaptive term.
* ``adamp``: adamw plus a radial projection of the update on parameter
  groups tagged scale-invariant (layers feeding normalized outputs), which
  curbs uninformative norm growth of those groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError

RULES = ("momentum", "adamw", "adamp")

DEFAULT_LR = 2e-3
DEFAULT_MOMENTUM_BETA = 0.9
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPS = 1e-8
DEFAULT_WEIGHT_DECAY = 0.01


@dataclass
class OptimizerState:
    rule: str
    lr: float
    beta1: float  # momentum's new-gradient weight, or Adam's first-moment decay
    beta2: float
    eps: float
    weight_decay: float
    m1: np.ndarray
    m2: np.ndarray | None
    step: int = 0
    scale_invariant: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.rule not in RULES:
            raise ConfigError(f"unknown optimizer rule {self.rule!r}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if not (0 <= self.beta1 <= 1) or not (0 <= self.beta2 < 1):
            raise ConfigError("betas out of range")
        if self.eps <= 0 or self.weight_decay < 0:
            raise ConfigError("eps must be > 0 and weight_decay >= 0")

    def copy(self) -> "OptimizerState":
        return OptimizerState(
            self.rule, self.lr, self.beta1, self.beta2, self.eps,
            self.weight_decay, self.m1.copy(),
            None if self.m2 is None else self.m2.copy(),
            self.step, self.scale_invariant,
        )


def momentum_state(
    n: int, lr: float = DEFAULT_LR, beta: float = DEFAULT_MOMENTUM_BETA
) -> OptimizerState:
    return OptimizerState("momentum", lr, beta, 0.0, DEFAULT_EPS, 0.0, np.zeros(n), None)


def adamw_state(
    n: int,
    lr: float = DEFAULT_LR,
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    eps: float = DEFAULT_EPS,
    weight_decay: float = DEFAULT_WEIGHT_DECAY,
) -> OptimizerState:
    return OptimizerState(
        "adamw", lr, beta1, beta2, eps, weight_decay, np.zeros(n), np.zeros(n)
    )


def adamp_state(
    n: int,
    scale_invariant: tuple[tuple[int, int], ...],
    lr: float = DEFAULT_LR,
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    eps: float = DEFAULT_EPS,
    weight_decay: float = DEFAULT_WEIGHT_DECAY,
) -> OptimizerState:
    return OptimizerState(
        "adamp", lr, beta1, beta2, eps, weight_decay, np.zeros(n), np.zeros(n),
        scale_invariant=tuple((int(a), int(b)) for a, b in scale_invariant),
    )


def _check(state: OptimizerState, params: np.ndarray, grad: np.ndarray) -> None:
    if params.shape != state.m1.shape or grad.shape != state.m1.shape:
        raise ShapeError(
            f"params/grad shape {params.shape}/{grad.shape} != state {state.m1.shape}"
        )


def momentum_step(
    state: OptimizerState, params: np.ndarray, grad: np.ndarray
) -> tuple[OptimizerState, np.ndarray]:
    _check(state, params, grad)
    out = state.copy()
    out.step += 1
    out.m1 = (1.0 - state.beta1) * state.m1 + state.beta1 * grad
    return out, params - state.lr * out.m1


def project_radial(update: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Remove the component of ``update`` along ``weights``."""
    denom = float(weights @ weights)
    if denom == 0.0:
        return update
    return update - (float(update @ weights) / denom) * weights


def _adaptive_update(state: OptimizerState, grad: np.ndarray) -> tuple[OptimizerState, np.ndarray]:
    out = state.copy()
    out.step = state.step + 1
    out.m1 = state.beta1 * state.m1 + (1.0 - state.beta1) * grad
    out.m2 = state.beta2 * state.m2 + (1.0 - state.beta2) * grad**2
    m_hat = out.m1 / (1.0 - state.beta1**out.step)
    v_hat = out.m2 / (1.0 - state.beta2**out.step)
    return out, m_hat / (np.sqrt(v_hat) + state.eps)


def adamw_step(
    state: OptimizerState, params: np.ndarray, grad: np.ndarray
) -> tuple[OptimizerState, np.ndarray]:
    _check(state, params, grad)
    out, update = _adaptive_update(state, grad)
    new_params = params * (1.0 - state.lr * state.weight_decay)
    return out, new_params - state.lr * update


def adamp_step(
    state: OptimizerState, params: np.ndarray, grad: np.ndarray
) -> tuple[OptimizerState, np.ndarray]:
    _check(state, params, grad)
    out, update = _adaptive_update(state, grad)
    update = update.copy()
    for start, stop in state.scale_invariant:
        update[start:stop] = project_radial(update[start:stop], params[start:stop])
    new_params = params * (1.0 - state.lr * state.weight_decay)
    return out, new_params - state.lr * update


def apply_step(
    state: OptimizerState, params: np.ndarray, grad: np.ndarray
) -> tuple[OptimizerState, np.ndarray]:
    if state.rule == "momentum":
        return momentum_step(state, params, grad)
    if state.rule == "adamw":
        return adamw_step(state, params, grad)
    return adamp_step(state, params, grad)

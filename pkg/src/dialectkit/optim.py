"""AdamW with decoupled weight decay, and the cosine-annealed learning rate.

Written against plain numpy arrays keyed by parameter name so the trainer
stays free of framework state.  With weight_decay = 0 the update coincides
with Adam, which keeps the zero-gradient fixed point exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NumericalError(Exception):
    """Raised when training encounters non-finite values."""


@dataclass
class OptimizerState:
    """First/second moment accumulators and the completed-step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            t=0,
        )


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """One in-place AdamW update with bias correction.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
    """
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, p in params.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        update = (m / bc1) / (np.sqrt(v / bc2) + epsilon)
        if weight_decay:
            update = update + weight_decay * p
        p -= lr * update


def cosine_annealed_lr(
    epoch: int,
    epochs: int,
    lr0: float,
    lr_min: float = 0.0,
) -> float:
    """Learning rate for ``epoch`` in [0, epochs), annealed from lr0 to lr_min.

    lr(e) = lr_min + 0.5 (lr0 - lr_min)(1 + cos(pi e / (epochs - 1)));
    a single-epoch schedule returns lr0.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if not 0 <= epoch < epochs:
        raise ValueError(f"epoch {epoch} outside [0, {epochs})")
    if epochs == 1:
        return lr0
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + math.cos(math.pi * epoch / (epochs - 1)))

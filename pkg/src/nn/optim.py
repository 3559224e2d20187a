"""Adam optimizer operating in place on a Network's parameters."""
from dataclasses import dataclass, field
from typing import Dict, Iterable

import numpy as np

from src.nn.layers import Params, ShapeError
from src.nn.network import Network
from src.utils.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPS


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class AdamState:
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def sgd_adam_step(net: Network, grads: Params, lr: float, state: AdamState,
                  frozen: Iterable[str] = ()) -> Network:
    """One bias-corrected Adam update; names in *frozen* are left untouched."""
    frozen = set(frozen)
    for name, grad in grads.items():
        if name not in net.params:
            raise ShapeError(f"gradient for unknown parameter {name}")
        if grad.shape != net.params[name].shape:
            raise ShapeError(f"layer {name.split('.')[0]}: gradient {grad.shape} "
                             f"does not match parameter {net.params[name].shape}")
        if not np.all(np.isfinite(grad)):
            bad = int(np.size(grad) - np.count_nonzero(np.isfinite(grad)))
            raise NonFiniteGradientError(
                f"non-finite gradient in {name}: {bad} of {grad.size} entries (step {state.t + 1})"
            )

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for name, grad in grads.items():
        if name in frozen:
            continue
        g = grad.astype(np.float64)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        step = lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        updated = net.params[name] - step.astype(net.dtype)
        if not np.all(np.isfinite(updated)):
            raise NonFiniteGradientError(f"update produced non-finite values in {name}")
        net.params[name] = updated
    return net

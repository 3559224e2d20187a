"""Central finite-difference verification of analytic gradients.

Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps entries whose
true gradient is ~0 from dominating through rounding noise. Perturbations are
applied in the checked dtype, but the loss on either side is evaluated in
float64 so the finite difference does not inherit float32 rounding.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from src.nn.layers import Conv2D, Dense, Layer, MaxPool2x2, ReLU
from src.nn.loss import cross_entropy, cross_entropy_grad, one_hot, softmax
from src.nn.network import Network

logger = logging.getLogger(__name__)

DEFAULT_STEP = {np.dtype(np.float32): 1e-3, np.dtype(np.float64): 1e-5}
DEFAULT_FLOOR = {np.dtype(np.float32): 1e-2, np.dtype(np.float64): 1e-4}


@dataclass
class GradCheckResult:
    name: str
    coords: int
    max_rel_error: float
    worst_analytic: float = 0.0
    worst_numeric: float = 0.0

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error <= tolerance


def relative_error(analytic: float, numeric: float, floor: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def _check_array(name: str, target: np.ndarray, analytic: np.ndarray, loss_fn: Callable[[], float],
                 n_coords: int, step: float, floor: float, rng: np.random.Generator) -> GradCheckResult:
    """Perturb *target* in place at random coordinates and compare slopes."""
    flat = target.reshape(-1)
    picks = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
    result = GradCheckResult(name=name, coords=len(picks), max_rel_error=0.0)
    analytic_flat = analytic.reshape(-1)
    for idx in picks:
        original = flat[idx]
        flat[idx] = original + step
        high = float(flat[idx])
        plus = loss_fn()
        flat[idx] = original - step
        low = float(flat[idx])
        minus = loss_fn()
        flat[idx] = original
        # divide by the representable step, not the requested one
        numeric = (plus - minus) / (high - low)
        err = relative_error(float(analytic_flat[idx]), numeric, floor)
        if err > result.max_rel_error:
            result.max_rel_error = err
            result.worst_analytic = float(analytic_flat[idx])
            result.worst_numeric = float(numeric)
    return result


def gradient_check(net: Network, batch: np.ndarray, labels, n_coords: int = 100,
                   step: float | None = None, floor: float | None = None,
                   seed: int = 0) -> Dict[str, GradCheckResult]:
    """Check every parameter tensor of *net*, spreading *n_coords* over the tensors.

    Analytic gradients come from the network's own dtype; use a float64 network for the tight check.
    """
    step = step or DEFAULT_STEP[net.dtype]
    floor = floor or DEFAULT_FLOOR[net.dtype]
    rng = np.random.default_rng(seed)
    _, _, grads = net.loss_and_gradients(batch, labels)
    target = one_hot(labels, net.config.classes)

    def loss_fn() -> float:
        reference = net if net.dtype == np.float64 else net.copy(np.float64)
        return cross_entropy(reference.forward(batch), target)

    per_tensor = max(1, -(-n_coords // len(net.params)))
    results = {}
    for name in net.params:
        results[name] = _check_array(name, net.params[name], grads[name], loss_fn,
                                     per_tensor, step, floor, rng)
        logger.debug("gradcheck %s: %d coords, max rel error %.3g",
                     name, results[name].coords, results[name].max_rel_error)
    return results


# -----------------------------------------------------------------------
# Per-layer checks
# -----------------------------------------------------------------------
def _layer_case(layer: Layer, x: np.ndarray, dtype, n_coords: int, step: float, floor: float,
                rng: np.random.Generator) -> List[GradCheckResult]:
    params = {name: rng.normal(0.0, 0.5, size=shape).astype(dtype)
              for name, shape in layer.param_shapes().items()}
    out, cache = layer.forward(params, x)
    projection = rng.normal(size=out.shape)
    dx, grads = layer.backward(params, cache, projection.astype(dtype))

    def loss_fn() -> float:
        y, _ = layer.forward({k: v.astype(np.float64) for k, v in params.items()}, x.astype(np.float64))
        return float(np.sum(y.astype(np.float64) * projection))

    results = [_check_array(f"{layer.name}.input", x, dx, loss_fn, n_coords, step, floor, rng)]
    for name in params:
        results.append(_check_array(name, params[name], grads[name], loss_fn, n_coords, step, floor, rng))
    return results


def check_layer_gradients(dtype=np.float32, n_coords: int = 100, seed: int = 0,
                          step: float | None = None) -> Dict[str, List[GradCheckResult]]:
    """Check each layer type in isolation on small random inputs."""
    dtype = np.dtype(dtype)
    step = step or DEFAULT_STEP[dtype]
    floor = DEFAULT_FLOOR[dtype]
    rng = np.random.default_rng(seed)
    checks: Dict[str, List[GradCheckResult]] = {}

    x = rng.normal(size=(2, 3, 8, 8)).astype(dtype)
    checks["conv"] = _layer_case(Conv2D("conv", 3, 4, 3), x, dtype, n_coords, step, floor, rng)

    # keep inputs away from the kink at zero
    magnitude = 0.05 + np.abs(rng.normal(size=(2, 3, 6, 6)))
    x = (np.sign(rng.normal(size=magnitude.shape)) * magnitude).astype(dtype)
    checks["relu"] = _layer_case(ReLU("relu"), x, dtype, n_coords, step, floor, rng)

    # distinct values spaced well beyond the step, so no window has a near-tie
    x = (rng.permutation(2 * 3 * 8 * 8).reshape(2, 3, 8, 8) * 0.01).astype(dtype)
    checks["maxpool"] = _layer_case(MaxPool2x2("pool"), x, dtype, n_coords, step, floor, rng)

    x = rng.normal(size=(4, 20)).astype(dtype)
    checks["dense"] = _layer_case(Dense("dense", 20, 8), x, dtype, n_coords, step, floor, rng)

    logits = rng.normal(size=(4, 8)).astype(dtype)
    target = one_hot(rng.integers(0, 8, size=4))
    analytic = cross_entropy_grad(softmax(logits), target)
    checks["softmax_ce"] = [_check_array(
        "softmax_ce.logits", logits, analytic,
        lambda: cross_entropy(softmax(logits.astype(np.float64)), target), n_coords, step, floor, rng)]
    return checks

"""Orientation recognition network: 3 conv blocks and 2 dense layers."""
from dataclasses import asdict, dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.nn.layers import Conv2D, Dense, Flatten, Layer, MaxPool2x2, Params, ReLU, ShapeError
from src.nn.loss import cross_entropy, cross_entropy_grad, one_hot, softmax
from src.utils.constants import (
    DEFAULT_CONV_CHANNELS, DEFAULT_HIDDEN_UNITS, DEFAULT_IN_CHANNELS,
    DEFAULT_INPUT_SIZE, DEFAULT_KERNEL, DEFAULT_SEED, NUM_ORIENTATIONS,
)


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int = DEFAULT_INPUT_SIZE
    in_channels: int = DEFAULT_IN_CHANNELS
    conv_channels: Tuple[int, int, int] = DEFAULT_CONV_CHANNELS
    kernel: int = DEFAULT_KERNEL
    hidden_units: int = DEFAULT_HIDDEN_UNITS
    classes: int = NUM_ORIENTATIONS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        if self.classes != NUM_ORIENTATIONS:
            raise ValueError(f"classes must be {NUM_ORIENTATIONS}, got {self.classes}")
        if self.input_size < 8 or self.input_size % 8:
            raise ValueError(f"input_size must be a positive multiple of 8, got {self.input_size}")
        if len(self.conv_channels) != 3 or min(self.conv_channels) < 1:
            raise ValueError(f"conv_channels must be three positive ints, got {self.conv_channels}")
        if self.in_channels < 1 or self.hidden_units < 1 or self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"invalid network config: {self}")
        if not 0 <= self.seed < 2 ** 32:
            raise ValueError(f"seed must fit in 32 bits, got {self.seed}")

    def as_ints(self) -> List[int]:
        """Flat integer block, in checkpoint order."""
        return [self.input_size, self.in_channels, *self.conv_channels,
                self.kernel, self.hidden_units, self.classes, self.seed]

    @classmethod
    def from_ints(cls, values) -> "NetworkConfig":
        v = [int(x) for x in values]
        return cls(input_size=v[0], in_channels=v[1], conv_channels=tuple(v[2:5]),
                   kernel=v[5], hidden_units=v[6], classes=v[7], seed=v[8])

    def to_dict(self) -> dict:
        return asdict(self)


def build_layers(cfg: NetworkConfig) -> List[Layer]:
    layers: List[Layer] = []
    in_ch = cfg.in_channels
    for idx, out_ch in enumerate(cfg.conv_channels, start=1):
        layers += [Conv2D(f"conv{idx}", in_ch, out_ch, cfg.kernel),
                   ReLU(f"relu{idx}"),
                   MaxPool2x2(f"pool{idx}")]
        in_ch = out_ch
    side = cfg.input_size // 8
    layers += [Flatten(),
               Dense("fc1", in_ch * side * side, cfg.hidden_units),
               ReLU("relu_fc1"),
               Dense("fc2", cfg.hidden_units, cfg.classes)]
    return layers


def param_shapes(cfg: NetworkConfig) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    for layer in build_layers(cfg):
        shapes.update(layer.param_shapes())
    return shapes


class Network:
    """Parameters plus the fixed layer stack they feed."""

    def __init__(self, config: NetworkConfig, params: Params | None = None, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.layers = build_layers(config)
        self.params: Params = {}
        if params is None:
            self._init_params()
        else:
            self.load_state_dict(params)

    # ------------------------------------------------------------------
    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return param_shapes(self.config)

    def _init_params(self):
        """Kaiming-uniform (fan-in) weights, zero biases."""
        rng = np.random.default_rng(self.config.seed)
        for name, shape in self.param_shapes().items():
            if name.endswith(".bias"):
                self.params[name] = np.zeros(shape, dtype=self.dtype)
            else:
                fan_in = int(np.prod(shape[1:]))
                bound = np.sqrt(6.0 / fan_in)
                self.params[name] = rng.uniform(-bound, bound, size=shape).astype(self.dtype)

    def state_dict(self) -> Params:
        return {name: value.copy() for name, value in self.params.items()}

    def load_state_dict(self, params: Params):
        expected = self.param_shapes()
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        if missing or extra:
            raise ShapeError(f"parameter names differ: missing {missing}, unexpected {extra}")
        for name, shape in expected.items():
            value = np.asarray(params[name])
            if value.shape != shape:
                layer = name.split('.')[0]
                raise ShapeError(f"layer {layer}: {name} has shape {value.shape}, expected {shape}")
        self.params = {name: np.array(params[name], dtype=self.dtype) for name in expected}

    def copy(self, dtype=None) -> "Network":
        return Network(self.config, self.state_dict(), dtype=dtype or self.dtype)

    def conv_param_names(self) -> List[str]:
        return [name for name in self.params if name.startswith("conv")]

    # ------------------------------------------------------------------
    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch)
        if batch.ndim == 3:
            batch = batch[np.newaxis]
        if batch.ndim != 4:
            raise ShapeError(f"batch must be (N, C, H, W), got {batch.ndim} dims")
        cfg = self.config
        expected = (cfg.in_channels, cfg.input_size, cfg.input_size)
        for dim, (got, want, label) in enumerate(zip(batch.shape[1:], expected,
                                                     ("channels", "height", "width")), start=1):
            if got != want:
                raise ShapeError(f"batch dim {dim} ({label}) is {got}, expected {want}")
        return batch.astype(self.dtype, copy=False)

    def logits(self, batch: np.ndarray) -> np.ndarray:
        x = self._check_batch(batch)
        for layer in self.layers:
            x, _ = layer.forward(self.params, x)
        return x

    def forward(self, batch: np.ndarray) -> np.ndarray:
        """Softmax probabilities, one row per sample."""
        return softmax(self.logits(batch))

    def loss_and_gradients(self, batch: np.ndarray, labels) -> Tuple[float, np.ndarray, Params]:
        """Mean cross-entropy, probabilities and parameter gradients for one batch."""
        x = self._check_batch(batch)
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(self.params, x)
            caches.append(cache)
        probs = softmax(x)
        target = one_hot(labels, self.config.classes)
        if target.shape[0] != probs.shape[0]:
            raise ShapeError(f"{target.shape[0]} labels for a batch of {probs.shape[0]}")
        loss_value = cross_entropy(probs, target)
        grad = cross_entropy_grad(probs, target)
        grads: Params = {}
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            grad, layer_grads = layer.backward(self.params, cache, grad)
            grads.update(layer_grads)
        return loss_value, probs, grads


# -----------------------------------------------------------------------
# Functional surface
# -----------------------------------------------------------------------
def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    return net.forward(batch)


def backward(net: Network, batch: np.ndarray, labels) -> Params:
    _, _, grads = net.loss_and_gradients(batch, labels)
    return grads

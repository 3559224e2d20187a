"""Layer primitives for the numpy network engine.

Layers hold no mutable state: ``forward`` returns the output plus a cache and
``backward`` consumes that cache, so one set of parameters can serve several
callers at once.
"""
from typing import Dict, Tuple

import numpy as np

Params = Dict[str, np.ndarray]


class ShapeError(ValueError):
    pass


# -----------------------------------------------------------------------
# im2col helpers
# -----------------------------------------------------------------------
def im2col(x: np.ndarray, kh: int, kw: int, pad: int) -> np.ndarray:
    """(N, C, H, W) -> (N*out_h*out_w, C*kh*kw) for stride 1."""
    n, c, h, w = x.shape
    out_h = h + 2 * pad - kh + 1
    out_w = w + 2 * pad - kw + 1
    img = np.pad(x, [(0, 0), (0, 0), (pad, pad), (pad, pad)], mode='constant')
    col = np.empty((n, c, kh, kw, out_h, out_w), dtype=x.dtype)
    for dy in range(kh):
        for dx in range(kw):
            col[:, :, dy, dx, :, :] = img[:, :, dy:dy + out_h, dx:dx + out_w]
    return col.transpose(0, 4, 5, 1, 2, 3).reshape(n * out_h * out_w, -1)


def col2im(col: np.ndarray, x_shape: Tuple[int, ...], kh: int, kw: int, pad: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add columns back onto the input grid."""
    n, c, h, w = x_shape
    out_h = h + 2 * pad - kh + 1
    out_w = w + 2 * pad - kw + 1
    col = col.reshape(n, out_h, out_w, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    img = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=col.dtype)
    for dy in range(kh):
        for dx in range(kw):
            img[:, :, dy:dy + out_h, dx:dx + out_w] += col[:, :, dy, dx, :, :]
    return img[:, :, pad:pad + h, pad:pad + w]


# -----------------------------------------------------------------------
class Layer:
    name = ""

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {}

    def forward(self, params: Params, x: np.ndarray):
        raise NotImplementedError

    def backward(self, params: Params, cache, dout: np.ndarray) -> Tuple[np.ndarray, Params]:
        raise NotImplementedError


class Conv2D(Layer):
    """3x3 (by default) convolution, stride 1, 'same' zero padding."""

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel: int = 3):
        if kernel % 2 != 1:
            raise ValueError(f"kernel must be odd, got {kernel}")
        self.name = name
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.pad = kernel // 2

    @property
    def weight(self) -> str:
        return f"{self.name}.weight"

    @property
    def bias(self) -> str:
        return f"{self.name}.bias"

    def param_shapes(self):
        k = self.kernel
        return {self.weight: (self.out_channels, self.in_channels, k, k),
                self.bias: (self.out_channels,)}

    def forward(self, params, x):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"{self.name}: expected (N, {self.in_channels}, H, W) input, got {x.shape}")
        n, _, h, w = x.shape
        col = im2col(x, self.kernel, self.kernel, self.pad)
        w_col = params[self.weight].reshape(self.out_channels, -1).T
        out = col @ w_col + params[self.bias]
        out = out.reshape(n, h, w, self.out_channels).transpose(0, 3, 1, 2)
        return out, (x.shape, col)

    def backward(self, params, cache, dout):
        x_shape, col = cache
        dout_r = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        w_col = params[self.weight].reshape(self.out_channels, -1)
        grads = {
            self.weight: (dout_r.T @ col).reshape(params[self.weight].shape),
            self.bias: dout_r.sum(axis=0),
        }
        dx = col2im(dout_r @ w_col, x_shape, self.kernel, self.kernel, self.pad)
        return dx, grads


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        self.name = name

    def forward(self, params, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, dout):
        return dout * cache, {}


class MaxPool2x2(Layer):
    def __init__(self, name: str = "pool"):
        self.name = name

    def forward(self, params, x):
        n, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"{self.name}: spatial dims must be even, got {h}x{w}")
        windows = (x.reshape(n, c, h // 2, 2, w // 2, 2)
                   .transpose(0, 1, 2, 4, 3, 5)
                   .reshape(n, c, h // 2, w // 2, 4))
        # first maximum wins on ties
        idx = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, idx[..., np.newaxis], axis=-1)[..., 0]
        return out, (x.shape, idx)

    def backward(self, params, cache, dout):
        (n, c, h, w), idx = cache
        windows = np.zeros((n, c, h // 2, w // 2, 4), dtype=dout.dtype)
        np.put_along_axis(windows, idx[..., np.newaxis], dout[..., np.newaxis], axis=-1)
        dx = (windows.reshape(n, c, h // 2, w // 2, 2, 2)
              .transpose(0, 1, 2, 4, 3, 5)
              .reshape(n, c, h, w))
        return dx, {}


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        self.name = name

    def forward(self, params, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, dout):
        return dout.reshape(cache), {}


class Dense(Layer):
    def __init__(self, name: str, in_features: int, out_features: int):
        self.name = name
        self.in_features = in_features
        self.out_features = out_features

    @property
    def weight(self) -> str:
        return f"{self.name}.weight"

    @property
    def bias(self) -> str:
        return f"{self.name}.bias"

    def param_shapes(self):
        return {self.weight: (self.out_features, self.in_features),
                self.bias: (self.out_features,)}

    def forward(self, params, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"{self.name}: expected (N, {self.in_features}) input, got {x.shape}")
        return x @ params[self.weight].T + params[self.bias], x

    def backward(self, params, cache, dout):
        x = cache
        grads = {self.weight: dout.T @ x, self.bias: dout.sum(axis=0)}
        return dout @ params[self.weight], grads

"""Geometric and intensity operations on slices."""
import numpy as np
from scipy import ndimage

from src.d4.group import check_label, compose, derive_tables, transform_array
from src.imgops.augment import augment
from src.imgops.slice import NormalizedSlice, Slice


def apply_orientation(slice_: Slice, label: int) -> Slice:
    """Return f_label(slice_); labels 4-7 swap height and width."""
    label = check_label(label)
    pixels = transform_array(slice_.pixels, label)
    true_orientation = slice_.true_orientation
    if true_orientation is not None:
        true_orientation = compose(derive_tables(), label, true_orientation)
    return slice_.with_pixels(pixels, true_orientation=true_orientation)


def resize_bilinear(slice_: Slice, out_h: int, out_w: int) -> Slice:
    """Corner-aligned bilinear resize of every channel."""
    if out_h < 2 or out_w < 2:
        raise ValueError(f"resize target must be at least 2x2, got {out_h}x{out_w}")
    if (out_h, out_w) == (slice_.height, slice_.width):
        return slice_
    factors = (1.0, out_h / slice_.height, out_w / slice_.width)
    pixels = ndimage.zoom(slice_.pixels.astype(np.float64), factors, order=1,
                          mode='nearest', grid_mode=False)
    # zoom rounds the output shape from the factors; pin it to the request
    pixels = pixels[:, :out_h, :out_w]
    if pixels.shape[1:] != (out_h, out_w):
        raise RuntimeError(f"resize produced {pixels.shape[1:]}, wanted {(out_h, out_w)}")
    return slice_.with_pixels(pixels.astype(np.float32))


def _axis_window(size: int, target: int):
    """(source start, dest start, length) for one axis of crop_or_pad."""
    if size >= target:
        return (size - target) // 2, 0, target
    return 0, (target - size) // 2, size


def crop_or_pad(slice_: Slice, out_h: int, out_w: int, fill: float = 0.0) -> Slice:
    """Center crop or symmetric pad; an odd remainder goes bottom/right."""
    if out_h < 2 or out_w < 2:
        raise ValueError(f"crop/pad target must be at least 2x2, got {out_h}x{out_w}")
    if (out_h, out_w) == (slice_.height, slice_.width):
        return slice_
    sy, dy, ly = _axis_window(slice_.height, out_h)
    sx, dx, lx = _axis_window(slice_.width, out_w)
    out = np.full((slice_.channels, out_h, out_w), fill, dtype=np.float32)
    out[:, dy:dy + ly, dx:dx + lx] = slice_.pixels[:, sy:sy + ly, sx:sx + lx]
    return slice_.with_pixels(out)


def normalize(slice_: Slice) -> NormalizedSlice:
    """Per-channel z-score; constant channels become zeros."""
    data = slice_.pixels.astype(np.float64)
    mean = data.mean(axis=(1, 2), keepdims=True)
    std = data.std(axis=(1, 2), keepdims=True)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    safe_std = np.where(constant, 1.0, std)
    out = np.where(constant, 0.0, (data - mean) / safe_std)
    return NormalizedSlice(pixels=out.astype(np.float32), source=slice_)


def match_channels(pixels: np.ndarray, channels: int) -> np.ndarray:
    """Replicate a single-channel image to *channels*; other mismatches are errors."""
    if pixels.shape[0] == channels:
        return pixels
    if pixels.shape[0] == 1:
        return np.repeat(pixels, channels, axis=0)
    raise ValueError(f"cannot map {pixels.shape[0]} channels onto {channels}")


def to_network_input(slice_: Slice, input_size: int, in_channels: int, train: bool = False,
                     rng_seed: int | None = None, augment_cfg=None) -> np.ndarray:
    """Preprocess one slice into a [C, S, S] float32 network input.

    Training: crop/pad, augment, normalize. Inference: resize, normalize.
    """
    if train:
        prepared = crop_or_pad(slice_, input_size, input_size)
        if augment_cfg is not None and rng_seed is not None:
            prepared = augment(prepared, rng_seed, augment_cfg)
    else:
        prepared = resize_bilinear(slice_, input_size, input_size)
    return match_channels(normalize(prepared).pixels, in_channels)

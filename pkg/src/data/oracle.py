"""Rule-based orientation detector for phantoms, independent of any network."""
import numpy as np

from src.d4.group import LABELS, derive_tables, transform_array
from src.imgops.slice import Slice


class MarkerNotFoundError(ValueError):
    pass


def _marker_offset(image: np.ndarray):
    """(dy, dx) of the bright marker's centroid relative to the image centre."""
    peak = image.max()
    floor = np.median(image)
    if peak <= floor:
        raise MarkerNotFoundError("image has no bright marker")
    ys, xs = np.nonzero(image >= floor + 0.925 * (peak - floor))
    cy, cx = (image.shape[0] - 1) / 2.0, (image.shape[1] - 1) / 2.0
    return ys.mean() - cy, xs.mean() - cx


def in_canonical_region(dy: float, dx: float) -> bool:
    """Above and right of centre, closer to the vertical axis than to the horizontal."""
    return dy < 0 < dx and abs(dy) > abs(dx)


def detect_marker_orientation(slice_: Slice) -> int:
    """Label i such that undoing f_i puts the marker back in its canonical region."""
    image = slice_.pixels.mean(axis=0)
    tables = derive_tables()
    hits = [k for k in LABELS
            if in_canonical_region(*_marker_offset(transform_array(image, int(tables.inverse[k]))))]
    if len(hits) != 1:
        raise MarkerNotFoundError(f"marker position is ambiguous (candidates {hits})")
    return hits[0]


def asymmetry_fraction(slice_: Slice) -> float:
    """Smallest fraction of pixels changed by any nonidentity transform."""
    pixels = slice_.pixels
    fractions = []
    for k in LABELS[1:]:
        moved = transform_array(pixels, k)
        if moved.shape != pixels.shape:
            fractions.append(1.0)
            continue
        fractions.append(float(np.mean(np.any(moved != pixels, axis=0))))
    return min(fractions)

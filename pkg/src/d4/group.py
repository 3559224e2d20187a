"""Orientation group – the 8 square symmetries acting on 2D slices.

Every transform is defined by the pixel coordinate map below; the composition
and inverse-action tables are derived from those maps at first use instead of
being typed in.
"""
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from itertools import product
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from src.utils.constants import NUM_ORIENTATIONS, ORIENTATION_NAMES


class Orientation(IntEnum):
    IDENTITY = 0
    HFLIP = 1
    VFLIP = 2
    ROT180 = 3
    TRANSPOSE = 4
    ROT90 = 5
    ROT270 = 6
    ANTI_TRANSPOSE = 7

    @property
    def description(self) -> str:
        return ORIENTATION_NAMES[self.value]

    @property
    def swaps_axes(self) -> bool:
        return self.value >= 4


LABELS = tuple(range(NUM_ORIENTATIONS))


class CoordinateRangeError(ValueError):
    pass


class TableDerivationError(RuntimeError):
    pass


def check_label(label) -> int:
    """Return *label* as a plain int, raising ValueError outside 0..7."""
    try:
        value = int(label)
    except (TypeError, ValueError):
        raise ValueError(f"orientation label must be an integer, got {label!r}") from None
    if value != label or not 0 <= value < NUM_ORIENTATIONS:
        raise ValueError(f"orientation label must be in 0..7, got {label!r}")
    return value


def output_shape(label: int, sx: int, sy: int) -> Tuple[int, int]:
    """(width, height) of the transformed image."""
    return (sy, sx) if Orientation(check_label(label)).swaps_axes else (sx, sy)


# -----------------------------------------------------------------------
# Coordinate maps (x = column, y = row, 0-based)
# -----------------------------------------------------------------------
def _map(label: int, x, y, sx: int, sy: int):
    if label == 0:
        return x, y
    if label == 1:
        return sx - 1 - x, y
    if label == 2:
        return x, sy - 1 - y
    if label == 3:
        return sx - 1 - x, sy - 1 - y
    if label == 4:
        return y, x
    if label == 5:
        return y, sy - 1 - x
    if label == 6:
        return sx - 1 - y, x
    return sx - 1 - y, sy - 1 - x


def coordinate_map(label: int, x: int, y: int, sx: int, sy: int) -> Tuple[int, int]:
    """Source pixel (x, y) read by target pixel (*x*, *y*) under *label*.

    *sx*, *sy* are the source width and height.
    """
    label = check_label(label)
    out_w, out_h = output_shape(label, sx, sy)
    if not (0 <= x < out_w and 0 <= y < out_h):
        raise CoordinateRangeError(
            f"target pixel ({x}, {y}) outside {out_w}x{out_h} output of label {label}"
        )
    src_x, src_y = _map(label, x, y, sx, sy)
    return int(src_x), int(src_y)


def source_indices(label: int, sx: int, sy: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column index grids (shape out_h x out_w) into the source image."""
    label = check_label(label)
    out_w, out_h = output_shape(label, sx, sy)
    ys, xs = np.indices((out_h, out_w))
    src_x, src_y = _map(label, xs, ys, sx, sy)
    return src_y, src_x


def transform_array(pixels: np.ndarray, label: int) -> np.ndarray:
    """Apply *label* to the last two axes (rows, columns) of *pixels*."""
    sy, sx = pixels.shape[-2:]
    rows, cols = source_indices(label, sx, sy)
    return pixels[..., rows, cols]


# -----------------------------------------------------------------------
# Tables
# -----------------------------------------------------------------------
@dataclass(frozen=True)
class TransformTables:
    compose: np.ndarray
    inverse_action: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        for arr in (self.compose, self.inverse_action, self.inverse):
            arr.setflags(write=False)


class TableMismatch(NamedTuple):
    table: str
    i: int
    j: int
    derived: int
    expected: int

    def __str__(self):
        return f"{self.table}[{self.i}][{self.j}]: derived {self.derived}, expected {self.expected}"


def _probe(size: int = 4) -> np.ndarray:
    # 16 distinct values: no nontrivial symmetry can fix it
    return np.arange(size * size, dtype=np.int64).reshape(size, size)


def _match(image: np.ndarray, candidates: Sequence[np.ndarray]) -> int:
    hits = [k for k, cand in enumerate(candidates)
            if cand.shape == image.shape and np.array_equal(cand, image)]
    if len(hits) != 1:
        raise TableDerivationError(f"expected exactly one matching transform, found {hits}")
    return hits[0]


@lru_cache(maxsize=1)
def derive_tables() -> TransformTables:
    """Derive composition, inverse-action and inverse tables from the coordinate maps."""
    probe = _probe()
    singles = [transform_array(probe, k) for k in LABELS]

    compose = np.zeros((NUM_ORIENTATIONS, NUM_ORIENTATIONS), dtype=np.int64)
    for i, j in product(LABELS, LABELS):
        # f_j first, then f_i
        compose[i, j] = _match(transform_array(singles[j], i), singles)

    inverse_action = np.zeros_like(compose)
    for i, j in product(LABELS, LABELS):
        inverse_action[i, compose[i, j]] = j

    inverse = inverse_action[:, 0].copy()
    return TransformTables(compose=compose, inverse_action=inverse_action, inverse=inverse)


def compose(tables: TransformTables, i: int, j: int) -> int:
    """Label of applying f_j first, then f_i."""
    return int(tables.compose[check_label(i), check_label(j)])


def invert_label(tables: TransformTables, i: int, k: int) -> int:
    """The j with compose(i, j) == k."""
    return int(tables.inverse_action[check_label(i), check_label(k)])


def inverse(tables: TransformTables, i: int) -> int:
    return int(tables.inverse[check_label(i)])


# -----------------------------------------------------------------------
# Verification
# -----------------------------------------------------------------------
def verify_group(tables: TransformTables) -> List[str]:
    """Return a list of violated group properties; empty when all hold."""
    problems: List[str] = []
    c = tables.compose
    full = set(LABELS)

    if not np.all((c >= 0) & (c < NUM_ORIENTATIONS)):
        problems.append("closure: entries outside 0..7")
    for i in LABELS:
        if set(c[i, :].tolist()) != full:
            problems.append(f"row {i} is not a permutation")
        if set(c[:, i].tolist()) != full:
            problems.append(f"column {i} is not a permutation")
        if c[0, i] != i or c[i, 0] != i:
            problems.append(f"identity fails for {i}")
        inv = int(tables.inverse[i])
        if c[i, inv] != 0 or c[inv, i] != 0:
            problems.append(f"inverse of {i} ({inv}) is not two-sided")
    for i, j, k in product(LABELS, LABELS, LABELS):
        if c[c[i, j], k] != c[i, c[j, k]]:
            problems.append(f"associativity fails for ({i}, {j}, {k})")
    for i, j in product(LABELS, LABELS):
        if tables.inverse_action[i, c[i, j]] != j:
            problems.append(f"inverse_action[{i}][{c[i, j]}] != {j}")
    return problems


def compare_tables(tables: TransformTables, reference_compose, reference_inverse_action) -> List[TableMismatch]:
    """Entry-wise differences between the derived tables and a reference."""
    mismatches: List[TableMismatch] = []
    pairs = (("compose", tables.compose, reference_compose),
             ("inverse_action", tables.inverse_action, reference_inverse_action))
    for name, derived, expected in pairs:
        expected = np.asarray(expected)
        for i, j in product(LABELS, LABELS):
            if derived[i, j] != expected[i, j]:
                mismatches.append(TableMismatch(name, i, j, int(derived[i, j]), int(expected[i, j])))
    return mismatches


def format_tables(tables: TransformTables) -> str:
    def rows(matrix):
        return [" ".join(str(int(v)) for v in row) for row in matrix]

    lines = ["compose"] + rows(tables.compose)
    lines += ["inverse_action"] + rows(tables.inverse_action)
    lines += ["inverse", " ".join(str(int(v)) for v in tables.inverse)]
    return "\n".join(lines)

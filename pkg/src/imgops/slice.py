"""Slice – one 2D (multi-channel) image with patient/modality metadata."""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from src.d4.group import check_label


class Modality(str, Enum):
    C0 = "C0"
    LGE = "LGE"
    T2 = "T2"

    @classmethod
    def parse(cls, value) -> "Modality":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown modality {value!r}; expected one of C0, LGE, T2") from None

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Slice:
    pixels: np.ndarray
    patient_id: str = ""
    modality: Modality = Modality.C0
    true_orientation: Optional[int] = None
    slice_index: int = 0
    predicted_orientation: Optional[int] = None

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float32)
        if pixels.ndim == 2:
            pixels = pixels[np.newaxis]
        if pixels.ndim != 3:
            raise ValueError(f"slice pixels must be [channels][height][width], got shape {pixels.shape}")
        channels, height, width = pixels.shape
        if channels < 1 or height < 2 or width < 2:
            raise ValueError(f"slice needs >= 1 channel and >= 2x2 pixels, got shape {pixels.shape}")
        if not np.all(np.isfinite(pixels)):
            raise ValueError("slice pixels must be finite")
        pixels = np.ascontiguousarray(pixels)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "modality", Modality.parse(self.modality))
        if self.true_orientation is not None:
            object.__setattr__(self, "true_orientation", check_label(self.true_orientation))
        if self.predicted_orientation is not None:
            object.__setattr__(self, "predicted_orientation", check_label(self.predicted_orientation))

    # ------------------------------------------------------------------
    @property
    def channels(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    @property
    def key(self) -> tuple:
        """(patient, modality, slice index) identity of the underlying anatomy."""
        return self.patient_id, self.modality.value, self.slice_index

    def with_pixels(self, pixels: np.ndarray, **changes) -> "Slice":
        return replace(self, pixels=pixels, **changes)


@dataclass(frozen=True)
class NormalizedSlice:
    pixels: np.ndarray
    source: Optional[Slice] = field(default=None, repr=False)

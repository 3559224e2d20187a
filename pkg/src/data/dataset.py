"""Volumes, labelled datasets, patient-disjoint splits and orientation expansion."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from src.d4.group import LABELS, check_label
from src.imgops.slice import Modality, Slice
from src.imgops.transforms import apply_orientation
from src.utils.constants import DEFAULT_SPLIT_RATIOS

logger = logging.getLogger(__name__)


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class Volume:
    slices: Tuple[Slice, ...]

    def __post_init__(self):
        slices = tuple(self.slices)
        if not slices:
            raise ValueError("a volume needs at least one slice")
        first = slices[0]
        for s in slices[1:]:
            if (s.patient_id, s.modality) != (first.patient_id, first.modality):
                raise ValueError("all slices of a volume must share patient and modality")
            if s.pixels.shape != first.pixels.shape:
                raise ValueError(f"slice shapes differ within volume {first.patient_id}: "
                                 f"{s.pixels.shape} vs {first.pixels.shape}")
        object.__setattr__(self, "slices", slices)

    @property
    def sz(self) -> int:
        return len(self.slices)

    @property
    def patient_id(self) -> str:
        return self.slices[0].patient_id

    @property
    def modality(self) -> Modality:
        return self.slices[0].modality


@dataclass
class Dataset:
    samples: List[Tuple[Slice, int]] = field(default_factory=list)
    split: Split = Split.TRAIN

    def __post_init__(self):
        self.split = Split(self.split)
        self.samples = [(s, check_label(label)) for s, label in self.samples]

    def __len__(self):
        return len(self.samples)

    @property
    def patients(self) -> set:
        return {s.patient_id for s, _ in self.samples}

    @property
    def labels(self) -> np.ndarray:
        return np.array([label for _, label in self.samples], dtype=np.int64)

    @classmethod
    def from_volumes(cls, volumes: Iterable[Volume], split: Split) -> "Dataset":
        samples = []
        for volume in volumes:
            for s in volume.slices:
                label = 0 if s.true_orientation is None else s.true_orientation
                samples.append((s, label))
        return cls(samples=samples, split=split)

    def shuffled(self, seed: int) -> "Dataset":
        order = np.random.default_rng(seed).permutation(len(self.samples))
        return Dataset(samples=[self.samples[i] for i in order], split=self.split)

    def restrict_patients(self, fraction: float, seed: int) -> "Dataset":
        """Keep a seeded subset of ceil(fraction * patients) patients (at least one)."""
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        if fraction == 1.0:
            return self
        patients = sorted(self.patients)
        keep_count = max(1, math.ceil(fraction * len(patients) - 1e-9))
        order = np.random.default_rng(seed).permutation(len(patients))
        keep = {patients[i] for i in order[:keep_count]}
        return Dataset(samples=[(s, l) for s, l in self.samples if s.patient_id in keep],
                       split=self.split)


# -----------------------------------------------------------------------
def split_counts(n_patients: int, ratios: Sequence[float]) -> List[int]:
    """Floor every share and hand the remainder to the first (training) split.

    A split with a non-zero ratio that floored to nothing takes one patient
    from the largest split, so small cohorts still fill every requested split.
    """
    counts = [math.floor(r * n_patients + 1e-9) for r in ratios]
    counts[0] += n_patients - sum(counts)
    for i, ratio in enumerate(ratios):
        if ratio > 0 and counts[i] == 0:
            donor = max(range(len(counts)), key=lambda k: counts[k])
            if counts[donor] < 2:
                break
            counts[donor] -= 1
            counts[i] = 1
    return counts


def split_by_patient(volumes: Sequence[Volume], ratios=DEFAULT_SPLIT_RATIOS,
                     seed: int = 0) -> Tuple[Dataset, ...]:
    """Patient-disjoint train/val/test datasets.

    A ratio of 0 yields an empty dataset for that split, which gives the
    two-way train/test splits used by the sensitivity sweep.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValueError(f"expected three ratios (train, val, test), got {ratios}")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")
    patients = sorted({v.patient_id for v in volumes})
    nonzero = sum(1 for r in ratios if r > 0)
    if len(patients) < nonzero:
        raise ValueError(f"{len(patients)} patients cannot fill {nonzero} non-empty splits")

    counts = split_counts(len(patients), ratios)

    order = np.random.default_rng(seed).permutation(len(patients))
    shuffled = [patients[i] for i in order]
    assignment: Dict[str, Split] = {}
    start = 0
    for count, split in zip(counts, Split):
        for pid in shuffled[start:start + count]:
            assignment[pid] = split
        start += count

    grouped: Dict[Split, List[Volume]] = {split: [] for split in Split}
    for volume in volumes:
        grouped[assignment[volume.patient_id]].append(volume)
    logger.debug("patient split %s with seed %d: %s", ratios, seed, counts)
    return tuple(Dataset.from_volumes(grouped[split], split) for split in Split)


def expand_orientations(ds: Dataset) -> Dataset:
    """Replace each upright sample with its 8 oriented copies, labelled 0..7."""
    samples = []
    for s, label in ds.samples:
        if label != 0 or s.true_orientation not in (None, 0):
            raise ValueError(f"expansion needs upright samples; {s.key} has label {label}")
        upright = s if s.true_orientation == 0 else s.with_pixels(s.pixels, true_orientation=0)
        for k in LABELS:
            samples.append((apply_orientation(upright, k), k))
    return Dataset(samples=samples, split=ds.split)

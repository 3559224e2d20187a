"""Synthetic short-axis cardiac phantoms.

Each slice shows a body outline, a left-ventricle blood pool inside a
myocardial ring, a right-ventricle crescent and a small bright marker placed
above and right of the image centre with |dy| > |dx|. The marker alone has no
partner position under any of the 8 orientation transforms, so every phantom
has a unique orientation label.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
from scipy import ndimage

from src.imgops.slice import Modality, Slice
from src.data.dataset import Volume
from src.utils.config import worker_count
from src.utils.constants import DEFAULT_IMAGE_SIZE, DEFAULT_IN_CHANNELS, MODALITIES

logger = logging.getLogger(__name__)

MARKER_INTENSITY = 1.0

# body, myocardium, LV blood, RV blood, smoothing sigma (px), noise sigma
INTENSITY_PROFILES: Dict[Modality, dict] = {
    Modality.C0: dict(body=0.30, myo=0.25, lv=0.75, rv=0.70, smooth=1.0, noise=0.02),
    Modality.LGE: dict(body=0.20, myo=0.85, lv=0.40, rv=0.35, smooth=0.6, noise=0.04),
    Modality.T2: dict(body=0.45, myo=0.35, lv=0.15, rv=0.15, smooth=0.5, noise=0.12),
}


@dataclass(frozen=True)
class PhantomSpec:
    n_patients: int
    slices_per_patient: int = 5
    image_size: int = DEFAULT_IMAGE_SIZE
    modality: Modality = Modality.C0
    seed: int = 0
    channels: int = DEFAULT_IN_CHANNELS
    noise: bool = True

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality.parse(self.modality))
        if self.n_patients < 1:
            raise ValueError(f"n_patients must be >= 1, got {self.n_patients}")
        if self.slices_per_patient < 1:
            raise ValueError(f"slices_per_patient must be >= 1, got {self.slices_per_patient}")
        if self.image_size < 16:
            raise ValueError(f"image_size must be >= 16, got {self.image_size}")
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")


@dataclass(frozen=True)
class PatientGeometry:
    center: tuple
    body_axes: tuple
    body_angle: float
    lv_offset: tuple
    lv_radius: float
    myo_thickness: float
    rv_axes: tuple
    rv_angle: float
    marker_offset: tuple
    marker_radius: float


def patient_id(index: int) -> str:
    return f"P{index + 1:03d}"


def sample_geometry(seed: int, index: int, size: int) -> PatientGeometry:
    """Anatomy of one patient; shared by all modalities of that patient."""
    rng = np.random.default_rng([seed, index])
    c = (size - 1) / 2.0
    jitter = rng.uniform(-0.04, 0.04, size=2) * size
    return PatientGeometry(
        center=(c + jitter[0], c + jitter[1]),
        body_axes=(rng.uniform(0.32, 0.38) * size, rng.uniform(0.40, 0.46) * size),
        body_angle=rng.uniform(-0.2, 0.2),
        lv_offset=(rng.uniform(-0.02, 0.02) * size, rng.uniform(0.04, 0.08) * size),
        lv_radius=rng.uniform(0.09, 0.12) * size,
        myo_thickness=rng.uniform(0.035, 0.05) * size,
        rv_axes=(rng.uniform(0.14, 0.18) * size, rng.uniform(0.10, 0.14) * size),
        rv_angle=rng.uniform(-0.3, 0.3),
        marker_offset=(-rng.uniform(0.30, 0.36) * size, rng.uniform(0.12, 0.18) * size),
        marker_radius=max(1.0, 0.06 * size),
    )


def _ellipse(shape, center, axes, angle=0.0) -> np.ndarray:
    """Boolean mask of a rotated ellipse; axes are (semi-axis in y, semi-axis in x)."""
    y, x = np.ogrid[:shape[0], :shape[1]]
    dy, dx = y - center[0], x - center[1]
    cos, sin = np.cos(angle), np.sin(angle)
    u = dx * cos + dy * sin
    v = -dx * sin + dy * cos
    return (v / axes[0]) ** 2 + (u / axes[1]) ** 2 <= 1.0


def render_slice(geom: PatientGeometry, size: int, modality: Modality, depth: float,
                 rng: np.random.Generator | None) -> np.ndarray:
    """One 2D image; *depth* in [0, 1] runs from base to apex."""
    profile = INTENSITY_PROFILES[modality]
    shape = (size, size)
    image = np.zeros(shape, dtype=np.float64)

    image[_ellipse(shape, geom.center, geom.body_axes, geom.body_angle)] = profile["body"]

    shrink = 1.0 - 0.35 * depth
    lv_center = (geom.center[0] + geom.lv_offset[0], geom.center[1] + geom.lv_offset[1])
    lv_r = geom.lv_radius * shrink
    outer_r = lv_r + geom.myo_thickness
    rv_axes = (geom.rv_axes[0] * shrink, geom.rv_axes[1] * (1.0 - 0.5 * depth))
    rv_center = (lv_center[0], lv_center[1] - outer_r - 0.6 * rv_axes[1])

    image[_ellipse(shape, rv_center, rv_axes, geom.rv_angle)] = profile["rv"]
    image[_ellipse(shape, lv_center, (outer_r, outer_r))] = profile["myo"]
    image[_ellipse(shape, lv_center, (lv_r, lv_r))] = profile["lv"]

    if profile["smooth"] > 0:
        image = ndimage.gaussian_filter(image, sigma=profile["smooth"])

    c = (size - 1) / 2.0
    marker_center = (c + geom.marker_offset[0], c + geom.marker_offset[1])
    r = geom.marker_radius
    image[_ellipse(shape, marker_center, (r, r))] = MARKER_INTENSITY

    if rng is not None:
        # magnitude of complex Gaussian noise, as in MR magnitude images
        sigma = profile["noise"]
        real = image + rng.normal(0.0, sigma, size=shape)
        imag = rng.normal(0.0, sigma, size=shape)
        image = np.sqrt(real ** 2 + imag ** 2)
    return image


def _generate_volume(spec: PhantomSpec, index: int) -> Volume:
    geom = sample_geometry(spec.seed, index, spec.image_size)
    modality_code = MODALITIES.index(spec.modality.value)
    slices = []
    for k in range(spec.slices_per_patient):
        depth = k / max(spec.slices_per_patient - 1, 1)
        rng = np.random.default_rng([spec.seed, index, modality_code, k]) if spec.noise else None
        image = render_slice(geom, spec.image_size, spec.modality, depth, rng)
        pixels = np.repeat(image[np.newaxis].astype(np.float32), spec.channels, axis=0)
        slices.append(Slice(pixels=pixels, patient_id=patient_id(index), modality=spec.modality,
                            true_orientation=0, slice_index=k))
    return Volume(slices=tuple(slices))


def generate_phantoms(spec: PhantomSpec) -> List[Volume]:
    """One volume per patient, deterministic given PhantomSpec.seed."""
    workers = min(worker_count(), spec.n_patients)
    logger.info("generating %d %s phantoms (%d slices, %dpx, seed %d)", spec.n_patients,
                spec.modality.value, spec.slices_per_patient, spec.image_size, spec.seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda i: _generate_volume(spec, i), range(spec.n_patients)))
    return [_generate_volume(spec, i) for i in range(spec.n_patients)]


def generate_all_modalities(n_patients: int, slices_per_patient: int, image_size: int,
                            seed: int, modalities=MODALITIES, noise: bool = True) -> Dict[str, List[Volume]]:
    """Same patients and anatomy, one volume list per modality."""
    return {
        str(m): generate_phantoms(PhantomSpec(n_patients=n_patients, slices_per_patient=slices_per_patient,
                                              image_size=image_size, modality=m, seed=seed, noise=noise))
        for m in modalities
    }

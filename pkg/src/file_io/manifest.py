"""Dataset directories: one .ori8 file per slice plus a tab-separated manifest."""
import logging
import os
import re
from collections import defaultdict
from typing import Dict, List, Tuple

from src.data.dataset import Volume
from src.file_io.file_handler import read_image, write_image
from src.utils.constants import MANIFEST_NAME, SLICE_FILE_PATTERN

logger = logging.getLogger(__name__)

_SLICE_INDEX = re.compile(r"slice_(\d+)")


class ManifestError(Exception):
    pass


def slice_path(volume: Volume, index: int) -> str:
    """Relative path of one slice file, always with forward slashes."""
    return "/".join([volume.modality.value, volume.patient_id, SLICE_FILE_PATTERN.format(index=index)])


def save_volumes(volumes: List[Volume], out_dir: str, manifest_name: str = MANIFEST_NAME) -> str:
    """Write every slice and (re)write the manifest; returns the manifest path.

    Existing manifest lines for other modalities are kept, so several
    modalities can share one data directory.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, manifest_name)
    entries: Dict[str, str] = {}
    if os.path.exists(manifest_path):
        for rel_path, line in _read_lines(manifest_path):
            entries[rel_path] = line

    for volume in volumes:
        for s in volume.slices:
            rel_path = slice_path(volume, s.slice_index)
            write_image(s, os.path.join(out_dir, *rel_path.split("/")))
            label = 0 if s.true_orientation is None else s.true_orientation
            entries[rel_path] = "\t".join([rel_path, s.patient_id, s.modality.value, str(label)])

    with open(manifest_path, 'w', encoding='utf-8', newline='\n') as f:
        for rel_path in sorted(entries):
            f.write(entries[rel_path] + "\n")
    logger.info("wrote %d volumes to %s", len(volumes), out_dir)
    return manifest_path


def _read_lines(manifest_path: str) -> List[Tuple[str, str]]:
    rows = []
    with open(manifest_path, 'r', encoding='utf-8') as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ManifestError(f"{manifest_path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
            rows.append((fields[0], line))
    return rows


def load_volumes(data_dir: str, modality: str | None = None,
                 manifest_name: str = MANIFEST_NAME) -> List[Volume]:
    """Read the volumes listed in the manifest, optionally one modality only."""
    manifest_path = os.path.join(data_dir, manifest_name)
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"no manifest at {manifest_path}")

    grouped: Dict[Tuple[str, str], list] = defaultdict(list)
    for lineno, (rel_path, line) in enumerate(_read_lines(manifest_path), start=1):
        _, patient, mod, label = line.split("\t")
        if modality is not None and mod != str(modality):
            continue
        try:
            label_value = int(label)
        except ValueError:
            raise ManifestError(f"{manifest_path}: bad label {label!r} for {rel_path}") from None
        match = _SLICE_INDEX.search(os.path.basename(rel_path))
        index = int(match.group(1)) if match else len(grouped[(patient, mod)])
        s = read_image(os.path.join(data_dir, *rel_path.split("/")),
                       patient_id=patient, modality=mod, true_orientation=label_value,
                       slice_index=index)
        grouped[(patient, mod)].append(s)

    volumes = []
    for key in sorted(grouped):
        slices = sorted(grouped[key], key=lambda s: s.slice_index)
        volumes.append(Volume(slices=tuple(slices)))
    logger.info("loaded %d volumes from %s", len(volumes), data_dir)
    return volumes

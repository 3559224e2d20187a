"""File handler supporting binary PGM (.pgm) and native raw tensor (.ori8) slices."""
import os
import struct

import numpy as np
from PIL import Image

from src.imgops.slice import Modality, Slice
from src.utils.constants import IMAGE_MAGIC, IMAGE_VERSION, NATIVE_EXTENSION, PGM_EXTENSIONS

SUPPORTED = {NATIVE_EXTENSION, *PGM_EXTENSIONS}
_WHITESPACE = b" \t\r\n\v\f"


class UnsupportedFormatError(Exception):
    pass


class ImageFormatError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class FileHandler:
    """Load and save slices in multiple formats."""

    # ------------------------------------------------------------------
    def load_file(self, path: str, **metadata) -> Slice:
        """Return the slice stored in *path*.

        *metadata* (patient_id, modality, true_orientation) fills the fields a
        PGM file cannot carry.
        """
        ext = os.path.splitext(path)[1].lower()
        if ext not in SUPPORTED:
            raise UnsupportedFormatError(f"Unsupported file extension: {ext}")
        with open(path, 'rb') as f:
            data = f.read()
        if ext == NATIVE_EXTENSION:
            return self._decode_native(data, **metadata)
        return Slice(pixels=self._decode_pgm(data), **metadata)

    # ------------------------------------------------------------------
    def save_file(self, path: str, slice_: Slice, bits: int = 8) -> None:
        """Save *slice_* to *path* in the format its extension names."""
        ext = os.path.splitext(path)[1].lower()
        if ext not in SUPPORTED:
            raise UnsupportedFormatError(f"Unsupported file extension: {ext}")

        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)

        if ext == NATIVE_EXTENSION:
            with open(path, 'wb') as f:
                f.write(self._encode_native(slice_))
        else:
            self._save_pgm(path, slice_, bits)

    # ------------------------------------------------------------------
    def _encode_native(self, slice_: Slice) -> bytes:
        c, h, w = slice_.pixels.shape
        orientation = "" if slice_.true_orientation is None else str(slice_.true_orientation)
        parts = [IMAGE_MAGIC, struct.pack('<4I', IMAGE_VERSION, c, h, w),
                 np.ascontiguousarray(slice_.pixels, dtype='<f4').tobytes()]
        for text in (slice_.patient_id, slice_.modality.value, orientation):
            encoded = text.encode('utf-8')
            parts.append(struct.pack('<H', len(encoded)) + encoded)
        return b"".join(parts)

    def _decode_native(self, data: bytes, **overrides) -> Slice:
        if data[:4] != IMAGE_MAGIC:
            raise ImageFormatError(f"bad magic {data[:4]!r}, expected {IMAGE_MAGIC!r}", 0)
        if len(data) < 20:
            raise ImageFormatError("truncated header", len(data))
        version, c, h, w = struct.unpack_from('<4I', data, 4)
        if version != IMAGE_VERSION:
            raise ImageFormatError(f"unsupported version {version}", 4)
        if c < 1 or h < 2 or w < 2:
            raise ImageFormatError(f"invalid dims channels={c} height={h} width={w}", 8)
        offset = 20
        nbytes = 4 * c * h * w
        if len(data) < offset + nbytes:
            raise ImageFormatError(f"pixel data needs {nbytes} bytes, {len(data) - offset} present", offset)
        pixels = np.frombuffer(data, dtype='<f4', count=c * h * w, offset=offset).reshape(c, h, w)
        offset += nbytes

        fields = []
        for what in ("patient id", "modality", "orientation"):
            if len(data) < offset + 2:
                raise ImageFormatError(f"truncated {what} length", offset)
            (length,) = struct.unpack_from('<H', data, offset)
            if len(data) < offset + 2 + length:
                raise ImageFormatError(f"truncated {what}", offset + 2)
            try:
                fields.append(data[offset + 2:offset + 2 + length].decode('utf-8'))
            except UnicodeDecodeError:
                raise ImageFormatError(f"{what} is not UTF-8", offset + 2) from None
            offset += 2 + length
        if offset != len(data):
            raise ImageFormatError(f"{len(data) - offset} trailing bytes after metadata", offset)

        patient_id, modality, orientation = fields
        try:
            metadata = {
                "patient_id": patient_id,
                "modality": Modality.parse(modality),
                "true_orientation": int(orientation) if orientation else None,
            }
            metadata.update(overrides)
            return Slice(pixels=pixels.astype(np.float32), **metadata)
        except ValueError as exc:
            raise ImageFormatError(f"invalid metadata: {exc}", offset) from None

    # ------------------------------------------------------------------
    def _decode_pgm(self, data: bytes) -> np.ndarray:
        """Binary PGM (P5) to a [1, H, W] array scaled to [0, 1]."""
        if data[:2] != b"P5":
            raise ImageFormatError(f"bad magic {data[:2]!r}, expected b'P5'", 0)
        offset = 2
        values = []
        while len(values) < 3:
            while offset < len(data) and data[offset] in _WHITESPACE:
                offset += 1
            if offset < len(data) and data[offset:offset + 1] == b"#":
                while offset < len(data) and data[offset] not in b"\r\n":
                    offset += 1
                continue
            start = offset
            while offset < len(data) and data[offset:offset + 1].isdigit():
                offset += 1
            if start == offset:
                raise ImageFormatError("expected a decimal header field", start)
            values.append((int(data[start:offset]), start))
        (width, w_at), (height, h_at), (maxval, m_at) = values
        if width < 2:
            raise ImageFormatError(f"invalid width {width}", w_at)
        if height < 2:
            raise ImageFormatError(f"invalid height {height}", h_at)
        if not 0 < maxval < 65536:
            raise ImageFormatError(f"maxval must be in 1..65535, got {maxval}", m_at)
        if offset >= len(data) or data[offset] not in _WHITESPACE:
            raise ImageFormatError("expected one whitespace byte after maxval", offset)
        offset += 1

        dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
        needed = width * height * dtype.itemsize
        if len(data) - offset < needed:
            raise ImageFormatError(f"raster needs {needed} bytes, {len(data) - offset} present", offset)
        raster = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset)
        if raster.max(initial=0) > maxval:
            raise ImageFormatError(f"sample exceeds maxval {maxval}", offset)
        return (raster.astype(np.float64) / maxval).reshape(1, height, width).astype(np.float32)

    def _save_pgm(self, path: str, slice_: Slice, bits: int) -> None:
        """Write channel 0, clipped to [0, 1], as 8- or 16-bit P5."""
        if bits not in (8, 16):
            raise ValueError(f"PGM depth must be 8 or 16 bits, got {bits}")
        scaled = np.clip(slice_.pixels[0].astype(np.float64), 0.0, 1.0)
        if bits == 8:
            image = Image.fromarray(np.rint(scaled * 255).astype(np.uint8))
        else:
            image = Image.fromarray(np.rint(scaled * 65535).astype(np.int32))
        image.save(path, format="PPM")


_handler = FileHandler()


def read_image(path: str, **metadata) -> Slice:
    return _handler.load_file(path, **metadata)


def write_image(slice_: Slice, path: str, bits: int = 8) -> None:
    _handler.save_file(path, slice_, bits)


def write_preview_png(slice_: Slice, path: str) -> None:
    """Min-max scaled 8-bit PNG of channel 0, for eyeballing phantoms."""
    channel = slice_.pixels[0].astype(np.float64)
    span = channel.max() - channel.min()
    scaled = (channel - channel.min()) / span if span > 0 else np.zeros_like(channel)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(np.rint(scaled * 255).astype(np.uint8)).save(path, format="PNG")

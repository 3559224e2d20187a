"""Tests for FileHandler and the dataset manifest."""
import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest
from PIL import Image

from src.data.phantoms import PhantomSpec, generate_phantoms
from src.file_io.file_handler import (
    FileHandler, ImageFormatError, UnsupportedFormatError, read_image, write_image, write_preview_png,
)
from src.file_io.manifest import ManifestError, load_volumes, save_volumes
from src.imgops.slice import Modality, Slice
from src.utils.constants import MANIFEST_NAME


@pytest.fixture
def handler():
    return FileHandler()


@pytest.fixture
def sample():
    pixels = np.random.default_rng(0).normal(size=(3, 5, 4)).astype(np.float32)
    return Slice(pixels=pixels, patient_id="P007", modality=Modality.T2, true_orientation=6, slice_index=2)


def test_native_round_trip(handler, tmp_path, sample):
    p = tmp_path / "x.ori8"
    handler.save_file(str(p), sample)
    loaded = handler.load_file(str(p))
    assert np.array_equal(loaded.pixels, sample.pixels)
    assert (loaded.patient_id, loaded.modality, loaded.true_orientation) == ("P007", Modality.T2, 6)


def test_native_absent_orientation(tmp_path):
    p = tmp_path / "y.ori8"
    write_image(Slice(pixels=np.ones((2, 2))), str(p))
    assert read_image(str(p)).true_orientation is None


def test_native_bad_magic(tmp_path, sample):
    p = tmp_path / "z.ori8"
    write_image(sample, str(p))
    data = bytearray(p.read_bytes())
    data[0:4] = b"XXXX"
    p.write_bytes(bytes(data))
    with pytest.raises(ImageFormatError) as err:
        read_image(str(p))
    assert err.value.offset == 0


def test_native_truncated_pixels(tmp_path, sample):
    p = tmp_path / "t.ori8"
    write_image(sample, str(p))
    p.write_bytes(p.read_bytes()[:30])
    with pytest.raises(ImageFormatError) as err:
        read_image(str(p))
    assert err.value.offset == 20


def test_native_trailing_bytes(tmp_path, sample):
    p = tmp_path / "j.ori8"
    write_image(sample, str(p))
    size = len(p.read_bytes())
    p.write_bytes(p.read_bytes() + b"junk")
    with pytest.raises(ImageFormatError) as err:
        read_image(str(p))
    assert err.value.offset == size
    assert "4 trailing bytes" in str(err.value)


def test_native_bad_dims(tmp_path, sample):
    p = tmp_path / "d.ori8"
    write_image(sample, str(p))
    data = bytearray(p.read_bytes())
    data[12:16] = (1).to_bytes(4, "little")
    p.write_bytes(bytes(data))
    with pytest.raises(ImageFormatError):
        read_image(str(p))


def test_pgm_bytes(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n\x00\x01\x02\x03")
    loaded = read_image(str(p), patient_id="P001")
    np.testing.assert_allclose(loaded.pixels[0], np.array([[0, 1], [2, 3]]) / 255.0, rtol=1e-6)
    assert loaded.patient_id == "P001"


def test_pgm_comment_and_16_bit(tmp_path):
    p = tmp_path / "b.pgm"
    p.write_bytes(b"P5 # made by hand\n2 2 65535\n" + bytes([0, 0, 0xFF, 0xFF, 0x80, 0x00, 0x00, 0x01]))
    loaded = read_image(str(p))
    np.testing.assert_allclose(loaded.pixels[0], [[0, 1], [32768 / 65535, 1 / 65535]], rtol=1e-6)


@pytest.mark.parametrize("data,offset", [
    (b"P2\n2 2\n255\n\x00\x00\x00\x00", 0),
    (b"P5\n2 2\n0\n\x00\x00\x00\x00", 7),
    (b"P5\n1 2\n255\n\x00\x00", 3),
    (b"P5\n2 2\n255\n\x00\x00", 11),
])
def test_pgm_errors(tmp_path, data, offset):
    p = tmp_path / "bad.pgm"
    p.write_bytes(data)
    with pytest.raises(ImageFormatError) as err:
        read_image(str(p))
    assert err.value.offset == offset


def test_pgm_written_by_pillow_reads_back(tmp_path):
    s = Slice(pixels=np.array([[0.0, 0.5], [1.0, 0.25]]))
    p = tmp_path / "w.pgm"
    write_image(s, str(p))
    with Image.open(str(p)) as img:
        assert img.size == (2, 2)
    np.testing.assert_allclose(read_image(str(p)).pixels, s.pixels, atol=1 / 255)
    write_image(s, str(p), bits=16)
    np.testing.assert_allclose(read_image(str(p)).pixels, s.pixels, atol=1 / 65535)


def test_unsupported_extension_raises(handler, tmp_path, sample):
    with pytest.raises(UnsupportedFormatError):
        handler.load_file(str(tmp_path / "scan.dcm"))
    with pytest.raises(UnsupportedFormatError):
        handler.save_file(str(tmp_path / "scan.png"), sample)


def test_preview_png(tmp_path, sample):
    p = tmp_path / "previews" / "p.png"
    write_preview_png(sample, str(p))
    with Image.open(str(p)) as img:
        assert img.mode == "L"
        assert img.size == (4, 5)


# ----------------------------------------------------------------------
def test_manifest_round_trip(tmp_path):
    volumes = generate_phantoms(PhantomSpec(n_patients=2, slices_per_patient=3, image_size=16, modality="LGE"))
    save_volumes(volumes, str(tmp_path))
    lines = (tmp_path / MANIFEST_NAME).read_text(encoding="utf-8").splitlines()
    assert lines[0] == "LGE/P001/slice_000.ori8\tP001\tLGE\t0"
    assert len(lines) == 6

    loaded = load_volumes(str(tmp_path))
    assert [v.patient_id for v in loaded] == ["P001", "P002"]
    for original, back in zip(volumes, loaded):
        assert [s.slice_index for s in back.slices] == [0, 1, 2]
        for a, b in zip(original.slices, back.slices):
            assert np.array_equal(a.pixels, b.pixels)


def test_manifest_keeps_other_modalities(tmp_path):
    for modality in ("C0", "T2"):
        save_volumes(generate_phantoms(PhantomSpec(n_patients=1, slices_per_patient=1, image_size=16,
                                                   modality=modality)), str(tmp_path))
    assert [v.modality.value for v in load_volumes(str(tmp_path))] == ["C0", "T2"]
    assert [v.modality.value for v in load_volumes(str(tmp_path), "T2")] == ["T2"]


def test_manifest_missing_and_malformed(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_volumes(str(tmp_path))
    (tmp_path / MANIFEST_NAME).write_text("only\ttwo\n", encoding="utf-8")
    with pytest.raises(ManifestError):
        load_volumes(str(tmp_path))

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from fusion_tools.errors import InputError, ShapeError
from fusion_tools.image_io import load_pair, save_fused, save_gray, to_bytes
from fusion_tools.tensor import Rng


def _write(path: Path, pixels: np.ndarray) -> Path:
    Image.fromarray(pixels).save(path)
    return path


class TestLoadPair:
    def test_white_pixel_is_one(self, tmp_path: Path):
        rgb = _write(tmp_path / "rgb.png", np.full((8, 8, 3), 255, np.uint8))
        ir = _write(tmp_path / "ir.png", np.full((8, 8), 255, np.uint8))
        x = load_pair(rgb, ir, 8)
        assert x.shape == (1, 4, 8, 8) and x.dtype == np.float32
        assert np.all(x == 1.0)

    def test_target_size_is_not_resampled(self, tmp_path: Path):
        stream = Rng(0).stream("io.pixels")
        pixels = stream.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        gray = stream.integers(0, 256, size=(16, 16), dtype=np.uint8)
        x = load_pair(_write(tmp_path / "rgb.png", pixels), _write(tmp_path / "ir.png", gray), 16)
        np.testing.assert_array_equal(x[0, :3], (pixels / 255.0).transpose(2, 0, 1).astype(np.float32))
        np.testing.assert_array_equal(x[0, 3], (gray / 255.0).astype(np.float32))

    def test_three_channel_ir_is_averaged(self, tmp_path: Path):
        rgb = _write(tmp_path / "rgb.png", np.zeros((4, 4, 3), np.uint8))
        ir_pixels = np.tile(np.array([10, 20, 30], np.uint8), (4, 4, 1))
        x = load_pair(rgb, _write(tmp_path / "ir.png", ir_pixels), 4)
        np.testing.assert_allclose(x[0, 3], 20 / 255, atol=1e-7)

    def test_alpha_channel_is_dropped(self, tmp_path: Path):
        rgba = np.zeros((4, 4, 4), np.uint8)
        rgba[..., 0] = 255
        x = load_pair(_write(tmp_path / "rgb.png", rgba), _write(tmp_path / "ir.png", np.zeros((4, 4), np.uint8)), 4)
        assert np.all(x[0, 0] == 1.0) and not x[0, 1:].any()

    def test_pair_is_resized(self, image_pair):
        x = load_pair(*image_pair, 32)
        assert x.shape == (1, 4, 32, 32)
        assert x.min() >= 0.0 and x.max() <= 1.0

    def test_constant_image_survives_resize(self, tmp_path: Path):
        rgb = _write(tmp_path / "rgb.png", np.full((10, 30, 3), 51, np.uint8))
        ir = _write(tmp_path / "ir.png", np.full((20, 20), 102, np.uint8))
        x = load_pair(rgb, ir, 16)
        np.testing.assert_allclose(x[0, :3], 0.2, atol=1e-6)
        np.testing.assert_allclose(x[0, 3], 0.4, atol=1e-6)

    def test_missing_file_names_path(self, tmp_path: Path, image_pair):
        missing = tmp_path / "nope.png"
        with pytest.raises(InputError, match="nope.png"):
            load_pair(image_pair[0], missing, 16)

    def test_undecodable_file(self, tmp_path: Path, image_pair):
        broken = tmp_path / "broken.png"
        broken.write_bytes(b"not a png")
        with pytest.raises(InputError, match="broken.png"):
            load_pair(broken, image_pair[1], 16)

    def test_unsupported_mode(self, tmp_path: Path, image_pair):
        cmyk = tmp_path / "cmyk.jpg"
        Image.new("CMYK", (4, 4)).save(cmyk)
        with pytest.raises(InputError, match="mode"):
            load_pair(cmyk, image_pair[1], 4)


class TestToBytes:
    def test_rounding(self):
        assert to_bytes(np.array([0.0, 0.5, 1.0, 1.0 / 255])).tolist() == [0, 128, 255, 1]

    def test_clipping(self):
        assert to_bytes(np.array([-0.3, 1.7])).tolist() == [0, 255]


class TestSaveFused:
    def test_round_trip_error(self, tmp_path: Path):
        fused = Rng(2).uniform(0, 1, (1, 3, 8, 8), name="io.fused")
        path = tmp_path / "fused.png"
        save_fused(fused, path)
        _write(tmp_path / "ir.png", np.zeros((8, 8), np.uint8))
        reloaded = load_pair(path, tmp_path / "ir.png", 8)[:, :3]
        assert np.abs(reloaded - fused).max() <= 1 / 510 + 1e-7

    def test_writes_rgb_png(self, tmp_path: Path):
        path = tmp_path / "fused.png"
        save_fused(np.full((1, 3, 4, 6), 0.5, np.float32), path)
        with Image.open(path) as image:
            assert image.format == "PNG" and image.mode == "RGB" and image.size == (6, 4)
            assert np.all(np.asarray(image) == 128)

    def test_rejects_wrong_shape(self, tmp_path: Path):
        with pytest.raises(ShapeError):
            save_fused(np.zeros((1, 4, 4, 4)), tmp_path / "x.png")

    def test_unwritable_path(self, tmp_path: Path):
        with pytest.raises(InputError):
            save_fused(np.zeros((1, 3, 4, 4)), tmp_path / "missing" / "x.png")


class TestSaveGray:
    def test_normalized_stretch(self, tmp_path: Path):
        path = tmp_path / "gray.png"
        save_gray(np.array([[2.0, 4.0], [6.0, 10.0]]), path)
        with Image.open(path) as image:
            assert image.mode == "L"
            assert np.asarray(image).tolist() == [[0, 64], [128, 255]]

    def test_constant_plane_is_black(self, tmp_path: Path):
        path = tmp_path / "flat.png"
        save_gray(np.full((3, 3), 7.0), path)
        with Image.open(path) as image:
            assert not np.asarray(image).any()

    def test_mask_without_normalizing(self, tmp_path: Path):
        path = tmp_path / "mask.png"
        save_gray(np.array([[1.0, 0.0]]), path, normalize=False)
        with Image.open(path) as image:
            assert np.asarray(image).tolist() == [[255, 0]]

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from fusion_tools.models import FusionConfig
from fusion_tools.tensor import Rng

GOLDEN_DIR = Path(__file__).parent / "golden"


def pytest_addoption(parser):
    parser.addoption("--slow", action="store_true", default=False, help="run slow tests")
    parser.addoption(
        "--update-golden", action="store_true", default=False, help="rewrite the pinned files in tests/golden"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--slow"):
        return
    skip_slow = pytest.mark.skip(reason="slow test, only evaluated with 'pytest --slow'")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def golden(request):
    """Compare against a pinned file in tests/golden.

    Arrays are stored as .npy and compared within `atol`; bytes are compared exactly.
    A missing file fails the test; `pytest --update-golden` (re)writes the files.
    """
    update = request.config.getoption("--update-golden")

    def check(name: str, value, atol: float = 1e-6):
        is_bytes = isinstance(value, (bytes, bytearray))
        path = GOLDEN_DIR / (name if is_bytes else f"{name}.npy")
        if update:
            GOLDEN_DIR.mkdir(exist_ok=True)
            if is_bytes:
                path.write_bytes(value)
            else:
                np.save(path, value)
        if not path.exists():
            pytest.fail(f"golden file {path.name} is missing; run 'pytest --update-golden' to pin it")
        if is_bytes:
            assert path.read_bytes() == value, f"{name} differs from the pinned golden file"
        else:
            np.testing.assert_allclose(value, np.load(path), rtol=0, atol=atol)

    return check


@pytest.fixture
def small_config() -> FusionConfig:
    return FusionConfig(seed=3, channels=8, heads=2, window=4, region_grid=4, image_size=16)


@pytest.fixture
def rng() -> Rng:
    return Rng(1234)


@pytest.fixture
def image_pair(tmp_path: Path):
    """A deterministic 8-bit RGB/IR PNG pair on disk, 40 x 24 pixels."""
    stream = Rng(7).stream("fixture.pair")
    rgb = stream.integers(0, 256, size=(24, 40, 3), dtype=np.uint8)
    ir = stream.integers(0, 256, size=(24, 40), dtype=np.uint8)
    rgb_path, ir_path = tmp_path / "rgb.png", tmp_path / "ir.png"
    Image.fromarray(rgb).save(rgb_path)
    Image.fromarray(ir).save(ir_path)
    return rgb_path, ir_path

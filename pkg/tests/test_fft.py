import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusion_tools.errors import ShapeError, SymmetryError
from fusion_tools.fft import Spectrum, amplitude, dft2, idft2, idft2_with_residue
from fusion_tools.oracles import naive_dft2
from fusion_tools.tensor import Rng

SQUARE = np.array([[[[1.0, 2.0], [3.0, 4.0]]]], dtype=np.float32)


def _random(size_h: int, size_w: int, channels: int = 1, seed: int = 0) -> np.ndarray:
    return Rng(seed).uniform(0.0, 1.0, (1, channels, size_h, size_w), name="fft.input")


class TestDft2:
    def test_constant_image_is_dc_only(self):
        spectrum = dft2(np.full((1, 1, 8, 4), 0.5, dtype=np.float32)).to_complex()[0]
        assert spectrum[0, 0] == pytest.approx(0.5 * 32)
        spectrum[0, 0] = 0
        assert np.abs(spectrum).max() < 1e-5

    def test_two_by_two(self):
        spectrum = dft2(SQUARE)
        np.testing.assert_allclose(spectrum.re[0], [[10.0, -2.0], [-4.0, 0.0]], atol=1e-6)
        np.testing.assert_allclose(spectrum.im[0], 0.0, atol=1e-6)

    @pytest.mark.parametrize("size", [4, 8, 16])
    def test_matches_naive_oracle(self, size: int):
        x = _random(size, size, seed=size)
        np.testing.assert_allclose(dft2(x).to_complex()[0], naive_dft2(x[0, 0]), atol=1e-4)

    @pytest.mark.parametrize("shape", [(12, 6), (5, 7), (16, 3)])
    def test_non_power_of_two_matches_oracle(self, shape):
        x = _random(*shape, seed=1)
        np.testing.assert_allclose(dft2(x).to_complex()[0], naive_dft2(x[0, 0]), atol=1e-4)

    @pytest.mark.parametrize("size", [32, 64])
    def test_matches_numpy_fft(self, size: int):
        x = _random(size, size, channels=3, seed=2)
        np.testing.assert_allclose(
            dft2(x).to_complex(), np.fft.fft2(x[0].astype(np.float64)), atol=1e-3 * size
        )

    @pytest.mark.parametrize("shape", [(8, 8), (32, 16), (12, 6)])
    def test_parseval(self, shape):
        x = _random(*shape, channels=2, seed=5)
        spatial = np.sum(x.astype(np.float64) ** 2)
        spectral = np.sum(np.abs(dft2(x).to_complex().astype(np.complex128)) ** 2) / (shape[0] * shape[1])
        assert spectral == pytest.approx(spatial, rel=1e-3)

    def test_real_image_spectrum_is_conjugate_symmetric(self):
        assert dft2(_random(16, 32, channels=2)).is_conjugate_symmetric()

    def test_rejects_batches(self):
        with pytest.raises(ShapeError):
            dft2(np.zeros((2, 1, 4, 4)))

    @settings(deadline=None, max_examples=20)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
    def test_linear(self, a: float, b: float, seed: int):
        x = _random(8, 8, seed=seed)
        y = _random(8, 8, seed=seed + 1)
        combined = dft2((a * x + b * y).astype(np.float32)).to_complex()
        separate = a * dft2(x).to_complex() + b * dft2(y).to_complex()
        np.testing.assert_allclose(combined, separate, atol=1e-4)


class TestIdft2:
    @pytest.mark.parametrize("size", [8, 16, 32, 64])
    def test_round_trip(self, size: int):
        x = _random(size, size, channels=3, seed=size)
        assert np.abs(idft2(dft2(x)) - x).max() < 1e-5

    def test_round_trip_non_square(self):
        x = _random(8, 32, seed=4)
        assert np.abs(idft2(dft2(x)) - x).max() < 1e-5

    def test_zero_spectrum(self):
        zeros = np.zeros((1, 4, 4), dtype=np.float32)
        assert not idft2(Spectrum(re=zeros, im=zeros)).any()

    def test_dc_only_is_constant_ones(self):
        re = np.zeros((1, 4, 8), dtype=np.float32)
        re[0, 0, 0] = 32.0
        np.testing.assert_allclose(idft2(Spectrum(re=re, im=np.zeros_like(re))), 1.0, atol=1e-6)

    def test_asymmetric_spectrum_is_rejected(self):
        re = np.zeros((1, 4, 4), dtype=np.float32)
        im = np.zeros_like(re)
        re[0, 0, 1] = 16.0
        _, residue = idft2_with_residue(Spectrum(re=re, im=im))
        assert residue > 1e-3
        with pytest.raises(SymmetryError):
            idft2(Spectrum(re=re, im=im))


class TestAmplitude:
    def test_two_by_two(self):
        np.testing.assert_allclose(amplitude(dft2(SQUARE))[0, 0], [[10.0, 2.0], [4.0, 0.0]], atol=1e-6)

    def test_zero_spectrum(self):
        zeros = np.zeros((2, 4, 4), dtype=np.float32)
        amplitudes = amplitude(Spectrum(re=zeros, im=zeros))
        assert amplitudes.shape == (1, 2, 4, 4)
        assert not amplitudes.any()

    def test_phase_rotation_invariant(self):
        spectrum = dft2(_random(8, 8, seed=3))
        phases = Rng(0).uniform(0, 2 * np.pi, spectrum.dims, name="phase")
        rotated = Spectrum.from_complex(spectrum.to_complex() * np.exp(1j * phases))
        np.testing.assert_allclose(amplitude(rotated), amplitude(spectrum), rtol=1e-5, atol=1e-5)

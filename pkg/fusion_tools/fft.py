"""Two-dimensional discrete Fourier transform of image channels.

Spectra keep the unshifted layout: the DC coefficient sits at index (0, 0)
and no fftshift is applied anywhere. The forward transform is unnormalised,
the inverse divides by H * W.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .decorators import finite_output
from .errors import ShapeError, SymmetryError
from .tensor import DTYPE, Tensor4, as_tensor4

logger = logging.getLogger(__name__)

# Sizes at or below this use the direct transform as the radix-2 base case.
_DIRECT_SIZE = 8
SYMMETRY_TOLERANCE = 1e-3


@dataclass(frozen=True)
class Spectrum:
    """Frequency coefficients of C channels, stored as float32 re/im planes (C, H, W)."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        if self.re.ndim != 3 or self.re.shape != self.im.shape:
            raise ShapeError(
                f"Spectrum planes must share a (C, H, W) shape, got {self.re.shape} and {self.im.shape}"
            )

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.re.shape

    @classmethod
    def from_complex(cls, values: np.ndarray) -> "Spectrum":
        return cls(re=values.real.astype(DTYPE), im=values.imag.astype(DTYPE))

    def to_complex(self) -> np.ndarray:
        return self.re.astype(np.float64) + 1j * self.im.astype(np.float64)

    def mirrored(self) -> np.ndarray:
        """Coefficients at the mirrored frequency ((H - u) mod H, (W - v) mod W)."""
        _, height, width = self.dims
        rows = (-np.arange(height)) % height
        cols = (-np.arange(width)) % width
        return self.to_complex()[:, rows][:, :, cols]

    def is_conjugate_symmetric(self, rtol: float = 1e-4) -> bool:
        values = self.to_complex()
        scale = max(float(np.abs(values).max(initial=0.0)), 1.0)
        return bool(np.abs(values - np.conj(self.mirrored())).max(initial=0.0) <= rtol * scale)


@lru_cache(maxsize=64)
def _dft_matrix(size: int, sign: int) -> np.ndarray:
    index = np.arange(size)
    matrix = np.exp(sign * 2j * np.pi * (np.outer(index, index) % size) / size)
    matrix.setflags(write=False)
    return matrix


def _is_power_of_two(size: int) -> bool:
    return size > 0 and size & (size - 1) == 0


def _transform_last_axis(values: np.ndarray, sign: int) -> np.ndarray:
    """Unnormalised DFT along the last axis; radix-2 Cooley-Tukey for powers of two."""
    size = values.shape[-1]
    if size <= _DIRECT_SIZE or not _is_power_of_two(size):
        return values @ _dft_matrix(size, sign)

    lead = values.shape[:-1]
    # column b holds the stride-L subsequence starting at b
    blocks = values.reshape(lead + (_DIRECT_SIZE, size // _DIRECT_SIZE))
    out = _dft_matrix(_DIRECT_SIZE, sign) @ blocks
    while out.shape[-2] < size:
        half = out.shape[-1] // 2
        even = out[..., :half]
        odd = out[..., half:]
        current = out.shape[-2]
        twiddle = np.exp(sign * 1j * np.pi * np.arange(current) / current)[:, None]
        out = np.concatenate([even + twiddle * odd, even - twiddle * odd], axis=-2)
    return out.reshape(lead + (size,))


def _transform2(values: np.ndarray, sign: int) -> np.ndarray:
    rows_done = _transform_last_axis(values, sign)
    cols_done = _transform_last_axis(np.swapaxes(rows_done, -1, -2), sign)
    return np.swapaxes(cols_done, -1, -2)


def _single_batch(x: Tensor4) -> np.ndarray:
    x = as_tensor4(x, "dft2 input")
    if x.shape[0] != 1:
        raise ShapeError(f"dft2 transforms one batch element at a time, got batch {x.shape[0]}")
    if x.shape[2] < 1 or x.shape[3] < 1:
        raise ShapeError(f"dft2 needs H, W >= 1, got {x.shape}")
    return x[0].astype(np.complex128)


@finite_output
def dft2(x: Tensor4) -> Spectrum:
    """Channel-wise forward transform of a (1, C, H, W) tensor."""
    return Spectrum.from_complex(_transform2(_single_batch(x), sign=-1))


@finite_output
def idft2_with_residue(spectrum: Spectrum) -> Tuple[Tensor4, float]:
    """Inverse transform and the largest imaginary magnitude that was discarded."""
    _, height, width = spectrum.dims
    values = _transform2(spectrum.to_complex(), sign=1) / (height * width)
    residue = float(np.abs(values.imag).max(initial=0.0))
    logger.debug("idft2 imaginary residue %.3e", residue)
    return values.real.astype(DTYPE)[None], residue


def idft2(spectrum: Spectrum, tolerance: float = SYMMETRY_TOLERANCE) -> Tensor4:
    """Real part of the inverse transform as a (1, C, H, W) tensor.

    Raises:
        SymmetryError: the imaginary residue exceeds `tolerance`, which means
            the spectrum (or the mask applied to it) was not conjugate symmetric.
    """
    image, residue = idft2_with_residue(spectrum)
    if residue > tolerance:
        raise SymmetryError(
            f"inverse transform left an imaginary residue of {residue:.3e} (> {tolerance:g}); "
            "the spectrum is not conjugate symmetric"
        )
    return image


@finite_output
def amplitude(spectrum: Spectrum) -> Tensor4:
    """Per-coefficient magnitude sqrt(re^2 + im^2) as a (1, C, H, W) tensor."""
    magnitude = np.hypot(spectrum.re.astype(np.float64), spectrum.im.astype(np.float64))
    return magnitude.astype(DTYPE)[None]

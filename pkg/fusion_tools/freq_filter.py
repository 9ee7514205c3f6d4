"""Per-modality spectral denoising with an encoder-ranked top-k mask and alpha blending."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .constants.modalities import INPUT_CHANNELS, Modality
from .decorators import finite_output
from .errors import ShapeError, SymmetryError
from .fft import SYMMETRY_TOLERANCE, Spectrum, amplitude, dft2, idft2_with_residue
from .models import FilterConfig
from .params import FilterParams
from .tensor import DTYPE, Tensor4, as_tensor4, concat, conv2d, mean, relu

logger = logging.getLogger(__name__)

Encoder = Callable[[Tensor4], Tensor4]


@dataclass(frozen=True)
class SpectralMask:
    """Binary (H, W) retention map, conjugate symmetric with DC kept."""

    values: np.ndarray
    selected: int  # positions picked by ranking, before symmetrisation

    @property
    def cardinality(self) -> int:
        return int(self.values.sum())

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.values, _mirror(self.values)))


@dataclass(frozen=True)
class ModalityReport:
    """Intermediate products of filtering one modality of one batch element."""

    filtered: Tensor4
    mask: SpectralMask
    amplitude: Tensor4  # log1p of the channel-mean amplitude
    residue: float


def _mirror(plane: np.ndarray) -> np.ndarray:
    height, width = plane.shape
    rows = (-np.arange(height)) % height
    cols = (-np.arange(width)) % width
    return plane[rows][:, cols]


def split_modalities(x: Tensor4) -> Tuple[Tensor4, Tensor4]:
    """Split an [R, G, B, IR] tensor into (rgb, ir) copies."""
    x = as_tensor4(x, "fusion input")
    if x.shape[1] != INPUT_CHANNELS:
        raise ShapeError(f"expected {INPUT_CHANNELS} channels [R, G, B, IR], got {x.shape[1]}")
    return x[:, Modality.RGB.channels].copy(), x[:, Modality.IR.channels].copy()


def amplitude_map(x_m: Tensor4) -> Tensor4:
    """Channel mean of the amplitude spectrum, shape (1, 1, H, W)."""
    return mean(amplitude(dft2(x_m)), axis=1)


def encode_activations(amplitudes: Tensor4, params: FilterParams) -> Tensor4:
    """Lightweight encoder: log1p -> 3x3 conv (1->8) -> ReLU -> 3x3 conv (8->1)."""
    scaled = np.log1p(as_tensor4(amplitudes, "amplitude map").astype(np.float64)).astype(DTYPE)
    hidden = relu(conv2d(scaled, params.encoder_conv1.kernel, params.encoder_conv1.bias, pad=1))
    return conv2d(hidden, params.encoder_conv2.kernel, params.encoder_conv2.bias, pad=1)


def selection_size(ratio: float, height: int, width: int, count: Optional[int] = None) -> int:
    """Number of positions ranked into the mask before symmetrisation."""
    total = height * width
    if count is not None:
        return min(count, total)
    # the epsilon keeps exact products such as 0.7 * 10 from flooring down
    return max(1, math.floor(ratio * total + 1e-9))


def topk_mask(activations: Tensor4, ratio: float, count: Optional[int] = None) -> SpectralMask:
    """Keep the largest activations, then symmetrise by logical OR and force DC on.

    Ties are broken by the smaller flat index.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    plane = as_tensor4(activations, "activations")[0, 0]
    height, width = plane.shape
    selected = selection_size(ratio, height, width, count)
    order = np.argsort(-plane.ravel().astype(np.float64), kind="stable")
    flat = np.zeros(height * width, dtype=np.uint8)
    flat[order[:selected]] = 1
    values = flat.reshape(height, width)
    values = values | _mirror(values)
    values[0, 0] = 1
    return SpectralMask(values=values, selected=selected)


def apply_spectral_mask(spectrum: Spectrum, mask: SpectralMask) -> Spectrum:
    """Scale every coefficient by the mask; phases of kept coefficients are untouched."""
    if spectrum.dims[1:] != mask.values.shape:
        raise ShapeError(f"mask {mask.values.shape} does not match spectrum {spectrum.dims[1:]}")
    weights = mask.values.astype(DTYPE)[None]
    return Spectrum(re=spectrum.re * weights, im=spectrum.im * weights)


def filter_modality_report(
    x_m: Tensor4,
    params: FilterParams,
    config: FilterConfig,
    encoder: Optional[Encoder] = None,
) -> ModalityReport:
    """Run the full spectral chain on one modality of one batch element."""
    amplitudes = amplitude_map(x_m)
    if encoder is None:
        activations = encode_activations(amplitudes, params)
    else:
        activations = as_tensor4(encoder(amplitudes), "encoder output")
    mask = topk_mask(activations, config.topk_ratio, config.topk_count)
    filtered, residue = idft2_with_residue(apply_spectral_mask(dft2(x_m), mask))
    if residue > SYMMETRY_TOLERANCE:
        raise SymmetryError(f"filtered image kept an imaginary residue of {residue:.3e}")
    logger.debug(
        "mask selected %d, cardinality %d of %d", mask.selected, mask.cardinality, mask.values.size
    )
    return ModalityReport(
        filtered=filtered,
        mask=mask,
        amplitude=np.log1p(amplitudes.astype(np.float64)).astype(DTYPE),
        residue=residue,
    )


def filter_modality(
    x_m: Tensor4,
    params: FilterParams,
    config: FilterConfig,
    encoder: Optional[Encoder] = None,
) -> Tensor4:
    """Spectrally filtered copy of one modality."""
    return filter_modality_report(x_m, params, config, encoder).filtered


@finite_output
def blend(x_m: Tensor4, filtered: Tensor4, alpha: float) -> Tensor4:
    """Convex combination alpha * filtered + (1 - alpha) * x_m."""
    x_m = np.asarray(x_m, dtype=DTYPE)
    filtered = np.asarray(filtered, dtype=DTYPE)
    if x_m.shape != filtered.shape:
        raise ShapeError(f"cannot blend shapes {x_m.shape} and {filtered.shape}")
    weight = DTYPE(alpha)
    return (weight * filtered + (DTYPE(1.0) - weight) * x_m).astype(DTYPE)


def filter_batch(x: Tensor4, params: FilterParams, config: FilterConfig) -> List[Dict[Modality, ModalityReport]]:
    """Filter reports for every batch element and modality; independent of alpha."""
    rgb, ir = split_modalities(x)
    reports = []
    for index in range(rgb.shape[0]):
        reports.append(
            {
                Modality.RGB: filter_modality_report(rgb[index : index + 1], params, config),
                Modality.IR: filter_modality_report(ir[index : index + 1], params, config),
            }
        )
    return reports


def blend_batch(
    x: Tensor4,
    reports: List[Dict[Modality, ModalityReport]],
    alphas: Tuple[float, float],
) -> Tensor4:
    """Blend precomputed filter reports into X in [R, G, B, IR] order."""
    rgb, ir = split_modalities(x)
    alpha = dict(zip((Modality.RGB, Modality.IR), alphas))
    raw = {Modality.RGB: rgb, Modality.IR: ir}
    rows = []
    for index, report in enumerate(reports):
        rows.append(
            concat(
                [
                    blend(raw[m][index : index + 1], report[m].filtered, alpha[m])
                    for m in (Modality.RGB, Modality.IR)
                ],
                axis=1,
            )
        )
    return concat(rows, axis=0)


def freq_filter_forward(x: Tensor4, params: FilterParams, config: FilterConfig) -> Tensor4:
    """Spectrally refined input X_blend, same shape as `x`."""
    return blend_batch(x, filter_batch(x, params, config), params.alphas())

"""Dense float32 NCHW primitives used by the filter and fusion stages.

Every public operation takes and returns `numpy` arrays in single precision.
Reductions inside convolution and matrix products accumulate in float64 and
are rounded once on the way out, so repeated runs are bit-identical.
"""

import math
import zlib
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .decorators import finite_output
from .errors import ShapeError

Tensor4 = NDArray[np.float32]
DTYPE = np.float32

_SEED_LIMIT = 2**64
# largest float32 strictly below 1.0
_BELOW_ONE = 1.0 - 2.0**-24
_ABOVE_ZERO = float(np.finfo(np.float32).tiny)


def as_tensor4(x, name: str = "tensor") -> Tensor4:
    """Validate a (B, C, H, W) array and return it as float32."""
    array = np.asarray(x)
    if array.ndim != 4:
        raise ShapeError(f"{name} must have 4 axes (B, C, H, W), got shape {array.shape}")
    return array.astype(DTYPE, copy=False)


class Rng:
    """Counter-based random source keyed by a 64-bit seed.

    Each named stream is an independent Philox generator whose key mixes the
    seed with a CRC of the stream name, so draws do not depend on the order in
    which parameters are initialised and agree across platforms.
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) < _SEED_LIMIT:
            raise ValueError(f"seed must be in [0, 2**64), got {seed}")
        self.seed = int(seed)

    def stream(self, name: str = "default") -> np.random.Generator:
        key = (zlib.crc32(name.encode("utf-8")) << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))

    def uniform(self, low: float, high: float, shape: Sequence[int], name: str = "default") -> np.ndarray:
        return self.stream(name).uniform(low, high, size=tuple(shape)).astype(DTYPE)

    def normal(self, shape: Sequence[int], name: str = "default") -> np.ndarray:
        return self.stream(name).standard_normal(size=tuple(shape)).astype(DTYPE)


def init_params(rng: Rng, shape: Sequence[int], fan_in: int, name: str = "param") -> np.ndarray:
    """Uniform fan-in initialisation on (-s, s) with s = sqrt(6 / fan_in)."""
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, shape, name=name)


def _output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


@finite_output
def conv2d(
    x: Tensor4,
    kernel: np.ndarray,
    bias: np.ndarray = None,
    stride: int = 1,
    pad: int = 0,
) -> Tensor4:
    """Zero-padded 2D cross-correlation of `x` (B, Cin, H, W) with `kernel` (Cout, Cin, kh, kw)."""
    x = as_tensor4(x, "conv2d input")
    kernel = as_tensor4(kernel, "conv2d kernel")
    batch, channels, height, width = x.shape
    out_channels, in_channels, kh, kw = kernel.shape
    if channels != in_channels:
        raise ShapeError(f"conv2d expects {in_channels} input channels, got {channels}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d kernel sides must be odd, got {kh}x{kw}")
    if stride < 1:
        raise ShapeError(f"conv2d stride must be >= 1, got {stride}")
    out_h = _output_size(height, kh, stride, pad)
    out_w = _output_size(width, kw, stride, pad)
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"conv2d output would be empty for input {x.shape} and kernel {kernel.shape}")

    padded = np.pad(x.astype(np.float64), ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    weights = kernel.astype(np.float64)
    out = np.zeros((out_channels, batch, out_h, out_w), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            patch = padded[
                :,
                :,
                i : i + stride * (out_h - 1) + 1 : stride,
                j : j + stride * (out_w - 1) + 1 : stride,
            ]
            out += np.tensordot(weights[:, :, i, j], patch, axes=([1], [1]))
    out = np.moveaxis(out, 0, 1)
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (out_channels,):
            raise ShapeError(f"conv2d bias must have shape ({out_channels},), got {bias.shape}")
        out += bias[None, :, None, None]
    return out.astype(DTYPE)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0).astype(DTYPE, copy=False)


@finite_output
def avg_pool2d(x: Tensor4, kernel: int = 3, stride: int = 1, pad: int = 1) -> Tensor4:
    """Average pooling; padded zeros count towards the divisor."""
    x = as_tensor4(x, "avg_pool2d input")
    _, _, height, width = x.shape
    out_h = _output_size(height, kernel, stride, pad)
    out_w = _output_size(width, kernel, stride, pad)
    padded = np.pad(x.astype(np.float64), ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    total = np.zeros(x.shape[:2] + (out_h, out_w), dtype=np.float64)
    for i in range(kernel):
        for j in range(kernel):
            total += padded[
                :,
                :,
                i : i + stride * (out_h - 1) + 1 : stride,
                j : j + stride * (out_w - 1) + 1 : stride,
            ]
    return (total / (kernel * kernel)).astype(DTYPE)


@finite_output
def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along `axis`."""
    values = np.asarray(x, dtype=np.float64)
    if not -values.ndim <= axis < values.ndim:
        raise ShapeError(f"softmax axis {axis} out of range for {values.ndim} axes")
    shifted = values - values.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    return (exps / exps.sum(axis=axis, keepdims=True)).astype(DTYPE)


@finite_output
def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function, kept inside the open interval (0, 1) in float32."""
    values = np.asarray(x, dtype=np.float64)
    out = 0.5 * (1.0 + np.tanh(0.5 * values))
    return np.clip(out, _ABOVE_ZERO, _BELOW_ONE).astype(DTYPE)


@finite_output
def matmul_batched(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over the last two axes, broadcasting leading batch axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul_batched needs matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul_batched inner dims differ: {a.shape} @ {b.shape}")
    return np.matmul(a.astype(np.float64), b.astype(np.float64)).astype(DTYPE)


def concat(tensors: Sequence[np.ndarray], axis: int = 1) -> np.ndarray:
    return np.concatenate([np.asarray(t, dtype=DTYPE) for t in tensors], axis=axis)


def mean(x: np.ndarray, axis, keepdims: bool = True) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).mean(axis=axis, keepdims=keepdims).astype(DTYPE)


def upsample_nearest(x: Tensor4, factor: Tuple[int, int]) -> Tensor4:
    """Repeat every pixel `factor` times along height and width."""
    x = as_tensor4(x, "upsample input")
    fy, fx = factor
    return np.repeat(np.repeat(x, fy, axis=2), fx, axis=3)

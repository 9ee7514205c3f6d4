"""Slow reference implementations used to cross-check the vectorised kernels.

Everything here loops explicitly and accumulates in float64. Shared by the
test suite and the `selftest` command.
"""

import math

import numpy as np

from .constants.modalities import Modality
from .models import McafConfig
from .params import ConvParams, McafParams


def naive_conv2d(x: np.ndarray, kernel: np.ndarray, bias=None, stride: int = 1, pad: int = 0) -> np.ndarray:
    batch, in_channels, height, width = x.shape
    out_channels, _, kh, kw = kernel.shape
    padded = np.zeros((batch, in_channels, height + 2 * pad, width + 2 * pad))
    padded[:, :, pad : pad + height, pad : pad + width] = x
    out_h = (height + 2 * pad - kh) // stride + 1
    out_w = (width + 2 * pad - kw) // stride + 1
    out = np.zeros((batch, out_channels, out_h, out_w))
    for b in range(batch):
        for o in range(out_channels):
            for i in range(out_h):
                for j in range(out_w):
                    patch = padded[b, :, i * stride : i * stride + kh, j * stride : j * stride + kw]
                    out[b, o, i, j] = np.sum(patch * kernel[o].astype(np.float64))
                    if bias is not None:
                        out[b, o, i, j] += float(bias[o])
    return out


def naive_dft2(plane: np.ndarray) -> np.ndarray:
    """Direct quadruple-sum transform of one (H, W) plane."""
    height, width = plane.shape
    out = np.zeros((height, width), dtype=np.complex128)
    for u in range(height):
        for v in range(width):
            total = 0j
            for y in range(height):
                for x in range(width):
                    angle = -2.0 * math.pi * (u * y / height + v * x / width)
                    total += float(plane[y, x]) * complex(math.cos(angle), math.sin(angle))
            out[u, v] = total
    return out


def _pixel_linear(features: np.ndarray, conv: ConvParams) -> np.ndarray:
    # (C, H, W) -> (Cout, H, W)
    matrix = conv.matrix.astype(np.float64)
    return np.einsum("oc,chw->ohw", matrix, features.astype(np.float64)) + conv.bias.astype(np.float64)[:, None, None]


def window_attention_loop(
    f_query: np.ndarray,
    f_context: np.ndarray,
    params: McafParams,
    config: McafConfig,
    query: Modality = Modality.RGB,
    context: Modality = Modality.IR,
) -> np.ndarray:
    """Per-window, per-head, per-token cross-attention with the residual added."""
    batch, channels, height, width = f_query.shape
    w, heads, head_dim = config.window, config.heads, config.head_dim
    out = f_query.astype(np.float64).copy()
    for b in range(batch):
        q = _pixel_linear(f_query[b], params.query[query])
        k = _pixel_linear(f_context[b], params.key[context])
        v = _pixel_linear(f_context[b], params.value[context])
        for top in range(0, height, w):
            for left in range(0, width, w):
                coords = [(top + i, left + j) for i in range(w) for j in range(w)]
                for h in range(heads):
                    dims = slice(h * head_dim, (h + 1) * head_dim)
                    for (qy, qx) in coords:
                        scores = [
                            float(np.dot(q[dims, qy, qx], k[dims, ky, kx])) / math.sqrt(head_dim)
                            for (ky, kx) in coords
                        ]
                        peak = max(scores)
                        exps = [math.exp(s - peak) for s in scores]
                        total = sum(exps)
                        for weight, (ky, kx) in zip(exps, coords):
                            out[b, dims, qy, qx] += weight / total * v[dims, ky, kx]
    return out


def token_attention_loop(tokens: np.ndarray, wq: ConvParams, wk: ConvParams, wv: ConvParams) -> np.ndarray:
    """Single-head attention over (N, C) tokens, one query row at a time."""
    tokens = tokens.astype(np.float64)
    count, channels = tokens.shape

    def linear(conv: ConvParams, row: np.ndarray) -> np.ndarray:
        return conv.matrix.astype(np.float64) @ row + conv.bias.astype(np.float64)

    q = [linear(wq, tokens[n]) for n in range(count)]
    k = [linear(wk, tokens[n]) for n in range(count)]
    v = [linear(wv, tokens[n]) for n in range(count)]
    out = np.zeros((count, v[0].shape[0]))
    for i in range(count):
        scores = [float(np.dot(q[i], k[j])) / math.sqrt(channels) for j in range(count)]
        peak = max(scores)
        exps = [math.exp(s - peak) for s in scores]
        total = sum(exps)
        for j in range(count):
            out[i] += exps[j] / total * v[j]
    return out


def mse_loop(output: np.ndarray, target: np.ndarray) -> float:
    flat_out = np.asarray(output, dtype=np.float64).ravel()
    flat_target = np.asarray(target, dtype=np.float64).ravel()
    total = 0.0
    for a, b in zip(flat_out, flat_target):
        total += (a - b) * (a - b)
    return total / flat_out.size

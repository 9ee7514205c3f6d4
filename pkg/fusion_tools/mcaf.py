"""Attention fusion of RGB and IR features into a 3-channel image.

Stages, in order: Inception feature extraction per modality, windowed
cross-attention between modalities, a per-pixel softmax over the two
modalities, a fused Inception block, a sigmoid gate computed from regional
descriptors and applied residually, and a 1x1 projection to three channels.
"""

import math
from typing import Tuple

import numpy as np

from .constants.modalities import Modality
from .constants.modes import AttentionMode
from .errors import ShapeError
from .freq_filter import split_modalities
from .models import McafConfig
from .params import ConvParams, InceptionParams, McafParams
from .tensor import (
    DTYPE,
    Tensor4,
    as_tensor4,
    avg_pool2d,
    concat,
    conv2d,
    matmul_batched,
    relu,
    sigmoid,
    softmax,
    upsample_nearest,
)


def _conv_relu(x: Tensor4, conv: ConvParams) -> Tensor4:
    pad = conv.kernel.shape[-1] // 2
    return relu(conv2d(x, conv.kernel, conv.bias, pad=pad))


def _pointwise(x: Tensor4, conv: ConvParams) -> Tensor4:
    return conv2d(x, conv.kernel, conv.bias)


def inception_extract(x: Tensor4, params: InceptionParams) -> Tensor4:
    """Four parallel branches of C/4 channels each, concatenated; spatial size preserved."""
    x = as_tensor4(x, "inception input")
    if params.branch1x1.kernel.shape[1] != x.shape[1]:
        raise ShapeError(
            f"inception block expects {params.branch1x1.kernel.shape[1]} channels, got {x.shape[1]}"
        )
    branch1x1 = _conv_relu(x, params.branch1x1)

    branch3x3 = _conv_relu(x, params.branch3x3_1)
    branch3x3 = _conv_relu(branch3x3, params.branch3x3_2)

    branch3x3dbl = _conv_relu(x, params.branch3x3dbl_1)
    branch3x3dbl = _conv_relu(branch3x3dbl, params.branch3x3dbl_2)
    branch3x3dbl = _conv_relu(branch3x3dbl, params.branch3x3dbl_3)

    branch_pool = _conv_relu(avg_pool2d(x, kernel=3, stride=1, pad=1), params.branch_pool)

    return concat([branch1x1, branch3x3, branch3x3dbl, branch_pool], axis=1)


# Windowed cross-attention
def window_partition(x: Tensor4, window: int) -> np.ndarray:
    """(B, C, H, W) -> (B, windows, window * window, C) token blocks."""
    batch, channels, height, width = x.shape
    if height % window or width % window:
        raise ShapeError(f"spatial size {height}x{width} is not divisible by window {window}")
    rows, cols = height // window, width // window
    tokens = x.reshape(batch, channels, rows, window, cols, window)
    tokens = tokens.transpose(0, 2, 4, 3, 5, 1)
    return tokens.reshape(batch, rows * cols, window * window, channels)


def window_merge(tokens: np.ndarray, window: int, height: int, width: int) -> Tensor4:
    """Inverse of `window_partition`."""
    batch, _, _, channels = tokens.shape
    rows, cols = height // window, width // window
    x = tokens.reshape(batch, rows, cols, window, window, channels)
    x = x.transpose(0, 5, 1, 3, 2, 4)
    return x.reshape(batch, channels, height, width)


def _split_heads(tokens: np.ndarray, heads: int) -> np.ndarray:
    batch, windows, count, channels = tokens.shape
    split = tokens.reshape(batch, windows, count, heads, channels // heads)
    return split.transpose(0, 1, 3, 2, 4)


def _merge_heads(tokens: np.ndarray) -> np.ndarray:
    batch, windows, heads, count, head_dim = tokens.shape
    return tokens.transpose(0, 1, 3, 2, 4).reshape(batch, windows, count, heads * head_dim)


def _attention_inputs(
    f_query: Tensor4,
    f_context: Tensor4,
    params: McafParams,
    config: McafConfig,
    query: Modality,
    context: Modality,
):
    f_query = as_tensor4(f_query, "query features")
    f_context = as_tensor4(f_context, "context features")
    if f_query.shape != f_context.shape:
        raise ShapeError(f"query {f_query.shape} and context {f_context.shape} features differ")
    q = _pointwise(f_query, params.query[query])
    k = _pointwise(f_context, params.key[context])
    v = _pointwise(f_context, params.value[context])
    return [_split_heads(window_partition(t, config.window), config.heads) for t in (q, k, v)]


def _scaled_weights(q: np.ndarray, k: np.ndarray, head_dim: int) -> np.ndarray:
    scores = matmul_batched(q, np.swapaxes(k, -1, -2)) * DTYPE(1.0 / math.sqrt(head_dim))
    return softmax(scores, axis=-1)


def cross_attention_weights(
    f_query: Tensor4,
    f_context: Tensor4,
    params: McafParams,
    config: McafConfig,
    query: Modality = Modality.RGB,
    context: Modality = Modality.IR,
) -> np.ndarray:
    """Attention weights (B, windows, heads, w*w queries, w*w keys)."""
    q, k, _ = _attention_inputs(f_query, f_context, params, config, query, context)
    return _scaled_weights(q, k, config.head_dim)


def window_cross_attention(
    f_query: Tensor4,
    f_context: Tensor4,
    params: McafParams,
    config: McafConfig,
    query: Modality = Modality.RGB,
    context: Modality = Modality.IR,
) -> Tensor4:
    """Queries from `f_query`, keys and values from `f_context`, within w x w windows.

    The attention output is added to `f_query` as a residual.
    """
    q, k, v = _attention_inputs(f_query, f_context, params, config, query, context)
    attended = _merge_heads(matmul_batched(_scaled_weights(q, k, config.head_dim), v))
    _, _, height, width = f_query.shape
    return (f_query + window_merge(attended, config.window, height, width)).astype(DTYPE)


# Local and global attention
def modality_weights(f_rgb: Tensor4, f_ir: Tensor4, params: McafParams) -> Tuple[Tensor4, Tensor4]:
    """Per-pixel softmax over the two modalities' logits; A_rgb + A_ir = 1."""
    if f_rgb.shape != f_ir.shape:
        raise ShapeError(f"modality features differ in shape: {f_rgb.shape} vs {f_ir.shape}")
    logits = np.stack(
        [
            _pointwise(f_rgb, params.local_logit[Modality.RGB]),
            _pointwise(f_ir, params.local_logit[Modality.IR]),
        ]
    )
    weights = softmax(logits, axis=0)
    return weights[0], weights[1]


def joint_local_attention(f_rgb: Tensor4, f_ir: Tensor4, params: McafParams) -> Tuple[Tensor4, Tensor4]:
    weight_rgb, weight_ir = modality_weights(f_rgb, f_ir, params)
    return (f_rgb * weight_rgb).astype(DTYPE), (f_ir * weight_ir).astype(DTYPE)


def fuse(f_rgb: Tensor4, f_ir: Tensor4, params: McafParams) -> Tensor4:
    """Fused Inception block over the channel concatenation (order matters)."""
    if f_rgb.shape[1] != f_ir.shape[1]:
        raise ShapeError(f"channel counts differ: {f_rgb.shape[1]} vs {f_ir.shape[1]}")
    return inception_extract(concat([f_rgb, f_ir], axis=1), params.inception_fused)


def region_descriptors(features: Tensor4, grid: int) -> np.ndarray:
    """Mean of each of the grid x grid regions, as (B, grid * grid, C) tokens."""
    batch, channels, height, width = features.shape
    if height % grid or width % grid:
        raise ShapeError(f"spatial size {height}x{width} is not divisible by region grid {grid}")
    regions = features.astype(np.float64).reshape(batch, channels, grid, height // grid, grid, width // grid)
    pooled = regions.mean(axis=(3, 5))
    return pooled.reshape(batch, channels, grid * grid).transpose(0, 2, 1).astype(DTYPE)


def _linear(tokens: np.ndarray, conv: ConvParams) -> np.ndarray:
    return (matmul_batched(tokens, conv.matrix.T) + conv.bias).astype(DTYPE)


def global_gate(features: Tensor4, params: McafParams, config: McafConfig) -> Tensor4:
    """Sigmoid gate (B, 1, H, W) from self-attention over regional descriptors."""
    features = as_tensor4(features, "fused features")
    batch, channels, height, width = features.shape
    grid = config.region_grid
    tokens = region_descriptors(features, grid)
    q = _linear(tokens, params.global_query)
    k = _linear(tokens, params.global_key)
    v = _linear(tokens, params.global_value)
    scores = matmul_batched(q, np.swapaxes(k, -1, -2)) * DTYPE(1.0 / math.sqrt(channels))
    attended = matmul_batched(softmax(scores, axis=-1), v)
    gate = sigmoid(_linear(attended, params.global_out))
    gate = gate.reshape(batch, grid, grid)[:, None]
    return upsample_nearest(gate, (height // grid, width // grid))


def residual_apply(features: Tensor4, gate: Tensor4) -> Tensor4:
    """F_fused + F_fused * G, computed in float64 and rounded once.

    The ratio to F_fused stays strictly inside (1, 2) while the gate is
    away from saturation. A gate within float32 rounding of 0 or 1 (logits
    beyond about +-17) can land exactly on 1 or 2 after the final cast.
    """
    values = np.asarray(features, dtype=np.float64)
    return (values * (1.0 + np.asarray(gate, dtype=np.float64))).astype(DTYPE)


def project3(f_rgb: Tensor4, f_ir: Tensor4, params: McafParams) -> Tensor4:
    """1x1 projection of the concatenated branches to three channels, clamped to [0, 1]."""
    projected = _pointwise(concat([f_rgb, f_ir], axis=1), params.final_proj)
    return np.clip(projected, 0.0, 1.0).astype(DTYPE)


def _attend(features, params: McafParams, config: McafConfig):
    if config.attention_mode is AttentionMode.NONE:
        return features
    attended = {}
    for m in Modality:
        context = m.other if config.attention_mode is AttentionMode.CROSS else m
        attended[m] = window_cross_attention(features[m], features[context], params, config, m, context)
    return attended


def mcaf_forward(x_blend: Tensor4, params: McafParams, config: McafConfig) -> Tensor4:
    """Fuse a (B, 4, H, W) blended input into a (B, 3, H, W) image in [0, 1]."""
    x_blend = as_tensor4(x_blend, "blended input")
    config.check_spatial(*x_blend.shape[2:])
    rgb, ir = split_modalities(x_blend)
    features = {
        Modality.RGB: inception_extract(rgb, params.inception[Modality.RGB]),
        Modality.IR: inception_extract(ir, params.inception[Modality.IR]),
    }
    attended = _attend(features, params, config)

    if config.use_local_attention:
        weight_rgb, weight_ir = modality_weights(attended[Modality.RGB], attended[Modality.IR], params)
    else:
        half = np.full((x_blend.shape[0], 1) + x_blend.shape[2:], 0.5, dtype=DTYPE)
        weight_rgb, weight_ir = half, half
    fused = fuse(attended[Modality.RGB] * weight_rgb, attended[Modality.IR] * weight_ir, params)

    if config.use_global_gate:
        final = residual_apply(fused, global_gate(fused, params, config))
    else:
        final = fused
    # one fused map, weighted per modality by its local attention map
    return project3(final * weight_rgb, final * weight_ir, params)

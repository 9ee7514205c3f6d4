"""Built-in invariant suite run by the `selftest` command."""

import dataclasses
import logging
from typing import Callable, Dict, List, Tuple

import numpy as np

from .fft import dft2, idft2
from .freq_filter import amplitude_map, blend, encode_activations, filter_modality, topk_mask
from .gradcheck import ProbeLoss, numeric_grad, probe_loss
from .mcaf import (
    global_gate,
    modality_weights,
    residual_apply,
    window_cross_attention,
)
from .models import FusionConfig
from .oracles import mse_loop, naive_conv2d, naive_dft2, window_attention_loop
from .params import ConvParams, init_fusion_params, named_tensors
from .pipeline import FusionPipeline
from .tensor import Rng, conv2d, softmax
from .weights import decode_weights, encode_weights

logger = logging.getLogger(__name__)

Check = Callable[[], bool]
CHECKS: Dict[str, Check] = {}

_SMALL = FusionConfig(seed=11, channels=8, heads=2, window=8, region_grid=4, image_size=16)


def check(name: str) -> Callable[[Check], Check]:
    def register(func: Check) -> Check:
        CHECKS[name] = func
        return func

    return register


def _rng() -> Rng:
    return Rng(20240521)


# Transforms and kernels
@check("fft_round_trip")
def _fft_round_trip() -> bool:
    x = _rng().uniform(0.0, 1.0, (1, 3, 32, 32), name="selftest.fft")
    return float(np.abs(idft2(dft2(x)) - x).max()) < 1e-5


@check("fft_matches_naive_dft")
def _fft_matches_naive() -> bool:
    x = _rng().uniform(0.0, 1.0, (1, 1, 16, 16), name="selftest.naive")
    return float(np.abs(dft2(x).to_complex()[0] - naive_dft2(x[0, 0])).max()) < 1e-4


@check("fft_non_power_of_two")
def _fft_odd_size() -> bool:
    x = _rng().uniform(0.0, 1.0, (1, 1, 12, 6), name="selftest.odd")
    return float(np.abs(dft2(x).to_complex()[0] - naive_dft2(x[0, 0])).max()) < 1e-4


@check("conv2d_matches_naive")
def _conv_matches_naive() -> bool:
    rng = _rng()
    x = rng.uniform(-1.0, 1.0, (2, 3, 9, 7), name="selftest.conv.x")
    kernel = rng.uniform(-1.0, 1.0, (4, 3, 3, 3), name="selftest.conv.k")
    bias = rng.uniform(-1.0, 1.0, (4,), name="selftest.conv.b")
    fast = conv2d(x, kernel, bias, stride=2, pad=1)
    return float(np.abs(fast - naive_conv2d(x, kernel, bias, stride=2, pad=1)).max()) < 1e-5


@check("softmax_rows_sum_to_one")
def _softmax_rows() -> bool:
    scores = _rng().normal((6, 5, 33), name="selftest.softmax") * 40.0
    return float(np.abs(softmax(scores, axis=-1).astype(np.float64).sum(axis=-1) - 1.0).max()) < 1e-6


# Spectral filter
@check("mask_symmetric_with_dc")
def _mask_symmetry() -> bool:
    params = init_fusion_params(_SMALL).filter
    x = _rng().uniform(0.0, 1.0, (1, 3, 16, 16), name="selftest.mask")
    mask = topk_mask(encode_activations(amplitude_map(x), params), 0.1)
    return mask.is_symmetric() and mask.values[0, 0] == 1


@check("mask_cardinality_lower_bound")
def _mask_cardinality() -> bool:
    activations = _rng().normal((1, 1, 16, 8), name="selftest.card")
    return all(topk_mask(activations, ratio).cardinality >= int(ratio * 128) for ratio in (0.05, 0.25, 0.7, 1.0))


@check("blend_alpha_zero_is_identity")
def _blend_zero() -> bool:
    x = _rng().uniform(0.0, 1.0, (1, 3, 16, 16), name="selftest.blend")
    return float(np.abs(blend(x, np.zeros_like(x), 0.0) - x).max()) < 1e-6


@check("full_ratio_filter_is_identity")
def _full_ratio() -> bool:
    config = _SMALL.filter_config.copy(update={"topk_ratio": 1.0})
    params = init_fusion_params(_SMALL).filter
    x = _rng().uniform(0.0, 1.0, (1, 1, 16, 16), name="selftest.identity")
    return float(np.abs(filter_modality(x, params, config) - x).max()) < 1e-4


# Attention
@check("window_attention_matches_loop")
def _window_attention() -> bool:
    config = _SMALL.mcaf_config
    params = init_fusion_params(_SMALL).mcaf
    rng = _rng()
    f_rgb = rng.uniform(-1.0, 1.0, (1, 8, 16, 16), name="selftest.attn.rgb")
    f_ir = rng.uniform(-1.0, 1.0, (1, 8, 16, 16), name="selftest.attn.ir")
    fast = window_cross_attention(f_rgb, f_ir, params, config)
    return float(np.abs(fast - window_attention_loop(f_rgb, f_ir, params, config)).max()) < 1e-5


@check("modality_weights_sum_to_one")
def _modality_weights() -> bool:
    params = init_fusion_params(_SMALL).mcaf
    rng = _rng()
    weight_rgb, weight_ir = modality_weights(
        rng.normal((2, 8, 8, 8), name="selftest.local.rgb") * 5.0,
        rng.normal((2, 8, 8, 8), name="selftest.local.ir") * 5.0,
        params,
    )
    return float(np.abs(weight_rgb.astype(np.float64) + weight_ir - 1.0).max()) < 1e-6


@check("global_gate_in_open_interval")
def _gate_range() -> bool:
    params = init_fusion_params(_SMALL).mcaf
    features = _rng().normal((1, 8, 16, 16), name="selftest.gate") * 50.0
    gate = global_gate(features, params, _SMALL.mcaf_config)
    return bool((gate > 0.0).all() and (gate < 1.0).all())


@check("zero_gate_projection_scales_by_1.5")
def _zero_gate() -> bool:
    params = init_fusion_params(_SMALL).mcaf
    out = params.global_out
    zeroed = dataclasses.replace(
        params, global_out=ConvParams(kernel=np.zeros_like(out.kernel), bias=np.zeros_like(out.bias))
    )
    features = _rng().normal((1, 8, 16, 16), name="selftest.zero_gate")
    final = residual_apply(features, global_gate(features, zeroed, _SMALL.mcaf_config))
    return float(np.abs(final - 1.5 * features).max()) < 1e-6 * max(1.0, float(np.abs(features).max()))


# End to end
@check("pipeline_shape_and_range")
def _pipeline_contract() -> bool:
    x = _rng().uniform(0.0, 1.0, (1, 4, 16, 16), name="selftest.pipeline")
    out = FusionPipeline(_SMALL).forward(x)
    return out.shape == (1, 3, 16, 16) and bool(np.isfinite(out).all()) and out.min() >= 0.0 and out.max() <= 1.0


@check("pipeline_deterministic")
def _pipeline_deterministic() -> bool:
    x = _rng().uniform(0.0, 1.0, (1, 4, 16, 16), name="selftest.pipeline")
    return bool(np.array_equal(FusionPipeline(_SMALL).forward(x), FusionPipeline(_SMALL).forward(x)))


@check("weights_round_trip")
def _weights_round_trip() -> bool:
    tensors = named_tensors(init_fusion_params(_SMALL))
    decoded = decode_weights(encode_weights(tensors))
    return decoded.keys() == tensors.keys() and all(
        np.array_equal(decoded[name], tensors[name]) for name in tensors
    )


# Gradient tooling
@check("numeric_grad_polynomial")
def _numeric_grad() -> bool:
    point = np.array([0.5, -1.0, 2.0, 3.0, -0.25])
    grad = numeric_grad(lambda p: float(np.sum(p ** 2)), point)
    return float(np.abs(grad - 2 * point).max()) < 1e-4


@check("probe_loss_matches_loop")
def _probe_loss() -> bool:
    rng = _rng()
    output = rng.uniform(0.0, 1.0, (1, 3, 8, 8), name="selftest.probe.out")
    target = rng.uniform(0.0, 1.0, (1, 3, 8, 8), name="selftest.probe.target")
    return abs(probe_loss(output, ProbeLoss(target)) - mse_loop(output, target)) < 1e-7


def run_selftest(emit: Callable[[str], None] = print) -> Tuple[List[str], List[str]]:
    """Run every registered check, emitting one `PASS name` / `FAIL name` line each."""
    passed, failed = [], []
    for name, func in CHECKS.items():
        try:
            ok = bool(func())
        except Exception as err:  # a crashing check is a failing check
            logger.error("check %s raised %s: %s", name, type(err).__name__, err)
            ok = False
        (passed if ok else failed).append(name)
        emit(f"{'PASS' if ok else 'FAIL'} {name}")
    logger.info("%d of %d checks passed", len(passed), len(CHECKS))
    return passed, failed

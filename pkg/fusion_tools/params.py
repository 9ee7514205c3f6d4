"""Learnable parameters of the filter and fusion stages.

Parameters are plain dataclasses of float32 arrays. Every tensor has a dotted
name (e.g. ``mcaf.inception.rgb.branch1x1.kernel``) used both to derive its
random stream at initialisation and as its key in weight files.
"""

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Tuple

import numpy as np

from .constants.modalities import Modality
from .errors import WeightFormatError
from .models import FusionConfig
from .tensor import DTYPE, Rng, init_params

# Final projection bias starts mid-range so the clamped image is not saturated.
FINAL_BIAS_INIT = 0.5
ENCODER_HIDDEN = 8


@dataclass
class ConvParams:
    kernel: np.ndarray  # (Cout, Cin, kh, kw)
    bias: np.ndarray  # (Cout,)

    @property
    def matrix(self) -> np.ndarray:
        """The kernel of a 1x1 convolution as a (Cout, Cin) matrix."""
        return self.kernel[:, :, 0, 0]


@dataclass
class InceptionParams:
    """Four-branch block: 1x1 | 1x1-3x3 | 1x1-3x3-3x3 | pool-1x1."""

    branch1x1: ConvParams
    branch3x3_1: ConvParams
    branch3x3_2: ConvParams
    branch3x3dbl_1: ConvParams
    branch3x3dbl_2: ConvParams
    branch3x3dbl_3: ConvParams
    branch_pool: ConvParams


@dataclass
class FilterParams:
    encoder_conv1: ConvParams
    encoder_conv2: ConvParams
    alpha_raw: Dict[Modality, float] = field(default_factory=dict)

    def alpha(self, modality: Modality) -> float:
        """Blending coefficient clamped into [0, 1]."""
        return float(min(max(self.alpha_raw[modality], 0.0), 1.0))

    def alphas(self) -> Tuple[float, float]:
        return self.alpha(Modality.RGB), self.alpha(Modality.IR)


@dataclass
class McafParams:
    inception: Dict[Modality, InceptionParams]
    inception_fused: InceptionParams
    query: Dict[Modality, ConvParams]
    key: Dict[Modality, ConvParams]
    value: Dict[Modality, ConvParams]
    local_logit: Dict[Modality, ConvParams]
    global_query: ConvParams
    global_key: ConvParams
    global_value: ConvParams
    global_out: ConvParams
    final_proj: ConvParams


@dataclass
class FusionParams:
    filter: FilterParams
    mcaf: McafParams

    def with_alphas(self, alpha_rgb: float, alpha_ir: float) -> "FusionParams":
        """Copy sharing every tensor, with new raw blending coefficients."""
        alpha_raw = {Modality.RGB: float(alpha_rgb), Modality.IR: float(alpha_ir)}
        return dataclasses.replace(self, filter=dataclasses.replace(self.filter, alpha_raw=alpha_raw))


# Initialisation
def _conv(rng: Rng, name: str, out_channels: int, in_channels: int, size: int, bias: float = 0.0) -> ConvParams:
    kernel = init_params(
        rng,
        (out_channels, in_channels, size, size),
        fan_in=in_channels * size * size,
        name=f"{name}.kernel",
    )
    return ConvParams(kernel=kernel, bias=np.full(out_channels, bias, dtype=DTYPE))


def init_inception(rng: Rng, name: str, in_channels: int, out_channels: int) -> InceptionParams:
    width = out_channels // 4
    return InceptionParams(
        branch1x1=_conv(rng, f"{name}.branch1x1", width, in_channels, 1),
        branch3x3_1=_conv(rng, f"{name}.branch3x3_1", width, in_channels, 1),
        branch3x3_2=_conv(rng, f"{name}.branch3x3_2", width, width, 3),
        branch3x3dbl_1=_conv(rng, f"{name}.branch3x3dbl_1", width, in_channels, 1),
        branch3x3dbl_2=_conv(rng, f"{name}.branch3x3dbl_2", width, width, 3),
        branch3x3dbl_3=_conv(rng, f"{name}.branch3x3dbl_3", width, width, 3),
        branch_pool=_conv(rng, f"{name}.branch_pool", width, in_channels, 1),
    )


def init_filter_params(rng: Rng, alpha_init: float) -> FilterParams:
    return FilterParams(
        encoder_conv1=_conv(rng, "filter.encoder_conv1", ENCODER_HIDDEN, 1, 3),
        encoder_conv2=_conv(rng, "filter.encoder_conv2", 1, ENCODER_HIDDEN, 3),
        alpha_raw={m: float(DTYPE(alpha_init)) for m in Modality},
    )


def init_mcaf_params(rng: Rng, channels: int) -> McafParams:
    in_channels = {Modality.RGB: 3, Modality.IR: 1}

    def per_modality(stage: str, out_channels: int) -> Dict[Modality, ConvParams]:
        return {m: _conv(rng, f"mcaf.{stage}.{m.value}", out_channels, channels, 1) for m in Modality}

    return McafParams(
        inception={
            m: init_inception(rng, f"mcaf.inception.{m.value}", in_channels[m], channels) for m in Modality
        },
        inception_fused=init_inception(rng, "mcaf.inception_fused", 2 * channels, channels),
        query=per_modality("query", channels),
        key=per_modality("key", channels),
        value=per_modality("value", channels),
        local_logit=per_modality("local_logit", 1),
        global_query=_conv(rng, "mcaf.global_query", channels, channels, 1),
        global_key=_conv(rng, "mcaf.global_key", channels, channels, 1),
        global_value=_conv(rng, "mcaf.global_value", channels, channels, 1),
        global_out=_conv(rng, "mcaf.global_out", 1, channels, 1),
        final_proj=_conv(rng, "mcaf.final_proj", 3, 2 * channels, 1, bias=FINAL_BIAS_INIT),
    )


def init_fusion_params(config: FusionConfig) -> FusionParams:
    """Seeded initial parameters for `config`."""
    rng = Rng(config.seed)
    return FusionParams(
        filter=init_filter_params(rng, config.alpha_init),
        mcaf=init_mcaf_params(rng, config.channels),
    )


# Named access
def _key_name(key) -> str:
    return key.value if isinstance(key, Enum) else str(key)


def _walk(node, prefix: str) -> Iterator[Tuple[str, np.ndarray]]:
    if dataclasses.is_dataclass(node):
        for f in dataclasses.fields(node):
            yield from _walk(getattr(node, f.name), f"{prefix}.{f.name}" if prefix else f.name)
    elif isinstance(node, dict):
        for key, value in node.items():
            yield from _walk(value, f"{prefix}.{_key_name(key)}")
    elif isinstance(node, np.ndarray):
        yield prefix, node
    else:
        yield prefix, np.array(node, dtype=DTYPE)


def named_tensors(params: FusionParams) -> Dict[str, np.ndarray]:
    """Flat name -> array view of all parameters, in a fixed order."""
    return dict(_walk(params, ""))


def _rebuild(node, prefix: str, tensors: Dict[str, np.ndarray]):
    if dataclasses.is_dataclass(node):
        return type(node)(
            **{
                f.name: _rebuild(getattr(node, f.name), f"{prefix}.{f.name}" if prefix else f.name, tensors)
                for f in dataclasses.fields(node)
            }
        )
    if isinstance(node, dict):
        return {key: _rebuild(value, f"{prefix}.{_key_name(key)}", tensors) for key, value in node.items()}
    if isinstance(node, np.ndarray):
        return tensors[prefix].astype(DTYPE)
    return float(tensors[prefix].reshape(()))


def params_from_named(tensors: Dict[str, np.ndarray], config: FusionConfig) -> FusionParams:
    """Rebuild parameters for `config` from named tensors, rejecting any schema mismatch."""
    template = named_tensors(init_fusion_params(config))
    unknown = sorted(set(tensors) - set(template))
    if unknown:
        raise WeightFormatError(f"unknown parameter entries: {', '.join(unknown)}")
    missing = sorted(set(template) - set(tensors))
    if missing:
        raise WeightFormatError(f"missing parameter entries: {', '.join(missing)}")
    for name, expected in template.items():
        if tensors[name].shape != expected.shape:
            raise WeightFormatError(
                f"entry {name} has shape {tensors[name].shape}, expected {expected.shape}"
            )
    return _rebuild(init_fusion_params(config), "", tensors)

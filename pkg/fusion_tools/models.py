"""Validated configuration and result records."""

from typing import Dict, List, Optional

from pydantic import BaseModel, Extra, root_validator, validator

from .constants.modes import AttentionMode
from .errors import ShapeError

SEED_LIMIT = 2**64


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


# Stage configs
class FilterConfig(BaseModel):
    """Spectral filter hyperparameters."""

    topk_ratio: float = 0.25
    topk_count: Optional[int] = None
    alpha_init: float = 0.2

    class Config:
        extra = Extra.forbid

    @validator("topk_ratio")
    def ratio_in_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("topk_ratio must be in (0, 1]")
        return v

    @validator("topk_count")
    def count_positive(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("topk_count must be >= 1")
        return v

    @validator("alpha_init")
    def alpha_in_range(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("alpha_init must be in [0, 1]")
        return v


class McafConfig(BaseModel):
    """Attention fusion hyperparameters and ablation switches."""

    channels: int = 32
    heads: int = 4
    window: int = 8
    region_grid: int = 8
    attention_mode: AttentionMode = AttentionMode.CROSS
    use_local_attention: bool = True
    use_global_gate: bool = True

    class Config:
        extra = Extra.forbid

    @validator("channels", "heads", "window", "region_grid")
    def positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @root_validator(skip_on_failure=True)
    def channel_layout(cls, values: dict) -> dict:
        channels, heads = values["channels"], values["heads"]
        if channels % 4:
            raise ValueError(f"channels ({channels}) must be divisible by 4 for the Inception branches")
        if channels % heads:
            raise ValueError(f"channels ({channels}) must be divisible by heads ({heads})")
        return values

    @property
    def head_dim(self) -> int:
        return self.channels // self.heads

    def check_spatial(self, height: int, width: int):
        """Raise `ShapeError` unless (height, width) tiles into windows and regions."""
        for name, size in (("window", self.window), ("region_grid", self.region_grid)):
            if height % size or width % size:
                raise ShapeError(f"spatial size {height}x{width} is not divisible by {name} {size}")


class FusionConfig(BaseModel):
    """Every hyperparameter of the pipeline, as read from config files and flags."""

    seed: int = 0
    channels: int = 32
    heads: int = 4
    window: int = 8
    region_grid: int = 8
    topk_ratio: float = 0.25
    topk_count: Optional[int] = None
    alpha_init: float = 0.2
    image_size: int = 64
    attention_mode: AttentionMode = AttentionMode.CROSS
    use_freq_filter: bool = True
    use_local_attention: bool = True
    use_global_gate: bool = True

    class Config:
        extra = Extra.forbid

    @validator("seed")
    def seed_in_range(cls, v: int) -> int:
        if not 0 <= v < SEED_LIMIT:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @validator("image_size")
    def size_power_of_two(cls, v: int) -> int:
        if not _is_power_of_two(v):
            raise ValueError(f"image_size must be a power of two, got {v}")
        return v

    @root_validator(skip_on_failure=True)
    def stages_are_consistent(cls, values: dict) -> dict:
        # Stage validators report their own ranges and divisibility problems.
        FilterConfig(**{key: values[key] for key in FilterConfig.__fields__})
        McafConfig(**{key: values[key] for key in McafConfig.__fields__})
        size = values["image_size"]
        for name in ("window", "region_grid"):
            if size % values[name]:
                raise ValueError(f"image_size ({size}) must be divisible by {name} ({values[name]})")
        return values

    @property
    def filter_config(self) -> FilterConfig:
        return FilterConfig(**{key: getattr(self, key) for key in FilterConfig.__fields__})

    @property
    def mcaf_config(self) -> McafConfig:
        return McafConfig(**{key: getattr(self, key) for key in McafConfig.__fields__})

    def to_lines(self) -> List[str]:
        """`key = value` lines that parse back into the same config."""
        lines = []
        for key in self.__fields__:
            value = getattr(self, key)
            if isinstance(value, AttentionMode):
                value = value.value
            elif isinstance(value, bool):
                value = str(value).lower()
            elif value is None:
                value = "none"
            lines.append(f"{key} = {value}")
        return lines


# Result records
class TrajectoryStep(BaseModel):
    step: int
    alpha_rgb: float
    alpha_ir: float
    loss: float

    @validator("alpha_rgb", "alpha_ir")
    def alpha_in_range(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("alpha must stay in [0, 1]")
        return v

    def csv_row(self) -> str:
        return f"{self.step},{self.alpha_rgb:.8f},{self.alpha_ir:.8f},{self.loss:.10g}"


class AlphaTrajectory(BaseModel):
    """Per-step blending coefficients and probe loss of an alpha training run."""

    steps: List[TrajectoryStep] = []

    @validator("steps")
    def ordered_by_step(cls, v: List[TrajectoryStep]) -> List[TrajectoryStep]:
        indices = [s.step for s in v]
        if indices != sorted(indices):
            raise ValueError("trajectory steps must be ordered")
        return v

    @property
    def initial(self) -> TrajectoryStep:
        return self.steps[0]

    @property
    def final(self) -> TrajectoryStep:
        return self.steps[-1]

    def to_csv(self) -> str:
        rows = ["step,alpha_rgb,alpha_ir,loss"] + [s.csv_row() for s in self.steps]
        return "\n".join(rows)


class FuseMetrics(BaseModel):
    """One-line JSON summary printed by the `fuse` command."""

    alpha_rgb: float
    alpha_ir: float
    mask_cardinality: Dict[str, int]
    mask_selected: Dict[str, int]
    output_min: float
    output_max: float
    wall_ms: float
    filter_identity: bool
    size: int


class BenchReport(BaseModel):
    """Latency statistics of repeated forward passes."""

    mean_ms: float
    std_ms: float
    min_ms: float
    fps: float
    size: int
    iters: int


class WeightSummary(BaseModel):
    """What `weights import` found in a validated weight file."""

    entries: int
    parameters: int
    alpha_rgb: float
    alpha_ir: float

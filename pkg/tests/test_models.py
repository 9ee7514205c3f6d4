import pytest
from pydantic import ValidationError

from fusion_tools.constants.modes import AttentionMode
from fusion_tools.config import parse_config_text
from fusion_tools.errors import ShapeError
from fusion_tools.models import AlphaTrajectory, FilterConfig, FusionConfig, McafConfig, TrajectoryStep


class TestFilterConfig:
    @pytest.mark.parametrize("ratio", [0.0, -0.1, 1.5])
    def test_ratio_out_of_range(self, ratio: float):
        with pytest.raises(ValidationError):
            FilterConfig(topk_ratio=ratio)

    def test_full_ratio_allowed(self):
        assert FilterConfig(topk_ratio=1.0).topk_ratio == 1.0

    def test_count_must_be_positive(self):
        with pytest.raises(ValidationError):
            FilterConfig(topk_count=0)

    def test_alpha_init_range(self):
        with pytest.raises(ValidationError):
            FilterConfig(alpha_init=1.2)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            FilterConfig(top_k=4)


class TestMcafConfig:
    def test_heads_must_divide_channels(self):
        with pytest.raises(ValidationError):
            McafConfig(channels=32, heads=3)

    def test_channels_split_into_four_branches(self):
        with pytest.raises(ValidationError):
            McafConfig(channels=18, heads=2)

    def test_head_dim(self):
        assert McafConfig(channels=32, heads=4).head_dim == 8

    def test_check_spatial(self):
        config = McafConfig(window=8, region_grid=4)
        config.check_spatial(16, 24)
        with pytest.raises(ShapeError):
            config.check_spatial(16, 20)


class TestFusionConfig:
    def test_defaults(self):
        config = FusionConfig()
        assert (config.channels, config.heads, config.window, config.region_grid) == (32, 4, 8, 8)
        assert config.topk_ratio == 0.25 and config.alpha_init == 0.2
        assert config.attention_mode is AttentionMode.CROSS

    @pytest.mark.parametrize("size", [0, 48, 100])
    def test_image_size_power_of_two(self, size: int):
        with pytest.raises(ValidationError):
            FusionConfig(image_size=size)

    def test_image_size_divisible_by_window(self):
        with pytest.raises(ValidationError):
            FusionConfig(image_size=16, window=32)

    def test_stage_checks_propagate(self):
        with pytest.raises(ValidationError):
            FusionConfig(channels=30)

    def test_seed_is_unsigned_64_bit(self):
        FusionConfig(seed=2**64 - 1)
        with pytest.raises(ValidationError):
            FusionConfig(seed=-1)

    def test_stage_views(self):
        config = FusionConfig(topk_ratio=0.5, heads=2, use_global_gate=False)
        assert config.filter_config.topk_ratio == 0.5
        assert config.mcaf_config.heads == 2
        assert config.mcaf_config.use_global_gate is False

    def test_lines_parse_back(self):
        config = FusionConfig(seed=9, topk_count=12, attention_mode="self", use_freq_filter=False)
        lines = config.to_lines()
        assert "attention_mode = self" in lines
        assert "topk_count = 12" in lines
        assert "use_freq_filter = false" in lines
        assert FusionConfig(**parse_config_text("\n".join(lines))) == config

    def test_none_is_printed_as_none(self):
        assert "topk_count = none" in FusionConfig().to_lines()


class TestAlphaTrajectory:
    @pytest.fixture
    def trajectory(self) -> AlphaTrajectory:
        return AlphaTrajectory(
            steps=[
                TrajectoryStep(step=0, alpha_rgb=0.2, alpha_ir=0.2, loss=0.5),
                TrajectoryStep(step=1, alpha_rgb=0.25, alpha_ir=0.3, loss=0.25),
            ]
        )

    def test_initial_and_final(self, trajectory: AlphaTrajectory):
        assert trajectory.initial.step == 0
        assert trajectory.final.alpha_ir == 0.3

    def test_csv(self, trajectory: AlphaTrajectory):
        lines = trajectory.to_csv().splitlines()
        assert lines[0] == "step,alpha_rgb,alpha_ir,loss"
        assert lines[2] == "1,0.25000000,0.30000000,0.25"

    def test_alpha_outside_unit_interval(self):
        with pytest.raises(ValidationError):
            TrajectoryStep(step=0, alpha_rgb=1.1, alpha_ir=0.0, loss=0.0)

    def test_steps_must_be_ordered(self, trajectory: AlphaTrajectory):
        with pytest.raises(ValidationError):
            AlphaTrajectory(steps=list(reversed(trajectory.steps)))

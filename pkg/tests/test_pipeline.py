import numpy as np
import pytest

from fusion_tools.constants.modes import AttentionMode, ProbeStage
from fusion_tools.errors import ShapeError
from fusion_tools.models import FusionConfig
from fusion_tools.params import init_fusion_params
from fusion_tools.pipeline import FusionPipeline, filter_is_identity
from fusion_tools.tensor import Rng


@pytest.fixture
def x() -> np.ndarray:
    return Rng(21).uniform(0, 1, (1, 4, 16, 16), name="pipeline.input")


class TestFusionPipeline:
    def test_end_to_end_contract(self):
        config = FusionConfig(seed=0, image_size=64)
        x = Rng(0).uniform(0, 1, (1, 4, 64, 64), name="pipeline.input")
        first = FusionPipeline(config).forward(x)
        second = FusionPipeline(config).forward(x)
        assert first.shape == (1, 3, 64, 64)
        assert np.isfinite(first).all() and first.min() >= 0 and first.max() <= 1
        assert np.array_equal(first, second)

    def test_seed_changes_output(self, small_config: FusionConfig, x):
        other = small_config.copy(update={"seed": small_config.seed + 1})
        assert not np.array_equal(FusionPipeline(small_config).forward(x), FusionPipeline(other).forward(x))

    @pytest.mark.parametrize(
        "update",
        [
            {"use_freq_filter": False},
            {"attention_mode": AttentionMode.NONE},
            {"use_global_gate": False},
        ],
    )
    def test_component_ablations_change_output(self, small_config: FusionConfig, x, update):
        params = init_fusion_params(small_config).with_alphas(0.8, 0.8)
        reference = FusionPipeline(small_config, params).forward(x)
        ablated = FusionPipeline(small_config.copy(update=update), params).forward(x)
        assert np.abs(reference - ablated).max() > 1e-4

    def test_run_reports_diagnostics(self, small_config: FusionConfig, x):
        result = FusionPipeline(small_config).run(x)
        assert result.blend.shape == x.shape
        assert result.alphas == pytest.approx((0.2, 0.2))
        assert set(result.mask_cardinality()) == {"rgb", "ir"}
        assert result.mask_selected() == {"rgb": 64, "ir": 64}
        assert all(result.mask_cardinality()[m] >= 64 for m in ("rgb", "ir"))

    def test_without_filter_blend_is_input(self, small_config: FusionConfig, x):
        result = FusionPipeline(small_config.copy(update={"use_freq_filter": False})).run(x)
        assert result.reports == []
        assert result.mask_cardinality() == {}
        assert filter_is_identity(result, x)

    def test_alpha_zero_is_filter_identity(self, small_config: FusionConfig, x):
        params = init_fusion_params(small_config).with_alphas(0.0, 0.0)
        result = FusionPipeline(small_config, params).run(x)
        assert filter_is_identity(result, x)
        unfiltered = FusionPipeline(small_config.copy(update={"use_freq_filter": False}), params).forward(x)
        np.testing.assert_allclose(result.output, unfiltered, atol=1e-6)

    def test_full_ratio_is_filter_identity(self, small_config: FusionConfig, x):
        result = FusionPipeline(small_config.copy(update={"topk_ratio": 1.0})).run(x)
        assert filter_is_identity(result, x)

    def test_forward_filtered_matches_run(self, small_config: FusionConfig, x):
        pipeline = FusionPipeline(small_config)
        reports = pipeline.filtered(x)
        assert np.array_equal(pipeline.forward_filtered(x, reports), pipeline.forward(x))

    def test_forward_filtered_blend_stage(self, small_config: FusionConfig, x):
        pipeline = FusionPipeline(small_config)
        blended = pipeline.forward_filtered(x, pipeline.filtered(x), (1.0, 0.0), stage=ProbeStage.BLEND)
        assert blended.shape == x.shape
        np.testing.assert_array_equal(blended[:, 3:], x[:, 3:])

    def test_rejects_three_channel_input(self, small_config: FusionConfig):
        with pytest.raises(ShapeError):
            FusionPipeline(small_config).forward(np.zeros((1, 3, 16, 16), np.float32))

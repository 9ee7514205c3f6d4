import pytest

from fusion_tools.bench import run_bench
from fusion_tools.models import FusionConfig


class TestRunBench:
    def test_statistics(self, small_config: FusionConfig):
        report = run_bench(small_config, iters=3)
        assert report.size == 16 and report.iters == 3
        assert 0 < report.min_ms <= report.mean_ms
        assert report.fps == pytest.approx(1000.0 / report.mean_ms)

    def test_single_sample_has_zero_std(self, small_config: FusionConfig):
        assert run_bench(small_config, iters=1).std_ms == 0.0

    def test_rejects_zero_iterations(self, small_config: FusionConfig):
        with pytest.raises(ValueError):
            run_bench(small_config, iters=0)

    @pytest.mark.slow
    def test_full_size_protocol(self):
        report = run_bench(FusionConfig(image_size=512), iters=50)
        assert set(report.dict()) == {"mean_ms", "std_ms", "min_ms", "fps", "size", "iters"}
        assert report.size == 512

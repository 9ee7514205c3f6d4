"""Latency benchmark of the forward pass on a fixed random input."""

import logging
import time

import numpy as np
from tqdm import tqdm

from .constants.modalities import INPUT_CHANNELS
from .models import BenchReport, FusionConfig
from .pipeline import FusionPipeline
from .tensor import Rng

logger = logging.getLogger(__name__)

WARMUP_ITERS = 3


def run_bench(config: FusionConfig, iters: int, disable: bool = True) -> BenchReport:
    """Time `iters` forward passes of a (1, 4, S, S) input after a short warm-up.

    S is `config.image_size`. The standard deviation is the population one, so a
    single sample reports 0.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    size = config.image_size
    pipeline = FusionPipeline(config)
    x = Rng(config.seed).uniform(0.0, 1.0, (1, INPUT_CHANNELS, size, size), name="bench.input")

    for _ in range(WARMUP_ITERS):
        pipeline.forward(x)

    samples = []
    for _ in tqdm(range(iters), disable=disable, desc="Benchmarking", unit="iter"):
        start = time.perf_counter()
        pipeline.forward(x)
        samples.append((time.perf_counter() - start) * 1000.0)

    timings = np.asarray(samples, dtype=np.float64)
    mean_ms = float(timings.mean())
    report = BenchReport(
        mean_ms=mean_ms,
        std_ms=float(timings.std()),
        min_ms=float(timings.min()),
        fps=1000.0 / mean_ms if mean_ms > 0 else float("inf"),
        size=size,
        iters=iters,
    )
    logger.info("bench %dx%d: %.2f ms mean over %d iters", size, size, mean_ms, iters)
    return report

"""Synthetic scenes and probe datasets for alpha training."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .constants.modalities import INPUT_CHANNELS
from .tensor import DTYPE, Rng, Tensor4

Sample = Tuple[Tensor4, Tensor4]

DEFAULT_NOISE = 0.1


def clean_scene(size: int, seed: int = 0, index: int = 0) -> Tensor4:
    """Constant image: one random level per channel in [0.2, 0.8]."""
    levels = Rng(seed).uniform(0.2, 0.8, (INPUT_CHANNELS,), name=f"synthetic.levels.{index}")
    return np.broadcast_to(levels[None, :, None, None], (1, INPUT_CHANNELS, size, size)).astype(DTYPE)


def sinusoid_scene(size: int, seed: int = 0, index: int = 0) -> Tensor4:
    """Smooth low-frequency pattern per channel, values in [0.2, 0.8]."""
    rng = Rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, (INPUT_CHANNELS, 2), name=f"synthetic.phases.{index}")
    cycles = rng.stream(f"synthetic.cycles.{index}").integers(1, 3, size=(INPUT_CHANNELS, 2))
    coords = np.arange(size, dtype=np.float64) / size
    planes = []
    for channel in range(INPUT_CHANNELS):
        rows = np.sin(2.0 * np.pi * cycles[channel, 0] * coords + phases[channel, 0])
        cols = np.cos(2.0 * np.pi * cycles[channel, 1] * coords + phases[channel, 1])
        planes.append(0.5 + 0.15 * rows[:, None] + 0.15 * cols[None, :])
    return np.stack(planes)[None].astype(DTYPE)


def add_noise(x: Tensor4, sigma: float, seed: int = 0, index: int = 0) -> Tensor4:
    """White Gaussian noise of standard deviation `sigma` added to `x`."""
    noise = Rng(seed).normal(x.shape, name=f"synthetic.noise.{index}")
    return (x.astype(np.float64) + sigma * noise).astype(DTYPE)


def noisy_scenes(size: int, samples: int, noise: float = DEFAULT_NOISE, seed: int = 0) -> List[Tensor4]:
    return [add_noise(sinusoid_scene(size, seed, i), noise, seed, i) for i in range(samples)]


def _task_toward(pipeline, alphas: Tuple[float, float], samples: int, noise: float, seed: int) -> List[Sample]:
    dataset = []
    for x in noisy_scenes(pipeline.config.image_size, samples, noise, seed):
        target = pipeline.forward_filtered(x, pipeline.filtered(x), alphas)
        dataset.append((x, target))
    return dataset


def toward_filtered_task(pipeline, samples: int = 2, noise: float = DEFAULT_NOISE, seed: int = 0) -> List[Sample]:
    """Noisy inputs whose targets are the pipeline output at alpha = 1 (fully filtered)."""
    return _task_toward(pipeline, (1.0, 1.0), samples, noise, seed)


def toward_raw_task(pipeline, samples: int = 2, noise: float = DEFAULT_NOISE, seed: int = 0) -> List[Sample]:
    """Noisy inputs whose targets are the pipeline output at alpha = 0 (unfiltered)."""
    return _task_toward(pipeline, (0.0, 0.0), samples, noise, seed)


@dataclass(frozen=True)
class ResolutionNoiseTask:
    """Clean constant scenes plus white noise, the noise level growing with image size.

    With `proportional` the standard deviation is base_noise * size / reference_size,
    otherwise it is base_noise at every size.
    """

    base_noise: float = DEFAULT_NOISE
    reference_size: int = 32
    proportional: bool = True
    samples: int = 2
    seed: int = 0

    def noise_at(self, size: int) -> float:
        if not self.proportional:
            return self.base_noise
        return self.base_noise * size / self.reference_size

    def dataset(self, size: int) -> List[Sample]:
        sigma = self.noise_at(size)
        dataset = []
        for index in range(self.samples):
            clean = clean_scene(size, self.seed, index)
            dataset.append((add_noise(clean, sigma, self.seed, index), clean))
        return dataset

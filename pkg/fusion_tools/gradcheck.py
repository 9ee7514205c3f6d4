"""Finite-difference gradients and numeric-gradient training of the blend coefficients."""

import logging
from dataclasses import dataclass
from multiprocessing import cpu_count
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm
from tqdm.contrib.concurrent import process_map

from .constants.modes import ProbeStage
from .errors import DivergenceError, EvaluationError, ShapeError
from .models import AlphaTrajectory, FusionConfig, TrajectoryStep
from .pipeline import FusionPipeline
from .synthetic import ResolutionNoiseTask, Sample

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-3


def _evaluate(f: Callable[[np.ndarray], float], point: np.ndarray) -> float:
    value = float(f(point))
    if not np.isfinite(value):
        raise EvaluationError(f"objective is not finite at {point.tolist()}: {value}")
    return value


def numeric_grad(f: Callable[[np.ndarray], float], params, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Central-difference gradient of the scalar function `f` at `params`.

    Args:
        f: Scalar objective of a float64 parameter vector.
        params: Point to differentiate at; scalars are treated as 1-vectors.
        eps: Perturbation applied to one coordinate at a time.

    Returns:
        np.ndarray: (f(p + eps e_i) - f(p - eps e_i)) / (2 eps) per coordinate,
            shaped like `params`.

    Raises:
        EvaluationError: `f` returned NaN or Inf at a perturbed point.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    point = np.atleast_1d(np.asarray(params, dtype=np.float64)).copy()
    grad = np.zeros_like(point)
    for i in range(point.size):
        original = point.flat[i]
        point.flat[i] = original + eps
        upper = _evaluate(f, point)
        point.flat[i] = original - eps
        lower = _evaluate(f, point)
        point.flat[i] = original
        grad.flat[i] = (upper - lower) / (2.0 * eps)
    return grad.reshape(np.shape(params)) if np.ndim(params) else grad


@dataclass(frozen=True)
class ProbeLoss:
    """Reconstruction probe against a fixed target."""

    target: np.ndarray
    kind: str = "mse"

    def __post_init__(self):
        if self.kind != "mse":
            raise ValueError(f"unsupported probe loss {self.kind!r}")
        if not np.isfinite(self.target).all():
            raise ValueError("probe target holds non-finite values")


def probe_loss(output: np.ndarray, loss: ProbeLoss) -> float:
    """Mean squared error between `output` and the probe target."""
    if np.shape(output) != np.shape(loss.target):
        raise ShapeError(f"output {np.shape(output)} does not match target {np.shape(loss.target)}")
    diff = np.asarray(output, dtype=np.float64) - np.asarray(loss.target, dtype=np.float64)
    return float(np.mean(diff * diff))


def train_alpha(
    pipeline: FusionPipeline,
    dataset: Sequence[Sample],
    steps: int,
    lr: float,
    eps: float = DEFAULT_EPS,
    stage: ProbeStage = ProbeStage.FUSED,
    disable: bool = True,
) -> AlphaTrajectory:
    """Gradient descent on (alpha_rgb, alpha_ir) with every other parameter frozen.

    The trajectory holds `steps + 1` rows: row k is the state after k updates.
    Alphas are clamped to [0, 1] after each update and written back to
    `pipeline.params` when training finishes.

    Raises:
        DivergenceError: the probe loss became non-finite; `.trajectory` holds
            the rows recorded so far.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if lr < 0:
        raise ValueError(f"lr must be >= 0, got {lr}")
    if not dataset:
        raise ValueError("dataset is empty")

    # filter reports do not depend on alpha
    cached = [(x, pipeline.filtered(x), ProbeLoss(target)) for x, target in dataset]

    def objective(alphas: np.ndarray) -> float:
        losses = [
            probe_loss(pipeline.forward_filtered(x, reports, (alphas[0], alphas[1]), stage), probe)
            for x, reports, probe in cached
        ]
        return float(np.mean(losses))

    trajectory = AlphaTrajectory()
    alphas = np.array(pipeline.params.filter.alphas(), dtype=np.float64)

    def record(step: int, loss: float):
        if not np.isfinite(loss):
            logger.warning("alpha training diverged at step %d", step)
            raise DivergenceError(f"probe loss became non-finite at step {step}", trajectory)
        trajectory.steps.append(
            TrajectoryStep(step=step, alpha_rgb=alphas[0], alpha_ir=alphas[1], loss=loss)
        )

    record(0, objective(alphas))
    for step in tqdm(range(1, steps + 1), disable=disable, desc="Training alpha", unit="step"):
        try:
            grad = numeric_grad(objective, alphas, eps)
        except EvaluationError as err:
            logger.warning("alpha training diverged at step %d", step)
            raise DivergenceError(str(err), trajectory) from err
        alphas = np.clip(alphas - lr * grad, 0.0, 1.0)
        record(step, objective(alphas))
        logger.debug("step %d alphas %s loss %.6g", step, alphas.tolist(), trajectory.final.loss)

    pipeline.params = pipeline.params.with_alphas(*alphas)
    return trajectory


SweepOutcome = Tuple[int, Optional[float], Optional[AlphaTrajectory]]


def _sweep_one(args: Iterable[Any]) -> SweepOutcome:
    size, task, config, steps, lr, stage = args
    sized = FusionConfig(**{**config.dict(), "image_size": size})
    pipeline = FusionPipeline(sized)
    try:
        trajectory = train_alpha(pipeline, task.dataset(size), steps, lr, stage=stage)
    except DivergenceError as err:
        # no mean alpha marks a diverged run
        return size, None, err.trajectory
    final = trajectory.final
    mean_alpha = (final.alpha_rgb + final.alpha_ir) / 2.0
    logger.info("resolution %d: noise %.4g, final mean alpha %.4f", size, task.noise_at(size), mean_alpha)
    return size, mean_alpha, None


def resolution_sweep(
    resolutions: Sequence[int],
    task: ResolutionNoiseTask,
    config: FusionConfig,
    steps: int,
    lr: float,
    threads: int = 1,
    stage: ProbeStage = ProbeStage.BLEND,
) -> List[Tuple[int, float]]:
    """Train alpha independently at each resolution; returns (resolution, final mean alpha).

    Args:
        threads (int, optional): Number of worker processes. 1 runs sequentially,
            -1 uses all CPUs and values below -1 use (n_cpus + 1 + threads).

    Raises:
        DivergenceError: training diverged at some resolution. `.results` holds
            the rows for the resolutions before it and `.trajectory` the
            diverging run's partial trajectory.
    """
    jobs = [(size, task, config, steps, lr, stage) for size in resolutions]
    if threads in (None, 0, 1):
        outcomes = [_sweep_one(job) for job in tqdm(jobs, desc="Resolution sweep", unit="size", disable=None)]
    else:
        n_workers: Optional[int] = threads if threads > 1 else cpu_count() + 1 + threads
        outcomes = process_map(
            _sweep_one,
            jobs,
            max_workers=max(1, n_workers),
            total=len(jobs),
            desc="Resolution sweep",
            unit="size",
        )

    results: List[Tuple[int, float]] = []
    for size, mean_alpha, diverged in outcomes:
        if mean_alpha is None:
            logger.warning("alpha training diverged at resolution %d", size)
            raise DivergenceError(f"alpha training diverged at resolution {size}", diverged, results)
        results.append((size, mean_alpha))
    return results

"""Command-line entry point.

Machine-readable output (JSON lines, CSV, PASS/FAIL lines, printed config)
goes to stdout; logs go to stderr.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bench import run_bench
from .config import resolve_config, with_overrides
from .constants.exit_codes import ExitCodes
from .constants.modes import GradcheckMode, ProbeStage
from .errors import (
    ConfigError,
    DivergenceError,
    FusionError,
    InputError,
    NumericError,
    ShapeError,
    WeightFormatError,
)
from .gradcheck import resolution_sweep, train_alpha
from .image_io import load_pair, save_fused, save_gray
from .models import AlphaTrajectory, FuseMetrics, FusionConfig, WeightSummary
from .params import init_fusion_params, params_from_named
from .pipeline import FusionPipeline, filter_is_identity
from .selftest import run_selftest
from .synthetic import ResolutionNoiseTask, toward_filtered_task, toward_raw_task
from .weights import load_weights, read_weight_file, save_weights

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
TOWARD_LR = 1.0
SWEEP_LR = 0.5
DEFAULT_RESOLUTIONS = "32,64,128"

# Most specific classes first.
EXIT_CODES = (
    (InputError, ExitCodes.INPUT),
    (ConfigError, ExitCodes.CONFIG),
    (NumericError, ExitCodes.NUMERIC),
    (ShapeError, ExitCodes.NUMERIC),
)


def exit_code_for(err: FusionError) -> ExitCodes:
    for cls, code in EXIT_CODES:
        if isinstance(err, cls):
            return code
    return ExitCodes.NUMERIC


def _emit(line: str):
    sys.stdout.write(line + "\n")
    sys.stdout.flush()


# Commands
def cmd_fuse(args: argparse.Namespace, config: FusionConfig) -> ExitCodes:
    params = load_weights(args.weights, config) if args.weights else None
    pipeline = FusionPipeline(config, params)
    x = load_pair(args.rgb, args.ir, config.image_size)

    start = time.perf_counter()
    result = pipeline.run(x)
    wall_ms = (time.perf_counter() - start) * 1000.0

    save_fused(result.output, args.out)
    for directory, plane_of, normalize, stem in (
        (args.emit_mask, lambda r: r.mask.values, False, "mask"),
        (args.emit_spectrum, lambda r: r.amplitude[0, 0], True, "spectrum"),
    ):
        if directory is None or not result.reports:
            continue
        try:
            Path(directory).mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise InputError(f"cannot create diagnostics directory {directory}: {err}") from err
        for modality, report in result.reports[0].items():
            save_gray(plane_of(report), Path(directory) / f"{stem}_{modality.value}.png", normalize=normalize)

    metrics = FuseMetrics(
        alpha_rgb=result.alphas[0],
        alpha_ir=result.alphas[1],
        mask_cardinality=result.mask_cardinality(),
        mask_selected=result.mask_selected(),
        output_min=float(result.output.min()),
        output_max=float(result.output.max()),
        wall_ms=round(wall_ms, 3),
        filter_identity=filter_is_identity(result, x),
        size=config.image_size,
    )
    _emit(metrics.json())
    return ExitCodes.OK


def cmd_selftest(args: argparse.Namespace, config: FusionConfig) -> ExitCodes:
    _, failed = run_selftest(_emit)
    return ExitCodes.NUMERIC if failed else ExitCodes.OK


def cmd_bench(args: argparse.Namespace, config: FusionConfig) -> ExitCodes:
    if args.iters < 1:
        raise ConfigError(f"--iters must be >= 1, got {args.iters}")
    config = with_overrides(config, image_size=args.size)
    _emit(run_bench(config, args.iters, disable=not args.verbose).json())
    return ExitCodes.OK


def _emit_trajectory(trajectory: AlphaTrajectory):
    for line in trajectory.to_csv().splitlines():
        _emit(line)


def _emit_sweep(results: List[Tuple[int, float]]):
    _emit("resolution,mean_alpha")
    for size, alpha in results:
        _emit(f"{size},{alpha:.8f}")


def cmd_gradcheck(args: argparse.Namespace, config: FusionConfig) -> ExitCodes:
    if args.steps < 1:
        raise ConfigError(f"--steps must be >= 1, got {args.steps}")
    if args.lr is not None and args.lr < 0:
        raise ConfigError(f"--lr must be >= 0, got {args.lr}")
    mode = GradcheckMode(args.mode)

    if mode is GradcheckMode.RESOLUTION_SWEEP:
        resolutions = _parse_resolutions(args.resolutions)
        task = ResolutionNoiseTask(base_noise=args.noise, reference_size=resolutions[0], samples=args.samples)
        stage = ProbeStage(args.probe or ProbeStage.BLEND.value)
        lr = SWEEP_LR if args.lr is None else args.lr
        config = with_overrides(config, alpha_init=args.alpha_init)
        try:
            results = resolution_sweep(resolutions, task, config, args.steps, lr, args.threads, stage)
        except DivergenceError as err:
            _emit_sweep(err.results)
            if err.trajectory is not None:
                _emit_trajectory(err.trajectory)
            raise
        _emit_sweep(results)
        alphas = [alpha for _, alpha in results]
        increasing = all(later >= earlier for earlier, later in zip(alphas, alphas[1:]))
        _emit(f"alpha non-decreasing: {str(increasing).lower()}")
        return ExitCodes.OK

    config = with_overrides(config, image_size=args.size, alpha_init=args.alpha_init)
    pipeline = FusionPipeline(config)
    build_task = toward_filtered_task if mode is GradcheckMode.TOWARD_FILTERED else toward_raw_task
    dataset = build_task(pipeline, samples=args.samples, noise=args.noise, seed=config.seed)
    stage = ProbeStage(args.probe or ProbeStage.FUSED.value)
    lr = TOWARD_LR if args.lr is None else args.lr
    try:
        trajectory = train_alpha(pipeline, dataset, args.steps, lr, stage=stage, disable=not args.verbose)
    except DivergenceError as err:
        if err.trajectory is not None:
            _emit_trajectory(err.trajectory)
        raise
    _emit_trajectory(trajectory)
    initial, final = trajectory.initial.alpha_rgb, trajectory.final.alpha_rgb
    if mode is GradcheckMode.TOWARD_FILTERED:
        _emit(f"alpha increased: {str(final > initial).lower()}")
    else:
        _emit(f"alpha decreased: {str(final < initial).lower()}")
    return ExitCodes.OK


def _parse_resolutions(text: str) -> List[int]:
    try:
        sizes = [int(item) for item in text.split(",") if item.strip()]
    except ValueError as err:
        raise ConfigError(f"--resolutions must be comma-separated integers, got {text!r}") from err
    if not sizes:
        raise ConfigError("--resolutions is empty")
    return sizes


def cmd_weights_export(args: argparse.Namespace, config: FusionConfig) -> ExitCodes:
    count = save_weights(init_fusion_params(config), args.out)
    logger.info("exported %d tensors for seed %d", count, config.seed)
    return ExitCodes.OK


def cmd_weights_import(args: argparse.Namespace, config: FusionConfig) -> ExitCodes:
    tensors = read_weight_file(args.path)
    try:
        params = params_from_named(tensors, config)
    except WeightFormatError as err:
        raise WeightFormatError(f"{args.path}: {err}") from err
    alpha_rgb, alpha_ir = params.filter.alphas()
    summary = WeightSummary(
        entries=len(tensors),
        parameters=int(sum(np.asarray(t).size for t in tensors.values())),
        alpha_rgb=alpha_rgb,
        alpha_ir=alpha_ir,
    )
    _emit(summary.json())
    return ExitCodes.OK


# Parser
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusion-tools",
        description="Frequency-filtered cross-attention fusion of RGB and IR images.",
    )
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--seed", type=int, help="seed for parameter initialisation (overrides FMCAF_SEED)")
    # the same two flags are accepted after the command name
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    shared.add_argument("--seed", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    parser.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log INFO (-v) or DEBUG (-vv) to stderr")
    commands = parser.add_subparsers(dest="command")

    fuse = commands.add_parser("fuse", parents=[shared], help="fuse an RGB/IR pair into one RGB image")
    fuse.add_argument("--rgb", required=True)
    fuse.add_argument("--ir", required=True)
    fuse.add_argument("--out", required=True)
    fuse.add_argument("--weights", help="weight file to use instead of seeded initialisation")
    fuse.add_argument("--emit-mask", metavar="DIR", help="write per-modality spectral masks as PNGs")
    fuse.add_argument("--emit-spectrum", metavar="DIR", help="write per-modality log-amplitude spectra as PNGs")
    fuse.set_defaults(handler=cmd_fuse)

    selftest = commands.add_parser("selftest", parents=[shared], help="run the built-in invariant checks")
    selftest.set_defaults(handler=cmd_selftest)

    bench = commands.add_parser("bench", parents=[shared], help="time forward passes on a random input")
    bench.add_argument("--size", type=int, help="input side length (default: image_size)")
    bench.add_argument("--iters", type=int, default=10)
    bench.set_defaults(handler=cmd_bench)

    gradcheck = commands.add_parser("gradcheck", parents=[shared], help="train the blend coefficients on a synthetic task")
    gradcheck.add_argument("--mode", required=True, choices=[m.value for m in GradcheckMode])
    gradcheck.add_argument("--steps", type=int, default=50)
    gradcheck.add_argument("--lr", type=float, help=f"step size (default {TOWARD_LR}, {SWEEP_LR} for the sweep)")
    gradcheck.add_argument("--alpha-init", type=float, help="initial alpha (overrides alpha_init)")
    gradcheck.add_argument("--size", type=int, default=32, help="image side for the toward-* tasks")
    gradcheck.add_argument("--resolutions", default=DEFAULT_RESOLUTIONS, help="comma-separated sweep sizes")
    gradcheck.add_argument("--threads", type=int, default=1, help="sweep worker processes (-1: all CPUs)")
    gradcheck.add_argument("--probe", choices=[s.value for s in ProbeStage], help="stage the probe loss reads")
    gradcheck.add_argument("--samples", type=int, default=2)
    gradcheck.add_argument("--noise", type=float, default=0.1, help="noise standard deviation")
    gradcheck.set_defaults(handler=cmd_gradcheck)

    weights = commands.add_parser("weights", parents=[shared], help="export or validate weight files")
    weight_commands = weights.add_subparsers(dest="weights_command")
    export = weight_commands.add_parser("export", parents=[shared], help="write the seeded initial parameters")
    export.add_argument("--out", required=True)
    export.set_defaults(handler=cmd_weights_export)
    import_ = weight_commands.add_parser("import", parents=[shared], help="validate a weight file against the config")
    import_.add_argument("--in", dest="path", required=True)
    import_.set_defaults(handler=cmd_weights_import)

    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    handler: Optional[Callable] = getattr(args, "handler", None)
    try:
        config = resolve_config(args.config, args.seed)
        if args.print_config:
            overrides: Dict[str, int] = {}
            if getattr(args, "size", None) is not None and args.command == "bench":
                overrides["image_size"] = args.size
            for line in with_overrides(config, **overrides).to_lines():
                _emit(line)
            return ExitCodes.OK.value
        if handler is None:
            parser.print_help(sys.stderr)
            return ExitCodes.CONFIG.value
        return handler(args, config).value
    except FusionError as err:
        code = exit_code_for(err)
        logger.error("%s", err)
        logger.debug("traceback", exc_info=True)
        return code.value
    except ValueError as err:
        logger.error("%s", err)
        logger.debug("traceback", exc_info=True)
        return ExitCodes.CONFIG.value

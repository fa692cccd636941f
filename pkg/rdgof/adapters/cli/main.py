"""
CLI Adapter - Command-line application
Handles argument parsing, wiring of services and the exit-code contract:
0 accept, 1 reject, 2 input or usage error, 3 numeric or simulation error.
"""
import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from pydantic import ValidationError

from rdgof import __version__
from rdgof.adapters.cli.config import NULLS, STATISTICS, RunConfig
from rdgof.adapters.io.json_report import load_report, write_report
from rdgof.adapters.io.text_input import read_matrix, read_observations
from rdgof.adapters.sampling.numpy_samplers import CategoricalSampler, parse_alternative, sampler_for_null
from rdgof.application.ports.sampler import Sampler
from rdgof.application.ports.test_statistic import TestStatistic
from rdgof.application.services.calibration import (
    ALTERNATIVE_STREAM,
    NullModel,
    calibrate,
    derived_seed,
    gaussianity_diagnostics,
    power_estimate,
    simulate_null,
)
from rdgof.application.services.rd_solver import BETA_CAP, SolverConfig, blahut_arimoto, solve_for_distortion
from rdgof.application.services.test_service import GoodnessOfFitService
from rdgof.application.services.test_statistics import (
    BinnedEntropyStatistic,
    ChannelRDStatistic,
    CircularRDStatistic,
    GaussianRDStatistic,
    HammingRDStatistic,
    LikelihoodRatioStatistic,
    PearsonStatistic,
    RayleighTestStatistic,
    SecondMomentStatistic,
)
from rdgof.domain.distortion import HammingDistortion, MatrixDistortion
from rdgof.domain.distributions import DiscreteDistribution, SampleKind, uniform
from rdgof.domain.errors import InputError, SimulationError
from rdgof.domain.kernels import (
    alpha_from_distortion,
    gaussian_alpha_from_distortion,
    vonmises_kappa_from_distortion,
)
from rdgof.domain.reports import MAX_SEED

logger = logging.getLogger(__name__)

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERIC_ERROR = 3
SEED_ENV = "RDGOF_SEED"

SAMPLE_KINDS = {
    "uniform": SampleKind.CATEGORICAL,
    "discrete": SampleKind.CATEGORICAL,
    "normal": SampleKind.REAL,
    "circular": SampleKind.CIRCULAR,
}


# ===== Argument parsing =====

def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", help="Report path (stdout when absent)")


def _add_simulation(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--reps", dest="replications", type=int, help="Monte Carlo replications")
    parser.add_argument("--seed", type=int, help=f"Master seed (falls back to ${SEED_ENV}, then 0)")
    parser.add_argument("--workers", type=int, help="Threads for replications")
    parser.add_argument("--sig", dest="significance", type=float, help="Significance level in (0, 1)")


def _add_null_and_statistic(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("null", choices=NULLS, help="Null model")
    parser.add_argument("--l", type=int, help="Alphabet size of the uniform null")
    parser.add_argument("--probs", type=_float_list, help="Probabilities of the discrete null")
    parser.add_argument("--statistic", choices=STATISTICS, help="Test statistic (default rd)")
    kernel = parser.add_argument_group("kernel")
    kernel.add_argument("--alpha", type=float, help="Mixture / channel weight")
    kernel.add_argument("--kappa", type=float, help="von Mises concentration")
    kernel.add_argument("--d0", type=float, help="Distortion level")
    kernel.add_argument("--bins", type=int, help="Bins of the entropy statistic")
    kernel.add_argument("--gamma", type=float, help="Bin exponent when --bins is absent")
    quad = parser.add_argument_group("quadrature")
    quad.add_argument("--grid-points", type=int, help="Minimum quadrature grid points")
    quad.add_argument("--truncation-sigmas", type=float, help="Line truncation in component sds")
    quad.add_argument("--points-per-sigma", type=float, help="Grid resolution per component sd")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per operation; absent flags stay absent"""
    parser = argparse.ArgumentParser(
        prog="rdgof",
        description="Rate-distortion goodness-of-fit tests",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--version", action="version", version=f"rdgof {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--from-report", help="Re-run the configuration embedded in a report")
    _add_output(parser)
    sub = parser.add_subparsers(dest="command")

    test = sub.add_parser("test", help="Test a sample against a null", argument_default=argparse.SUPPRESS)
    _add_null_and_statistic(test)
    test.add_argument("--input", required=True, help="Observation file, '-' for stdin")
    test.add_argument("--degrees", action="store_true", help="Angles are in degrees")
    test.add_argument("--calibrate", action="store_true", help="Calibrate by Monte Carlo")
    test.add_argument("--critical-value", type=float, help="Known critical value K_n")
    test.add_argument("--asymptotic", action="store_true", help="Chi-square calibration (lr only)")
    _add_simulation(test)
    _add_output(test)

    solve = sub.add_parser("rd-solve", help="Solve a discrete rate-distortion problem",
                           argument_default=argparse.SUPPRESS)
    solve.add_argument("--matrix", help="Distortion matrix file (Hamming when absent)")
    solve.add_argument("--l", type=int, help="Alphabet size for the Hamming distortion")
    solve.add_argument("--probs", type=_float_list, help="Source probabilities (uniform when absent)")
    solve.add_argument("--beta", type=float, help="Slope parameter")
    solve.add_argument("--d0", type=float, help="Target distortion")
    solve.add_argument("--tol", type=float, help="Tolerance on the rate change")
    solve.add_argument("--max-iter", type=int, help="Iteration budget")
    _add_output(solve)

    for name, text in (("calibrate", "Simulate the null distribution and K_n"),
                       ("power", "Estimate power against an alternative"),
                       ("diagnose", "Gaussianity diagnostics of the null distribution")):
        command = sub.add_parser(name, help=text, argument_default=argparse.SUPPRESS)
        _add_null_and_statistic(command)
        command.add_argument("--n", type=int, required=True, help="Sample size")
        _add_simulation(command)
        _add_output(command)
        if name == "power":
            command.add_argument("--alt", dest="alternative", required=True,
                                 help="vonmises:C:K, normal:M:S, categorical:P1,P2,..., uniform:L or circular")
            command.add_argument("--critical-value", type=float, help="Known K_n (calibrated otherwise)")
    return parser


def resolve_seed(flag: Optional[int], environ: Mapping[str, str]) -> int:
    """Seed from the flag, else the environment, else 0"""
    if flag is not None:
        return flag
    text = environ.get(SEED_ENV)
    if text is None or not text.strip():
        return 0
    try:
        seed = int(text)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got '{text}'")
    if not 0 <= seed <= MAX_SEED:
        raise InputError(f"{SEED_ENV} must be an unsigned 64-bit integer, got {seed}")
    return seed


def config_from_args(args: argparse.Namespace, environ: Mapping[str, str]) -> RunConfig:
    """Build the effective RunConfig from parsed flags or an earlier report"""
    values = vars(args).copy()
    values.pop("verbose", None)
    report_path = values.pop("from_report", None)
    if report_path is not None:
        embedded = dict(load_report(report_path)["config"])
        if "output" in values:
            embedded["output"] = values["output"]
        return RunConfig.model_validate(embedded)

    if values.get("command") is None:
        raise InputError("a command is required (test, rd-solve, calibrate, power, diagnose)")
    quadrature = {key: values.pop(key) for key in ("grid_points", "truncation_sigmas", "points_per_sigma")
                  if key in values}
    if quadrature:
        values["quadrature"] = quadrature
    values["seed"] = resolve_seed(values.get("seed"), environ)
    return RunConfig.model_validate(values)


# ===== Wiring =====

def null_distribution(config: RunConfig) -> DiscreteDistribution:
    if config.probs is not None:
        return DiscreteDistribution(config.probs)
    return uniform(config.l)


def null_sampler(config: RunConfig) -> Sampler:
    if config.null == "discrete":
        return CategoricalSampler(null_distribution(config))
    return sampler_for_null(NullModel(config.null), config.l or 2)


def solver_config(config: RunConfig, beta: float = 0.0) -> SolverConfig:
    return SolverConfig(beta=beta, tol=config.tol, max_iter=config.max_iter)


def _rd_statistic(config: RunConfig) -> TestStatistic:
    if config.null == "uniform":
        alpha = config.alpha if config.alpha is not None else alpha_from_distortion(config.d0, config.l)
        return HammingRDStatistic(alpha, config.l)
    if config.null == "discrete":
        null = null_distribution(config)
        channel, point, beta = solve_for_distortion(null, HammingDistortion(null.alphabet_size), config.d0,
                                                    solver_config(config))
        logger.info("solved channel for d0=%g: beta=%.12g rate=%.12g", config.d0, beta, point.rate)
        return ChannelRDStatistic(channel, null)
    if config.null == "normal":
        alpha = config.alpha if config.alpha is not None else gaussian_alpha_from_distortion(config.d0)
        return GaussianRDStatistic(alpha, config.quadrature)
    kappa = config.kappa if config.kappa is not None else vonmises_kappa_from_distortion(config.d0)
    return CircularRDStatistic(kappa, config.quadrature)


def build_statistic(config: RunConfig) -> TestStatistic:
    """Statistic named by the configuration, with its kernel resolved"""
    if config.statistic == "rd":
        return _rd_statistic(config)
    if config.statistic == "lr":
        return LikelihoodRatioStatistic(null_distribution(config))
    if config.statistic == "pearson":
        return PearsonStatistic(null_distribution(config))
    if config.statistic == "entropy":
        return BinnedEntropyStatistic(config.bins, config.gamma)
    if config.statistic == "rayleigh":
        return RayleighTestStatistic()
    return SecondMomentStatistic()


def _echo(config: RunConfig) -> dict:
    """Effective configuration without the output path, so a re-run reproduces the report"""
    return config.model_dump(mode="json", exclude={"output"})


# ===== Commands =====

def cmd_test(config: RunConfig) -> Tuple[dict, int]:
    """Test the input sample; exit 1 on rejection"""
    sample = read_observations(config.input, SAMPLE_KINDS[config.null], config.alphabet_size(), config.degrees)
    service = GoodnessOfFitService(null_sampler(config), build_statistic(config), config.workers)
    if config.asymptotic:
        report = service.run_asymptotic(sample, config.alphabet_size(), config.significance, config.seed,
                                        _echo(config))
    else:
        report = service.run(
            sample,
            significance=config.significance,
            replications=config.replications if config.calibrate else None,
            seed=config.seed,
            critical=config.critical_value,
            config=_echo(config),
        )
    code = EXIT_REJECT if report.decision == "reject" else EXIT_ACCEPT
    return report.model_dump(), code


def cmd_rd_solve(config: RunConfig) -> Tuple[dict, int]:
    """Solve for the optimal channel at a slope or a distortion level"""
    distortion = MatrixDistortion(read_matrix(config.matrix)) if config.matrix is not None else None
    if config.probs is not None:
        source = DiscreteDistribution(config.probs)
    else:
        source = uniform(distortion.matrix.shape[0] if distortion is not None else config.l)
    if distortion is None:
        distortion = HammingDistortion(source.alphabet_size)

    if config.d0 is not None:
        channel, point, _ = solve_for_distortion(source, distortion, config.d0, solver_config(config))
    else:
        beta = config.beta
        if beta > BETA_CAP:
            logger.warning("beta=%g capped at %g", beta, BETA_CAP)
            beta = BETA_CAP
        channel, point = blahut_arimoto(source, distortion, solver_config(config, beta))
    payload = {
        "command": "rd-solve",
        "config": _echo(config),
        "channel": channel.matrix.tolist(),
        **point.to_dict(),
        "seed": config.seed,
        "tool_version": __version__,
    }
    return payload, EXIT_ACCEPT


def cmd_calibrate(config: RunConfig) -> Tuple[dict, int]:
    """Simulated null distribution and K_n"""
    result = calibrate(null_sampler(config), build_statistic(config), config.n, config.replications,
                       config.seed, config.significance, config.workers)
    payload = {"command": "calibrate", "config": _echo(config), **result.model_dump(), "tool_version": __version__}
    return payload, EXIT_ACCEPT


def _check_alternative(alternative: Sampler, null: Sampler) -> None:
    if alternative.kind is not null.kind:
        raise InputError(f"A {alternative.kind.value} alternative cannot be tested against a {null.kind.value} null")
    size = getattr(null, "alphabet_size", None)
    if size is not None and getattr(alternative, "alphabet_size", size) != size:
        raise InputError(f"The alternative has {alternative.alphabet_size} symbols, the null has {size}")


def cmd_power(config: RunConfig) -> Tuple[dict, int]:
    """Power against the alternative at K_n (calibrated under the same seed when not given)"""
    null = null_sampler(config)
    alternative = parse_alternative(config.alternative)
    _check_alternative(alternative, null)
    statistic = build_statistic(config)
    critical = config.critical_value
    if critical is None:
        critical = calibrate(null, statistic, config.n, config.replications, config.seed,
                             config.significance, config.workers).critical_value
    estimate = power_estimate(statistic, critical, alternative, config.n, config.replications,
                              derived_seed(config.seed, ALTERNATIVE_STREAM), config.workers)
    payload = {"command": "power", "config": _echo(config), **estimate.model_dump(), "tool_version": __version__}
    return payload, EXIT_ACCEPT


def cmd_diagnose(config: RunConfig) -> Tuple[dict, int]:
    """Skewness, excess kurtosis and Q-Q correlation of the simulated null statistic"""
    samples = simulate_null(null_sampler(config), build_statistic(config), config.n, config.replications,
                            config.seed, config.workers)
    diagnostics = gaussianity_diagnostics(samples)
    payload = {
        "command": "diagnose",
        "config": _echo(config),
        **diagnostics.model_dump(),
        "n": config.n,
        "seed": config.seed,
        "tool_version": __version__,
    }
    return payload, EXIT_ACCEPT


COMMANDS: Dict[str, Callable[[RunConfig], Tuple[dict, int]]] = {
    "test": cmd_test,
    "rd-solve": cmd_rd_solve,
    "calibrate": cmd_calibrate,
    "power": cmd_power,
    "diagnose": cmd_diagnose,
}


def _message(error: Exception) -> str:
    if isinstance(error, ValidationError):
        return "; ".join(detail["msg"].removeprefix("Value error, ") for detail in error.errors())
    return str(error)


def main(argv: Optional[List[str]] = None, environ: Optional[Mapping[str, str]] = None) -> int:
    """Run one command and return its exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args, os.environ if environ is None else environ)
        payload, code = COMMANDS[config.command](config)
        write_report(payload, config.output)
        return code
    except SimulationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    except ValueError as e:
        print(f"error: {_message(e)}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ArithmeticError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())

import argparse
import math
import sys
from contextlib import ExitStack
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm
from tqdm.contrib.logging import logging_redirect_tqdm

from entropygames.core import (
    CanonicalEnsemble,
    EquilibriaReport,
    Game,
    InfoReport,
    InputException,
    InvariantViolationException,
    JointDistributionInput,
    LaxHamiltonian,
    LaxReport,
    MarkovChainReport,
    QuantumReport,
    Scenario,
    as_frequency_vector,
    build_frequency_matrix,
    default_probe_resolution,
    diagonal_equivalence_residual,
    entropy_derivatives,
    enumerate_symmetric_equilibria,
    gibbs,
    info_report,
    integrate,
    integrate_matrix_flow,
    integrate_von_neumann,
    lax_operators,
    markov_data_processing_check,
    quantize,
    sample_times,
)
from entropygames.core.game import DEFAULT_TOL
from entropygames.log import configure_logging, log, run_context

from .equilibration import network_from_scenario, run
from .io import write_csv, write_json

COMMANDS: Tuple[str, ...] = (
    "analyze",
    "simulate",
    "lax",
    "quantum",
    "info",
    "thermo",
    "globalize",
)

# Flag that names the input file of each command
_INPUT_FLAGS: Dict[str, str] = {
    "analyze": "--game",
    "simulate": "--game",
    "lax": "--game",
    "quantum": "--game",
    "info": "--joint",
    "thermo": "--ensemble",
    "globalize": "--scenario",
}

# (dt, t_end) used when not given on the command line
_TIME_DEFAULTS: Dict[str, Tuple[float, float]] = {
    "simulate": (1e-3, 10.0),
    "lax": (1e-3, 10.0),
    "quantum": (1e-3, 5.0),
    "globalize": (1e-2, 100.0),
}

# Largest residual accepted by the algebraic checks of the lax command
LAX_ALGEBRA_TOL: float = 1e-12

# Largest residual accepted along integrated trajectories (lax and quantum)
TRAJECTORY_TOL: float = 1e-6

# Largest relative drift of the total energy accepted by globalize
ENERGY_DRIFT_TOL: float = 1e-9

EXIT_OK: int = 0
EXIT_INVARIANT: int = 1
EXIT_INPUT: int = 2


@dataclass
class RunConfig:
    """
    Everything needed to run one command.
    """

    command: str
    """
    One of COMMANDS.
    """

    input_path: Path
    """
    The JSON input file.
    """

    output_dir: Path = Path(".")
    """
    Directory that receives the output files. Created if missing.
    """

    dt: float = 1e-3
    """
    Integration step size.
    """

    t_end: float = 10.0
    """
    Integration end time.
    """

    seed: int = 0
    """
    Seed for randomized sweeps.
    """

    log_base: str = "natural"
    """
    "natural" for entropies in nats, "two" for bits.
    """

    hbar: float = 1.0
    """
    Reduced Planck constant for the quantum command.
    """

    x0: Optional[List[float]] = None
    """
    Initial population frequencies. Uniform when not given.
    """

    samples: int = 100
    """
    Number of random states in the lax command's sweep.
    """

    sample_every: int = 1
    """
    globalize records every this many steps.
    """

    max_refinements: int = 0
    """
    How many times globalize halves a rejected step before failing.
    """

    grid_resolution: Optional[int] = None
    """
    Grid cells per simplex edge for analyze. Defaults to
    default_probe_resolution(n).
    """

    tol: float = DEFAULT_TOL
    """
    Payoff tie tolerance for analyze.
    """

    progress: bool = True
    """
    Whether to show progress bars on stderr.
    """

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InputException(f"Unknown command {self.command!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InputException(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise InputException(f"t_end must be non-negative, got {self.t_end}")
        if self.log_base not in ("natural", "two"):
            raise InputException(f"Unknown log base {self.log_base!r}")
        if self.grid_resolution is not None and self.grid_resolution < 2:
            raise InputException(
                f"grid_resolution must be at least 2, got {self.grid_resolution}"
            )
        if not (math.isfinite(self.tol) and self.tol >= 0):
            raise InputException(f"tol must be non-negative, got {self.tol}")

    def entropy_scale(self) -> float:
        """
        Multiplier that converts nats to the configured unit.
        """
        return 1.0 if self.log_base == "natural" else 1 / math.log(2)


def _float_type(
    check: Callable[[float], bool],
    requirement: str,
) -> Callable[[str], float]:
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number")
        if not (math.isfinite(value) and check(value)):
            raise argparse.ArgumentTypeError(f"{text} must be {requirement}")
        return value

    return parse


def _int_type(minimum: int) -> Callable[[str], int]:
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
        if value < minimum:
            raise argparse.ArgumentTypeError(f"{text} must be >= {minimum}")
        return value

    return parse


def _frequencies(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"{text!r} is not a comma-separated list of numbers"
        )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropy-games",
        description="""Analyze evolutionary games and their quantum
        statistical analogues. Every command reads one JSON input and writes
        CSV or JSON files to the output directory. Set ENTROPY_GAMES_LOG to
        debug, info or quiet to control messages on stderr.""",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True

    helps = {
        "analyze": "Find symmetric Nash equilibria and evolutionarily stable strategies",
        "simulate": "Integrate the replicator dynamics",
        "lax": "Integrate the commutator form and check it against the vector form",
        "quantum": "Integrate the von Neumann equation driven by a replicator trajectory",
        "info": "Entropies and mutual information of a joint strategy distribution",
        "thermo": "Canonical ensemble quantities and entropy derivatives",
        "globalize": "Equilibrate a network of canonical ensembles",
    }
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=helps[command])
        sub.add_argument(
            _INPUT_FLAGS[command],
            dest="input_path",
            metavar="<file>",
            required=True,
            type=Path,
            help="JSON input file.",
        )
        sub.add_argument(
            "--output-dir",
            metavar="<dir>",
            type=Path,
            default=Path("."),
            help="Directory for output files. (default: %(default)s)",
        )
        sub.add_argument(
            "--log-base",
            choices=["natural", "two"],
            default=None,
            help="""Logarithm base for entropies written by simulate, quantum
            and info. (default: two for info, natural otherwise)""",
        )
        if command in _TIME_DEFAULTS:
            dt, t_end = _TIME_DEFAULTS[command]
            sub.add_argument(
                "--dt",
                metavar="<step>",
                type=_float_type(lambda v: v > 0, "positive"),
                default=dt,
                help="Integration step size. (default: %(default)g)",
            )
            sub.add_argument(
                "--t-end",
                metavar="<time>",
                type=_float_type(lambda v: v >= 0, "non-negative"),
                default=t_end,
                help="Integration end time. (default: %(default)g)",
            )
        if command in ("simulate", "lax", "quantum"):
            sub.add_argument(
                "--x0",
                metavar="<x1,...,xn>",
                type=_frequencies,
                default=None,
                help="Initial frequencies. (default: uniform)",
            )
        if command == "analyze":
            sub.add_argument(
                "--grid-resolution",
                metavar="<cells>",
                type=_int_type(2),
                default=None,
                help="""Grid cells per simplex edge for the equilibrium search
                and ESS probes. (default: 100, 50 or 20 for 2, 3 or more
                strategies)""",
            )
            sub.add_argument(
                "--tol",
                metavar="<value>",
                type=_float_type(lambda v: v >= 0, "non-negative"),
                default=DEFAULT_TOL,
                help="Tolerance for payoff ties. (default: %(default)g)",
            )
        if command == "lax":
            sub.add_argument(
                "--samples",
                metavar="<count>",
                type=_int_type(1),
                default=100,
                help="Random states in the equivalence sweep. (default: %(default)s)",
            )
        if command == "quantum":
            sub.add_argument(
                "--hbar",
                metavar="<value>",
                type=_float_type(lambda v: v > 0, "positive"),
                default=1.0,
                help="Reduced Planck constant. (default: %(default)g)",
            )
        if command == "globalize":
            sub.add_argument(
                "--sample-every",
                metavar="<steps>",
                type=_int_type(1),
                default=1,
                help="Record every this many steps. (default: %(default)s)",
            )
            sub.add_argument(
                "--max-refinements",
                metavar="<count>",
                type=_int_type(0),
                default=0,
                help="""Times a rejected step is retried with halved
                substeps. (default: %(default)s)""",
            )
        sub.add_argument(
            "--seed",
            metavar="<seed>",
            type=_int_type(0),
            default=0,
            help="Seed for randomized sweeps. (default: %(default)s)",
        )
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Parses command-line arguments into a run configuration.

    Raises:
        SystemExit: With status 0 after printing help, or status 2 after
            printing usage when the arguments are invalid or the input file
            does not exist.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)

    if not args.input_path.is_file():
        parser.error(f"input file not found: {args.input_path}")

    default_dt, default_t_end = _TIME_DEFAULTS.get(args.command, (1e-3, 10.0))
    return RunConfig(
        command=args.command,
        input_path=args.input_path,
        output_dir=args.output_dir,
        dt=getattr(args, "dt", default_dt),
        t_end=getattr(args, "t_end", default_t_end),
        seed=args.seed,
        log_base=args.log_base or ("two" if args.command == "info" else "natural"),
        hbar=getattr(args, "hbar", 1.0),
        x0=getattr(args, "x0", None),
        samples=getattr(args, "samples", 100),
        sample_every=getattr(args, "sample_every", 1),
        max_refinements=getattr(args, "max_refinements", 0),
        grid_resolution=getattr(args, "grid_resolution", None),
        tol=getattr(args, "tol", DEFAULT_TOL),
    )


def _progress(config: RunConfig, steps: int, desc: str) -> tqdm:
    return tqdm(
        desc=desc,
        total=steps,
        bar_format="{l_bar}{bar}| {n_fmt}/{total_fmt} [{elapsed}]",
        leave=False,
        disable=not config.progress,
    )


def _read_text(config: RunConfig) -> str:
    return config.input_path.read_text(encoding="utf-8")


def _initial_frequencies(config: RunConfig, n: int) -> np.ndarray:
    if config.x0 is None:
        return np.full(n, 1 / n)
    return as_frequency_vector(config.x0, n=n, argument="x0")


def _steps(config: RunConfig) -> int:
    return sample_times(config.dt, config.t_end).shape[0] - 1


def _run_analyze(config: RunConfig) -> int:
    game = Game.from_json(_read_text(config))
    A = game.matrix()
    resolution = config.grid_resolution or default_probe_resolution(game.n)
    equilibria = enumerate_symmetric_equilibria(
        A, grid_resolution=resolution, tol=config.tol
    )
    log.info(
        f"Found {len(equilibria)} equilibria, "
        f"{sum(e.ess for e in equilibria)} evolutionarily stable"
    )
    write_json(
        config.output_dir / "equilibria.json",
        EquilibriaReport(
            n=game.n,
            labels=game.labels,
            grid_resolution=resolution,
            tol=config.tol,
            equilibria=equilibria,
        ),
    )
    return EXIT_OK


def _run_simulate(config: RunConfig) -> int:
    game = Game.from_json(_read_text(config))
    A = game.matrix()
    x0 = _initial_frequencies(config, game.n)
    with _progress(config, _steps(config), "Replicator steps") as pbar:
        trajectory = integrate(x0, A, dt=config.dt, t_end=config.t_end, pbar=pbar)

    rows = trajectory.to_array()
    rows[:, -1] *= config.entropy_scale()
    header = ",".join(["t"] + [f"x_{i + 1}" for i in range(game.n)] + ["H"])
    write_csv(config.output_dir / "trajectory.csv", header, rows)
    log.info(f"Final frequencies {np.array2string(trajectory.states[-1])}")
    return EXIT_OK


def _run_lax(config: RunConfig) -> int:
    game = Game.from_json(_read_text(config))
    A = game.matrix()
    n = game.n
    x0 = _initial_frequencies(config, n)

    # Algebraic checks on seeded random states
    rng = np.random.default_rng(config.seed)
    diagonal_residual = 0.0
    double_commutator_residual = 0.0
    for x in rng.dirichlet(np.ones(n), size=config.samples):
        x = x / x.sum()
        diagonal_residual = max(diagonal_residual, diagonal_equivalence_residual(x, A))
        ops = lax_operators(x, A)
        X = build_frequency_matrix(x)
        QX = ops.Q @ X - X @ ops.Q
        double_commutator_residual = max(
            double_commutator_residual,
            float(np.abs(QX @ X - X @ QX - ops.Theta).max()),
        )

    with _progress(config, 2 * _steps(config), "Matrix and vector steps") as pbar:
        matrix_trajectory = integrate_matrix_flow(
            x0, A, dt=config.dt, t_end=config.t_end, pbar=pbar
        )
        vector_trajectory = integrate(
            x0, A, dt=config.dt, t_end=config.t_end, pbar=pbar
        )

    eigenvalues = matrix_trajectory.eigenvalues()
    trajectory_residual = float(
        np.abs(matrix_trajectory.diagonals() - vector_trajectory.states).max()
    )
    spectrum_deviation = float(np.abs(eigenvalues - eigenvalues[0]).max())

    report = LaxReport(
        samples=config.samples,
        seed=config.seed,
        max_diagonal_residual=diagonal_residual,
        max_double_commutator_residual=double_commutator_residual,
        max_trajectory_residual=trajectory_residual,
        max_spectrum_deviation=spectrum_deviation,
        passed=diagonal_residual < LAX_ALGEBRA_TOL
        and double_commutator_residual < LAX_ALGEBRA_TOL
        and trajectory_residual < TRAJECTORY_TOL
        and spectrum_deviation < TRAJECTORY_TOL,
    )

    cells = [f"x_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    write_csv(
        config.output_dir / "matrix_trajectory.csv",
        ",".join(["t"] + cells),
        matrix_trajectory.to_array(),
    )
    write_csv(
        config.output_dir / "matrix_eigenvalues.csv",
        ",".join(["t"] + [f"lambda_{i + 1}" for i in range(n)]),
        np.column_stack([matrix_trajectory.times, eigenvalues]),
    )
    write_json(config.output_dir / "lax_report.json", report)

    if not report.passed:
        log.error(
            "Commutator and vector forms disagree: "
            f"diagonal {diagonal_residual:.3e}, "
            f"double commutator {double_commutator_residual:.3e}, "
            f"trajectory {trajectory_residual:.3e}, "
            f"spectrum {spectrum_deviation:.3e}"
        )
        return EXIT_INVARIANT
    return EXIT_OK


def _run_quantum(config: RunConfig) -> int:
    game = Game.from_json(_read_text(config))
    A = game.matrix()
    n = game.n
    x0 = _initial_frequencies(config, n)

    with _progress(config, 2 * _steps(config), "Classical and quantum steps") as pbar:
        classical = integrate(x0, A, dt=config.dt, t_end=config.t_end, pbar=pbar)
        density = integrate_von_neumann(
            quantize(x0),
            LaxHamiltonian(classical, A, hbar=config.hbar),
            dt=config.dt,
            t_end=config.t_end,
            pbar=pbar,
        )

    # The classical states are never renormalized, so build their density
    # operators without the simplex check
    root = np.sqrt(np.clip(classical.states, 0, None))
    expected = np.einsum("ti,tj->tij", root, root)
    residual = float(np.abs(density.states - expected).max())
    purities = density.purities()
    entropies = density.entropies() * config.entropy_scale()

    report = QuantumReport(
        hbar=config.hbar,
        max_correspondence_residual=residual,
        max_purity_drift=float(np.abs(purities - purities[0]).max()),
        max_entropy=float(entropies.max()),
        passed=residual < TRAJECTORY_TOL,
    )

    cells = [
        f"{part}_{i + 1}{j + 1}"
        for i in range(n)
        for j in range(n)
        for part in ("re", "im")
    ]
    write_csv(
        config.output_dir / "density_trajectory.csv",
        ",".join(["t"] + cells),
        density.to_array(),
    )
    write_csv(
        config.output_dir / "density_spectrum.csv",
        ",".join(["t"] + [f"lambda_{i + 1}" for i in range(n)] + ["S", "purity"]),
        np.column_stack([density.times, density.eigenvalues(), entropies, purities]),
    )
    write_json(config.output_dir / "quantum_report.json", report)

    if not report.passed:
        log.error(f"Quantum and classical trajectories differ by {residual:.3e}")
        return EXIT_INVARIANT
    return EXIT_OK


def _scale_info(report: InfoReport, scale: float, unit: str) -> InfoReport:
    chain: Optional[MarkovChainReport] = report.data_processing
    if chain is not None:
        chain = replace(
            chain,
            i_ab=chain.i_ab * scale,
            i_ac=chain.i_ac * scale,
            i_bc=chain.i_bc * scale,
        )
    return replace(
        report,
        h_a=report.h_a * scale,
        h_b=report.h_b * scale,
        h_ab=report.h_ab * scale,
        h_a_given_b=report.h_a_given_b * scale,
        h_b_given_a=report.h_b_given_a * scale,
        i_ab=report.i_ab * scale,
        unit=unit,
        data_processing=chain,
    )


def _run_info(config: RunConfig) -> int:
    joint = JointDistributionInput.from_json(_read_text(config))
    J = joint.table()
    report = info_report(J)
    if joint.kernel is not None:
        report = replace(
            report, data_processing=markov_data_processing_check(J, joint.kernel)
        )
    if config.log_base == "natural":
        report = _scale_info(report, math.log(2), "nats")
    log.info(f"Mutual information {report.i_ab:.6g} {report.unit}")
    write_json(config.output_dir / "info_report.json", report)
    return EXIT_OK


def _run_thermo(config: RunConfig) -> int:
    ensemble = CanonicalEnsemble.from_json(_read_text(config))
    report = gibbs(ensemble.energies, ensemble.beta)
    report = replace(
        report,
        derivatives=entropy_derivatives(ensemble.energies, ensemble.beta),
    )
    write_json(config.output_dir / "ensemble_report.json", report)
    return EXIT_OK


def _run_globalize(config: RunConfig) -> int:
    scenario = Scenario.from_json(_read_text(config))
    dt = config.dt if scenario.dt is None else scenario.dt
    t_end = config.t_end if scenario.t_end is None else scenario.t_end
    config = replace(config, dt=dt, t_end=t_end)
    net = network_from_scenario(scenario)

    with _progress(config, _steps(config), "Exchange steps") as pbar:
        history = run(
            net,
            dt=config.dt,
            t_end=config.t_end,
            sample_every=config.sample_every,
            max_refinements=config.max_refinements,
            pbar=pbar,
        )
    write_csv(
        config.output_dir / "history.csv",
        history.csv_header(),
        history.to_array(),
    )

    initial, final = history.total_energy[0], history.total_energy[-1]
    drift = abs(final - initial) / max(abs(initial), 1.0)
    if drift > ENERGY_DRIFT_TOL:
        log.error(f"Total energy drifted by {drift:.3e} (relative)")
        return EXIT_INVARIANT
    return EXIT_OK


_RUNNERS: Dict[str, Callable[[RunConfig], int]] = {
    "analyze": _run_analyze,
    "simulate": _run_simulate,
    "lax": _run_lax,
    "quantum": _run_quantum,
    "info": _run_info,
    "thermo": _run_thermo,
    "globalize": _run_globalize,
}


def execute(config: RunConfig) -> int:
    """
    Runs a command and writes its output files.

    Returns:
        0 on success, 1 if a numerical invariant was violated (reports are
        still written when possible), 2 if the input was invalid.
    """
    with ExitStack() as stack:
        stack.enter_context(run_context(config.command, config.input_path.name))
        # Make sure logs and progress bars work together while tqdm is
        # being used
        stack.enter_context(logging_redirect_tqdm(loggers=[log]))
        try:
            config.output_dir.mkdir(parents=True, exist_ok=True)
            return _RUNNERS[config.command](config)
        except InvariantViolationException as e:
            log.error(str(e))
            return EXIT_INVARIANT
        except InputException as e:
            log.error(f"Invalid input: {e}")
            return EXIT_INPUT
        except (ValueError, KeyError, TypeError) as e:
            # Malformed JSON, or JSON that does not match the input model
            log.error(f"Could not read {config.input_path}: {e!r}")
            return EXIT_INPUT
        except OSError as e:
            log.error(f"I/O error: {e}")
            return EXIT_INPUT


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Console entry point.

    Returns:
        The exit status.
    """
    level = configure_logging()
    try:
        config = parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except InputException as e:
        print(f"entropy-games: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return execute(replace(config, progress=level != "quiet"))

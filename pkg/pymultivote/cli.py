"""The ``pymultivote`` command line tool.

::

    pymultivote aggregate ballots.csv --mechanism tau --tau 1.8 \\
        --sigma-gnmax 9 --epsilon 8 --delta 1e-5 --seed 1
    pymultivote simulate --preset regime-a --seed 3
    pymultivote analyze ballots.csv --sensitivity 2,3

Every run writes its artifacts and a ``manifest.json`` naming the resolved
configuration and the sha256 digest of every input and output into the
output directory.
"""


import argparse
import csv
import json
import logging
import os
import sys

from . import config
from .accountant import BudgetLedger, DpGuarantee, OrderGrid
from .analysis import sensitivity_oracle, stacked_histogram
from .ballots import L1, L2, label_names, read_ballots
from .exceptions import (
    BallotFormatError,
    InvalidParameterError,
    LedgerFileError,
    MultiVoteException,
    OracleModeError,
)
from .mechanisms import (
    BINARY,
    KINDS,
    POWERSET,
    MechanismConfig,
    deterministic_election,
)
from .simulation import (
    NEGATIVE,
    POSITIVE,
    PRESETS,
    SimulationConfig,
    VoteStream,
    comparison_policies,
    dependency_matrix,
    epsilon_sweep,
    gap_cdf,
    generate_votes,
    run_experiment,
    sigma_sweep,
    tau_sweep,
)
from .utils import file_digest

_LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NOTHING_ANSWERED = 3

SWEEP_EPSILONS = tuple(float(epsilon) for epsilon in range(1, 21))
SWEEP_METRICS = ("acc", "bac", "auc", "map")


class RunManifest:

    """What a run read, how it was configured and what it wrote."""

    def __init__(self, subcommand, settings, seed):
        self.subcommand = subcommand
        self.settings = settings
        self.seed = seed
        self.inputs = {}
        self.outputs = {}

    def add_input(self, path):
        """Record ``path`` and its digest as an input."""
        self.inputs[path] = file_digest(path)

    def add_output(self, path):
        """Record ``path`` and its digest as an output."""
        self.outputs[path] = file_digest(path)

    def to_dict(self):
        """Return the manifest as a JSON-compatible dict."""
        return {
            "subcommand": self.subcommand,
            "config": self.settings,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }

    def write(self, directory):
        """Write ``manifest.json`` into ``directory`` and return its path."""
        path = os.path.join(directory, "manifest.json")
        with open(path, "w", encoding="utf-8") as file_:
            json.dump(self.to_dict(), file_, indent=2, sort_keys=True)
            file_.write("\n")
        return path


def _orders(text):
    try:
        return OrderGrid([float(order) for order in text.split(",")])
    except ValueError as error:
        raise argparse.ArgumentTypeError(str(error)) from error


def _pair(text):
    try:
        voters, candidates = (int(value) for value in text.split(","))
    except ValueError as error:
        raise argparse.ArgumentTypeError("expected VOTERS,CANDIDATES") from error
    return voters, candidates


def _floats(text):
    try:
        return [float(value) for value in text.split(",")]
    except ValueError as error:
        raise argparse.ArgumentTypeError("expected comma separated numbers") from error


def _probabilities(text):
    values = _floats(text)
    return values[0] if len(values) == 1 else values


def _build_option_parser():
    """Return the argument parser of the tool."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default=config.DEFAULT_LOG_LEVEL,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging threshold (default: %(default)s)",
    )
    common.add_argument(
        "--output-dir",
        default=None,
        help="where to write artifacts (default: $PYMULTIVOTE_OUTPUT_DIR or .)",
    )
    common.add_argument("--seed", type=int, default=0, help="the master seed")

    mechanism = argparse.ArgumentParser(add_help=False)
    mechanism.add_argument("--mechanism", choices=KINDS, default=None)
    mechanism.add_argument("--sigma-gnmax", type=float, default=None, dest="sigma_g")
    mechanism.add_argument(
        "--sigma-threshold", type=float, default=0.0, dest="sigma_t"
    )
    mechanism.add_argument("--threshold", type=float, default=0.0, dest="threshold_t")
    mechanism.add_argument("--tau", type=float, default=None)
    mechanism.add_argument("--clip-norm", choices=[L1, L2], default=L2)
    mechanism.add_argument(
        "--oracle-mode",
        action="store_true",
        help="allow zero noise; the releases are not private",
    )
    mechanism.add_argument(
        "--data-independent",
        action="store_true",
        help="price every release at its worst case",
    )
    mechanism.add_argument("--epsilon", type=float, default=None)
    mechanism.add_argument("--delta", type=float, default=None)
    mechanism.add_argument(
        "--orders", type=_orders, default=None, help="comma separated Rényi orders"
    )

    parser = argparse.ArgumentParser(
        prog="pymultivote",
        description="Differentially private multi-winner voting",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    aggregate = commands.add_parser(
        "aggregate", parents=[common, mechanism], help="answer a ballot file"
    )
    aggregate.add_argument("ballots", help="ballot CSV file")
    aggregate.add_argument("--ledger", default=None, help="budget ledger to resume")

    simulate = commands.add_parser(
        "simulate", parents=[common, mechanism], help="run a synthetic experiment"
    )
    simulate.add_argument("--preset", choices=sorted(PRESETS), default=None)
    simulate.add_argument("--teachers", type=int, default=50)
    simulate.add_argument("--labels", type=int, default=11)
    simulate.add_argument("--queries", type=int, default=1000)
    simulate.add_argument("--probability", type=_probabilities, default=0.5)
    simulate.add_argument("--block", type=int, default=0)
    simulate.add_argument("--prevalence", type=_probabilities, default=None)
    simulate.add_argument(
        "--epsilon-sweep",
        action="store_true",
        help="also count the answers at every epsilon in 1..20",
    )
    simulate.add_argument(
        "--sigma-sweep",
        type=_floats,
        default=None,
        metavar="SIGMAS",
        help="compare the voting policies at these noise scales",
    )
    simulate.add_argument(
        "--tau-sweep",
        type=_floats,
        default=None,
        metavar="TAUS",
        help="rerun tau or Powerset voting at these values of tau",
    )

    analyze = commands.add_parser(
        "analyze", parents=[common], help="gap and dependency diagnostics"
    )
    analyze.add_argument("ballots", help="ballot CSV file or histogram JSON file")
    analyze.add_argument("--mechanism", choices=KINDS, default=BINARY)
    analyze.add_argument(
        "--sensitivity",
        type=_pair,
        default=None,
        metavar="VOTERS,CANDIDATES",
        help="exhaustively compute the stacked histogram sensitivity",
    )
    analyze.add_argument("--tau", type=float, default=None)
    analyze.add_argument("--clip-norm", choices=[L1, L2], default=L2)
    return parser


def _mechanism_config(args, default_sigma=None, kind=None, tau=None):
    sigma_g = args.sigma_g if args.sigma_g is not None else default_sigma
    if sigma_g is None:
        raise InvalidParameterError("--sigma-gnmax is required")
    return MechanismConfig(
        kind or args.mechanism or BINARY,
        sigma_g,
        sigma_t=args.sigma_t,
        threshold_t=args.threshold_t,
        tau=args.tau if tau is None else tau,
        clip_norm=args.clip_norm,
        oracle_mode=args.oracle_mode,
        data_dependent=not args.data_independent,
    )


def _budget(args, default=None):
    if args.epsilon is None or args.delta is None:
        if default is None:
            raise InvalidParameterError("--epsilon and --delta are required")
        return DpGuarantee(
            default.epsilon if args.epsilon is None else args.epsilon,
            default.delta if args.delta is None else args.delta,
        )
    return DpGuarantee(args.epsilon, args.delta)


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as file_:
        for record in records:
            file_.write(json.dumps(record, sort_keys=True))
            file_.write("\n")


def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as file_:
        json.dump(data, file_, indent=2, sort_keys=True)
        file_.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as file_:
        writer = csv.writer(file_, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_aggregate(args, directory):
    """Answer every query of a ballot file under one budget.

    Writes ``outcomes.jsonl`` with one record per query in query id order
    and persists the ledger to ``--ledger`` or ``ledger.json``.

    Returns:
        int: The exit code.
    """
    cfg = _mechanism_config(args)
    with open(args.ballots, encoding="utf-8") as file_:
        _, queries = read_ballots(file_)
    ledger_path = args.ledger or os.path.join(directory, "ledger.json")
    ledger = None
    if args.ledger and os.path.exists(args.ledger):
        resumed = BudgetLedger.load(args.ledger)
        ledger = BudgetLedger(
            _budget(args, resumed.budget),
            grid=resumed.grid,
            accumulated=resumed.accumulated,
        )
    if ledger is None:
        ledger = BudgetLedger(_budget(args), grid=args.orders)
    manifest = RunManifest(
        "aggregate",
        {"mechanism": cfg.to_dict(), "budget": ledger.budget.to_dict()},
        args.seed,
    )
    manifest.add_input(args.ballots)
    votes = VoteStream(
        list(queries.values()), query_ids=list(queries), seed=args.seed
    )
    result = run_experiment(votes, cfg, ledger.budget, ledger=ledger)
    outcomes = os.path.join(directory, "outcomes.jsonl")
    _write_jsonl(outcomes, result.records)
    ledger.save(ledger_path)
    manifest.add_output(outcomes)
    manifest.add_output(ledger_path)
    manifest.write(directory)
    if len(votes) and not result.outcomes:
        _LOG.warning("The budget did not allow a single query")
        return EXIT_NOTHING_ANSWERED
    return EXIT_OK


def _simulation_config(args, preset):
    if preset is not None:
        return preset.simulation.replace(seed=args.seed)
    return SimulationConfig(
        args.teachers,
        args.labels,
        args.queries,
        probability=args.probability,
        block=args.block,
        prevalence=args.prevalence,
        seed=args.seed,
    )


def _write_sweep(path, column, rows):
    _write_csv(
        path,
        ["policy", column, "answered", "eps_final"] + list(SWEEP_METRICS),
        (
            [row.policy, row.value, row.answered, row.eps]
            + [
                "" if row.metrics is None or row.metrics[name] is None
                else row.metrics[name]
                for name in SWEEP_METRICS
            ]
            for row in rows
        ),
    )


def cmd_simulate(args, directory):
    """Run a synthetic experiment.

    With a preset and no ``--mechanism`` both Binary and Powerset voting
    answer the same stream and ``comparison.csv`` lists their answers.
    ``--sigma-sweep`` writes ``sigma_sweep.csv`` comparing Binary, Powerset
    and, given ``--tau``, τ voting at every noise scale; ``--tau-sweep``
    writes ``tau_sweep.csv`` for the τ or Powerset ``--mechanism``.

    Returns:
        int: The exit code.
    """
    preset = PRESETS[args.preset] if args.preset else None
    sim = _simulation_config(args, preset)
    budget = _budget(args, preset.budget if preset else None)
    default_sigma = preset.sigma_g if preset else None
    kinds = [args.mechanism] if args.mechanism or not preset else [BINARY, POWERSET]
    votes = generate_votes(sim)
    grid = args.orders or OrderGrid.default()
    manifest = RunManifest(
        "simulate",
        {
            "simulation": sim.to_dict(),
            "budget": budget.to_dict(),
            "preset": args.preset,
        },
        args.seed,
    )
    comparison = []
    answered_any = not len(votes)
    for kind in kinds:
        cfg = _mechanism_config(args, default_sigma, kind)
        result = run_experiment(votes, cfg, budget, grid)
        answered_any = answered_any or bool(result.outcomes)
        suffix = "" if len(kinds) == 1 else "-" + kind
        experiment = os.path.join(directory, "experiment{}.json".format(suffix))
        _write_json(experiment, result.to_dict())
        outcomes = os.path.join(directory, "outcomes{}.jsonl".format(suffix))
        _write_jsonl(outcomes, result.records)
        manifest.add_output(experiment)
        manifest.add_output(outcomes)
        comparison.append((kind, result.answered, result.guarantee.epsilon))
        if args.epsilon_sweep:
            sweep = os.path.join(directory, "sweep{}.csv".format(suffix))
            _write_csv(
                sweep,
                ["epsilon", "answered"],
                epsilon_sweep(votes, cfg, SWEEP_EPSILONS, budget.delta, grid),
            )
            manifest.add_output(sweep)
    if len(kinds) > 1:
        path = os.path.join(directory, "comparison.csv")
        _write_csv(path, ["mechanism", "answered", "eps_final"], comparison)
        manifest.add_output(path)
    if args.sigma_sweep:
        policies = comparison_policies(args.sigma_sweep[0], args.tau, args.clip_norm)
        path = os.path.join(directory, "sigma_sweep.csv")
        rows = sigma_sweep(votes, policies, args.sigma_sweep, budget, grid)
        _write_sweep(path, "sigma_g", rows)
        manifest.add_output(path)
    if args.tau_sweep:
        cfg = _mechanism_config(args, default_sigma, tau=args.tau_sweep[0])
        path = os.path.join(directory, "tau_sweep.csv")
        _write_sweep(path, "tau", tau_sweep(votes, cfg, args.tau_sweep, budget, grid))
        manifest.add_output(path)
    manifest.write(directory)
    return EXIT_OK if answered_any else EXIT_NOTHING_ANSWERED


def _read_histograms(path):
    with open(path, encoding="utf-8") as file_:
        try:
            data = json.load(file_)
        except ValueError as error:
            raise InvalidParameterError(
                "{} is not a histogram file: {}".format(path, error)
            ) from error
    if isinstance(data, dict):
        data = data.get("histograms")
    if not isinstance(data, list):
        raise InvalidParameterError("Expected a list of histograms in %s" % path)
    return data


def _histogram_gaps(histograms):
    gaps = []
    for counts in histograms:
        ordered = sorted((float(count) for count in counts), reverse=True)
        gaps.append(ordered[0] - (ordered[1] if len(ordered) > 1 else 0.0))
    gaps.sort()
    return [(gap, (index + 1) / len(gaps)) for index, gap in enumerate(gaps)]


def _write_matrix(path, names, matrix):
    rows = [
        [name] + ["" if value is None else value for value in row]
        for name, row in zip(names, matrix.to_rows())
    ]
    _write_csv(path, ["label"] + list(names), rows)


def cmd_analyze(args, directory):
    """Write the gap CDF, the dependency matrices and, if asked for, the
    exact sensitivity of the stacked histogram.

    The dependency matrices are computed over the noiseless majority
    outcome of every query.

    Returns:
        int: The exit code.
    """
    manifest = RunManifest(
        "analyze",
        {"mechanism": args.mechanism, "sensitivity": args.sensitivity, "tau": args.tau},
        args.seed,
    )
    manifest.add_input(args.ballots)
    cdf_path = os.path.join(directory, "gap_cdf.csv")
    if args.ballots.endswith(".json"):
        gaps = _histogram_gaps(_read_histograms(args.ballots))
        _write_csv(cdf_path, ["x", "y"], gaps)
        manifest.add_output(cdf_path)
    else:
        with open(args.ballots, encoding="utf-8") as file_:
            names, queries = read_ballots(file_)
        cdf = gap_cdf(list(queries.values()), args.mechanism)
        _write_csv(cdf_path, ["x", "y"], zip(cdf.gaps.tolist(), cdf.fractions.tolist()))
        manifest.add_output(cdf_path)
        if queries:
            outcomes = [
                deterministic_election(ballots, ballots.n / 2.0)
                for ballots in queries.values()
            ]
            for mode in (POSITIVE, NEGATIVE):
                path = os.path.join(directory, "dependency-{}.csv".format(mode))
                _write_matrix(path, names, dependency_matrix(outcomes, mode))
                manifest.add_output(path)
    if args.sensitivity:
        voters, candidates = args.sensitivity
        reports = {
            "unclipped": sensitivity_oracle(
                stacked_histogram(), voters, candidates, 2
            )
        }
        if args.tau is not None:
            reports["clipped"] = sensitivity_oracle(
                stacked_histogram(args.tau, args.clip_norm), voters, candidates, 2
            )
        path = os.path.join(directory, "sensitivity.json")
        _write_json(
            path,
            {
                name: {
                    "p": report.p,
                    "value": report.value,
                    "witness": [pair.bits.tolist() for pair in report.witness],
                    "labels": label_names(candidates),
                }
                for name, report in reports.items()
            },
        )
        manifest.add_output(path)
    manifest.write(directory)
    return EXIT_OK


_COMMANDS = {
    "aggregate": cmd_aggregate,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
}


def main(argv=None):
    """Run the tool and return its exit code."""
    parser = _build_option_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    directory = args.output_dir or config.OUTPUT_DIR
    try:
        os.makedirs(directory, exist_ok=True)
        return _COMMANDS[args.command](args, directory)
    except BallotFormatError as error:
        print("Cannot read ballots: {}".format(error), file=sys.stderr)
    except OracleModeError as error:
        print(
            "{} (pass --oracle-mode for a non-private run)".format(error),
            file=sys.stderr,
        )
    except LedgerFileError as error:
        print("Refusing to resume the budget: {}".format(error), file=sys.stderr)
    except (MultiVoteException, OSError) as error:
        print("Error: {}".format(error), file=sys.stderr)
    return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())

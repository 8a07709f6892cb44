# Licensed under the MIT License.
"""Command line front end: single experiments, grid runs and exit discipline."""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import pathlib
import sys
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO


# **********************************************************
# Update sys.path before importing any bundled libraries.
# **********************************************************
def update_sys_path(path_to_add: str, strategy: str) -> None:
    """Add given path to `sys.path`."""
    if path_to_add not in sys.path and os.path.isdir(path_to_add):
        if strategy == "useBundled":
            sys.path.insert(0, path_to_add)
        else:
            sys.path.append(path_to_add)


BUNDLE_DIR = pathlib.Path(__file__).parent.parent
update_sys_path(os.fspath(BUNDLE_DIR / "tool"), "useBundled")
update_sys_path(
    os.fspath(BUNDLE_DIR / "libs"),
    os.getenv("VALRING_IMPORT_STRATEGY", "useBundled"),
)

# **********************************************************
# Imports needed for the command line go below this.
# **********************************************************
import spectral_graph  # noqa: E402
import vr_experiments as experiments  # noqa: E402
import vr_settings as settings  # noqa: E402
from projective import enumerate_classes  # noqa: E402
from ring_core import RingSpec, format_poly, parse_ring  # noqa: E402
from vr_utils import ConfigError, ValringError  # noqa: E402

LOGGER = logging.getLogger("valring")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


# *****************************************************
# Argument parsing.
# *****************************************************
def _add_trial_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--trials", type=int, default=None, help="Trials per ring.")
    parser.add_argument("--seed", type=int, default=None, help="Master seed.")
    parser.add_argument(
        "--workers", type=int, default=None, help="Worker processes (1 runs serially)."
    )
    parser.add_argument("--output", default=None, help="Report file, stdout if absent.")
    parser.add_argument(
        "--format", choices=settings.FORMATS, default=None, help="Report format."
    )


def _add_ring(parser: argparse.ArgumentParser, with_dim: bool = False) -> None:
    parser.add_argument(
        "--ring", required=True, help="Ring spec, e.g. Z/3^2 or GF(4)[t]/t^2."
    )
    if with_dim:
        parser.add_argument("-d", "--dim", type=int, default=3, help="Dimension d.")


def build_arg_parse() -> argparse.ArgumentParser:
    """Builds the arguments parser."""
    parser = argparse.ArgumentParser(
        prog="valring",
        description="Sum-product and spectral checks over finite valuation rings.",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr; repeat for debug output.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ring = commands.add_parser("ring", help="Ring structure.")
    ring_commands = ring.add_subparsers(dest="action", required=True)
    info = ring_commands.add_parser("info", help="Structure of one ring as JSON.")
    _add_ring(info)
    info.add_argument(
        "--elem", action="append", default=[], help="Also describe this element."
    )

    graph = commands.add_parser("graph", help="The graph E_(q,d)(R).")
    graph_commands = graph.add_subparsers(dest="action", required=True)
    spectrum = graph_commands.add_parser("spectrum", help="Spectral report as JSON.")
    _add_ring(spectrum, with_dim=True)
    spectrum.add_argument("--solver", choices=spectral_graph.SOLVERS, default="eigh")
    spectrum.add_argument("--graph-cap", type=int, default=None)
    classes = graph_commands.add_parser("classes", help="Canonical classes of R^d.")
    _add_ring(classes, with_dim=True)
    mix = graph_commands.add_parser("mix", help="Expander mixing trials.")
    _add_ring(mix, with_dim=True)
    mix.add_argument("--solver", choices=spectral_graph.SOLVERS, default=None)
    _add_trial_options(mix)

    incidence = commands.add_parser("incidence", help="Point-plane incidences in R^3.")
    incidence_commands = incidence.add_subparsers(dest="action", required=True)
    check = incidence_commands.add_parser("check", help="Incidence bound trials.")
    _add_ring(check)
    check.add_argument("--points", type=int, default=None)
    check.add_argument("--planes", type=int, default=None)
    _add_trial_options(check)

    sumprod = commands.add_parser("sumprod", help="Energy and sum-product checks.")
    sumprod_commands = sumprod.add_subparsers(dest="action", required=True)
    energy = sumprod_commands.add_parser("energy", help="Collision energy trials.")
    _add_ring(energy)
    energy.add_argument("--lines", type=int, default=None)
    energy.add_argument("--set-size", type=int, default=None)
    _add_trial_options(energy)
    thm1 = sumprod_commands.add_parser("thm1", help="|BA + C| lower bound trials.")
    _add_ring(thm1)
    thm1.add_argument("--sizes", default=None, help="a,b,c or n for A = B = C.")
    _add_trial_options(thm1)
    thm2 = sumprod_commands.add_parser("thm2", help="|A^2+A^2||A+A| chain trials.")
    _add_ring(thm2)
    thm2.add_argument("--size", type=int, default=None)
    _add_trial_options(thm2)
    plunnecke = sumprod_commands.add_parser("plunnecke", help="Plunnecke witnesses.")
    _add_ring(plunnecke)
    plunnecke.add_argument("--max", dest="plunnecke_max", type=int, default=None)
    _add_trial_options(plunnecke)

    run_parser = commands.add_parser("run", help="Run experiments over a ring grid.")
    run_parser.add_argument("--config", default=None, help="`key = value` file.")
    run_parser.add_argument(
        "--experiment",
        choices=settings.EXPERIMENTS + ("all",),
        default=None,
    )
    run_parser.add_argument(
        "--ring", dest="rings", action="append", default=None, help="Repeatable."
    )
    _add_trial_options(run_parser)
    return parser


# *****************************************************
# Commands.
# *****************************************************
SUBCOMMAND_EXPERIMENTS = {
    ("graph", "mix"): "mixing",
    ("incidence", "check"): "incidence",
    ("sumprod", "energy"): "energy",
    ("sumprod", "thm1"): "thm1",
    ("sumprod", "thm2"): "thm2",
    ("sumprod", "plunnecke"): "plunnecke",
}

OVERRIDE_KEYS = (
    "trials",
    "seed",
    "workers",
    "output",
    "format",
    "points",
    "planes",
    "lines",
    "set_size",
    "sizes",
    "size",
    "plunnecke_max",
    "solver",
)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    values = {key: getattr(args, key, None) for key in OVERRIDE_KEYS}
    return {key: value for key, value in values.items() if value is not None}


@contextlib.contextmanager
def _report_stream(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as stream:
            yield stream


def run(
    config: settings.ExperimentConfig,
    columns: Sequence[str] = experiments.UNIFIED_COLUMNS,
) -> experiments.Summary:
    """Runs every task of `config`, writes the report and returns the summary."""
    log_to_output("Configuration:\n   " + "\n   ".join(settings.config_lines(config)))
    if "thm2" in config.experiments:
        for spec in config.rings:
            if parse_ring(spec, config.order_cap).p == 2:
                log_warning(f"thm2 on {spec}: slopes 2s are nonunits, runs are flagged")
    tasks = experiments.build_tasks(config)
    log_to_output(f"{len(tasks)} trials on {min(config.workers, len(tasks))} worker(s)")
    records = experiments.run_tasks(tasks, config)
    summary = experiments.summarize(records)

    with _report_stream(config.output) as stream:
        if config.format == "json":
            experiments.write_json(records, summary, stream, config)
        else:
            experiments.write_csv(records, stream, columns)

    for record in records:
        if not record.passed:
            log_error(
                f"FAILED {record.experiment} {record.ring} d={record.d} "
                f"trial={record.trial}: lhs={record.lhs!r} rhs={record.rhs!r}"
            )
    for line in experiments.summary_lines(summary):
        log_always(line)
    return summary


def ring_info(ring: RingSpec, elements: Sequence[str] = ()) -> Dict[str, Any]:
    """Structure of `ring`: sizes, uniformizer and the chain of ideals."""
    info: Dict[str, Any] = {
        "ring": str(ring),
        "family": ring.family.value,
        "p": ring.p,
        "m": ring.m,
        "q": ring.q,
        "r": ring.r,
        "order": ring.order,
        "units": ring.unit_count,
        "nonunits": ring.nonunit_count,
        "uniformizer": ring.format_elem(ring.uniformizer),
        "modulus": format_poly(ring.modulus, "x") if ring.m > 1 else None,
        "ideal_chain": [len(ring.ideal_power(k)) for k in range(ring.r + 1)],
    }
    described: List[Dict[str, Any]] = []
    for text in elements:
        x = ring.parse_elem(text)
        entry: Dict[str, Any] = {
            "element": ring.format_elem(x),
            "index": x,
            "valuation": ring.valuation(x),
            "unit": ring.is_unit(x),
        }
        if ring.is_unit(x):
            entry["inverse"] = ring.format_elem(ring.inverse(x))
        described.append(entry)
    if described:
        info["elements"] = described
    return info


def _print_json(value: Any) -> None:
    sys.stdout.write(json.dumps(value, indent=4, ensure_ascii=False) + "\n")


def _dispatch(args: argparse.Namespace) -> int:
    key = (args.command, getattr(args, "action", None))
    if key == ("ring", "info"):
        _print_json(ring_info(parse_ring(args.ring), args.elem))
        return EXIT_OK

    if key == ("graph", "spectrum"):
        ring = parse_ring(args.ring)
        cap = args.graph_cap or spectral_graph.DEFAULT_GRAPH_CAP
        graph = spectral_graph.build_graph(ring, args.dim, cap)
        report = spectral_graph.spectrum(graph, args.solver)
        sys.stdout.write(experiments.to_json(report) + "\n")
        if not report.passed:
            log_error(f"lambda3 = {report.lambda3!r} exceeds {report.bound!r}")
        return EXIT_OK if report.passed else EXIT_FAILED

    if key == ("graph", "classes"):
        ring = parse_ring(args.ring)
        for item in enumerate_classes(ring, args.dim):
            sys.stdout.write(f"{item}\n")
        return EXIT_OK

    if key in SUBCOMMAND_EXPERIMENTS:
        name = SUBCOMMAND_EXPERIMENTS[key]
        values = _overrides(args)
        values.update(rings=[args.ring], experiment=name)
        if getattr(args, "dim", None) is not None:
            values["dims"] = [args.dim]
        config = settings.load_config(None, values)
        columns = experiments.EXPERIMENT_REGISTRY.get(name).columns
        summary = run(config, columns)
        return EXIT_OK if summary.passed else EXIT_FAILED

    values = _overrides(args)
    if args.experiment:
        values["experiment"] = args.experiment
    if args.rings:
        values["rings"] = args.rings
    config = settings.load_config(args.config, values)
    summary = run(config)
    return EXIT_OK if summary.passed else EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs the command line; returns the process exit code."""
    parser = build_arg_parse()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code else EXIT_OK
    configure_logging(args.verbose)
    try:
        return _dispatch(args)
    except ConfigError as err:
        log_error(f"Configuration error: {err}")
        return EXIT_USAGE
    except ValringError as err:
        log_error(f"{type(err).__name__}: {err}")
        return EXIT_USAGE


# *****************************************************
# Logging.
# *****************************************************
def configure_logging(verbose: int = 0) -> None:
    """stderr handler on the `valring` logger; -v raises to info, -vv to debug."""
    level_name = os.getenv("VALRING_LOG_LEVEL", "warning").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    if verbose:
        level = min(level, logging.INFO if verbose == 1 else logging.DEBUG)
    if not LOGGER.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        LOGGER.addHandler(handler)
        LOGGER.propagate = False
    LOGGER.setLevel(level)


def log_to_output(message: str, level: int = logging.INFO) -> None:
    """Logs messages at info level unless told otherwise."""
    LOGGER.log(level, message)


def log_error(message: str) -> None:
    LOGGER.error(message)


def log_warning(message: str) -> None:
    LOGGER.warning(message)


def log_always(message: str) -> None:
    """Logs messages regardless of the configured level."""
    LOGGER.log(max(logging.INFO, LOGGER.getEffectiveLevel()), message)


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

# Licensed under the MIT License.
"""Trial records, the experiment registry and report writers.

Every experiment registers one trial function. A trial receives its Task, the
run configuration and a random generator derived from the task's stream id,
and returns a TrialOutcome; `execute_task` turns that into a TrialRecord.
"""
from __future__ import annotations

import collections
import concurrent.futures
import csv
import datetime
import functools
import json
import math
import time
from fractions import Fraction
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    TextIO,
    Tuple,
)

import attrs
import cattrs
import numpy as np
from cattrs.gen import make_dict_structure_fn, make_dict_unstructure_fn, override

import incidence3d
import spectral_graph
import sumprod
import vr_jsonrpc as jsonrpc
from projective import class_count
from ring_core import RingSpec, parse_ring
from vr_settings import EXPERIMENTS, ExperimentConfig, unstructure_config
from vr_utils import (
    ExperimentRegistrationError,
    ValringError,
    derive_substream,
    format_value,
    substream_seed,
)

# Energy runs also count the equivalent point-plane incidences up to this mass.
INCIDENCE_CROSS_CHECK_MASS = 256
PLUNNECKE_DELTAS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
PLUNNECKE_KS = (2, 3)

UNIFIED_COLUMNS = (
    "experiment",
    "ring",
    "d",
    "trial",
    "sizes",
    "lhs",
    "rhs",
    "ratio",
    "pass",
)
TRIAL_COLUMNS = ("trial", "sizes", "lhs", "rhs", "ratio", "pass")


@attrs.frozen
class Task:
    """One trial of one experiment on one (ring, d) grid point."""

    experiment: str
    ring: str
    ring_index: int
    d: Optional[int]
    trial: int

    @property
    def stream_id(self) -> str:
        return f"{self.experiment}|{self.ring}|d={self.d}"

    def sort_key(self) -> Tuple[int, int, int, int]:
        return (
            EXPERIMENTS.index(self.experiment),
            self.ring_index,
            self.d or 0,
            self.trial,
        )


@attrs.frozen
class TrialOutcome:
    sizes: Tuple[int, ...]
    lhs: float
    rhs: float
    passed: bool
    ratio: Optional[float] = None
    extra: Dict[str, Any] = attrs.field(factory=dict, hash=False)


@attrs.frozen
class TrialRecord:
    experiment: str
    ring: str
    d: Optional[int]
    trial: int
    sizes: Tuple[int, ...]
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    seed: int
    wall_time: float = attrs.field(default=0.0, eq=False)
    ring_index: int = attrs.field(default=0, eq=False)
    extra: Dict[str, Any] = attrs.field(factory=dict, hash=False)

    def sort_key(self) -> Tuple[int, int, int, int]:
        return (
            EXPERIMENTS.index(self.experiment),
            self.ring_index,
            self.d or 0,
            self.trial,
        )

    def cells(self) -> Dict[str, Any]:
        """Column name -> value, extra columns included."""
        values = dict(self.extra)
        values.update(
            experiment=self.experiment,
            ring=self.ring,
            d="" if self.d is None else self.d,
            trial=self.trial,
            sizes=self.sizes,
            lhs=self.lhs,
            rhs=self.rhs,
            ratio=self.ratio,
        )
        values["pass"] = self.passed
        return values


def ratio_of(lhs: float, rhs: float) -> float:
    if rhs:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


# *****************************************************
# Experiment registry.
# *****************************************************
TrialFunction = Callable[[Task, ExperimentConfig, np.random.Generator], TrialOutcome]


@attrs.frozen
class Experiment:
    name: str
    run_trial: TrialFunction
    columns: Tuple[str, ...]
    uses_dims: bool
    single_trial: bool
    fixed_d: Optional[int] = None


class ExperimentRegistry:
    """Manages experiments registered using the experiment decorator."""

    def __init__(self):
        self._experiments: Dict[str, Experiment] = {}

    def experiment(
        self,
        name: str,
        columns: Sequence[str] = TRIAL_COLUMNS,
        uses_dims: bool = False,
        single_trial: bool = False,
        fixed_d: Optional[int] = None,
    ):
        """Decorator used for registering trial functions."""

        def decorator(func: TrialFunction) -> TrialFunction:
            if name in self._experiments:
                raise ExperimentRegistrationError(name)
            self._experiments[name] = Experiment(
                name, func, tuple(columns), uses_dims, single_trial, fixed_d
            )
            return func

        return decorator

    def get(self, name: str) -> Optional[Experiment]:
        try:
            return self._experiments[name]
        except KeyError:
            return None

    def names(self) -> Tuple[str, ...]:
        return tuple(self._experiments)


EXPERIMENT_REGISTRY = ExperimentRegistry()


# *****************************************************
# Per-process caches.
# *****************************************************
@functools.lru_cache(maxsize=64)
def _ring(spec: str, order_cap: int) -> RingSpec:
    return parse_ring(spec, order_cap)


@functools.lru_cache(maxsize=16)
def cached_graph(
    spec: str, d: int, order_cap: int, graph_cap: int
) -> spectral_graph.BipartiteGraph:
    return spectral_graph.build_graph(_ring(spec, order_cap), d, graph_cap)


@functools.lru_cache(maxsize=16)
def cached_spectrum(
    spec: str, d: int, solver: str, order_cap: int, graph_cap: int
) -> spectral_graph.SpectralReport:
    return spectral_graph.spectrum(cached_graph(spec, d, order_cap, graph_cap), solver)


def clear_caches() -> None:
    _ring.cache_clear()
    cached_graph.cache_clear()
    cached_spectrum.cache_clear()


def _fraction_text(value: Fraction) -> str:
    return str(Fraction(value))


# *****************************************************
# Trials.
# *****************************************************
@EXPERIMENT_REGISTRY.experiment("spectrum", uses_dims=True, single_trial=True)
def spectrum_trial(task: Task, config: ExperimentConfig, _rng) -> TrialOutcome:
    """lambda3 against q^((d-2)(2r-1)/2), plus part size and regularity."""
    graph = cached_graph(task.ring, task.d, config.order_cap, config.graph_cap)
    report = cached_spectrum(
        task.ring, task.d, config.solver, config.order_cap, config.graph_cap
    )
    regular = set(graph.degrees()) == {report.degree} and set(
        graph.column_degrees()
    ) == {report.degree}
    return TrialOutcome(
        sizes=(report.part_size,),
        lhs=report.lambda3,
        rhs=report.bound,
        passed=report.passed and report.top_matches_degree and regular,
        extra={
            "degree": report.degree,
            "top_matches_degree": report.top_matches_degree,
            "regular": regular,
            "solver": report.solver,
            "iterations": report.iterations,
        },
    )


@EXPERIMENT_REGISTRY.experiment(
    "mixing",
    columns=("trial", "X", "Y", "e", "main_term", "error_bound", "pass"),
    uses_dims=True,
)
def mixing_trial(task: Task, config: ExperimentConfig, rng) -> TrialOutcome:
    graph = cached_graph(task.ring, task.d, config.order_cap, config.graph_cap)
    report = cached_spectrum(
        task.ring, task.d, config.solver, config.order_cap, config.graph_cap
    )
    xs, ys = spectral_graph.sample_subsets(graph, rng)
    mixing = spectral_graph.mixing_check(graph, xs, ys, report.lambda3)
    return TrialOutcome(
        sizes=(mixing.x_size, mixing.y_size),
        lhs=float(mixing.deviation),
        rhs=mixing.error_bound,
        passed=mixing.passed,
        extra={
            "X": mixing.x_size,
            "Y": mixing.y_size,
            "e": mixing.edges,
            "main_term": float(mixing.main_term),
            "error_bound": mixing.error_bound,
        },
    )


def graph_fits(ring: RingSpec, d: int, cap: int) -> bool:
    return class_count(ring, d) <= cap


@EXPERIMENT_REGISTRY.experiment(
    "incidence",
    columns=("trial", "Q", "Pi", "I", "main", "bound", "edges", "pass"),
    fixed_d=4,
)
def incidence_trial(task: Task, config: ExperimentConfig, rng) -> TrialOutcome:
    """Random (Q, Pi); passes when both bounds hold and I equals the edge count."""
    ring = _ring(task.ring, config.order_cap)
    graph = None
    if graph_fits(ring, 4, config.graph_cap):
        graph = cached_graph(task.ring, 4, config.order_cap, config.graph_cap)
    points = incidence3d.sample_points(ring, rng, min(config.points, ring.order**3))
    planes = incidence3d.sample_planes(
        ring, rng, min(config.planes, class_count(ring, 4))
    )
    report = incidence3d.count_incidences(points, planes, graph)
    return TrialOutcome(
        sizes=(report.points, report.planes),
        lhs=float(abs(report.incidences - report.main_term)),
        rhs=report.error_bound,
        passed=(
            report.passed
            and report.upper_passed
            and report.cross_check_edges == report.incidences
        ),
        extra={
            "Q": report.points,
            "Pi": report.planes,
            "I": report.incidences,
            "main": float(report.main_term),
            "bound": report.error_bound,
            "edges": report.cross_check_edges,
            "upper_passed": report.upper_passed,
        },
    )


@EXPERIMENT_REGISTRY.experiment("energy")
def energy_trial(task: Task, config: ExperimentConfig, rng) -> TrialOutcome:
    """Collision bound, Cauchy-Schwarz and the evaluation-set lower bound."""
    ring = _ring(task.ring, config.order_cap)
    lines = sumprod.random_lines(ring, rng, min(config.lines, ring.order**2))
    a = sumprod.random_subset(ring, rng, min(config.set_size, ring.order))
    report = sumprod.energy(lines, a, config.energy_cap)
    passed = report.passed and report.cauchy_schwarz_passed and report.lower_passed
    extra: Dict[str, Any] = {
        "evaluation_set": report.evaluation_set_size,
        "cauchy_schwarz_passed": report.cauchy_schwarz_passed,
        "lower_bound": float(report.lower_bound),
        "lower_passed": report.lower_passed,
    }
    if lines.weight * len(a) <= INCIDENCE_CROSS_CHECK_MASS:
        incidences = sumprod.collision_incidences(lines, a).incidences
        extra["incidences"] = incidences
        passed = passed and incidences == report.energy
    return TrialOutcome(
        sizes=(lines.weight, len(a)),
        lhs=float(report.energy),
        rhs=float(report.rhs),
        passed=passed,
        extra=extra,
    )


@EXPERIMENT_REGISTRY.experiment("thm1")
def theorem1_trial(task: Task, config: ExperimentConfig, rng) -> TrialOutcome:
    """|BA + C| against 1/2 min{q^r, |A||B||C|/q^(2r-1)}.

    `sizes = n` means A = B = C.
    """
    ring = _ring(task.ring, config.order_cap)
    sizes = [min(n, ring.order) for n in config.sizes]
    if len(sizes) == 1:
        report = sumprod.check_aa_plus_a(sumprod.random_subset(ring, rng, sizes[0]))
    else:
        a, b, c = (sumprod.random_subset(ring, rng, n) for n in sizes)
        report = sumprod.check_theorem1(a, b, c)
    return TrialOutcome(
        sizes=report.sizes,
        lhs=float(report.value),
        rhs=float(report.rhs),
        ratio=report.ratio,
        passed=report.passed and report.identity_holds,
        extra={"identity_holds": report.identity_holds, "saturated": report.saturated},
    )


@EXPERIMENT_REGISTRY.experiment("thm2")
def theorem2_trial(task: Task, config: ExperimentConfig, rng) -> TrialOutcome:
    """|A^2+A^2||A+A| against q^(r/2)|A|^(3/2); passes when every chain step holds."""
    ring = _ring(task.ring, config.order_cap)
    a = sumprod.random_subset(ring, rng, min(config.size, ring.order))
    report = sumprod.check_theorem2(a, config.theorem2_cap)
    lhs = report.square_sumset_size * report.sumset_size
    rhs = math.sqrt(ring.order) * report.size**1.5
    return TrialOutcome(
        sizes=(report.size,),
        lhs=float(lhs),
        rhs=rhs,
        passed=report.passed,
        extra={
            "energy_squares": report.energy_squares,
            "line_energy": report.line_energy,
            "line_weight": report.line_weight,
            "collision_rhs": float(report.collision_rhs),
            "cauchy_schwarz_passed": report.cauchy_schwarz_passed,
            "relaxation_passed": report.relaxation_passed,
            "collision_passed": report.collision_passed,
            "hypothesis": report.hypothesis,
            "characteristic_two": report.characteristic_two,
            "refinement_found": report.refinement_found,
        },
    )


@EXPERIMENT_REGISTRY.experiment("plunnecke")
def plunnecke_trial(task: Task, config: ExperimentConfig, rng) -> TrialOutcome:
    """A tiny instance with |A|, |B| <= plunnecke_max, delta and k drawn per trial."""
    ring = _ring(task.ring, config.order_cap)
    top = min(config.plunnecke_max, ring.order)
    size_a, size_b = (int(n) for n in rng.integers(1, top + 1, size=2))
    delta = PLUNNECKE_DELTAS[int(rng.integers(len(PLUNNECKE_DELTAS)))]
    k = PLUNNECKE_KS[int(rng.integers(len(PLUNNECKE_KS)))]
    a = sumprod.random_subset(ring, rng, size_a)
    b = sumprod.random_subset(ring, rng, size_b)
    witness = sumprod.plunnecke_verify(a, b, delta, k)
    return TrialOutcome(
        sizes=(len(a), len(b)),
        lhs=float(witness.lhs),
        rhs=float(witness.rhs),
        passed=witness.found,
        extra={
            "delta": _fraction_text(delta),
            "k": k,
            "growth": float(witness.growth),
            "witness": [ring.format_elem(x) for x in witness.witness],
        },
    )


# *****************************************************
# Task execution.
# *****************************************************
def build_tasks(config: ExperimentConfig) -> List[Task]:
    """Tasks in output order: experiment, ring, d, trial."""
    rings = [str(parse_ring(spec, config.order_cap)) for spec in config.rings]
    tasks = []
    for name in config.experiments:
        experiment = EXPERIMENT_REGISTRY.get(name)
        if experiment.fixed_d is not None:
            dims: Tuple[Optional[int], ...] = (experiment.fixed_d,)
        elif experiment.uses_dims:
            dims = tuple(sorted(set(config.dims)))
        else:
            dims = (None,)
        trials = 1 if experiment.single_trial else config.trials
        for ring_index, ring in enumerate(rings):
            for d in dims:
                for trial in range(trials):
                    tasks.append(Task(name, ring, ring_index, d, trial))
    return tasks


def execute_task(task: Task, config: ExperimentConfig) -> TrialRecord:
    """Runs one trial on its own substream."""
    experiment = EXPERIMENT_REGISTRY.get(task.experiment)
    if experiment is None:
        raise ValringError(f"unknown experiment '{task.experiment}'")
    seed = substream_seed(config.seed, task.stream_id, task.trial)
    rng = derive_substream(config.seed, task.stream_id, task.trial)
    started = time.perf_counter()
    outcome = experiment.run_trial(task, config, rng)
    wall_time = time.perf_counter() - started
    ratio = outcome.ratio
    if ratio is None:
        ratio = ratio_of(outcome.lhs, outcome.rhs)
    return TrialRecord(
        experiment=task.experiment,
        ring=task.ring,
        d=task.d,
        trial=task.trial,
        sizes=tuple(outcome.sizes),
        lhs=float(outcome.lhs),
        rhs=float(outcome.rhs),
        ratio=float(ratio),
        passed=bool(outcome.passed),
        seed=seed,
        wall_time=wall_time,
        ring_index=task.ring_index,
        extra=dict(outcome.extra),
    )


def run_tasks(tasks: Sequence[Task], config: ExperimentConfig) -> List[TrialRecord]:
    """Serial in process for one worker, JSON-RPC worker processes otherwise.

    The returned records are sorted by (experiment, ring, d, trial) either way.
    """
    workers = min(config.workers, len(tasks))
    if workers <= 1:
        records = [execute_task(task, config) for task in tasks]
    else:
        records = _run_parallel(tasks, config, workers)
    return sorted(records, key=TrialRecord.sort_key)


def _run_parallel(
    tasks: Sequence[Task], config: ExperimentConfig, workers: int
) -> List[TrialRecord]:
    payload = unstructure_config(config)
    chunks = [list(tasks[i::workers]) for i in range(workers)]

    def _run_chunk(worker: str, chunk: List[Task]) -> List[TrialRecord]:
        results = []
        for task in chunk:
            result = jsonrpc.run_trial(
                worker, payload, REPORT_CONVERTER.unstructure(task)
            )
            if result.exception:
                raise ValringError(f"{worker} failed on {task}:\n{result.exception}")
            results.append(REPORT_CONVERTER.structure(result.record, TrialRecord))
        return results

    records: List[TrialRecord] = []
    try:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chunk, f"worker-{i}", chunk)
                for i, chunk in enumerate(chunks)
            ]
            for future in futures:
                records.extend(future.result())
    finally:
        jsonrpc.shutdown_workers()
    return records


# *****************************************************
# Summary.
# *****************************************************
@attrs.frozen
class ExperimentSummary:
    experiment: str
    trials: int
    failures: int


@attrs.frozen
class RatioRow:
    """Theorem 2 ratios of the hypothesis-satisfying runs on one ring."""

    ring: str
    count: int
    minimum: float
    maximum: float


@attrs.frozen
class Summary:
    total: int
    failures: int
    experiments: Tuple[ExperimentSummary, ...]
    theorem2_ratios: Tuple[RatioRow, ...] = ()

    @property
    def passed(self) -> bool:
        return self.failures == 0


def summarize(records: Sequence[TrialRecord]) -> Summary:
    trials: Dict[str, int] = collections.Counter()
    failures: Dict[str, int] = collections.Counter()
    ratios: Dict[str, List[float]] = {}
    for record in records:
        trials[record.experiment] += 1
        if not record.passed:
            failures[record.experiment] += 1
        if record.experiment == "thm2" and record.extra.get("hypothesis"):
            ratios.setdefault(record.ring, []).append(record.ratio)
    return Summary(
        total=len(records),
        failures=sum(failures.values()),
        experiments=tuple(
            ExperimentSummary(name, trials[name], failures[name])
            for name in EXPERIMENTS
            if trials[name]
        ),
        theorem2_ratios=tuple(
            RatioRow(ring, len(values), min(values), max(values))
            for ring, values in ratios.items()
        ),
    )


def summary_lines(summary: Summary) -> List[str]:
    """Human readable summary, one line per entry."""
    lines = [f"trials: {summary.total}, failures: {summary.failures}"]
    for item in summary.experiments:
        lines.append(
            f"  {item.experiment}: {item.trials} trials, {item.failures} failed"
        )
    if summary.theorem2_ratios:
        lines.append(
            "  thm2 ratio |A^2+A^2||A+A| / (q^(r/2)|A|^(3/2)), hypothesis runs:"
        )
        for row in summary.theorem2_ratios:
            lines.append(
                f"    {row.ring}: n={row.count} min={format_value(row.minimum)}"
                f" max={format_value(row.maximum)}"
            )
    return lines


# *****************************************************
# Report writers.
# *****************************************************
REPORT_CONVERTER = cattrs.Converter()
REPORT_CONVERTER.register_unstructure_hook(Fraction, float)
REPORT_CONVERTER.register_unstructure_hook(
    TrialRecord,
    make_dict_unstructure_fn(
        TrialRecord, REPORT_CONVERTER, passed=override(rename="pass")
    ),
)
REPORT_CONVERTER.register_structure_hook(
    TrialRecord,
    make_dict_structure_fn(
        TrialRecord, REPORT_CONVERTER, passed=override(rename="pass")
    ),
)
REPORT_CONVERTER.register_unstructure_hook(
    spectral_graph.SpectralReport,
    make_dict_unstructure_fn(
        spectral_graph.SpectralReport, REPORT_CONVERTER, passed=override(rename="pass")
    ),
)
REPORT_CONVERTER.register_structure_hook_func(
    lambda t: t == Tuple[int, ...], lambda value, _type: tuple(int(v) for v in value)
)


def write_csv(
    records: Iterable[TrialRecord],
    stream: TextIO,
    columns: Sequence[str] = UNIFIED_COLUMNS,
) -> int:
    """Header plus one row per record; returns the number of rows."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    count = 0
    for record in records:
        cells = record.cells()
        writer.writerow([format_value(cells.get(column, "")) for column in columns])
        count += 1
    return count


def json_safe(value: Any) -> Any:
    """Non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {key: json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    return value


def report_document(
    records: Sequence[TrialRecord],
    summary: Summary,
    config: Optional[ExperimentConfig] = None,
) -> Dict[str, Any]:
    document: Dict[str, Any] = {
        "generated": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "records": REPORT_CONVERTER.unstructure(list(records), List[TrialRecord]),
        "summary": REPORT_CONVERTER.unstructure(summary),
    }
    if config is not None:
        document["config"] = unstructure_config(config)
    return json_safe(document)


def write_json(
    records: Sequence[TrialRecord],
    summary: Summary,
    stream: TextIO,
    config: Optional[ExperimentConfig] = None,
) -> None:
    document = report_document(records, summary, config)
    stream.write(json.dumps(document, indent=4, ensure_ascii=False, allow_nan=False))
    stream.write("\n")


def to_json(value: Any) -> str:
    """Any report object as indented JSON."""
    document = json_safe(REPORT_CONVERTER.unstructure(value))
    return json.dumps(document, indent=4, ensure_ascii=False, allow_nan=False)

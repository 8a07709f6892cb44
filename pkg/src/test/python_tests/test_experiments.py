# Licensed under the MIT License.
"""
Tests for trial streams, the experiment registry and the report writers.
"""
import io
import json
import math

import pytest
from freezegun import freeze_time
from hamcrest import (
    assert_that,
    contains_exactly,
    has_entries,
    has_length,
    is_,
    not_,
)

import vr_experiments as experiments
import vr_settings
from vr_utils import (
    ExperimentRegistrationError,
    derive_substream,
    format_value,
    substream_seed,
)

from .valring_test_client import defaults

SMALL_RINGS = ("Z/2^2", "Z/3^2")
MIXED_RINGS = ("Z/2^2", "Z/3^2", "Z/2^3", "GF(2)[t]/t^2")


def make_config(**values):
    values.setdefault("rings", list(SMALL_RINGS))
    values.setdefault("dims", [3])
    values.setdefault("trials", 3)
    return vr_settings.structure_config(values)


def test_registry_rejects_duplicates():
    registry = experiments.ExperimentRegistry()

    @registry.experiment("demo")
    def _first(task, config, rng):
        return None

    with pytest.raises(ExperimentRegistrationError):

        @registry.experiment("demo")
        def _second(task, config, rng):
            return None

    assert_that(registry.names(), is_(("demo",)))
    assert_that(registry.get("missing"), is_(None))


def test_every_experiment_is_registered():
    assert_that(
        sorted(experiments.EXPERIMENT_REGISTRY.names()),
        is_(sorted(vr_settings.EXPERIMENTS)),
    )


def test_substreams_are_deterministic():
    first = derive_substream(defaults.SEED, "thm1", 0).integers(0, 2**32, size=16)
    again = derive_substream(defaults.SEED, "thm1", 0).integers(0, 2**32, size=16)
    other = derive_substream(defaults.SEED, "thm1", 1).integers(0, 2**32, size=16)
    assert_that(list(first), is_(list(again)))
    assert_that(list(first), is_(not_(list(other))))


def test_substream_seeds_do_not_collide():
    stream = "energy|Z/3^2|d=None"
    seeds = {substream_seed(defaults.SEED, stream, i) for i in range(10000)}
    assert_that(seeds, has_length(10000))
    assert substream_seed(1, "thm1", 0) != substream_seed(2, "thm1", 0)
    assert substream_seed(1, "thm1", 0) != substream_seed(1, "thm2", 0)


def test_task_counts():
    config = make_config(dims=[3, 4])
    tasks = experiments.build_tasks(config)
    by_experiment = {}
    for task in tasks:
        by_experiment[task.experiment] = by_experiment.get(task.experiment, 0) + 1
    assert_that(
        by_experiment,
        is_(
            {
                "spectrum": 4,
                "mixing": 12,
                "incidence": 6,
                "energy": 6,
                "thm1": 6,
                "thm2": 6,
                "plunnecke": 6,
            }
        ),
    )
    assert_that(tasks, is_(sorted(tasks, key=experiments.Task.sort_key)))
    assert_that({t.d for t in tasks if t.experiment == "incidence"}, is_({4}))


def test_spectrum_on_f2():
    config = make_config(rings=["Z/2"], dims=[4], experiment="spectrum")
    records = experiments.run_tasks(experiments.build_tasks(config), config)
    assert_that(records, has_length(1))
    record = records[0]
    assert_that((record.ring, record.d, record.sizes), is_(("Z/2^1", 4, (15,))))
    assert_that(record.passed, is_(True))
    assert abs(record.lhs - 2.0) < 1e-6
    assert_that(record.extra, has_entries(degree=7, regular=True, solver="eigh"))


@pytest.mark.parametrize("experiment", vr_settings.EXPERIMENTS)
def test_each_experiment_passes(experiment):
    """Odd and even characteristic, both ring families."""
    config = make_config(experiment=experiment, trials=4, rings=list(MIXED_RINGS))
    records = experiments.run_tasks(experiments.build_tasks(config), config)
    assert_that(records, has_length(4 if experiment == "spectrum" else 16))
    assert_that({r.ring for r in records}, has_length(4))
    for record in records:
        assert record.passed, record


def test_thm2_on_characteristic_two_is_flagged():
    config = make_config(experiment="thm2", rings=["GF(2)[t]/t^2", "Z/3^2"])
    records = experiments.run_tasks(experiments.build_tasks(config), config)
    flags = {r.ring: r.extra["characteristic_two"] for r in records}
    assert_that(flags, is_({"GF(2)[t]/t^2": True, "Z/3^2": False}))


def test_sizes_are_clamped_to_the_ring():
    config = make_config(rings=["Z/2"], experiment="thm1", sizes=[5], trials=1)
    (record,) = experiments.run_tasks(experiments.build_tasks(config), config)
    assert_that(record.sizes, is_((2, 2, 2)))


def test_reruns_reproduce_records():
    config = make_config(trials=2)
    tasks = experiments.build_tasks(config)
    first = experiments.run_tasks(tasks, config)
    experiments.clear_caches()
    second = experiments.run_tasks(tasks, config)
    assert_that(second, is_(first))
    assert_that([r.seed for r in second], is_([r.seed for r in first]))


def test_parallel_matches_serial():
    config = make_config(trials=5, experiment="energy")
    tasks = experiments.build_tasks(config)
    serial = experiments.run_tasks(tasks, config)
    values = dict(vr_settings.unstructure_config(config), workers=2)
    parallel = experiments.run_tasks(tasks, vr_settings.structure_config(values))
    assert_that(parallel, is_(serial))


def test_csv_report():
    config = make_config(experiment="thm1", trials=2)
    records = experiments.run_tasks(experiments.build_tasks(config), config)
    stream = io.StringIO()
    rows = experiments.write_csv(records, stream)
    lines = stream.getvalue().split("\n")
    assert_that(rows, is_(4))
    assert_that(lines[0], is_("experiment,ring,d,trial,sizes,lhs,rhs,ratio,pass"))
    assert_that(lines[1].split(",")[:4], contains_exactly("thm1", "Z/2^2", "", "0"))
    assert_that(lines[-1], is_(""))
    assert_that(lines[1].split(",")[-1], is_(format_value(records[0].passed)))


def test_csv_report_with_experiment_columns():
    config = make_config(experiment="incidence", trials=1)
    records = experiments.run_tasks(experiments.build_tasks(config), config)
    stream = io.StringIO()
    columns = experiments.EXPERIMENT_REGISTRY.get("incidence").columns
    experiments.write_csv(records, stream, columns)
    header, first = stream.getvalue().splitlines()[:2]
    assert_that(header, is_("trial,Q,Pi,I,main,bound,edges,pass"))
    cells = first.split(",")
    assert_that(cells[3], is_(cells[6]))


@freeze_time("2026-01-02 03:04:05")
def test_json_report():
    config = make_config(experiment="plunnecke", trials=2)
    records = experiments.run_tasks(experiments.build_tasks(config), config)
    summary = experiments.summarize(records)
    stream = io.StringIO()
    experiments.write_json(records, summary, stream, config)
    document = json.loads(stream.getvalue())
    assert_that(document["generated"], is_("2026-01-02T03:04:05+00:00"))
    assert_that(document["records"], has_length(4))
    assert_that(document["records"][0], has_entries(experiment="plunnecke", trial=0))
    assert_that(document["records"][0]["pass"], is_(True))
    assert_that(document["summary"], has_entries(total=4, failures=0))
    assert_that(document["config"]["seed"], is_(42))
    restored = [
        experiments.REPORT_CONVERTER.structure(item, experiments.TrialRecord)
        for item in document["records"]
    ]
    assert_that(restored, is_(records))


def test_summary_lists_theorem2_ratios():
    records = [
        experiments.TrialRecord(
            experiment="thm2",
            ring="Z/5^2",
            d=None,
            trial=i,
            sizes=(n,),
            lhs=1.0,
            rhs=1.0,
            ratio=ratio,
            passed=True,
            seed=0,
            extra={"hypothesis": hypothesis},
        )
        for i, (n, ratio, hypothesis) in enumerate(
            [(20, 0.5, True), (21, 0.75, True), (3, 9.0, False)]
        )
    ]
    records.append(
        experiments.TrialRecord("thm1", "Z/5^2", None, 0, (1,), 0.0, 1.0, 0.0, False, 1)
    )
    summary = experiments.summarize(records)
    assert_that((summary.total, summary.failures, summary.passed), is_((4, 1, False)))
    assert_that(
        summary.theorem2_ratios,
        contains_exactly(experiments.RatioRow("Z/5^2", 2, 0.5, 0.75)),
    )
    lines = experiments.summary_lines(summary)
    assert_that(lines[0], is_("trials: 4, failures: 1"))
    assert_that(lines[-1], is_("    Z/5^2: n=2 min=0.5 max=0.75"))


def test_ratio_of_zero_bound():
    assert_that(experiments.ratio_of(3.0, 0.0), is_(math.inf))
    assert_that(experiments.ratio_of(0.0, 0.0), is_(0.0))
    assert_that(experiments.ratio_of(1.0, 4.0), is_(0.25))


def test_json_report_spells_out_infinity():
    record = experiments.TrialRecord(
        "mixing", "Z/2^1", 4, 0, (3, 0), 2.0, 0.0, math.inf, True, 0
    )
    summary = experiments.summarize([record])
    stream = io.StringIO()
    experiments.write_json([record], summary, stream)
    text = stream.getvalue()
    assert_that("Infinity" in text, is_(False))
    document = json.loads(text, parse_constant=_reject_constant)
    assert_that(document["records"][0]["ratio"], is_("inf"))
    restored = experiments.REPORT_CONVERTER.structure(
        document["records"][0], experiments.TrialRecord
    )
    assert_that(restored.ratio, is_(math.inf))
    assert_that(experiments.json_safe([-math.inf, (1.5,)]), is_(["-inf", [1.5]]))


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")

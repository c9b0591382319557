"""Scenario-driven experiment runner: repetitions across planners, trace CSVs,
summary tables, and plot-ready trajectory data."""

from __future__ import annotations

import csv
import io
import math
import os
import random
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import PLANNER_KINDS, make_planner
from .planner import PlannerParams, RunTrace, TraceEvent, derive_seed
from .space import ConfigSpace
from .stats import (
    RankEntry,
    RankTable,
    SampleGroup,
    Summary,
    a12,
    scott_knott,
    speedup,
    summarize,
    wilcoxon_rank_sum,
)
from .twin import DIRECTIONS, CyberTwin, Environment, MeasurementTable, load_measurements

TRACE_HEADER = ("planner", "rep", "measurement_index", "env", "ft", "best_ft",
                "adaptation_sent", "env_change")
TRAJECTORY_HEADER = ("planner", "measurement_index", "median_best", "iqr_best",
                     "env_change")


@dataclass(frozen=True)
class EnvironmentSource:
    environment: Environment
    dataset_path: Path


@dataclass(frozen=True)
class LegSpec:
    env_id: str
    measurement_budget: int


@dataclass(frozen=True)
class ScenarioSpec:
    system: str
    environments: tuple[EnvironmentSource, ...]
    legs: tuple[LegSpec, ...]
    planners: tuple[str, ...] = PLANNER_KINDS
    repetitions: int = 50
    k: int = 150
    base_seed: int = 0
    trajectory_stride: int = 15

    def __post_init__(self) -> None:
        if not self.environments:
            raise ValueError("scenario declares no environments")
        ids = [e.environment.id for e in self.environments]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate environment ids in scenario")
        if len(self.legs) < 2:
            raise ValueError("a transition scenario needs at least two legs")
        for leg in self.legs:
            if leg.env_id not in ids:
                raise ValueError(f"leg references undeclared environment {leg.env_id!r}")
            if leg.measurement_budget < 1:
                raise ValueError("leg budgets must be positive")
        if not self.planners:
            raise ValueError("scenario lists no planners")
        for kind in self.planners:
            if kind not in PLANNER_KINDS:
                raise ValueError(f"unknown planner kind {kind!r}")
        if self.repetitions < 1 or self.k < 1 or self.trajectory_stride < 1:
            raise ValueError("repetitions, k, and stride must be positive")

    def environment_of(self, env_id: str) -> Environment:
        for source in self.environments:
            if source.environment.id == env_id:
                return source.environment
        raise KeyError(env_id)

    def final_direction(self) -> str:
        return self.environment_of(self.legs[-1].env_id).direction


def parse_scenario(path: str | Path) -> ScenarioSpec:
    """Parse a scenario manifest.

    Line-based key-value grammar (``#`` comments allowed)::

        system: synth_demo
        seed: 7
        repetitions: 50
        k: 150
        stride: 15
        planners: lidos, lidos_sta, pseudo_dynamic, stationary
        environment: A env_a.csv minimize [units]
        environment: B env_b.csv maximize [units]
        leg: A 150
        leg: B 150

    Relative dataset paths resolve against the manifest's directory.
    """
    path = Path(path)
    base_dir = path.parent
    fields: dict[str, str] = {}
    environments: list[EnvironmentSource] = []
    legs: list[LegSpec] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        rest = rest.strip()
        if not sep or not rest:
            raise ValueError(f"{path}:{lineno}: expected 'key: value', got {raw!r}")
        if key == "environment":
            environments.append(_parse_environment(rest, base_dir, f"{path}:{lineno}"))
        elif key == "leg":
            tokens = rest.split()
            if len(tokens) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'leg: ENV BUDGET'")
            legs.append(LegSpec(env_id=tokens[0], measurement_budget=_int(tokens[1], lineno, path)))
        elif key in ("system", "seed", "repetitions", "k", "stride", "planners"):
            if key in fields:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            fields[key] = rest
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")

    if "system" not in fields:
        raise ValueError(f"{path}: missing 'system'")
    kwargs = {}
    if "planners" in fields:
        kwargs["planners"] = tuple(p.strip() for p in fields["planners"].split(",") if p.strip())
    if "seed" in fields:
        kwargs["base_seed"] = _int(fields["seed"], 0, path)
    if "repetitions" in fields:
        kwargs["repetitions"] = _int(fields["repetitions"], 0, path)
    if "k" in fields:
        kwargs["k"] = _int(fields["k"], 0, path)
    if "stride" in fields:
        kwargs["trajectory_stride"] = _int(fields["stride"], 0, path)
    return ScenarioSpec(
        system=fields["system"],
        environments=tuple(environments),
        legs=tuple(legs),
        **kwargs,
    )


def _parse_environment(rest: str, base_dir: Path, where: str) -> EnvironmentSource:
    tokens = rest.split()
    if len(tokens) < 3:
        raise ValueError(f"{where}: expected 'environment: ID PATH DIRECTION [UNITS]'")
    env_id = tokens[0]
    if tokens[-1] in DIRECTIONS:
        direction, units, path_tokens = tokens[-1], "", tokens[1:-1]
    elif len(tokens) >= 4 and tokens[-2] in DIRECTIONS:
        direction, units, path_tokens = tokens[-2], tokens[-1], tokens[1:-2]
    else:
        raise ValueError(f"{where}: direction must be one of {DIRECTIONS}")
    if not path_tokens:
        raise ValueError(f"{where}: missing dataset path")
    dataset = Path(" ".join(path_tokens))
    if not dataset.is_absolute():
        dataset = base_dir / dataset
    return EnvironmentSource(
        environment=Environment(id=env_id, direction=direction, units=units),
        dataset_path=dataset,
    )


def _int(text: str, lineno: int, path: Path) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: expected an integer, got {text!r}") from None


# -- execution ---------------------------------------------------------------


@dataclass
class ResultBundle:
    """Everything one scenario execution produced; traces are the source of
    truth for every downstream statistic."""

    spec: ScenarioSpec
    labels: tuple[str, ...]
    traces: dict[tuple[str, int], RunTrace]
    final_counters: dict[tuple[str, int], int] = field(default_factory=dict)

    def final_values(self, label: str) -> list[float]:
        """Best canonical target value at the end of each repetition."""
        return [
            self.traces[(label, rep)].final_best()
            for rep in range(self.spec.repetitions)
        ]

    def sample_group(self, label: str) -> SampleGroup:
        direction = self.spec.final_direction()
        sign = 1.0 if direction == "minimize" else -1.0
        return SampleGroup(
            label=label,
            values=tuple(sign * v for v in self.final_values(label)),
            direction=direction,
        )


def planner_labels(planners: tuple[str, ...]) -> list[tuple[str, str]]:
    """(label, kind) pairs; repeated kinds get positional suffixes."""
    out: list[tuple[str, str]] = []
    counts: dict[str, int] = {}
    for kind in planners:
        counts[kind] = counts.get(kind, 0) + 1
        label = kind if counts[kind] == 1 else f"{kind}@{counts[kind]}"
        out.append((label, kind))
    return out


def load_scenario_tables(spec: ScenarioSpec) -> tuple[ConfigSpace, dict[str, MeasurementTable]]:
    tables: dict[str, MeasurementTable] = {}
    space: ConfigSpace | None = None
    for source in spec.environments:
        table = load_measurements(source.dataset_path, source.environment)
        implied = table.implied_space()
        if space is None:
            space = implied
        elif implied != space:
            raise ValueError(
                f"dataset mismatch across environments: {source.environment.id!r} "
                "implies a different config space"
            )
        tables[source.environment.id] = table
    assert space is not None
    return space, tables


def run_scenario(spec: ScenarioSpec, params: PlannerParams | None = None) -> ResultBundle:
    """Execute every planner x repetition: init under the first leg's
    environment, run each leg to its budget, firing an environment change
    between legs. Fully deterministic given (spec, base_seed)."""
    params = params if params is not None else PlannerParams(k=spec.k)
    for leg in spec.legs:
        if leg.measurement_budget < params.population_size:
            raise ValueError(
                f"leg budget {leg.measurement_budget} is below the population size "
                f"{params.population_size}; initialization alone would exceed it"
            )
    space, tables = load_scenario_tables(spec)
    labeled = planner_labels(spec.planners)
    traces: dict[tuple[str, int], RunTrace] = {}
    counters: dict[tuple[str, int], int] = {}
    for label, kind in labeled:
        for rep in range(spec.repetitions):
            twin = CyberTwin(space, tables.values())
            twin.set_environment(spec.legs[0].env_id)
            planner = make_planner(kind, space, twin, params,
                                   derive_seed(spec.base_seed, kind, rep))
            planner.init_run()
            planner.run_scenario_leg(spec.legs[0].measurement_budget)
            for leg in spec.legs[1:]:
                planner.on_environment_change(leg.env_id)
                planner.run_scenario_leg(leg.measurement_budget)
            traces[(label, rep)] = planner.trace
            counters[(label, rep)] = twin.counter
    return ResultBundle(
        spec=spec,
        labels=tuple(label for label, _ in labeled),
        traces=traces,
        final_counters=counters,
    )


# -- summaries ---------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseRow:
    label: str
    p_value: float
    effect: float  # probability the dynamic planner beats `label`


@dataclass(frozen=True)
class SpeedupRow:
    label: str
    median: float
    values: tuple[float, ...]


@dataclass(frozen=True)
class BundleSummary:
    summaries: dict[str, Summary]
    rank_table: RankTable
    pairwise: tuple[PairwiseRow, ...]
    speedups: tuple[SpeedupRow, ...]


def summarize_bundle(bundle: ResultBundle, rng: random.Random | None = None) -> BundleSummary:
    """Medians/IQRs per planner, pairwise tests of the dynamic planner against
    every other treatment, ranks across all treatments, and per-repetition
    post-change speedups."""
    spec = bundle.spec
    groups = [bundle.sample_group(label) for label in bundle.labels]
    stats = summarize(groups)

    if len(groups) >= 2:
        rank_rng = rng if rng is not None else random.Random(
            derive_seed(spec.base_seed, "scott-knott")
        )
        ranks = scott_knott(groups, rng=rank_rng)
    else:
        only = groups[0]
        ranks = RankTable(entries=(
            RankEntry(label=only.label, rank=1,
                      median=stats[only.label].median, iqr=stats[only.label].iqr),
        ))

    pairwise: list[PairwiseRow] = []
    speedups: list[SpeedupRow] = []
    if "lidos" in bundle.labels:
        lidos = bundle.sample_group("lidos").canonical()
        for label in bundle.labels:
            if label == "lidos":
                continue
            other = bundle.sample_group(label).canonical()
            pairwise.append(
                PairwiseRow(
                    label=label,
                    p_value=wilcoxon_rank_sum(lidos, other),
                    effect=a12(lidos, other, "minimize"),
                )
            )
            values = tuple(
                speedup(bundle.traces[(label, rep)], bundle.traces[("lidos", rep)])
                for rep in range(spec.repetitions)
            )
            # statistics.median keeps infinite ratios (never-caught-up runs)
            # well-defined; percentile interpolation would produce NaN.
            speedups.append(
                SpeedupRow(
                    label=label,
                    median=float(statistics.median(values)),
                    values=values,
                )
            )
    return BundleSummary(
        summaries=stats,
        rank_table=ranks,
        pairwise=tuple(pairwise),
        speedups=tuple(speedups),
    )


# -- trace serialization -------------------------------------------------------


def traces_csv_text(bundle: ResultBundle) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for label in bundle.labels:
        for rep in range(bundle.spec.repetitions):
            for event in bundle.traces[(label, rep)].events:
                writer.writerow(
                    [
                        label,
                        rep,
                        event.measurement_index,
                        event.environment_id,
                        "" if event.ft is None else repr(event.ft),
                        "" if event.best_ft is None else repr(event.best_ft),
                        int(event.adaptation_sent),
                        int(event.env_change),
                    ]
                )
    return buf.getvalue()


def read_traces_csv(path: str | Path) -> tuple[tuple[str, ...], dict[tuple[str, int], RunTrace]]:
    """Rebuild run traces from an emitted CSV (plans are not serialized)."""
    labels: list[str] = []
    traces: dict[tuple[str, int], RunTrace] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        for row in reader:
            if not row:
                continue
            label, rep_s, index_s, env, ft_s, best_s, sent_s, change_s = row
            key = (label, int(rep_s))
            if label not in labels:
                labels.append(label)
            traces.setdefault(key, RunTrace()).events.append(
                TraceEvent(
                    measurement_index=int(index_s),
                    environment_id=env,
                    ft=float(ft_s) if ft_s else None,
                    best_ft=float(best_s) if best_s else None,
                    adaptation_sent=bool(int(sent_s)),
                    env_change=bool(int(change_s)),
                )
            )
    return tuple(labels), traces


def bundle_from_traces(spec: ScenarioSpec, path: str | Path) -> ResultBundle:
    """Rebuild a bundle from an emitted trace file.

    The traces are the source of truth: the repetition count is adopted from
    the file (a run may have been executed with an overridden count)."""
    labels, traces = read_traces_csv(path)
    if not traces:
        raise ValueError(f"{path}: trace file holds no events")
    reps = sorted({rep for _, rep in traces})
    if reps != list(range(len(reps))):
        raise ValueError(f"{path}: repetitions are not contiguous from 0: {reps}")
    for label in labels:
        for rep in reps:
            if (label, rep) not in traces:
                raise ValueError(f"{path}: missing trace for {label!r} repetition {rep}")
    if len(reps) != spec.repetitions:
        spec = replace(spec, repetitions=len(reps))
    return ResultBundle(spec=spec, labels=labels, traces=traces)


# -- trajectories --------------------------------------------------------------


def trajectory_rows(bundle: ResultBundle, stride: int | None = None) -> list[tuple]:
    """Per planner and stride multiple: median and IQR (original units) of the
    best-so-far value across repetitions, plus a change flag on the first
    stride row at or past each nominal leg boundary."""
    spec = bundle.spec
    stride = stride if stride is not None else spec.trajectory_stride
    if stride < 1:
        raise ValueError("stride must be positive")
    nominal_total = sum(leg.measurement_budget for leg in spec.legs)
    boundaries = []
    running = 0
    for leg in spec.legs[:-1]:
        running += leg.measurement_budget
        boundaries.append(running)
    flagged = {min(nominal_total, math.ceil(b / stride) * stride) for b in boundaries}

    sign = 1.0 if spec.final_direction() == "minimize" else -1.0
    rows: list[tuple] = []
    for label in bundle.labels:
        series = []
        for rep in range(spec.repetitions):
            events = bundle.traces[(label, rep)].measurement_events()
            series.append(([e.measurement_index for e in events],
                           [e.best_ft for e in events]))
        for m in range(stride, nominal_total + 1, stride):
            values = []
            for indices, bests in series:
                pos = _last_at_or_before(indices, m)
                if pos >= 0:
                    values.append(sign * bests[pos])
            if not values:
                continue
            arr = np.asarray(values)
            rows.append(
                (
                    label,
                    m,
                    float(np.percentile(arr, 50)),
                    float(np.percentile(arr, 75) - np.percentile(arr, 25)),
                    int(m in flagged),
                )
            )
    return rows


def _last_at_or_before(indices: list[int], m: int) -> int:
    lo, hi = 0, len(indices)
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] <= m:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


def trajectories_csv_text(bundle: ResultBundle, stride: int | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for row in trajectory_rows(bundle, stride):
        writer.writerow([row[0], row[1], repr(row[2]), repr(row[3]), row[4]])
    return buf.getvalue()


def emit_trajectories(bundle: ResultBundle, path: str | Path,
                      stride: int | None = None) -> None:
    """Write the stride-sampled trajectory table (atomically)."""
    write_atomic(path, trajectories_csv_text(bundle, stride))


# -- emission -------------------------------------------------------------------


def write_atomic(path: str | Path, content: str) -> None:
    """Write-then-rename so partially written outputs never appear."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(content, encoding="utf-8")
    os.replace(tmp, path)


def summary_csv_text(summary: BundleSummary, spec: ScenarioSpec) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("planner", "median", "iqr", "direction"))
    direction = spec.final_direction()
    for label, stat in summary.summaries.items():
        writer.writerow([label, repr(stat.median), repr(stat.iqr), direction])
    return buf.getvalue()


def pairwise_csv_text(summary: BundleSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("baseline", "p_value", "a12"))
    for row in summary.pairwise:
        writer.writerow([row.label, repr(row.p_value), repr(row.effect)])
    return buf.getvalue()


def ranks_csv_text(summary: BundleSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("planner", "rank", "median", "iqr"))
    for entry in summary.rank_table.entries:
        writer.writerow([entry.label, entry.rank, repr(entry.median), repr(entry.iqr)])
    return buf.getvalue()


def speedups_csv_text(summary: BundleSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("baseline", "rep", "speedup"))
    for row in summary.speedups:
        for rep, value in enumerate(row.values):
            writer.writerow([row.label, rep, repr(value)])
    return buf.getvalue()


def render_text_summary(summary: BundleSummary, spec: ScenarioSpec) -> str:
    lines = [f"scenario: {spec.system}", f"direction: {spec.final_direction()}", ""]
    lines.append("planner medians (original units):")
    for label, stat in summary.summaries.items():
        lines.append(f"  {label:<16} median={stat.median:g} iqr={stat.iqr:g}")
    lines.append("")
    lines.append("ranks (1 = best, equal rank = statistically indistinguishable):")
    for entry in summary.rank_table.entries:
        lines.append(
            f"  rank {entry.rank}: {entry.label:<16} median={entry.median:g} iqr={entry.iqr:g}"
        )
    if summary.pairwise:
        lines.append("")
        lines.append("pairwise vs lidos (p-value, probability lidos is better):")
        for row in summary.pairwise:
            lines.append(f"  vs {row.label:<16} p={row.p_value:.4g} A12={row.effect:.3f}")
    if summary.speedups:
        lines.append("")
        lines.append("post-change speedup of lidos (median over repetitions):")
        for row in summary.speedups:
            lines.append(f"  vs {row.label:<16} {row.median:g}x")
    lines.append("")
    return "\n".join(lines)


def write_bundle_outputs(bundle: ResultBundle, out_dir: str | Path,
                         *, include_traces: bool = True) -> BundleSummary:
    out = Path(out_dir)
    summary = summarize_bundle(bundle)
    if include_traces:
        write_atomic(out / "traces.csv", traces_csv_text(bundle))
    emit_trajectories(bundle, out / "trajectories.csv")
    write_atomic(out / "summary.csv", summary_csv_text(summary, bundle.spec))
    write_atomic(out / "pairwise.csv", pairwise_csv_text(summary))
    write_atomic(out / "ranks.csv", ranks_csv_text(summary))
    write_atomic(out / "speedups.csv", speedups_csv_text(summary))
    write_atomic(out / "summary.txt", render_text_summary(summary, bundle.spec))
    return summary

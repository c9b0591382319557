"""Lifelong generational planner: cache-aware measuring, adaptation events,
environment-change handling, and run traces."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from .mmo import ScoredPlan, assign_auxiliary, environmental_selection, transform
from .space import ConfigSpace, Plan
from .twin import CyberTwin, Environment

# A leg gives up after this many consecutive generations without a genuine
# measurement: finite datasets plus bounded-reach operators can dead-end
# before either the budget or full coverage is hit.
STALL_GENERATIONS = 25


def derive_seed(*parts) -> int:
    """Stable cross-process seed from arbitrary labelled parts."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class PlannerParams:
    population_size: int = 20
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    k: int = 150
    w: float = 1.0

    def __post_init__(self) -> None:
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and at least 2")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.k < 1:
            raise ValueError("adaptation interval k must be positive")


@dataclass(frozen=True)
class TraceEvent:
    measurement_index: int
    environment_id: str
    plan: Plan | None = None
    ft: float | None = None
    best_ft: float | None = None
    adaptation_sent: bool = False
    env_change: bool = False

    @property
    def is_measurement(self) -> bool:
        return not self.adaptation_sent and not self.env_change


@dataclass
class RunTrace:
    """Ordered event log of one repetition: genuine measurements (index
    strictly increasing), adaptation emissions, and environment changes."""

    events: list[TraceEvent] = field(default_factory=list)

    def measurement_events(self) -> list[TraceEvent]:
        return [e for e in self.events if e.is_measurement]

    def change_count(self) -> int:
        return sum(1 for e in self.events if e.env_change)

    def measurements_after_change(self, marker: int = 1) -> list[TraceEvent]:
        """Measurement events between the marker-th environment change and the
        next one (or the end of the trace)."""
        if marker < 1:
            raise ValueError("change marker is 1-based")
        seen = 0
        collecting = False
        out: list[TraceEvent] = []
        for event in self.events:
            if event.env_change:
                seen += 1
                collecting = seen == marker
                continue
            if collecting and event.is_measurement:
                out.append(event)
        if seen < marker:
            raise ValueError(f"trace holds only {seen} change marker(s), wanted {marker}")
        return out

    def final_best(self) -> float:
        for event in reversed(self.events):
            if event.best_ft is not None:
                return event.best_ft
        raise ValueError("trace holds no measurements")


def binary_tournament(population: list[ScoredPlan], rng: random.Random, key) -> ScoredPlan:
    """Pick two distinct members at random; the better key wins, first on ties."""
    a, b = rng.sample(population, 2)
    return a if key(a) <= key(b) else b


def uniform_crossover(a: Plan, b: Plan, rate: float, rng: random.Random) -> tuple[Plan, Plan]:
    if rng.random() >= rate:
        return a, b
    ca, cb = list(a), list(b)
    for i in range(len(ca)):
        if rng.random() < 0.5:
            ca[i], cb[i] = cb[i], ca[i]
    return tuple(ca), tuple(cb)


def boundary_mutation(plan: Plan, space: ConfigSpace, rate: float, rng: random.Random) -> Plan:
    """Per gene, with the given probability, jump to the domain minimum or
    maximum on a fair coin."""
    values = list(plan)
    for i, opt in enumerate(space.options):
        if rng.random() < rate:
            values[i] = opt.domain[0] if rng.random() < 0.5 else opt.domain[-1]
    return tuple(values)


class BasePlanner:
    """Shared generational loop over a measurement twin.

    Subclasses fix mating and replacement; everything else (cache-aware
    measurement accounting, best-so-far tracking, adaptation triggering,
    leg execution, restarts) is common to all planner kinds.
    """

    kind = "base"
    # When set, offspring pools collect distinct plans (duplicates do not count
    # toward the pool size) and replacement unions deduplicate against the
    # parents, so populations stay plan-diverse whenever the dataset allows.
    distinct_offspring = False

    def __init__(self, space: ConfigSpace, twin: CyberTwin, params: PlannerParams, seed: int):
        self.space = space
        self.twin = twin
        self.params = params
        self.base_seed = seed
        self.rng = random.Random(seed)
        self.population: list[ScoredPlan] = []
        self.s_best: ScoredPlan | None = None
        self.t = 0
        self.generation = 0
        self.epoch = 0
        self.epoch_measurements = 0
        self._last_sent_ft: float | None = None
        self.trace = RunTrace()

    # -- planner interface -------------------------------------------------

    def init_run(self) -> None:
        """Measure a random population under the twin's current environment."""
        if self.twin.current is None:
            raise ValueError("twin has no current environment")
        self.population = [self._eval(p) for p in self._spawn_plans()]
        self._score_population()
        self.generation = 0

    def step_generation(self) -> None:
        """One generation: mate, vary, repair, measure (cache-aware), replace,
        and possibly emit an adaptation."""
        n = self.params.population_size
        offspring: list[ScoredPlan] = []
        pool_plans: set[Plan] = set()
        # Degenerate operators or exhausted reach can make distinct offspring
        # unobtainable; cap the attempts so the generation always terminates.
        attempts_left = 50 * n
        while len(offspring) < n and attempts_left > 0:
            p1 = self._mate()
            p2 = self._mate()
            c1, c2 = uniform_crossover(p1.plan, p2.plan, self.params.crossover_rate, self.rng)
            c1 = boundary_mutation(c1, self.space, self.params.mutation_rate, self.rng)
            c2 = boundary_mutation(c2, self.space, self.params.mutation_rate, self.rng)
            for child in (self.twin.repair(c1), self.twin.repair(c2)):
                attempts_left -= 1
                if len(offspring) >= n:
                    break
                if self.distinct_offspring and child in pool_plans:
                    continue
                pool_plans.add(child)
                offspring.append(self._eval(child))
        self._replace(offspring)
        self.generation += 1
        self._maybe_send_adaptation()

    def on_environment_change(self, env: Environment | str) -> None:
        raise NotImplementedError

    def run_scenario_leg(self, measurement_budget: int | None = None) -> RunTrace:
        """Run generations until the budget of genuine measurements since the
        epoch began is spent, the space is covered, or progress stalls.

        The generation in progress always completes, so a leg may overshoot
        its budget by at most one generation's worth of measurements.
        """
        stalled = 0
        while True:
            if self.twin.coverage() >= 1.0:
                break
            if measurement_budget is not None and self.epoch_measurements >= measurement_budget:
                break
            if stalled >= STALL_GENERATIONS:
                break
            before = self.epoch_measurements
            self.step_generation()
            stalled = stalled + 1 if self.epoch_measurements == before else 0
        return self.trace

    def best_plan(self) -> ScoredPlan:
        if self.s_best is None:
            raise ValueError("planner not initialized")
        return self.s_best

    def restart(self, seed: int) -> None:
        """Re-randomize the population under the current environment; resets
        the best plan, the emission gate, and the interval counter."""
        self.rng = random.Random(seed)
        self.s_best = None
        self._last_sent_ft = None
        self.t = 0
        self.population = [self._eval(p) for p in self._spawn_plans()]
        self._score_population()

    # -- shared internals ----------------------------------------------------

    def _eval(self, plan: Plan) -> ScoredPlan:
        return ScoredPlan(plan=plan, ft=self._measure(plan))

    def _measure(self, plan: Plan) -> float:
        """Measure through the twin; genuine measurements advance the interval
        counter, update the best plan, and append a trace event."""
        before = self.twin.counter
        ft = self.twin.measure(plan)
        if self.twin.counter == before:
            return ft
        self.t += 1
        self.epoch_measurements += 1
        if self.s_best is None or ft < self.s_best.ft:
            self.s_best = ScoredPlan(plan=plan, ft=ft)
        self.trace.events.append(
            TraceEvent(
                measurement_index=self.twin.counter,
                environment_id=self.twin.current.id,
                plan=plan,
                ft=ft,
                best_ft=self.s_best.ft,
            )
        )
        return ft

    def _spawn_plans(self) -> list[Plan]:
        """Random measured plans, distinct whenever the dataset allows it."""
        n = self.params.population_size
        table = self.twin.current_table()
        if not table.rows:
            raise ValueError("dataset empty")
        target = min(n, len(table.rows))
        chosen: list[Plan] = []
        seen: set[Plan] = set()
        attempts = 0
        while len(chosen) < target:
            plan = self.twin.repair(self.space.random_plan(self.rng))
            attempts += 1
            if plan in seen:
                if attempts > 100 * (n + 1):
                    for fallback in sorted(set(table.rows) - seen):
                        seen.add(fallback)
                        chosen.append(fallback)
                        if len(chosen) == target:
                            break
                continue
            seen.add(plan)
            chosen.append(plan)
        while len(chosen) < n:
            chosen.append(chosen[self.rng.randrange(len(chosen))])
        return chosen

    def _begin_epoch(self, env: Environment | str) -> None:
        self.twin.set_environment(env)
        self.epoch += 1
        self.t = 0
        self.epoch_measurements = 0
        self.s_best = None
        self._last_sent_ft = None
        self.trace.events.append(
            TraceEvent(
                measurement_index=self.twin.counter,
                environment_id=self.twin.current.id,
                env_change=True,
            )
        )

    def _remeasure_population(self) -> None:
        for member in self.population:
            member.ft = self._measure(member.plan)
            member.fa = member.g1 = member.g2 = None

    def _maybe_send_adaptation(self) -> None:
        """Emit the best plan once the interval is full and it improves on the
        previously emitted plan; emission resets the interval counter."""
        if self.t < self.params.k or self.s_best is None:
            return
        if self._last_sent_ft is not None and self.s_best.ft >= self._last_sent_ft:
            return
        self.trace.events.append(
            TraceEvent(
                measurement_index=self.twin.counter,
                environment_id=self.twin.current.id,
                plan=self.s_best.plan,
                ft=self.s_best.ft,
                best_ft=self.s_best.ft,
                adaptation_sent=True,
            )
        )
        self._last_sent_ft = self.s_best.ft
        self.t = 0

    # -- subclass hooks ------------------------------------------------------

    def _score_population(self) -> None:
        pass

    def _mate(self) -> ScoredPlan:
        raise NotImplementedError

    def _replace(self, offspring: list[ScoredPlan]) -> None:
        raise NotImplementedError


class MmoPlanner(BasePlanner):
    """The lifelong dynamic planner: bi-objective selection keeps diverse local
    optima, and an environment change re-measures (rather than discards) the
    population."""

    kind = "lidos"
    distinct_offspring = True

    def _score_population(self) -> None:
        pool = self.population
        for member in pool:
            member.fa = member.g1 = member.g2 = None
        assign_auxiliary(pool, self.space)
        for member in pool:
            transform(member, self.params.w)
        # Identity selection; run it anyway so ranks and crowding are in place
        # for the next mating tournament.
        self.population = environmental_selection(pool, len(pool))

    def _mate(self) -> ScoredPlan:
        return binary_tournament(
            self.population, self.rng, key=lambda m: (m.rank, -m.crowding)
        )

    def _replace(self, offspring: list[ScoredPlan]) -> None:
        # Offspring re-creating a parent plan merge into the parent copy, so
        # the scored union never builds up clones of surviving plans.
        parent_plans = {m.plan for m in self.population}
        union = self.population + [o for o in offspring if o.plan not in parent_plans]
        for member in union:
            member.fa = member.g1 = member.g2 = None
        assign_auxiliary(union, self.space)
        for member in union:
            transform(member, self.params.w)
        self.population = environmental_selection(union, self.params.population_size)

    def on_environment_change(self, env: Environment | str) -> None:
        self._begin_epoch(env)
        self._remeasure_population()
        self._score_population()

"""Dataset-backed measurement oracle with per-environment caching and counting."""

from __future__ import annotations

import csv
import itertools
import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .space import ConfigSpace, OptionSpec, Plan

DIRECTIONS = ("minimize", "maximize")


@dataclass(frozen=True)
class Environment:
    """One operating condition; its direction says whether raw values are to be
    minimized or maximized."""

    id: str
    direction: str = "minimize"
    units: str = ""

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")


class MeasurementTable:
    """Plan -> raw performance lookup for a single environment.

    Read-only after construction; tables are safely shared across runs.
    """

    def __init__(self, environment: Environment, option_names: tuple[str, ...],
                 rows: dict[Plan, float]):
        if not option_names:
            raise ValueError("a measurement table needs at least one option column")
        if not rows:
            raise ValueError(f"measurement table for {environment.id!r} is empty")
        for plan, value in rows.items():
            if len(plan) != len(option_names):
                raise ValueError(f"plan {plan!r} does not match option columns {option_names}")
            if not math.isfinite(value):
                raise ValueError(f"non-finite performance value for plan {plan!r}")
        self.environment = environment
        self.option_names = option_names
        self.rows = rows
        self._sorted_plans: list[Plan] | None = None
        self._plan_matrix: np.ndarray | None = None
        self._validated_for: ConfigSpace | None = None
        self._repair_cache: dict[Plan, Plan] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def implied_space(self) -> ConfigSpace:
        """Space whose domains are the sorted distinct values per option column."""
        columns = list(zip(*self.rows.keys()))
        return ConfigSpace(
            options=tuple(
                OptionSpec(name=name, domain=tuple(sorted(set(col))))
                for name, col in zip(self.option_names, columns)
            )
        )

    def validate_space(self, space: ConfigSpace) -> None:
        """Check every row key is a valid plan of `space` (cached per space)."""
        if self._validated_for == space:
            return
        for plan in self.rows:
            if not space.validate_plan(plan):
                raise ValueError(
                    f"table for {self.environment.id!r} holds plan {plan!r} "
                    "outside the config space"
                )
        self._validated_for = space
        self._repair_cache = {}

    def plan_matrix(self) -> tuple[list[Plan], np.ndarray]:
        """Lexicographically sorted plans plus their float matrix (for repair)."""
        if self._sorted_plans is None:
            self._sorted_plans = sorted(self.rows)
            self._plan_matrix = np.asarray(self._sorted_plans, dtype=float)
        assert self._plan_matrix is not None
        return self._sorted_plans, self._plan_matrix


def load_measurements(path: str | Path, env: Environment) -> MeasurementTable:
    """Load one environment's measurement CSV.

    Header is ``opt1,...,optN,performance``; one row per plan. Duplicate rows
    are tolerated only when their performance values agree.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise ValueError(f"{path}: need at least one option column and a performance column")
        option_names = tuple(header[:-1])
        rows: dict[Plan, float] = {}
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                plan = tuple(_as_int(cell) for cell in row[:-1])
                value = float(row[-1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if not math.isfinite(value):
                raise ValueError(f"{path}:{lineno}: non-finite performance value")
            if plan in rows and rows[plan] != value:
                raise ValueError(
                    f"{path}:{lineno}: duplicate plan {plan} with conflicting values "
                    f"{rows[plan]} vs {value}"
                )
            rows[plan] = value
    return MeasurementTable(environment=env, option_names=option_names, rows=rows)


def _as_int(cell: str) -> int:
    value = float(cell)
    if value != int(value):
        raise ValueError(f"option value {cell!r} is not an integer")
    return int(value)


class CyberTwin:
    """Measurement replica of the managed system.

    Serves the current environment's table, caches plans measured since the
    environment last became current, and counts genuine (cache-miss)
    measurements. Raw values from maximize environments are negated so every
    caller sees a minimization objective.
    """

    def __init__(self, space: ConfigSpace, tables):
        self.space = space
        self.tables: dict[str, MeasurementTable] = {}
        for table in tables:
            env_id = table.environment.id
            if env_id in self.tables:
                raise ValueError(f"duplicate environment id {env_id!r}")
            table.validate_space(space)
            self.tables[env_id] = table
        if not self.tables:
            raise ValueError("a twin needs at least one measurement table")
        self.current: Environment | None = None
        self.counter = 0
        self._cache: set[Plan] = set()

    def current_table(self) -> MeasurementTable:
        if self.current is None:
            raise ValueError("twin has no current environment")
        return self.tables[self.current.id]

    def set_environment(self, env: Environment | str) -> None:
        """Switch environments. Always treated as a change event: the target
        environment's cache is cleared even when it is already current."""
        env_id = env if isinstance(env, str) else env.id
        if env_id not in self.tables:
            raise ValueError(f"unknown environment {env_id!r}")
        self.current = self.tables[env_id].environment
        self._cache = set()

    def measure(self, plan: Plan) -> float:
        table = self.current_table()
        try:
            raw = table.rows[plan]
        except KeyError:
            raise KeyError(
                f"plan {plan!r} has no measurement under environment "
                f"{table.environment.id!r}"
            ) from None
        if plan not in self._cache:
            self._cache.add(plan)
            self.counter += 1
        return raw if self.current.direction == "minimize" else -raw

    def is_cached(self, plan: Plan) -> bool:
        return plan in self._cache

    def coverage(self) -> float:
        return len(self._cache) / len(self.current_table())

    def repair(self, plan: Plan) -> Plan:
        """Map a plan to the nearest measured plan of the current environment.

        Plans already in the table pass through; ties resolve to the
        lexicographically lowest plan. Nearest-plan lookups are memoized on the
        table (off-table offspring recur a lot on sparse datasets).
        """
        table = self.current_table()
        if plan in table.rows:
            return plan
        cached = table._repair_cache.get(plan)
        if cached is not None:
            return cached
        plans, matrix = table.plan_matrix()
        diff = (matrix - np.asarray(plan, dtype=float)) * np.asarray(self.space.scale)
        nearest = plans[int(np.argmin((diff * diff).sum(axis=1)))]
        table._repair_cache[plan] = nearest
        return nearest


def synth_landscape(n_options: int = 6, domain_size: int = 5, n_peaks: int = 40,
                    peak_shift: int = 1, noise_seed: int = 0,
                    ) -> tuple[MeasurementTable, MeasurementTable]:
    """Generate two fully enumerated environments over one space.

    Both environments are sums of Gaussian basins at the same well-separated
    locations, but the basin depths are cyclically permuted between them, so
    the best plan of environment A stays a (non-global) local optimum of
    environment B. A tiny deterministic jitter breaks exact ties.
    """
    if n_peaks < 2:
        raise ValueError("n_peaks must be at least 2")
    size = domain_size ** n_options
    if n_peaks > size:
        raise ValueError(f"space too small for {n_peaks} peaks (only {size} plans)")
    if peak_shift % n_peaks == 0:
        raise ValueError("peak_shift must not be a multiple of n_peaks")

    space = ConfigSpace(
        options=tuple(
            OptionSpec(name=f"o{i + 1}", domain=tuple(range(domain_size)))
            for i in range(n_options)
        )
    )
    plans = list(itertools.product(range(domain_size), repeat=n_options))
    rng = random.Random(noise_seed)
    scale = np.asarray(space.scale)
    plan_arr = np.asarray(plans, dtype=float)

    # Greedy max-min placement keeps the basins well separated; argmax ties go
    # to the lexicographically lowest plan, so the layout is deterministic
    # given the seed (only the first center is drawn at random).
    first = rng.randrange(len(plans))
    center_idx = [first]
    dmin = np.sqrt((((plan_arr - plan_arr[first]) * scale) ** 2).sum(axis=1))
    dmin[first] = -1.0
    while len(center_idx) < n_peaks:
        nxt = int(np.argmax(dmin))
        center_idx.append(nxt)
        dist = np.sqrt((((plan_arr - plan_arr[nxt]) * scale) ** 2).sum(axis=1))
        dmin = np.minimum(dmin, dist)
        dmin[nxt] = -1.0

    center_arr = plan_arr[center_idx]
    seps = np.sqrt(
        (((center_arr[:, None, :] - center_arr[None, :, :]) * scale) ** 2).sum(axis=2)
    )
    np.fill_diagonal(seps, np.inf)
    # Basin width relative to the closest center pair: wide enough that the
    # tails guide the search, narrow enough that basins stay distinct optima.
    sigma = float(seps.min()) / 2.5
    depths = [1.0 - 0.5 * j / (n_peaks - 1) for j in range(n_peaks)]

    d2 = (((plan_arr[:, None, :] - center_arr[None, :, :]) * scale) ** 2).sum(axis=2)
    kernel = np.exp(-d2 / sigma**2)

    tables = []
    for env_id, offset in (("A", 0), ("B", peak_shift)):
        h = np.asarray([depths[(j + offset) % n_peaks] for j in range(n_peaks)])
        values = -(kernel @ h)
        rows = {
            plan: float(values[i] + rng.random() * 1e-9)
            for i, plan in enumerate(plans)
        }
        env = Environment(id=env_id, direction="minimize")
        tables.append(
            MeasurementTable(env, tuple(o.name for o in space.options), rows)
        )
    return tables[0], tables[1]

"""Run loop, invariant monitoring, and paired scenario execution.

A paired report runs several variants of one scenario under the same
master seed: baseline (all hazards stripped), risk (as configured) and any
declared mitigation bundles (risk plus parameter overrides).  Shared
per-subagent random streams mean all variants see identical draws at
identical decision points, so metric differences between runs are caused
by the scenario differences alone.  The mobility service level needs a
baseline to compare speeds against, so it is computed here, post hoc, from
the stored tick-aligned station series.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .build import build_world
from .hazards import HazardSchedule, apply_due
from .kernel import KernelError, World
from .metrics import Recorder, sl_mobility
from .scenario import ScenarioConfig

KNOWN_BASE_VARIANTS = ("baseline", "risk")


class InvariantViolation(KernelError):
    pass


def run(world: World, horizon: int, schedule: HazardSchedule | None = None,
        observers: tuple = ()) -> dict[int, list[int]]:
    """Drive the world `horizon` ticks: step, apply due hazards, observe.

    Returns {tick: applied event indices}.  Hazards due at tick 0 apply
    before the first observation so a horizon of 0 still yields tick-0
    metrics with any initial seeding in effect.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if world.tick != 0:
        raise ValueError("run() expects a freshly built world at tick 0")
    schedule = schedule if schedule is not None else HazardSchedule([])
    events: dict[int, list[int]] = {}
    applied = apply_due(world, 0, schedule)
    if applied:
        events[0] = applied
    for observer in observers:
        observer(world)
    for _ in range(horizon):
        world.step()
        applied = apply_due(world, world.tick, schedule)
        if applied:
            events[world.tick] = applied
        for observer in observers:
            observer(world)
    return events


class InvariantMonitor:
    """Per-tick conservation and bound checks; raises on first violation.

    population partition: every alive citizen is in exactly one place, in
    transit, or in hospital; the partition plus the dead always sums to N.
    hospital occupancy: within current capacity, except that a capacity cut
    never evicts patients, so an over-capacity count may only drain.
    """

    def __init__(self, world: World):
        self.citizens = world.role_members("citizen")
        self.patients = world.role_members("patient")
        self.hospitals = world.role_members("hospital")
        self.population = len(self.citizens)
        self._previous_occ: dict[tuple[str, str], int] = {}
        self._previous_cap: dict[tuple[str, str], int | None] = {}
        self._previous_deaths = 0

    def __call__(self, world: World) -> None:
        tick = world.tick
        in_place = in_transit = hospitalized = dead = 0
        for sid in self.citizens:
            location = world.states[sid]["location"]
            if location.startswith("place:"):
                in_place += 1
            elif location == "transit":
                in_transit += 1
            elif location.startswith("hospital:"):
                hospitalized += 1
            elif location == "dead":
                dead += 1
            else:
                raise InvariantViolation(f"tick {tick}: {sid} in limbo {location!r}")
        if in_place + in_transit + hospitalized + dead != self.population:
            raise InvariantViolation(
                f"tick {tick}: population partition {in_place}+{in_transit}"
                f"+{hospitalized}+{dead} != {self.population}"
            )
        deaths = sum(
            1 for sid in self.patients if world.states[sid]["infection"] == "dead"
        )
        if deaths < self._previous_deaths:
            raise InvariantViolation(f"tick {tick}: deaths decreased")
        if self.citizens and deaths != dead:
            raise InvariantViolation(
                f"tick {tick}: dead patients {deaths} != dead citizens {dead}"
            )
        self._previous_deaths = deaths
        for hid in self.hospitals:
            state = world.states[hid]
            params = world.records[hid].params
            for occ_key, cap_key, nominal_key in (
                ("general_occupancy", "general_capacity", "nominal_general_capacity"),
                ("icu_occupancy", "icu_capacity", "nominal_icu_capacity"),
            ):
                occ = state[occ_key]
                if occ < 0 or occ > round(params[nominal_key]):
                    raise InvariantViolation(
                        f"tick {tick}: {hid} {occ_key}={occ} outside [0, nominal]"
                    )
                # admissions this tick ran against the capacity of the
                # previous tick's end; a capacity cut never evicts, so an
                # over-capacity count may persist but only drain
                previous = self._previous_occ.get((hid, occ_key), 0)
                admissible = self._previous_cap.get((hid, occ_key))
                if admissible is None:
                    admissible = state[cap_key]
                if occ > max(previous, admissible):
                    raise InvariantViolation(
                        f"tick {tick}: {hid} admitted beyond capacity "
                        f"({occ} > cap {admissible}, was {previous})"
                    )
                self._previous_occ[(hid, occ_key)] = occ
                self._previous_cap[(hid, occ_key)] = state[cap_key]


@dataclass
class RunResult:
    variant: str
    scenario: str
    seed: int
    horizon_ticks: int
    ticks_per_day: int
    config_digest: str
    samples: list = field(default_factory=list, repr=False)
    sl: dict = field(default_factory=dict, repr=False)
    deaths: list = field(default_factory=list, repr=False)
    station_speeds: dict = field(default_factory=dict, repr=False)
    applied_events: dict = field(default_factory=dict, repr=False)
    run_log: list = field(default_factory=list, repr=False)
    wall_time_s: float = 0.0

    @property
    def final_deaths(self) -> int:
        return self.deaths[-1] if self.deaths else 0


def run_variant(config: ScenarioConfig, variant: str = "risk", *,
                checks: bool = True,
                observed_roles: tuple | None = None) -> RunResult:
    """Build and run one variant of a scenario end to end."""
    world = build_world(config, variant=variant)
    if variant == "baseline":
        schedule = config.schedule().stripped()
    else:
        schedule = config.schedule()
    if observed_roles is None:
        configured = config.raw.get("observe", {}).get("subagent_roles")
        observed_roles = tuple(configured) if configured else None
    recorder = Recorder(world, observed_roles)
    observers: list = [lambda w: recorder.observe()]
    if checks:
        observers.append(InvariantMonitor(world))
    started = time.perf_counter()
    events = run(world, config.horizon_ticks, schedule, tuple(observers))
    elapsed = time.perf_counter() - started
    return RunResult(
        variant=variant,
        scenario=config.name,
        seed=config.seed,
        horizon_ticks=config.horizon_ticks,
        ticks_per_day=config.ticks_per_day,
        config_digest=config.digest,
        samples=recorder.rows,
        sl={name: series.values for name, series in recorder.sl.items()},
        deaths=recorder.deaths,
        station_speeds=recorder.station_speeds,
        applied_events=events,
        run_log=list(world.run_log),
        wall_time_s=elapsed,
    )


@dataclass
class ComparisonReport:
    scenario: str
    seed: int
    horizon_ticks: int
    ticks_per_day: int
    order: list[str]
    runs: dict[str, RunResult]
    sl_mobility: dict[str, list[float]]
    summary: dict


def run_paired(config: ScenarioConfig, variants: list[str], *,
               checks: bool = True) -> ComparisonReport:
    """Run the requested variants under one seed and assemble the report."""
    known = set(KNOWN_BASE_VARIANTS) | set(config.mitigation_names)
    for name in variants:
        if name not in known:
            raise ValueError(
                f"unknown variant {name!r}; choose from {sorted(known)}"
            )
    order = list(dict.fromkeys(variants))
    runs = {name: run_variant(config, name, checks=checks) for name in order}
    mobility: dict[str, list[float]] = {}
    baseline = runs.get("baseline")
    if baseline is not None and baseline.station_speeds:
        stations = sorted(baseline.station_speeds)
        ticks = config.horizon_ticks + 1
        for name, result in runs.items():
            series = []
            for t in range(ticks):
                series.append(sl_mobility(
                    {s: result.station_speeds[s][t] for s in stations},
                    {s: baseline.station_speeds[s][t] for s in stations},
                ))
            mobility[name] = series
    return ComparisonReport(
        scenario=config.name,
        seed=config.seed,
        horizon_ticks=config.horizon_ticks,
        ticks_per_day=config.ticks_per_day,
        order=order,
        runs=runs,
        sl_mobility=mobility,
        summary=_summarize(order, runs, mobility),
    )


def _summarize(order: list[str], runs: dict[str, RunResult],
               mobility: dict[str, list[float]]) -> dict:
    summary: dict = {"final_deaths": {}, "min_service_level": {}}
    for name in order:
        result = runs[name]
        summary["final_deaths"][name] = result.final_deaths
        minima = {}
        for system, series in sorted(result.sl.items()):
            if series:
                low = min(series)
                minima[system] = {"value": low, "tick": series.index(low)}
        if name in mobility and mobility[name]:
            low = min(mobility[name])
            minima["mobility"] = {"value": low, "tick": mobility[name].index(low)}
        summary["min_service_level"][name] = minima
    if "risk" in runs:
        risk_deaths = runs["risk"].final_deaths
        summary["deaths_delta_vs_risk"] = {
            name: runs[name].final_deaths - risk_deaths for name in order
        }
    return summary

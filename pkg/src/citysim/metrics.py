"""Observability: subagent metrics, system aggregates, service levels, deaths.

Service Level is a [0, 1] degradation index per system: 1 is full service,
0 is complete degradation.  The three system formulas are deliberately tiny
pure functions so they can be checked against hand arithmetic:

  ICT         available nodes / total nodes
  healthcare  mean over hospitals of max(0, 1 - unattended / capacity)
  mobility    mean over stations of min(speed_risk / speed_baseline, 1)

The mobility formula needs a paired baseline run; it is computed post hoc
from tick-aligned station series, never inside a single run.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .kernel import SubAgentRecord, World

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricSample:
    tick: int
    scope: str  # subagent id, system name, or "city"
    name: str
    value: float | int | str


@dataclass
class ServiceLevelSeries:
    system: str
    values: list[float] = field(default_factory=list)


# -- service level formulas --------------------------------------------------

def sl_ict(available_flags: Sequence[bool]) -> float:
    """Fraction of available infrastructure nodes (attackers excluded by caller)."""
    if not available_flags:
        raise ValueError("ICT service level needs a non-empty layer")
    return sum(1 for a in available_flags if a) / len(available_flags)


def sl_healthcare(hospitals: Sequence[tuple[float, float]]) -> float:
    """Mean per-hospital term over (unattended patients, current general capacity).

    Capacity is the current, possibly degraded bed count.  A non-positive
    capacity counts as fully degraded (term 0).
    """
    if not hospitals:
        raise ValueError("healthcare service level needs at least one hospital")
    total = 0.0
    for unattended, capacity in hospitals:
        if capacity <= 0:
            log.warning("hospital with non-positive capacity %s treated as fully degraded", capacity)
            continue
        total += max(0.0, 1.0 - unattended / capacity)
    return total / len(hospitals)


def sl_mobility(risk_speeds: Mapping[str, float],
                baseline_speeds: Mapping[str, float]) -> float:
    """Mean clamped speed ratio over common stations at one tick.

    Stations with a zero baseline speed are skipped (logged); if nothing is
    left the tick reports 1.0 so exports never carry NaN.
    """
    ratios = []
    for station in sorted(risk_speeds):
        if station not in baseline_speeds:
            continue
        base = baseline_speeds[station]
        if base <= 0:
            log.warning("station %s skipped: baseline speed %s", station, base)
            continue
        ratios.append(min(risk_speeds[station] / base, 1.0))
    if not ratios:
        return 1.0
    return sum(ratios) / len(ratios)


def city_deaths(infection_states: Iterable[str]) -> int:
    """Cumulative death count over patient infection states."""
    return sum(1 for s in infection_states if s == "dead")


# -- subagent / system observation -------------------------------------------

def observe_subagent(record: SubAgentRecord) -> list[MetricSample]:
    """Apply the role's observability function; exports only declared keys."""
    world = record.world
    fn = world.registry.rules[record.role].observe
    tick = world.tick
    samples = []
    for name, value in fn(record):
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError(f"non-finite metric {name}={value} on {record.id}")
        samples.append(MetricSample(tick, record.id, name, value))
    return samples


def aggregate_system(world: World, system: str) -> list[MetricSample]:
    """Domain-specific system rollups (registered per system)."""
    fn = world.registry.aggregators.get(system)
    if fn is None:
        return []
    return [MetricSample(world.tick, system, name, value) for name, value in fn(world)]


class Recorder:
    """Collects one run's samples, SL series and station speeds tick by tick.

    ``observed_roles`` limits which roles get per-subagent rows in the
    export; population-scale roles are covered by the system aggregates so
    exports stay a few MB instead of hundreds.
    """

    DEFAULT_ROLES = (
        "hospital", "cyber-infrastructure", "cyber-attacker",
        "roadway", "traffic-light",
    )

    def __init__(self, world: World, observed_roles: Sequence[str] | None = None):
        self.world = world
        roles = self.DEFAULT_ROLES if observed_roles is None else tuple(observed_roles)
        self._observed = [
            sid for sid in sorted(world.records)
            if world.records[sid].role in roles
        ]
        self.rows: list[MetricSample] = []
        self.sl: dict[str, ServiceLevelSeries] = {
            "ict": ServiceLevelSeries("ict"),
            "healthcare": ServiceLevelSeries("healthcare"),
        }
        self.deaths: list[int] = []
        self.station_speeds: dict[str, list[float]] = {
            sid: [] for sid in sorted(world.records)
            if world.records[sid].role == "roadway" and world.records[sid].params.get("station")
        }
        self._ict_nodes = world.role_members("cyber-infrastructure")
        self._hospitals = world.role_members("hospital")
        self._patients = world.role_members("patient")

    def observe(self) -> None:
        world = self.world
        tick = world.tick
        for sid in self._observed:
            self.rows.extend(observe_subagent(world.records[sid]))
        for system in world.layers:
            self.rows.extend(aggregate_system(world, system))
        if self._ict_nodes:
            flags = [world.states[s]["effective_available"] for s in self._ict_nodes]
            value = sl_ict(flags)
            self.sl["ict"].values.append(value)
            self.rows.append(MetricSample(tick, "ict", "service_level", value))
        if self._hospitals:
            terms = [
                (world.states[s]["unattended_this_tick"], world.states[s]["general_capacity"])
                for s in self._hospitals
            ]
            value = sl_healthcare(terms)
            self.sl["healthcare"].values.append(value)
            self.rows.append(MetricSample(tick, "healthcare", "service_level", value))
        deaths = city_deaths(world.states[s]["infection"] for s in self._patients)
        self.deaths.append(deaths)
        self.rows.append(MetricSample(tick, "city", "cumulative_deaths", deaths))
        for sid in self.station_speeds:
            self.station_speeds[sid].append(world.states[sid]["mean_speed"])

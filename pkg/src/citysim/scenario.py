"""Scenario files: one JSON document describing the whole simulated city.

Sections: landscape (nodes, roadways, places), population (districts,
timetable templates, contact fan-out), ict (node hierarchy, attackers),
health (hospitals, disease parameters), mobility (adapter, traffic
lights), hazards (time-stamped events) and mitigations (named parameter
override bundles applied on top of the risk scenario).  The seed is
explicit and mandatory; there is no implicit randomness anywhere.

Validation collects every problem it can find instead of failing fast and
returns them as a list of human-readable diagnostics.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .hazards import HazardSchedule, KINDS

TOP_SECTIONS = {
    "name", "seed", "horizon_days", "ticks_per_day",
    "landscape", "population", "ict", "health", "mobility",
    "hazards", "mitigations", "observe",
}

DISEASE_DEFAULTS = {
    "beta": 0.0,
    "p_severe": 0.0,
    "p_worsen": 0.0,
    "p_die_treated": 0.0,
    "p_die_untreated": 0.0,
    "mild_hours": [24, 48],
    "severe_hours": [24, 48],
    "critical_hours": [24, 48],
    "convalescence_hours": 168,
    "vaccination_factor": 1.0,
}


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    horizon_days: int
    ticks_per_day: int
    raw: dict
    digest: str
    path: str | None = None

    @property
    def horizon_ticks(self) -> int:
        return self.horizon_days * self.ticks_per_day

    @property
    def mitigation_names(self) -> list[str]:
        return sorted(self.raw.get("mitigations", {}))

    def schedule(self) -> HazardSchedule:
        return HazardSchedule.from_config(self.raw.get("hazards", []), self.ticks_per_day)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        raw = dict(self.raw)
        raw["seed"] = seed
        return ScenarioConfig(
            name=self.name, seed=seed, horizon_days=self.horizon_days,
            ticks_per_day=self.ticks_per_day, raw=raw, digest=self.digest,
            path=self.path,
        )


def parse_config(raw: dict, digest: str, path: str | None = None) -> tuple[ScenarioConfig | None, list[str]]:
    errors = structural_errors(raw)
    if errors:
        return None, errors
    config = ScenarioConfig(
        name=raw["name"],
        seed=int(raw["seed"]),
        horizon_days=int(raw["horizon_days"]),
        ticks_per_day=int(raw.get("ticks_per_day", 24)),
        raw=raw,
        digest=digest,
        path=path,
    )
    return config, cross_errors(config)


def load_scenario(path: str | Path) -> tuple[ScenarioConfig | None, list[str]]:
    """Parse and fully cross-validate a scenario file."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        return None, [f"cannot read {path}: {exc}"]
    try:
        raw = json.loads(blob)
    except json.JSONDecodeError as exc:
        return None, [f"{path}: invalid JSON: {exc}"]
    if not isinstance(raw, dict):
        return None, [f"{path}: top level must be an object"]
    return parse_config(raw, hashlib.sha256(blob).hexdigest(), str(path))


def structural_errors(raw: dict) -> list[str]:
    """Shape and range checks that do not need the world built."""
    errors: list[str] = []
    for key in raw:
        if key not in TOP_SECTIONS:
            errors.append(f"unknown section {key!r}")
    if "name" not in raw:
        errors.append("missing name")
    if "seed" not in raw:
        errors.append("missing seed: every scenario must pin its randomness explicitly")
    elif not isinstance(raw["seed"], int):
        errors.append("seed must be an integer")
    if "horizon_days" not in raw:
        errors.append("missing horizon_days")
    elif not isinstance(raw["horizon_days"], int) or raw["horizon_days"] < 1:
        errors.append("horizon_days must be an integer >= 1")
    if not isinstance(raw.get("ticks_per_day", 24), int) or raw.get("ticks_per_day", 24) < 1:
        errors.append("ticks_per_day must be an integer >= 1")
    if errors:
        return errors

    land = raw.get("landscape", {})
    node_ids = {n["id"] for n in land.get("nodes", []) if "id" in n}
    if len(node_ids) != len(land.get("nodes", [])):
        errors.append("landscape.nodes: duplicate or missing ids")
    roadway_ids = set()
    for i, rw in enumerate(land.get("roadways", [])):
        where = f"landscape.roadways[{i}]"
        if rw.get("id") in roadway_ids:
            errors.append(f"{where}: duplicate id {rw.get('id')!r}")
        roadway_ids.add(rw.get("id"))
        for end in ("a", "b"):
            if rw.get(end) not in node_ids:
                errors.append(f"{where}: endpoint {rw.get(end)!r} is not a landscape node")
        if rw.get("length_m", 1) <= 0 or rw.get("free_flow_mps", 1) <= 0:
            errors.append(f"{where}: length_m and free_flow_mps must be positive")
        if rw.get("capacity", 1) <= 0:
            errors.append(f"{where}: capacity must be positive")
    place_ids = set()
    for i, pl in enumerate(land.get("places", [])):
        where = f"landscape.places[{i}]"
        if pl.get("id") in place_ids:
            errors.append(f"{where}: duplicate id {pl.get('id')!r}")
        place_ids.add(pl.get("id"))
        if pl.get("node") not in node_ids:
            errors.append(f"{where}: node {pl.get('node')!r} is not a landscape node")

    ict = raw.get("ict", {})
    ict_ids = set()
    for i, node in enumerate(ict.get("nodes", [])):
        where = f"ict.nodes[{i}]"
        if node.get("id") in ict_ids:
            errors.append(f"{where}: duplicate id {node.get('id')!r}")
        ict_ids.add(node.get("id"))
        if not 0.0 <= node.get("vulnerability", 0.5) <= 1.0:
            errors.append(f"{where}: vulnerability outside [0, 1]")
        if node.get("recovery_ticks", 24) < 1:
            errors.append(f"{where}: recovery_ticks must be >= 1")
    for i, node in enumerate(ict.get("nodes", [])):
        for up in node.get("depends_on", []):
            if up not in ict_ids:
                errors.append(f"ict.nodes[{i}]: depends_on {up!r} unknown")
    if _ict_cycle(ict.get("nodes", [])):
        errors.append("ict.nodes: dependency graph has a cycle")
    from .systems.ict import ATTACK_TYPES
    for i, atk in enumerate(ict.get("attackers", [])):
        where = f"ict.attackers[{i}]"
        if atk.get("target") not in ict_ids:
            errors.append(f"{where}: target {atk.get('target')!r} is not an ict node")
        if atk.get("attack_type") not in ATTACK_TYPES:
            errors.append(f"{where}: unknown attack type {atk.get('attack_type')!r}")

    health = raw.get("health", {})
    hospital_ids = {h.get("id") for h in health.get("hospitals", [])}
    for i, hosp in enumerate(health.get("hospitals", [])):
        where = f"health.hospitals[{i}]"
        if hosp.get("node") not in node_ids:
            errors.append(f"{where}: node {hosp.get('node')!r} is not a landscape node")
        for peer in hosp.get("referral_peers", []):
            if peer not in hospital_ids:
                errors.append(f"{where}: referral peer {peer!r} unknown")
        up = hosp.get("ict", {}).get("upstream")
        if up is not None and up not in ict_ids:
            errors.append(f"{where}: ict upstream {up!r} unknown")
        if hosp.get("general_beds", 0) < 0 or hosp.get("icu_beds", 0) < 0:
            errors.append(f"{where}: negative bed count")
    disease = {**DISEASE_DEFAULTS, **health.get("disease", {})}
    for key in ("beta", "p_severe", "p_worsen", "p_die_treated", "p_die_untreated"):
        if not 0.0 <= disease[key] <= 1.0:
            errors.append(f"health.disease.{key}: {disease[key]} outside [0, 1]")
    for key in ("mild_hours", "severe_hours", "critical_hours"):
        window = disease[key]
        if not (isinstance(window, (list, tuple)) and len(window) == 2
                and 1 <= window[0] <= window[1]):
            errors.append(f"health.disease.{key}: need [lo, hi] with 1 <= lo <= hi")

    pop = raw.get("population", {})
    templates = pop.get("timetables", {})
    jitter = pop.get("boundary_jitter_h", 1)
    for name, entries in templates.items():
        where = f"population.timetables.{name}"
        hours = [e[0] for e in entries]
        if not entries or hours[0] != 0:
            errors.append(f"{where}: first window must start at hour 0")
        if hours != sorted(hours) or len(set(hours)) != len(hours):
            errors.append(f"{where}: window starts must be strictly increasing")
        if any(not 0 <= h < 24 for h in hours):
            errors.append(f"{where}: hours must be in [0, 24)")
        elif len(hours) > 1:
            # a window must survive the jitter plus one tick in transit,
            # or citizens would miss boundaries while on the road
            gaps = [b - a for a, b in zip(hours, hours[1:])]
            gaps.append(24 + hours[0] - hours[-1])
            if min(gaps) < 2 * jitter + 2:
                errors.append(
                    f"{where}: windows narrower than {2 * jitter + 2}h cannot "
                    f"absorb a +-{jitter}h jitter plus travel time"
                )
    for name in pop.get("timetable_mix", {}):
        if name not in templates:
            errors.append(f"population.timetable_mix: unknown template {name!r}")
    kinds_available: dict[str, set[str]] = {}
    for pl in land.get("places", []):
        kinds_available.setdefault(pl.get("district"), set()).add(pl.get("kind"))
    for dname, dspec in pop.get("districts", {}).items():
        where = f"population.districts.{dname}"
        if dspec.get("citizens", 0) < 0:
            errors.append(f"{where}: negative citizen count")
        size = dspec.get("household_size", [2, 4])
        if not (isinstance(size, (list, tuple)) and len(size) == 2 and 1 <= size[0] <= size[1]):
            errors.append(f"{where}: household_size needs [lo, hi] with 1 <= lo <= hi")
        if dspec.get("citizens", 0) > 0:
            needed = {
                kind for entries in templates.values() for _, kind in entries
                if kind != "home"
            }
            missing = needed - kinds_available.get(dname, set())
            if missing and not pop.get("lockdown"):
                errors.append(f"{where}: no place of kind {sorted(missing)!r} in district")
        district_nodes = [n for n in land.get("nodes", []) if n.get("district") == dname]
        if dspec.get("citizens", 0) > 0 and not district_nodes:
            errors.append(f"{where}: district has no landscape nodes to host homes")

    mob = raw.get("mobility", {})
    if mob and mob.get("adapter", "reference") != "reference":
        errors.append(f"mobility.adapter: unknown adapter {mob.get('adapter')!r}")
    for i, light in enumerate(mob.get("traffic_lights", [])):
        where = f"mobility.traffic_lights[{i}]"
        for rid in light.get("roadways", []):
            if rid not in roadway_ids:
                errors.append(f"{where}: roadway {rid!r} unknown")
        up = light.get("ict", {}).get("upstream")
        if up is not None and up not in ict_ids:
            errors.append(f"{where}: ict upstream {up!r} unknown")
        if light.get("node") is not None and light.get("node") not in node_ids:
            errors.append(f"{where}: node {light.get('node')!r} unknown")

    for i, ev in enumerate(raw.get("hazards", [])):
        where = f"hazards[{i}]"
        if ev.get("kind") not in KINDS:
            errors.append(f"{where}: unknown kind {ev.get('kind')!r}")
        if "tick" not in ev and "day" not in ev:
            errors.append(f"{where}: needs a trigger tick or day")
        trigger = ev.get("tick", ev.get("day", 0))
        if not isinstance(trigger, int) or trigger < 0:
            errors.append(f"{where}: trigger must be a non-negative integer")

    for name, bundle in raw.get("mitigations", {}).items():
        if name in ("baseline", "risk"):
            errors.append(f"mitigations.{name}: reserved variant name")
        for i, op in enumerate(bundle):
            where = f"mitigations.{name}[{i}]"
            if op.get("op") not in ("scale", "set"):
                errors.append(f"{where}: op must be scale or set")
            if "param" not in op or "selector" not in op:
                errors.append(f"{where}: needs selector and param")

    return errors


def cross_errors(config: ScenarioConfig) -> list[str]:
    """Checks that need the world actually built: selector resolution,
    override parameter existence, per-role parameter validation."""
    from . import hazards
    from .build import build_world
    from .kernel import BuildError

    errors: list[str] = []
    try:
        world = build_world(config, variant="risk")
    except (BuildError, ValueError) as exc:
        return [f"build: {exc}"]
    errors.extend(hazards.validate(config.schedule(), world))
    for name, bundle in config.raw.get("mitigations", {}).items():
        for i, op in enumerate(bundle):
            where = f"mitigations.{name}[{i}]"
            targets = hazards.resolve_selector(world, op["selector"])
            if not targets:
                errors.append(f"{where}: selector {op['selector']!r} matches no subagent")
                continue
            missing = [s for s in targets if op["param"] not in world.records[s].params]
            if missing:
                errors.append(f"{where}: param {op['param']!r} not on {missing[0]!r}")
            if op["op"] == "scale" and not isinstance(op.get("value"), (int, float)):
                errors.append(f"{where}: scale value must be numeric")
    roles = config.raw.get("observe", {}).get("subagent_roles")
    if roles:
        known = set(world.registry.rules)
        for role in roles:
            if role not in known:
                errors.append(f"observe.subagent_roles: unknown role {role!r}")
    return errors


def _ict_cycle(nodes: list[dict]) -> bool:
    deps = {n.get("id"): list(n.get("depends_on", [])) for n in nodes}
    state: dict[str, int] = {}

    def visit(nid: str) -> bool:
        if state.get(nid) == 1:
            return True
        if state.get(nid) == 2:
            return False
        state[nid] = 1
        for up in deps.get(nid, ()):
            if up in deps and visit(up):
                return True
        state[nid] = 2
        return False

    return any(visit(nid) for nid in deps)

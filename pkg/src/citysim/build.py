"""World construction from a validated scenario.

Every functional entity becomes an agent made of one subagent per system
it participates in; subagent ids are "<agent>::<system>".  Citizens get a
social, healthcare (patient), mobility (passenger) and urban-landscape
(moving entity) subagent; hospitals and traffic lights embed their own
ICT node as a leaf depending on their district node.  Homes are generated
per household and cycle over the district's street nodes.

Per-citizen randomness used at build time (timetable jitter, workplace
binding, template choice) is drawn from the citizen's own stream, so a
citizen's schedule depends only on (seed, citizen id), never on how many
citizens exist or in what order they were created.
"""

from __future__ import annotations

from .federation import ADAPTERS
from .hazards import resolve_selector
from .kernel import BuildError, World
from .rng import Stream
from .routing import StreetGraph
from .scenario import DISEASE_DEFAULTS, ScenarioConfig
from .systems import default_registry

VARIANT_BASELINE = "baseline"
VARIANT_RISK = "risk"


def subagent_id(agent_id: str, system: str) -> str:
    return f"{agent_id}::{system}"


def build_world(config: ScenarioConfig, variant: str = VARIANT_RISK) -> World:
    """Instantiate all agents, layers and services for one scenario variant.

    baseline and risk share the same world; a mitigation variant applies
    its override bundle to the assembled parameters before initial states
    are derived, mirroring how the alternative would be provisioned up
    front in the real city.
    """
    registry = default_registry()
    world = World(config.seed, registry)
    raw = config.raw

    land = raw.get("landscape", {})
    nodes = {n["id"]: n for n in land.get("nodes", [])}
    place_nodes: dict[str, str] = {}

    ict = raw.get("ict", {})
    for node in ict.get("nodes", []):
        world.add_agent(node["id"], [(
            subagent_id(node["id"], "ict"), "ict", "cyber-infrastructure", {
                "vulnerability": node.get("vulnerability", 0.5),
                "recovery_ticks": node.get("recovery_ticks", 24),
                "service_capacity": node.get("service_capacity", 1.0),
                "district": node.get("district"),
            })])
    for atk in ict.get("attackers", []):
        params = {
            "target": subagent_id(atk["target"], "ict"),
            "attack_type": atk["attack_type"],
            "district": atk.get("district"),
        }
        if "propagation_probability" in atk:
            params["propagation_probability"] = atk["propagation_probability"]
        world.add_agent(atk["id"], [(
            subagent_id(atk["id"], "ict"), "ict", "cyber-attacker", params)])

    health = raw.get("health", {})
    disease = {**DISEASE_DEFAULTS, **health.get("disease", {})}
    hospitals = health.get("hospitals", [])
    for hosp in hospitals:
        hid = hosp["id"]
        members = [(
            subagent_id(hid, "healthcare"), "healthcare", "hospital", {
                "nominal_general_capacity": hosp["general_beds"],
                "nominal_icu_capacity": hosp["icu_beds"],
                "base_care_quality": hosp.get("care_quality", 1.0),
                "referral_peers": [
                    subagent_id(p, "healthcare") for p in hosp.get("referral_peers", [])
                ],
                "district": hosp.get("district"),
                "capacity_degradation_factor": hosp.get("capacity_degradation_factor", 0.5),
                "quality_degradation_factor": hosp.get("quality_degradation_factor", 0.75),
            })]
        ict_spec = hosp.get("ict")
        if ict_spec is not None:
            members.append((
                subagent_id(hid, "ict"), "ict", "cyber-infrastructure", {
                    "vulnerability": ict_spec.get("vulnerability", 0.5),
                    "recovery_ticks": ict_spec.get("recovery_ticks", 24),
                    "service_capacity": ict_spec.get("service_capacity", 1.0),
                    "district": hosp.get("district"),
                }))
        members.append((
            subagent_id(hid, "urban_landscape"), "urban_landscape", "place", {
                "place_id": hid,
                "kind": "hospital",
                "node": hosp["node"],
                "district": hosp.get("district"),
                "capacity": None,
            }))
        world.add_agent(hid, members)
        place_nodes[hid] = hosp["node"]

    mobility = raw.get("mobility", {})
    for light in mobility.get("traffic_lights", []):
        lid = light["id"]
        members = [(
            subagent_id(lid, "mobility"), "mobility", "traffic-light", {
                "roadways": [subagent_id(r, "mobility") for r in light.get("roadways", [])],
                "district": light.get("district"),
            })]
        ict_spec = light.get("ict")
        if ict_spec is not None:
            members.append((
                subagent_id(lid, "ict"), "ict", "cyber-infrastructure", {
                    "vulnerability": ict_spec.get("vulnerability", 0.5),
                    "recovery_ticks": ict_spec.get("recovery_ticks", 24),
                    "service_capacity": ict_spec.get("service_capacity", 1.0),
                    "district": light.get("district"),
                }))
        members.append((
            subagent_id(lid, "urban_landscape"), "urban_landscape", "fixed-entity", {
                "node": light.get("node"),
                "district": light.get("district"),
            }))
        world.add_agent(lid, members)

    for rw in land.get("roadways", []):
        rid = rw["id"]
        world.add_agent(rid, [
            (subagent_id(rid, "mobility"), "mobility", "roadway", {
                "a": rw["a"], "b": rw["b"],
                "length_m": rw["length_m"],
                "free_flow_mps": rw["free_flow_mps"],
                "capacity": rw["capacity"],
                "station": bool(rw.get("station", False)),
                "district": rw.get("district"),
            }),
            (subagent_id(rid, "urban_landscape"), "urban_landscape", "street", {
                "a": rw["a"], "b": rw["b"], "district": rw.get("district"),
            }),
        ])

    for pl in land.get("places", []):
        world.add_agent(pl["id"], [(
            subagent_id(pl["id"], "urban_landscape"), "urban_landscape", "place", {
                "place_id": pl["id"],
                "kind": pl.get("kind", "generic"),
                "node": pl["node"],
                "district": pl.get("district"),
                "capacity": pl.get("capacity"),
            })])
        place_nodes[pl["id"]] = pl["node"]

    _build_population(world, config, disease, hospitals, nodes, land, place_nodes)

    # layer edges, declared after all endpoints exist
    for node in ict.get("nodes", []):
        for up in node.get("depends_on", []):
            world.add_edge("ict", subagent_id(node["id"], "ict"),
                           subagent_id(up, "ict"), "depends_on")
    for hosp in hospitals:
        ict_spec = hosp.get("ict")
        if ict_spec is not None and ict_spec.get("upstream"):
            world.add_edge("ict", subagent_id(hosp["id"], "ict"),
                           subagent_id(ict_spec["upstream"], "ict"), "depends_on")
        for peer in hosp.get("referral_peers", []):
            world.add_edge("healthcare", subagent_id(hosp["id"], "healthcare"),
                           subagent_id(peer, "healthcare"), "refers")
    for light in mobility.get("traffic_lights", []):
        ict_spec = light.get("ict")
        if ict_spec is not None and ict_spec.get("upstream"):
            world.add_edge("ict", subagent_id(light["id"], "ict"),
                           subagent_id(ict_spec["upstream"], "ict"), "depends_on")
        for rid in light.get("roadways", []):
            world.add_edge("mobility", subagent_id(light["id"], "mobility"),
                           subagent_id(rid, "mobility"), "controls")
    for atk in ict.get("attackers", []):
        world.add_edge("ict", subagent_id(atk["id"], "ict"),
                       subagent_id(atk["target"], "ict"), "attacks")

    if variant not in (VARIANT_BASELINE, VARIANT_RISK):
        _apply_mitigation(world, config, variant)

    world.finalize()
    _attach_services(world, config, land, mobility, place_nodes)
    return world


def _build_population(world: World, config: ScenarioConfig, disease: dict,
                      hospitals: list[dict], nodes: dict, land: dict,
                      place_nodes: dict[str, str]) -> None:
    pop = config.raw.get("population", {})
    templates = pop.get("timetables", {})
    mix = pop.get("timetable_mix") or {name: 1.0 for name in sorted(templates)}
    contact_k = pop.get("contact_k", 3)
    jitter = pop.get("boundary_jitter_h", 1)
    lockdown = bool(pop.get("lockdown", False))
    hospital_of_district = {
        h.get("district"): subagent_id(h["id"], "healthcare") for h in hospitals
    }
    places_by_kind: dict[str | None, dict[str, list[str]]] = {}
    for pl in land.get("places", []):
        places_by_kind.setdefault(pl.get("district"), {}).setdefault(
            pl.get("kind", "generic"), []).append(pl["id"])
    for district in places_by_kind.values():
        for kind in district.values():
            kind.sort()

    for district in sorted(pop.get("districts", {})):
        dspec = pop["districts"][district]
        count = dspec.get("citizens", 0)
        if count == 0:
            continue
        lo, hi = dspec.get("household_size", [2, 4])
        district_nodes = sorted(
            nid for nid, n in nodes.items() if n.get("district") == district
        )
        hh_rng = Stream(config.seed, f"population:{district}").at(0, "households")
        sizes: list[int] = []
        remaining = count
        while remaining > 0:
            size = min(hh_rng.randint(lo, hi), remaining)
            sizes.append(size)
            remaining -= size
        home_hospital = hospital_of_district.get(district)
        index = 0
        for hh_index, size in enumerate(sizes):
            home_id = f"home_{district}_{hh_index}"
            home_node = district_nodes[hh_index % len(district_nodes)]
            world.add_agent(home_id, [(
                subagent_id(home_id, "urban_landscape"), "urban_landscape", "place", {
                    "place_id": home_id, "kind": "home", "node": home_node,
                    "district": district, "capacity": None,
                })])
            place_nodes[home_id] = home_node
            members = [f"cit_{district}_{index + j}" for j in range(size)]
            for j, agent_id in enumerate(members):
                household = [
                    subagent_id(m, "social") for m in members if m != agent_id
                ]
                schedule = _build_schedule(
                    config.seed, agent_id, templates, mix, jitter, lockdown,
                    home_id, places_by_kind.get(district, {}),
                )
                patient_params = dict(disease)
                patient_params.update(
                    home_hospital=home_hospital, district=district,
                    vaccinated=False, initially_infected=False,
                )
                world.add_agent(agent_id, [
                    (subagent_id(agent_id, "social"), "social", "citizen", {
                        "home_place": home_id, "district": district,
                        "household": household, "contact_k": contact_k,
                        "schedule": schedule,
                    }),
                    (subagent_id(agent_id, "healthcare"), "healthcare", "patient",
                     patient_params),
                    (subagent_id(agent_id, "mobility"), "mobility", "passenger", {
                        "district": district,
                    }),
                    (subagent_id(agent_id, "urban_landscape"), "urban_landscape",
                     "moving-entity", {"home_place": home_id, "district": district}),
                ])
            index += size


def _build_schedule(seed: int, agent_id: str, templates: dict, mix: dict,
                    jitter: int, lockdown: bool, home_id: str,
                    kinds: dict[str, list[str]]) -> list[tuple[str, str]]:
    """24-entry (place, activity) array from a template plus seeded jitter."""
    if lockdown or not templates:
        return [(home_id, "home")] * 24
    rng = Stream(seed, subagent_id(agent_id, "social")).at(0, "timetable")
    names = sorted(mix)
    total = sum(mix[n] for n in names)
    u = rng.random() * total
    acc = 0.0
    template_name = names[-1]
    for name in names:
        acc += mix[name]
        if u < acc:
            template_name = name
            break
    windows = templates[template_name]
    boundaries: list[tuple[int, str]] = []
    previous = -1
    for hour, kind in windows:
        if hour == 0:
            jittered = 0
        else:
            jittered = max(previous + 1, min(23, hour + rng.randint(-jitter, jitter)))
        boundaries.append((jittered, kind))
        previous = jittered
    binding: dict[str, str] = {"home": home_id}
    for _, kind in boundaries:
        if kind not in binding:
            options = kinds.get(kind, [])
            binding[kind] = options[rng.randint(0, len(options) - 1)] if options else home_id
    schedule: list[tuple[str, str]] = []
    pointer = 0
    for hour in range(24):
        while pointer + 1 < len(boundaries) and boundaries[pointer + 1][0] <= hour:
            pointer += 1
        kind = boundaries[pointer][1]
        schedule.append((binding[kind], kind))
    return schedule


def _apply_mitigation(world: World, config: ScenarioConfig, variant: str) -> None:
    bundle = config.raw.get("mitigations", {}).get(variant)
    if bundle is None:
        raise BuildError(
            f"unknown variant {variant!r}; declared mitigations: {config.mitigation_names}"
        )
    for i, op in enumerate(bundle):
        targets = resolve_selector(world, op["selector"])
        if not targets:
            raise BuildError(f"mitigations.{variant}[{i}]: selector matches nothing")
        for sid in targets:
            params = world.records[sid].params
            name = op["param"]
            if name not in params:
                raise BuildError(
                    f"mitigations.{variant}[{i}]: {sid!r} has no parameter {name!r}"
                )
            if op["op"] == "scale":
                params[name] = params[name] * op["value"]
            else:
                params[name] = op["value"]


def _attach_services(world: World, config: ScenarioConfig, land: dict,
                     mobility: dict, place_nodes: dict[str, str]) -> None:
    roadways = land.get("roadways", [])
    if not mobility and not roadways:
        return
    graph = StreetGraph()
    network: dict = {"roadways": {}, "lights": []}
    controlled: dict[str, list[str]] = {}
    for light in mobility.get("traffic_lights", []):
        lid = subagent_id(light["id"], "mobility")
        network["lights"].append(lid)
        for rid in light.get("roadways", []):
            controlled.setdefault(subagent_id(rid, "mobility"), []).append(lid)
    for rw in roadways:
        rid = subagent_id(rw["id"], "mobility")
        cost = rw["length_m"] / rw["free_flow_mps"]
        graph.add_roadway(rid, rw["a"], rw["b"], cost)
        network["roadways"][rid] = {
            "free_flow_mps": rw["free_flow_mps"],
            "capacity": rw["capacity"],
            "lights": sorted(controlled.get(rid, [])),
        }
    graph.finalize()
    adapter_cls = ADAPTERS[mobility.get("adapter", "reference")]
    adapter = adapter_cls(
        v_min_frac=mobility.get("v_min_frac", 0.1),
        light_off_factor=mobility.get("light_off_factor", 0.4),
    )
    adapter.initialize(network, config.seed)
    world.services["traffic"] = adapter
    world.services["street_graph"] = graph
    world.services["place_nodes"] = dict(place_nodes)

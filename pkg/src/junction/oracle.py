"""Ground-truth conflict detection: pairwise predicate, priority order, wait schedule.

Decision rules, in order:
  * conflict potential — same heading never conflicts; opposite headings conflict
    only when a left turn is involved; perpendicular headings always conflict.
    A potential conflict is real when the two arrival times fall within the
    configured time window.
  * priority — earlier arrival wins outside the tie window; inside it, through
    beats right beats left; remaining ties go to the vehicle approaching from
    the other's right, then to the lexicographically smaller id.
  * waits — vehicles enter in priority order; a yielding vehicle may enter only
    a clearance gap after every conflicting higher-priority vehicle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cmp_to_key
from typing import Any

from .errors import ParseError
from .layout import IntersectionLayout, Movement
from .scenario import Scenario, Vehicle, arrival_time

PLACE = "intersection"

_MOVEMENT_RANK = {Movement.THROUGH: 0, Movement.RIGHT: 1, Movement.LEFT: 2}


@dataclass(frozen=True)
class OracleConfig:
    time_window_s: float = 5.0
    tie_epsilon_s: float = 0.5
    clearance_gap_s: float = 3.0

    def __post_init__(self) -> None:
        if self.time_window_s <= 0:
            raise ValueError("time_window_s must be > 0")
        if self.tie_epsilon_s < 0 or self.clearance_gap_s < 0:
            raise ValueError("tie_epsilon_s and clearance_gap_s must be >= 0")


@dataclass(frozen=True)
class ConflictPair:
    """An unordered conflict, serialized losing vehicle first."""

    vehicle1_id: str
    vehicle2_id: str
    place: str = PLACE


@dataclass(frozen=True)
class ConflictAnalysis:
    is_conflict: bool
    conflict_vehicles: tuple[ConflictPair, ...]
    decisions: tuple[str, ...]
    priority_order: dict[str, int]
    waiting_times: dict[str, int]

    @property
    def number_of_conflicts(self) -> int:
        return len(self.conflict_vehicles)

    @property
    def places_of_conflicts(self) -> tuple[str, ...]:
        return tuple(pair.place for pair in self.conflict_vehicles)


def conflict_potential(a: Vehicle, b: Vehicle, layout: IntersectionLayout) -> bool:
    """Geometric path-crossing potential, ignoring timing."""
    if a.direction is b.direction:
        return False
    move_a = layout.classify_movement(a.direction, a.destination)
    move_b = layout.classify_movement(b.direction, b.destination)
    if a.direction is b.direction.opposite:
        return Movement.LEFT in (move_a, move_b)
    return True  # perpendicular approaches


def pairwise_conflict(
    a: Vehicle, b: Vehicle, layout: IntersectionLayout, cfg: OracleConfig
) -> bool:
    if not conflict_potential(a, b, layout):
        return False
    gap = abs(arrival_time(a).arrival_time_s - arrival_time(b).arrival_time_s)
    return gap <= cfg.time_window_s


def priority_compare(
    a: Vehicle, b: Vehicle, layout: IntersectionLayout, cfg: OracleConfig
) -> int:
    """Negative when a outranks b, positive when b outranks a, 0 only for identical ids."""
    if a.vehicle_id == b.vehicle_id:
        return 0
    t_a = arrival_time(a).arrival_time_s
    t_b = arrival_time(b).arrival_time_s
    if abs(t_a - t_b) > cfg.tie_epsilon_s:
        return -1 if t_a < t_b else 1
    rank_a = _MOVEMENT_RANK[layout.classify_movement(a.direction, a.destination)]
    rank_b = _MOVEMENT_RANK[layout.classify_movement(b.direction, b.destination)]
    if rank_a != rank_b:
        return -1 if rank_a < rank_b else 1
    # Right-hand rule: the vehicle approaching from the other's right goes first.
    if a.direction is b.direction.left_turn:
        return -1
    if b.direction is a.direction.left_turn:
        return 1
    return -1 if a.vehicle_id < b.vehicle_id else 1


def rank_vehicles(
    scenario: Scenario, layout: IntersectionLayout, cfg: OracleConfig
) -> dict[str, int]:
    """Total priority ranking 1..n over all scenario vehicles."""
    ordered = sorted(
        scenario.vehicles,
        key=cmp_to_key(lambda x, y: priority_compare(x, y, layout, cfg)),
    )
    return {v.vehicle_id: rank for rank, v in enumerate(ordered, start=1)}


def schedule_waits(
    scenario: Scenario,
    conflicts: list[ConflictPair] | tuple[ConflictPair, ...],
    priority_order: dict[str, int],
    cfg: OracleConfig,
) -> dict[str, int]:
    """Whole-second waits: entry = max(own arrival, conflicting predecessors + gap)."""
    times = {v.vehicle_id: arrival_time(v).arrival_time_s for v in scenario.vehicles}
    neighbors: dict[str, set[str]] = {vid: set() for vid in times}
    for pair in conflicts:
        neighbors[pair.vehicle1_id].add(pair.vehicle2_id)
        neighbors[pair.vehicle2_id].add(pair.vehicle1_id)
    entry: dict[str, float] = {}
    waits: dict[str, int] = {}
    for vid in sorted(times, key=lambda v: priority_order[v]):
        earliest = times[vid]
        for other in neighbors[vid]:
            if priority_order[other] < priority_order[vid]:
                earliest = max(earliest, entry[other] + cfg.clearance_gap_s)
        entry[vid] = earliest
        waits[vid] = int(math.floor(earliest - times[vid] + 0.5))  # round half up
    return waits


def analyze(
    scenario: Scenario, layout: IntersectionLayout, cfg: OracleConfig | None = None
) -> ConflictAnalysis:
    cfg = cfg if cfg is not None else OracleConfig()
    vehicles = scenario.vehicles
    ranks = rank_vehicles(scenario, layout, cfg)
    pairs: list[ConflictPair] = []
    decisions: list[str] = []
    for i in range(len(vehicles)):
        for j in range(i + 1, len(vehicles)):
            if not pairwise_conflict(vehicles[i], vehicles[j], layout, cfg):
                continue
            a, b = vehicles[i], vehicles[j]
            loser, winner = (a, b) if ranks[a.vehicle_id] > ranks[b.vehicle_id] else (b, a)
            pairs.append(ConflictPair(loser.vehicle_id, winner.vehicle_id))
            decisions.append(
                f"Potential conflict: Vehicle {loser.vehicle_id} must yield to "
                f"Vehicle {winner.vehicle_id}"
            )
    waits = schedule_waits(scenario, pairs, ranks, cfg)
    by_rank = sorted(ranks, key=lambda vid: ranks[vid])
    return ConflictAnalysis(
        is_conflict=bool(pairs),
        conflict_vehicles=tuple(pairs),
        decisions=tuple(decisions),
        priority_order={vid: ranks[vid] for vid in by_rank},
        waiting_times={vid: waits[vid] for vid in by_rank},
    )


def analysis_to_obj(analysis: ConflictAnalysis) -> dict[str, Any]:
    return {
        "is_conflict": "yes" if analysis.is_conflict else "no",
        "number_of_conflicts": analysis.number_of_conflicts,
        "places_of_conflicts": list(analysis.places_of_conflicts),
        "conflict_vehicles": [
            {"vehicle1_id": p.vehicle1_id, "vehicle2_id": p.vehicle2_id}
            for p in analysis.conflict_vehicles
        ],
        "decisions": list(analysis.decisions),
        "priority_order": dict(analysis.priority_order),
        "waiting_times": dict(analysis.waiting_times),
    }


def emit_analysis(analysis: ConflictAnalysis) -> str:
    return json.dumps(analysis_to_obj(analysis), indent=2)


def analysis_from_obj(doc: Any) -> ConflictAnalysis:
    if not isinstance(doc, dict):
        raise ParseError("analysis document must be a JSON object")
    try:
        flag = doc["is_conflict"]
        pairs = tuple(
            ConflictPair(p["vehicle1_id"], p["vehicle2_id"])
            for p in doc["conflict_vehicles"]
        )
        analysis = ConflictAnalysis(
            is_conflict=(flag == "yes"),
            conflict_vehicles=pairs,
            decisions=tuple(doc["decisions"]),
            priority_order={k: int(v) for k, v in doc["priority_order"].items()},
            waiting_times={k: int(v) for k, v in doc["waiting_times"].items()},
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"analysis document is missing or mistypes a field: {exc}") from exc
    if flag not in ("yes", "no"):
        raise ParseError(f"is_conflict must be 'yes' or 'no', got {flag!r}")
    return analysis


def parse_analysis(text: str) -> ConflictAnalysis:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"analysis document is not valid JSON: {exc}") from exc
    return analysis_from_obj(doc)


def render_report(analysis: ConflictAnalysis) -> str:
    """Five-section textual report mirrored by controller.parse_report."""
    if analysis.is_conflict:
        status = "**Conflict Status**: Conflict detected."
        involved = ", ".join(
            f"Vehicle {p.vehicle1_id} and Vehicle {p.vehicle2_id}"
            for p in analysis.conflict_vehicles
        )
        overview = (
            f"**Conflicts Overview**: Number of conflicts: "
            f"{analysis.number_of_conflicts}. Involved vehicles: {involved}."
        )
        actions = "**Actions & Decisions**: Decisions: " + ", ".join(analysis.decisions)
    else:
        status = "**Conflict Status**: No conflict detected."
        overview = (
            "**Conflicts Overview**: Number of conflicts: 0. Involved vehicles: none."
        )
        actions = "**Actions & Decisions**: Decisions: none."
    priorities = (
        "**Priority Assignment**: "
        + ", ".join(
            f"Vehicle {vid}: Priority {rank}"
            for vid, rank in analysis.priority_order.items()
        )
        + "."
    )
    waits = "**Vehicle Waiting Times**:\n" + "\n".join(
        f"- Vehicle {vid}: {seconds} seconds"
        for vid, seconds in analysis.waiting_times.items()
    )
    return "\n".join([status, overview, actions, priorities, waits])

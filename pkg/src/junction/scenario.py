"""Vehicle records, scenario validation, seeded generation, and textualization."""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Mapping

from .errors import GenerationError, ParseError, ValidationError
from .layout import Direction, IntersectionLayout

if TYPE_CHECKING:  # pragma: no cover
    from .oracle import ConflictAnalysis, OracleConfig

VEHICLE_ID_PATTERN = re.compile(r"^V\d{1,6}$")

KMH_PER_MS = 3.6


@dataclass(frozen=True)
class Vehicle:
    vehicle_id: str
    lane: int
    speed: float  # km/h
    distance_to_intersection: float  # meters
    direction: Direction
    destination: str


@dataclass(frozen=True)
class ArrivalEstimate:
    vehicle_id: str
    arrival_time_s: float


@dataclass(frozen=True)
class Scenario:
    vehicles: tuple[Vehicle, ...]

    def __post_init__(self) -> None:
        if len(self.vehicles) < 1:
            raise ValidationError("a scenario needs at least one vehicle")
        ids = [v.vehicle_id for v in self.vehicles]
        if len(set(ids)) != len(ids):
            dupe = next(i for i in ids if ids.count(i) > 1)
            raise ValidationError(f"duplicate vehicle_id {dupe} in scenario")

    def vehicle_ids(self) -> tuple[str, ...]:
        return tuple(v.vehicle_id for v in self.vehicles)


@dataclass(frozen=True)
class GenParams:
    """Knobs for the seeded scenario generator."""

    vehicle_count_range: tuple[int, int] = (2, 8)
    speed_range_kmh: tuple[float, float] = (20.0, 80.0)
    distance_range_m: tuple[float, float] = (50.0, 450.0)
    conflict_balance: float | None = None
    seed: int = 0

    def validate(self) -> None:
        lo, hi = self.vehicle_count_range
        if lo < 1 or hi < lo:
            raise ValidationError(f"vehicle count range {self.vehicle_count_range} is empty")
        for name, (a, b) in (
            ("speed_range_kmh", self.speed_range_kmh),
            ("distance_range_m", self.distance_range_m),
        ):
            if not (a < b) or a <= 0:
                raise ValidationError(f"{name} must satisfy 0 < lo < hi, got ({a}, {b})")
        if self.conflict_balance is not None and not 0.0 <= self.conflict_balance <= 1.0:
            raise ValidationError(f"conflict_balance must be in [0,1], got {self.conflict_balance}")


def validate_vehicle(raw: Mapping[str, Any], layout: IntersectionLayout) -> Vehicle:
    """Turn a raw record into a Vehicle, or raise a field-naming ValidationError."""
    vid = raw.get("vehicle_id")
    if not isinstance(vid, str) or not VEHICLE_ID_PATTERN.match(vid):
        raise ValidationError(f"vehicle_id must match V<1-6 digits>, got {vid!r}")

    lane_raw = raw.get("lane")
    try:
        lane = int(lane_raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{vid}: lane must be an integer, got {lane_raw!r}") from None
    if lane < 1 or lane > 8:
        raise ValidationError(f"{vid}: unknown lane {lane}; lanes are 1..8")

    speed = _positive_number(vid, "speed", raw.get("speed"))
    distance = _positive_number(
        vid, "distance_to_intersection", raw.get("distance_to_intersection")
    )

    direction_raw = raw.get("direction")
    try:
        direction = Direction(direction_raw)
    except ValueError:
        raise ValidationError(f"{vid}: unknown direction {direction_raw!r}") from None
    if layout.direction_of(lane) is not direction:
        raise ValidationError(
            f"{vid}: lane {lane} binds direction {layout.direction_of(lane).value}, "
            f"got {direction.value}"
        )

    destination = raw.get("destination")
    if not isinstance(destination, str) or not layout.lane_permits(lane, destination):
        raise ValidationError(
            f"{vid}: destination {destination!r} not permitted from lane {lane} "
            f"(reachable: {', '.join(layout.destinations_for(lane))})"
        )

    return Vehicle(
        vehicle_id=vid,
        lane=lane,
        speed=speed,
        distance_to_intersection=distance,
        direction=direction,
        destination=destination,
    )


def _positive_number(vid: str, name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{vid}: {name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{vid}: {name} must be finite and > 0, got {value}")
    return value


def arrival_time(vehicle: Vehicle) -> ArrivalEstimate:
    """Unimpeded arrival time in seconds: distance over speed converted to m/s."""
    seconds = vehicle.distance_to_intersection / (vehicle.speed / KMH_PER_MS)
    return ArrivalEstimate(vehicle_id=vehicle.vehicle_id, arrival_time_s=seconds)


def generate_scenario(
    params: GenParams,
    layout: IntersectionLayout,
    rng: random.Random | None = None,
) -> Scenario:
    """Draw one scenario; a pure function of (params, seed) when rng is omitted."""
    params.validate()
    rng = rng if rng is not None else random.Random(params.seed)
    count = rng.randint(*params.vehicle_count_range)
    used_ids: set[str] = set()
    vehicles = []
    directions = list(Direction)
    for _ in range(count):
        direction = rng.choice(directions)
        lane = rng.choice(layout.lanes_for(direction))
        destination = rng.choice(layout.destinations_for(lane))
        speed = rng.uniform(*params.speed_range_kmh)
        distance = rng.uniform(*params.distance_range_m)
        while True:
            vid = f"V{rng.randrange(10000):04d}"
            if vid not in used_ids:
                used_ids.add(vid)
                break
        vehicles.append(
            Vehicle(
                vehicle_id=vid,
                lane=lane,
                speed=speed,
                distance_to_intersection=distance,
                direction=direction,
                destination=destination,
            )
        )
    return Scenario(vehicles=tuple(vehicles))


def generate_dataset(
    params: GenParams,
    n: int,
    layout: IntersectionLayout,
    cfg: "OracleConfig | None" = None,
) -> list[tuple[Scenario, "ConflictAnalysis"]]:
    """Generate n labeled scenarios, optionally rejection-sampled to a conflict balance.

    Per-item seeds are derived as ``params.seed + attempt_index``, so batches are
    reproducible and can be regenerated independently.
    """
    from .oracle import OracleConfig, analyze  # deferred: oracle depends on this module

    params.validate()
    if n < 1:
        raise ValidationError(f"dataset size must be >= 1, got {n}")
    cfg = cfg if cfg is not None else OracleConfig()

    def draw(k: int) -> tuple[Scenario, "ConflictAnalysis"]:
        scenario = generate_scenario(params, layout, rng=random.Random(params.seed + k))
        return scenario, analyze(scenario, layout, cfg)

    if params.conflict_balance is None:
        return [draw(k) for k in range(n)]

    pos_target = round(params.conflict_balance * n)
    neg_target = n - pos_target
    budget = 100 * n
    items: list[tuple[Scenario, "ConflictAnalysis"]] = []
    pos = neg = 0
    for k in range(budget):
        if len(items) == n:
            break
        scenario, analysis = draw(k)
        if analysis.is_conflict and pos < pos_target:
            items.append((scenario, analysis))
            pos += 1
        elif not analysis.is_conflict and neg < neg_target:
            items.append((scenario, analysis))
            neg += 1
    if len(items) < n:
        achieved = pos / len(items) if items else 0.0
        raise GenerationError(
            f"conflict balance {params.conflict_balance} unattainable within "
            f"{budget} attempts: accepted {len(items)}/{n} with positive fraction "
            f"{achieved:.3f}"
        )
    return items


def scenario_from_obj(doc: Any, layout: IntersectionLayout) -> Scenario:
    """Build a Scenario from an already-decoded document object."""
    if not isinstance(doc, dict) or "vehicles_scenario" not in doc:
        raise ParseError("scenario document must be an object with 'vehicles_scenario'")
    records = doc["vehicles_scenario"]
    if not isinstance(records, list) or not records:
        raise ParseError("'vehicles_scenario' must be a non-empty array")
    vehicles = []
    for pos, record in enumerate(records):
        if not isinstance(record, Mapping):
            raise ParseError(f"vehicles_scenario[{pos}] must be an object")
        vehicles.append(validate_vehicle(record, layout))
    return Scenario(vehicles=tuple(vehicles))


def parse_scenario(text: str, layout: IntersectionLayout) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario document is not valid JSON: {exc}") from exc
    return scenario_from_obj(doc, layout)


def scenario_to_obj(scenario: Scenario) -> dict[str, Any]:
    return {
        "vehicles_scenario": [
            {
                "vehicle_id": v.vehicle_id,
                "lane": str(v.lane),
                "speed": v.speed,
                "distance_to_intersection": v.distance_to_intersection,
                "direction": v.direction.value,
                "destination": v.destination,
            }
            for v in scenario.vehicles
        ]
    }


def emit_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_obj(scenario), indent=2)


SENTENCE_TEMPLATE = (
    "Vehicle {id} is in lane {lane}, moving {direction} at a speed of "
    "{speed:.2f} km/h, and is {distance:.2f} meters away from the intersection, "
    "heading towards {destination}."
)


def describe_scenario(scenario: Scenario) -> str:
    """One sentence per vehicle, in input order, joined by single spaces."""
    return " ".join(
        SENTENCE_TEMPLATE.format(
            id=v.vehicle_id,
            lane=v.lane,
            direction=v.direction.value,
            speed=v.speed,
            distance=v.distance_to_intersection,
            destination=v.destination,
        )
        for v in scenario.vehicles
    )

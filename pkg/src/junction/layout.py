"""Four-leg intersection topology: lanes, egress letters, and movement geometry.

Conventions (fixed for the whole package):
  * ``Direction`` is the heading of travel, so a "north" vehicle enters the
    junction from the south leg and exits on the north leg when going through.
  * Egress letters partition onto legs as north={E,F}, east={G,H},
    south={A,B}, west={C,D}.
  * Odd lanes permit through+right movements, even lanes through+left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError, ValidationError


class Direction(str, Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]

    @property
    def right_turn(self) -> "Direction":
        """Heading after a right turn (clockwise on the compass)."""
        return _CLOCKWISE[self]

    @property
    def left_turn(self) -> "Direction":
        """Heading after a left turn (counter-clockwise on the compass)."""
        return _COUNTERCW[self]

    def is_perpendicular_to(self, other: "Direction") -> bool:
        return other is not self and other is not self.opposite


_OPPOSITE = {
    Direction.NORTH: Direction.SOUTH,
    Direction.SOUTH: Direction.NORTH,
    Direction.EAST: Direction.WEST,
    Direction.WEST: Direction.EAST,
}
_CLOCKWISE = {
    Direction.NORTH: Direction.EAST,
    Direction.EAST: Direction.SOUTH,
    Direction.SOUTH: Direction.WEST,
    Direction.WEST: Direction.NORTH,
}
_COUNTERCW = {v: k for k, v in _CLOCKWISE.items()}


class Movement(str, Enum):
    THROUGH = "through"
    LEFT = "left"
    RIGHT = "right"


EGRESS_IDS = ("A", "B", "C", "D", "E", "F", "G", "H")

# Leg an egress letter sits on, named by the heading whose through-traffic exits there.
EGRESS_LEG = {
    "E": Direction.NORTH, "F": Direction.NORTH,
    "G": Direction.EAST, "H": Direction.EAST,
    "A": Direction.SOUTH, "B": Direction.SOUTH,
    "C": Direction.WEST, "D": Direction.WEST,
}

LANE_IDS = (1, 2, 3, 4, 5, 6, 7, 8)

LANE_DIRECTION = {
    1: Direction.NORTH, 2: Direction.NORTH,
    3: Direction.EAST, 4: Direction.EAST,
    5: Direction.SOUTH, 6: Direction.SOUTH,
    7: Direction.WEST, 8: Direction.WEST,
}

# Default per-lane reachable egress lists; tuple order is the canonical emission order.
_DEFAULT_DESTINATIONS = {
    1: ("F", "H"),
    2: ("E", "D", "C"),
    3: ("H", "B"),
    4: ("G", "E", "F"),
    5: ("B", "D"),
    6: ("A", "G", "H"),
    7: ("D", "F"),
    8: ("B", "C", "A"),
}


def lane_movements(lane: int) -> frozenset[Movement]:
    """Movement classes a lane is allowed to serve."""
    if lane % 2 == 1:
        return frozenset({Movement.THROUGH, Movement.RIGHT})
    return frozenset({Movement.THROUGH, Movement.LEFT})


@dataclass(frozen=True)
class LaneConfig:
    lane: int
    direction: Direction
    destinations: tuple[str, ...]


@dataclass(frozen=True)
class IntersectionLayout:
    """Validated lane configuration; immutable and safe to share."""

    lanes: tuple[LaneConfig, ...]

    def __post_init__(self) -> None:
        seen = [cfg.lane for cfg in self.lanes]
        if sorted(seen) != list(LANE_IDS):
            raise ValidationError(
                f"layout must configure each lane 1..8 exactly once, got lanes {sorted(seen)}"
            )
        object.__setattr__(
            self, "lanes", tuple(sorted(self.lanes, key=lambda cfg: cfg.lane))
        )
        for cfg in self.lanes:
            self._check_lane(cfg)

    @staticmethod
    def _check_lane(cfg: LaneConfig) -> None:
        bound = LANE_DIRECTION[cfg.lane]
        if cfg.direction is not bound:
            raise ValidationError(
                f"lane {cfg.lane} binds direction {bound.value}, got {cfg.direction.value}"
            )
        if not cfg.destinations:
            raise ValidationError(f"lane {cfg.lane} has an empty egress set")
        if len(set(cfg.destinations)) != len(cfg.destinations):
            raise ValidationError(f"lane {cfg.lane} lists a duplicate egress letter")
        entry_leg = cfg.direction.opposite
        allowed = lane_movements(cfg.lane)
        for egress in cfg.destinations:
            if EGRESS_LEG[egress] is entry_leg:
                raise ValidationError(
                    f"lane {cfg.lane}: egress {egress} is on its own entry leg (U-turn)"
                )
            move = classify_heading(cfg.direction, egress)
            if move not in allowed:
                raise ValidationError(
                    f"lane {cfg.lane}: egress {egress} needs a {move.value} movement, "
                    f"which lane {cfg.lane} does not serve"
                )

    def lanes_for(self, direction: Direction) -> tuple[int, ...]:
        return tuple(cfg.lane for cfg in self.lanes if cfg.direction is direction)

    def direction_of(self, lane: int) -> Direction:
        self._require_lane(lane)
        return LANE_DIRECTION[lane]

    def destinations_for(self, lane: int) -> tuple[str, ...]:
        self._require_lane(lane)
        return self.lanes[lane - 1].destinations

    def lane_permits(self, lane: int, destination: str) -> bool:
        return destination in self.destinations_for(lane)

    def classify_movement(self, direction: Direction, destination: str) -> Movement:
        return classify_heading(direction, destination)

    @staticmethod
    def _require_lane(lane: int) -> None:
        if lane not in LANE_DIRECTION:
            raise ValidationError(f"unknown lane {lane}; lanes are 1..8")


def classify_heading(direction: Direction, destination: str) -> Movement:
    """Movement class for a heading/egress combination, independent of lanes."""
    if destination not in EGRESS_LEG:
        raise ValidationError(f"unknown egress letter {destination!r}; letters are A..H")
    leg = EGRESS_LEG[destination]
    if leg is direction:
        return Movement.THROUGH
    if leg is direction.right_turn:
        return Movement.RIGHT
    if leg is direction.left_turn:
        return Movement.LEFT
    raise ValidationError(
        f"unreachable movement: egress {destination} is on the entry leg of "
        f"{direction.value}-bound traffic"
    )


def default_layout() -> IntersectionLayout:
    """The canonical two-lanes-per-approach layout."""
    return IntersectionLayout(
        lanes=tuple(
            LaneConfig(lane=lane, direction=LANE_DIRECTION[lane], destinations=dests)
            for lane, dests in _DEFAULT_DESTINATIONS.items()
        )
    )


# Thin functional aliases mirroring the operation names used elsewhere.

def destinations_for(layout: IntersectionLayout, lane: int) -> tuple[str, ...]:
    return layout.destinations_for(lane)


def classify_movement(
    layout: IntersectionLayout, direction: Direction, destination: str
) -> Movement:
    return layout.classify_movement(direction, destination)


def lane_permits(layout: IntersectionLayout, lane: int, destination: str) -> bool:
    return layout.lane_permits(lane, destination)


def parse_layout(text: str) -> IntersectionLayout:
    """Parse a layout document; inverse of :func:`emit_layout`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"layout document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "lanes" not in doc:
        raise ParseError("layout document must be an object with a 'lanes' array")
    raw_lanes = doc["lanes"]
    if not isinstance(raw_lanes, list):
        raise ParseError("'lanes' must be an array")
    configs = []
    for pos, entry in enumerate(raw_lanes):
        where = f"lanes[{pos}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: lane entry must be an object")
        lane = entry.get("id")
        if not isinstance(lane, int) or isinstance(lane, bool) or lane not in LANE_DIRECTION:
            raise ParseError(f"{where}: lane id must be an integer 1..8, got {lane!r}")
        direction_raw = entry.get("direction")
        try:
            direction = Direction(direction_raw)
        except ValueError:
            raise ParseError(
                f"{where}: unknown direction {direction_raw!r}"
            ) from None
        dests = entry.get("destinations")
        if not isinstance(dests, list) or not all(isinstance(d, str) for d in dests):
            raise ParseError(f"{where}: destinations must be an array of letters")
        for d in dests:
            if d not in EGRESS_LEG:
                raise ParseError(f"{where}: unknown egress letter {d!r}")
        configs.append(LaneConfig(lane=lane, direction=direction, destinations=tuple(dests)))
    return IntersectionLayout(lanes=tuple(configs))


def emit_layout(layout: IntersectionLayout) -> str:
    doc = {
        "lanes": [
            {
                "id": cfg.lane,
                "direction": cfg.direction.value,
                "destinations": list(cfg.destinations),
            }
            for cfg in layout.lanes
        ]
    }
    return json.dumps(doc, indent=2)

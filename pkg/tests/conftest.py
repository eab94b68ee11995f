import json
import random

import pytest
from hypothesis import HealthCheck, settings

from junction.layout import LANE_DIRECTION, default_layout
from junction.oracle import OracleConfig
from junction.scenario import GenParams, Scenario, Vehicle, generate_scenario

settings.register_profile(
    "ci",
    max_examples=100,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


TABLE3_SCENARIO_DOC = {
    "vehicles_scenario": [
        {
            "vehicle_id": "V7155",
            "lane": "2",
            "speed": 30.86,
            "distance_to_intersection": 88.54,
            "direction": "north",
            "destination": "D",
        },
        {
            "vehicle_id": "V6439",
            "lane": "3",
            "speed": 53.37,
            "distance_to_intersection": 107.50,
            "direction": "east",
            "destination": "B",
        },
        {
            "vehicle_id": "V5182",
            "lane": "7",
            "speed": 47.69,
            "distance_to_intersection": 94.67,
            "direction": "west",
            "destination": "D",
        },
        {
            "vehicle_id": "V2432",
            "lane": "1",
            "speed": 46.17,
            "distance_to_intersection": 74.59,
            "direction": "north",
            "destination": "H",
        },
    ]
}


# Freeform controller outputs in the style fine-tuned models actually produce:
# extra sections, missing sections, prose around the verdict.
FREEFORM_CONFLICT = (
    "**Conflict Status**: Yes **Conflict Analysis**: A conflict is detected between "
    "Vehicle V4625 and Vehicle V1909. Both vehicles are approaching the same intersection "
    "from opposite directions, and they are likely to reach the intersection at the same "
    "time due to their respective speeds and distances.\n"
    "**Recommendations**: To prevent a potential collision, it is recommended that Vehicle "
    "V1909 yield to Vehicle V4625, as V4625 has a slight advantage in distance.\n"
    "**Next Actions for Each Vehicle**: - Vehicle V4625: Continue straight towards the "
    "intersection - Vehicle V1909: Yield and prepare to adjust speed or trajectory if necessary"
)

FREEFORM_CONFLICT_LOWERCASE_IDS = (
    "**Conflict Status**: Yes **Conflict Analysis**: A potential conflict is detected "
    "between vehicles V7019 and V5264. Vehicle V7019 is approaching the intersection, "
    "while Vehicle V5264 is already entering the intersection; both are on a collision course.\n"
    "**Recommendations**: It is recommended that Vehicle V7019 yield to Vehicle V5264 to "
    "avoid conflict. **Next Actions for Each Vehicle**: - Vehicle V1975: No action - "
    "Vehicle V7019: Slow down and yield - Vehicle V5264: Continue at current speed - "
    "Vehicle V8370: No action"
)

FREEFORM_NO_CONFLICT = (
    "**Conflict Status**: No **Conflict Analysis**: No conflicts detected among the vehicles.\n"
    "**Recommendations**: None **Next Actions for Each Vehicle**: - V5009: Continue moving "
    "south - V3191: Continue moving south - V6111: Continue moving east - V7721: Continue "
    "moving west"
)


@pytest.fixture(scope="session")
def layout():
    return default_layout()


@pytest.fixture(scope="session")
def cfg():
    return OracleConfig()


@pytest.fixture(scope="session")
def table3_text():
    return json.dumps(TABLE3_SCENARIO_DOC)


@pytest.fixture(scope="session")
def table3_scenario(layout, table3_text):
    from junction.scenario import parse_scenario

    return parse_scenario(table3_text, layout)


def make_vehicle(vid, lane, speed, distance, destination):
    """Vehicle with the direction implied by its lane."""
    return Vehicle(
        vehicle_id=vid,
        lane=lane,
        speed=speed,
        distance_to_intersection=distance,
        direction=LANE_DIRECTION[lane],
        destination=destination,
    )


def vehicle_at(vid, lane, destination, arrival_s, speed=36.0):
    """Vehicle engineered to arrive at the given time (36 km/h = 10 m/s)."""
    return make_vehicle(vid, lane, speed, speed / 3.6 * arrival_s, destination)


def random_scenarios(seed, count, layout, params=None):
    """Deterministic stream of generated scenarios for seeded property suites."""
    params = params or GenParams()
    rng = random.Random(seed)
    for _ in range(count):
        yield generate_scenario(params, layout, rng=random.Random(rng.randrange(2**60)))


def scenario_of(*vehicles):
    return Scenario(vehicles=tuple(vehicles))

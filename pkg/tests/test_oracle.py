import itertools
import json
import random

import pytest

from junction.oracle import (
    ConflictPair,
    analyze,
    conflict_potential,
    emit_analysis,
    pairwise_conflict,
    parse_analysis,
    priority_compare,
    render_report,
    schedule_waits,
)
from junction.scenario import arrival_time
from conftest import random_scenarios, scenario_of, vehicle_at

EXPECTED_PAIRS = [
    ("V7155", "V6439"),
    ("V7155", "V5182"),
    ("V6439", "V2432"),
    ("V5182", "V2432"),
]

EXPECTED_DECISIONS = [
    "Potential conflict: Vehicle V7155 must yield to Vehicle V6439",
    "Potential conflict: Vehicle V7155 must yield to Vehicle V5182",
    "Potential conflict: Vehicle V6439 must yield to Vehicle V2432",
    "Potential conflict: Vehicle V5182 must yield to Vehicle V2432",
]

EXPECTED_PRIORITY = {"V2432": 1, "V5182": 2, "V6439": 3, "V7155": 4}


class TestGoldenScenario:
    def test_conflict_pairs(self, table3_scenario, layout, cfg):
        analysis = analyze(table3_scenario, layout, cfg)
        assert [(p.vehicle1_id, p.vehicle2_id) for p in analysis.conflict_vehicles] == EXPECTED_PAIRS

    def test_decisions_verbatim(self, table3_scenario, layout, cfg):
        analysis = analyze(table3_scenario, layout, cfg)
        assert list(analysis.decisions) == EXPECTED_DECISIONS

    def test_priority_order(self, table3_scenario, layout, cfg):
        analysis = analyze(table3_scenario, layout, cfg)
        assert analysis.priority_order == EXPECTED_PRIORITY

    def test_flags_and_places(self, table3_scenario, layout, cfg):
        analysis = analyze(table3_scenario, layout, cfg)
        assert analysis.is_conflict
        assert analysis.number_of_conflicts == 4
        assert analysis.places_of_conflicts == ("intersection",) * 4

    def test_waits_follow_clearance_recurrence(self, table3_scenario, layout, cfg):
        # rank-1 enters unimpeded; each yielder waits for conflicting predecessors + gap
        analysis = analyze(table3_scenario, layout, cfg)
        assert analysis.waiting_times == {"V2432": 0, "V5182": 2, "V6439": 2, "V7155": 1}


class TestPairwiseConflict:
    def test_perpendicular_within_window(self, table3_scenario, layout, cfg):
        v7155, v6439 = table3_scenario.vehicles[0], table3_scenario.vehicles[1]
        gap = abs(
            arrival_time(v7155).arrival_time_s - arrival_time(v6439).arrival_time_s
        )
        assert gap == pytest.approx(3.08, abs=0.01)
        assert pairwise_conflict(v7155, v6439, layout, cfg)

    def test_opposite_without_left_is_exempt(self, table3_scenario, layout, cfg):
        v6439, v5182 = table3_scenario.vehicles[1], table3_scenario.vehicles[2]
        gap = abs(
            arrival_time(v6439).arrival_time_s - arrival_time(v5182).arrival_time_s
        )
        assert gap == pytest.approx(0.10, abs=0.01)
        assert not pairwise_conflict(v6439, v5182, layout, cfg)

    def test_same_direction_never_conflicts(self, table3_scenario, layout, cfg):
        v7155, v2432 = table3_scenario.vehicles[0], table3_scenario.vehicles[3]
        assert not pairwise_conflict(v7155, v2432, layout, cfg)

    def test_opposite_left_conflicts(self, layout, cfg):
        a = vehicle_at("V1", 2, "D", 4.0)  # northbound left
        b = vehicle_at("V2", 5, "B", 5.0)  # southbound through
        assert pairwise_conflict(a, b, layout, cfg)

    def test_window_excludes_distant_arrivals(self, layout, cfg):
        a = vehicle_at("V1", 2, "D", 1.0)
        b = vehicle_at("V2", 3, "B", 30.0)
        assert conflict_potential(a, b, layout)
        assert not pairwise_conflict(a, b, layout, cfg)

    def test_symmetry(self, layout, cfg):
        checked = 0
        for s in random_scenarios(101, 150, layout):
            for a, b in itertools.combinations(s.vehicles, 2):
                assert pairwise_conflict(a, b, layout, cfg) == pairwise_conflict(b, a, layout, cfg)
                checked += 1
        assert checked > 1000


class TestPriorityCompare:
    def test_earlier_arrival_wins_outside_epsilon(self, layout, cfg):
        early = vehicle_at("V9", 1, "H", 3.0)
        late = vehicle_at("V1", 3, "H", 4.0)
        assert priority_compare(early, late, layout, cfg) < 0
        assert priority_compare(late, early, layout, cfg) > 0

    def test_through_beats_left_on_tie(self, layout, cfg):
        through = vehicle_at("V9", 1, "F", 5.0)
        left = vehicle_at("V1", 4, "F", 5.0)
        assert priority_compare(through, left, layout, cfg) < 0

    def test_through_beats_right_and_right_beats_left(self, layout, cfg):
        through = vehicle_at("V9", 1, "F", 5.0)
        right = vehicle_at("V8", 3, "B", 5.0)
        left = vehicle_at("V1", 4, "F", 5.0)
        assert priority_compare(through, right, layout, cfg) < 0
        assert priority_compare(right, left, layout, cfg) < 0

    def test_right_hand_rule_on_symmetric_tie(self, layout, cfg):
        # four simultaneous through movements; each yields to the one on its right
        v217 = vehicle_at("V217", 2, "E", 7.2, speed=40.0)
        v218 = vehicle_at("V218", 4, "G", 7.2, speed=40.0)
        v219 = vehicle_at("V219", 6, "A", 7.2, speed=40.0)
        v220 = vehicle_at("V220", 8, "C", 7.2, speed=40.0)
        assert priority_compare(v220, v217, layout, cfg) < 0  # west over north
        assert priority_compare(v219, v220, layout, cfg) < 0  # south over west
        assert priority_compare(v218, v219, layout, cfg) < 0  # east over south
        assert priority_compare(v217, v218, layout, cfg) < 0  # north over east

    def test_identical_movements_fall_back_to_id(self, layout, cfg):
        a = vehicle_at("V1", 1, "F", 5.0)
        b = vehicle_at("V2", 5, "B", 5.0)  # opposite heading, also through
        assert priority_compare(a, b, layout, cfg) < 0
        assert priority_compare(b, a, layout, cfg) > 0

    def test_antisymmetric_and_total(self, layout, cfg):
        checked = 0
        for s in random_scenarios(103, 250, layout):
            for a, b in itertools.combinations(s.vehicles, 2):
                forward = priority_compare(a, b, layout, cfg)
                backward = priority_compare(b, a, layout, cfg)
                assert forward in (-1, 1)
                assert forward == -backward
                checked += 1
        assert checked > 1000

    def test_transitive_on_separated_arrivals(self, layout, cfg):
        # outside the tie window the order is arrival time, hence transitive
        count = 0
        for s in random_scenarios(104, 1500, layout):
            vehicles = list(s.vehicles)[:3]
            if len(vehicles) < 3:
                continue
            times = [arrival_time(v).arrival_time_s for v in vehicles]
            gaps_ok = all(
                abs(times[i] - times[j]) > cfg.tie_epsilon_s
                for i, j in itertools.combinations(range(3), 2)
            )
            if not gaps_ok:
                continue
            count += 1
            for x, y, z in itertools.permutations(vehicles, 3):
                if (
                    priority_compare(x, y, layout, cfg) < 0
                    and priority_compare(y, z, layout, cfg) < 0
                ):
                    assert priority_compare(x, z, layout, cfg) < 0
        assert count > 1000


class TestScheduleWaits:
    def test_rank_one_waits_zero(self, layout, cfg):
        a = vehicle_at("V1", 1, "H", 2.0)
        b = vehicle_at("V2", 3, "H", 3.0)
        s = scenario_of(a, b)
        waits = schedule_waits(s, [ConflictPair("V2", "V1")], {"V1": 1, "V2": 2}, cfg)
        assert waits["V1"] == 0

    def test_late_arrival_clears_naturally(self, layout, cfg):
        a = vehicle_at("V1", 1, "H", 0.001)
        b = vehicle_at("V2", 3, "H", 10.0)
        s = scenario_of(a, b)
        waits = schedule_waits(s, [ConflictPair("V2", "V1")], {"V1": 1, "V2": 2}, cfg)
        assert waits == {"V1": 0, "V2": 0}

    def test_half_up_rounding(self, layout, cfg):
        a = vehicle_at("V1", 1, "H", 5.0)
        b = vehicle_at("V2", 3, "H", 5.4)
        s = scenario_of(a, b)
        waits = schedule_waits(s, [ConflictPair("V2", "V1")], {"V1": 1, "V2": 2}, cfg)
        assert waits == {"V1": 0, "V2": 3}  # entry 8.0, 2.6 rounds up

    def test_chained_clearances(self, layout, cfg):
        a = vehicle_at("V1", 2, "D", 2.0)  # northbound left
        b = vehicle_at("V2", 3, "B", 3.0)  # eastbound right
        c = vehicle_at("V3", 5, "B", 4.0)  # southbound through
        s = scenario_of(a, b, c)
        analysis = analyze(s, layout, cfg)
        assert analysis.number_of_conflicts == 3
        assert analysis.waiting_times == {"V1": 0, "V2": 2, "V3": 4}


class TestAnalyze:
    def test_single_vehicle(self, layout, cfg):
        s = scenario_of(vehicle_at("V5", 4, "G", 3.0))
        analysis = analyze(s, layout, cfg)
        assert not analysis.is_conflict
        assert analysis.number_of_conflicts == 0
        assert analysis.priority_order == {"V5": 1}
        assert analysis.waiting_times == {"V5": 0}

    def test_two_same_direction(self, layout, cfg):
        s = scenario_of(vehicle_at("V1", 1, "H", 2.0), vehicle_at("V2", 2, "E", 2.1))
        assert not analyze(s, layout, cfg).is_conflict

    def test_invariants_over_random_scenarios(self, layout, cfg):
        for s in random_scenarios(107, 300, layout):
            analysis = analyze(s, layout, cfg)
            n = len(s.vehicles)
            assert analysis.is_conflict == (analysis.number_of_conflicts >= 1)
            assert analysis.number_of_conflicts <= n * (n - 1) // 2
            assert sorted(analysis.priority_order.values()) == list(range(1, n + 1))
            rank_one = min(analysis.priority_order, key=analysis.priority_order.get)
            assert analysis.waiting_times[rank_one] == 0
            for pair in analysis.conflict_vehicles:
                assert (
                    analysis.priority_order[pair.vehicle1_id]
                    > analysis.priority_order[pair.vehicle2_id]
                )
            assert len(analysis.decisions) == analysis.number_of_conflicts

    def test_deterministic(self, layout, cfg, table3_scenario):
        first = analyze(table3_scenario, layout, cfg)
        second = analyze(table3_scenario, layout, cfg)
        assert first == second
        assert emit_analysis(first) == emit_analysis(second)

    def test_matches_direct_predicate_evaluation(self, layout, cfg):
        """Independent reimplementation of the conflict rule over a coarse grid."""
        move_table = {
            ("north", "E"): "through", ("north", "F"): "through",
            ("north", "C"): "left", ("north", "D"): "left",
            ("north", "G"): "right", ("north", "H"): "right",
            ("east", "G"): "through", ("east", "H"): "through",
            ("east", "E"): "left", ("east", "F"): "left",
            ("east", "A"): "right", ("east", "B"): "right",
            ("south", "A"): "through", ("south", "B"): "through",
            ("south", "G"): "left", ("south", "H"): "left",
            ("south", "C"): "right", ("south", "D"): "right",
            ("west", "C"): "through", ("west", "D"): "through",
            ("west", "A"): "left", ("west", "B"): "left",
            ("west", "E"): "right", ("west", "F"): "right",
        }
        opposite = {"north": "south", "south": "north", "east": "west", "west": "east"}

        def expect_conflict(a, b):
            da, db = a.direction.value, b.direction.value
            if da == db:
                return False
            ta = a.distance_to_intersection / (a.speed / 3.6)
            tb = b.distance_to_intersection / (b.speed / 3.6)
            if abs(ta - tb) > 5.0:
                return False
            if opposite[da] == db:
                moves = {move_table[(da, a.destination)], move_table[(db, b.destination)]}
                return "left" in moves
            return True

        lane_dest = [(lane, d) for lane in range(1, 9) for d in layout.destinations_for(lane)]
        vehicles = [
            vehicle_at(f"V{i:03d}", lane, dest, t)
            for i, (lane, dest, t) in enumerate(
                (lane, dest, t) for lane, dest in lane_dest for t in (2.0, 5.5, 11.0)
            )
        ]
        for a, b in itertools.combinations(vehicles, 2):
            assert pairwise_conflict(a, b, layout, cfg) == expect_conflict(a, b), (a, b)

        rng = random.Random(55)
        for _ in range(400):
            chosen = rng.sample(vehicles, rng.randint(2, 4))
            if len({v.vehicle_id for v in chosen}) < len(chosen):
                continue
            s = scenario_of(*chosen)
            analysis = analyze(s, layout, cfg)
            got = {frozenset((p.vehicle1_id, p.vehicle2_id)) for p in analysis.conflict_vehicles}
            want = {
                frozenset((a.vehicle_id, b.vehicle_id))
                for a, b in itertools.combinations(chosen, 2)
                if expect_conflict(a, b)
            }
            assert got == want


class TestSerialization:
    def test_emit_matches_expected_document(self, table3_scenario, layout, cfg):
        analysis = analyze(table3_scenario, layout, cfg)
        doc = json.loads(emit_analysis(analysis))
        assert doc["is_conflict"] == "yes"
        assert doc["number_of_conflicts"] == 4
        assert doc["places_of_conflicts"] == ["intersection"] * 4
        assert doc["conflict_vehicles"] == [
            {"vehicle1_id": a, "vehicle2_id": b} for a, b in EXPECTED_PAIRS
        ]
        assert doc["decisions"] == EXPECTED_DECISIONS
        assert doc["priority_order"] == EXPECTED_PRIORITY
        assert list(doc["priority_order"]) == ["V2432", "V5182", "V6439", "V7155"]

    def test_round_trip(self, layout, cfg):
        for s in random_scenarios(113, 100, layout):
            analysis = analyze(s, layout, cfg)
            assert parse_analysis(emit_analysis(analysis)) == analysis


class TestRenderReport:
    def test_conflict_report_text(self, table3_scenario, layout, cfg):
        text = render_report(analyze(table3_scenario, layout, cfg))
        assert "**Conflict Status**: Conflict detected." in text
        assert "Number of conflicts: 4" in text
        assert "Vehicle V2432: Priority 1" in text
        assert "Involved vehicles: Vehicle V7155 and Vehicle V6439" in text
        assert "- Vehicle V2432: 0 seconds" in text

    def test_no_conflict_variant(self, layout, cfg):
        s = scenario_of(vehicle_at("V5", 4, "G", 3.0))
        text = render_report(analyze(s, layout, cfg))
        assert text.startswith("**Conflict Status**: No conflict detected.")
        assert "Number of conflicts: 0" in text
        assert "Involved vehicles: none." in text
        assert "Decisions: none." in text
        assert "Vehicle V5: Priority 1" in text

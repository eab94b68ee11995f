import json

import pytest

from junction.errors import ValidationError
from junction.layout import default_layout, emit_layout, parse_layout
from junction.oracle import analyze
from junction.promptkit import (
    PromptBundle,
    build_bundle,
    build_system_prompt,
    export_jsonl,
    import_jsonl,
    split_dataset,
)
from junction.scenario import describe_scenario
from junction.controller import parse_report
from conftest import random_scenarios

EXPECTED_BULLETS = [
    "- North: Lane 1 directs vehicles to F and H, Lane 2 directs vehicles to E, D, and C.",
    "- East: Lane 3 leads to H and B, Lane 4 leads to G, E, and F.",
    "- South: Lane 5 directs vehicles to B and D, Lane 6 directs vehicles to A, G, and H.",
    "- West: Lane 7 directs vehicles to D and F, Lane 8 directs vehicles to B, C, and A.",
]


class TestSystemPrompt:
    def test_contains_instruction_lines(self, layout):
        text = build_system_prompt(layout)
        assert "Respond only with 'Yes' or 'No' for conflict detection" in text
        assert "South: Lane 5 directs vehicles to B and D" in text

    def test_default_bullets_exact(self, layout):
        text = build_system_prompt(layout)
        for bullet in EXPECTED_BULLETS:
            assert bullet in text

    def test_custom_layout_substitutes_bullet(self):
        doc = json.loads(emit_layout(default_layout()))
        doc["lanes"][0]["destinations"] = ["G"]
        custom = parse_layout(json.dumps(doc))
        text = build_system_prompt(custom)
        assert "- North: Lane 1 directs vehicles to G, Lane 2 directs vehicles to E, D, and C." in text
        for bullet in EXPECTED_BULLETS[1:]:
            assert bullet in text


class TestBuildBundle:
    def test_table3_bundle(self, table3_scenario, layout, cfg):
        bundle = build_bundle(table3_scenario, layout, cfg)
        assert bundle.user_text == describe_scenario(table3_scenario)
        assert "Vehicle V2432: Priority 1" in bundle.expected_text

    def test_no_conflict_bundle(self, layout, cfg):
        scenario = next(
            s for s in random_scenarios(41, 50, layout)
            if not analyze(s, layout, cfg).is_conflict
        )
        bundle = build_bundle(scenario, layout, cfg)
        assert bundle.expected_text.splitlines()[0] == "**Conflict Status**: No conflict detected."

    def test_deterministic(self, table3_scenario, layout, cfg):
        assert build_bundle(table3_scenario, layout, cfg) == build_bundle(
            table3_scenario, layout, cfg
        )

    def test_expected_text_round_trips_verdict(self, layout, cfg):
        # closure across prompt building, the oracle, and the report parser
        for s in random_scenarios(43, 300, layout):
            analysis = analyze(s, layout, cfg)
            bundle = build_bundle(s, layout, cfg, analysis=analysis)
            report = parse_report(bundle.expected_text)
            assert (report.verdict == "yes") == analysis.is_conflict


def dummy_bundles(n):
    return [PromptBundle(system_text="s", user_text=f"u{i}", expected_text=f"e{i}") for i in range(n)]


class TestSplitDataset:
    def test_canonical_sizes(self):
        split = split_dataset(dummy_bundles(10000), (0.7, 0.1, 0.2), seed=5)
        assert (len(split.train), len(split.validation), len(split.test)) == (7000, 1000, 2000)

    def test_single_bundle_goes_to_train(self):
        split = split_dataset(dummy_bundles(1), (0.7, 0.1, 0.2), seed=5)
        assert len(split.train) == 1
        assert not split.validation and not split.test

    def test_same_seed_same_split(self):
        bundles = dummy_bundles(100)
        a = split_dataset(bundles, (0.7, 0.1, 0.2), seed=9)
        b = split_dataset(bundles, (0.7, 0.1, 0.2), seed=9)
        assert a == b

    def test_parts_disjoint_and_cover(self):
        bundles = dummy_bundles(97)
        split = split_dataset(bundles, (0.6, 0.2, 0.2), seed=1)
        seen = [id(b) for part in (split.train, split.validation, split.test) for b in part]
        assert len(seen) == 97
        assert len(set(seen)) == 97
        assert set(seen) == {id(b) for b in bundles}

    def test_bad_ratios(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            split_dataset(dummy_bundles(10), (0.7, 0.1, 0.1), seed=0)
        with pytest.raises(ValidationError, match="positive"):
            split_dataset(dummy_bundles(10), (1.0, 0.0, 0.0), seed=0)


class TestExportJsonl:
    def test_one_line_per_bundle(self, tmp_path):
        path = tmp_path / "part.jsonl"
        export_jsonl(dummy_bundles(3), path)
        lines = path.read_text("utf-8").splitlines()
        assert len(lines) == 3
        for line in lines:
            record = json.loads(line)
            roles = [m["role"] for m in record["messages"]]
            assert roles == ["system", "user", "assistant"]

    def test_round_trip(self, tmp_path):
        bundles = dummy_bundles(5)
        path = tmp_path / "part.jsonl"
        export_jsonl(bundles, path)
        assert import_jsonl(path) == bundles

    def test_empty_part(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        export_jsonl([], path)
        assert path.read_bytes() == b""
        assert import_jsonl(path) == []

    def test_real_bundles_survive_export(self, tmp_path, layout, cfg, table3_scenario):
        bundle = build_bundle(table3_scenario, layout, cfg)
        path = tmp_path / "real.jsonl"
        export_jsonl([bundle], path)
        (restored,) = import_jsonl(path)
        assert restored.system_text == bundle.system_text
        assert restored.user_text == bundle.user_text
        assert restored.expected_text == bundle.expected_text

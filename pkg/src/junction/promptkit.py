"""Chain-of-thought prompt assembly and fine-tuning dataset export."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError, ValidationError
from .layout import Direction, IntersectionLayout
from .oracle import ConflictAnalysis, OracleConfig, analyze, render_report
from .scenario import Scenario, describe_scenario

# The east approach uses a different verb in the canonical prompt wording.
_BULLET_VERB = {
    Direction.NORTH: "directs vehicles to",
    Direction.EAST: "leads to",
    Direction.SOUTH: "directs vehicles to",
    Direction.WEST: "directs vehicles to",
}


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    expected_text: str
    scenario: Scenario | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[PromptBundle, ...]
    validation: tuple[PromptBundle, ...]
    test: tuple[PromptBundle, ...]
    seed: int


def _english_list(items: Sequence[str]) -> str:
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def _load_template() -> str:
    return resources.files("junction.data").joinpath("system_prompt.txt").read_text("utf-8")


def lane_bullets(layout: IntersectionLayout) -> str:
    lines = []
    for direction in (Direction.NORTH, Direction.EAST, Direction.SOUTH, Direction.WEST):
        verb = _BULLET_VERB[direction]
        parts = [
            f"Lane {lane} {verb} {_english_list(layout.destinations_for(lane))}"
            for lane in layout.lanes_for(direction)
        ]
        lines.append(f"- {direction.value.capitalize()}: " + ", ".join(parts) + ".")
    return "\n".join(lines)


def build_system_prompt(layout: IntersectionLayout) -> str:
    return _load_template().format(lane_bullets=lane_bullets(layout))


def build_bundle(
    scenario: Scenario,
    layout: IntersectionLayout,
    cfg: OracleConfig | None = None,
    analysis: ConflictAnalysis | None = None,
) -> PromptBundle:
    """System prompt + scenario description + rendered ground-truth report."""
    if analysis is None:
        analysis = analyze(scenario, layout, cfg)
    return PromptBundle(
        system_text=build_system_prompt(layout),
        user_text=describe_scenario(scenario),
        expected_text=render_report(analysis),
        scenario=scenario,
    )


def split_dataset(
    bundles: Sequence[PromptBundle],
    ratios: tuple[float, float, float],
    seed: int,
) -> DatasetSplit:
    """Seeded shuffle then contiguous train/validation/test slices.

    Validation and test sizes are round(n * ratio); the remainder goes to train.
    """
    r_train, r_val, r_test = ratios
    if min(ratios) <= 0:
        raise ValidationError(f"split ratios must be positive, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"split ratios must sum to 1, got {ratios}")
    n = len(bundles)
    n_val = round(n * r_val)
    n_test = round(n * r_test)
    n_train = n - n_val - n_test
    if n_train < 0:
        raise ValidationError(f"split ratios {ratios} over-allocate {n} bundles")
    shuffled = list(bundles)
    random.Random(seed).shuffle(shuffled)
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        validation=tuple(shuffled[n_train : n_train + n_val]),
        test=tuple(shuffled[n_train + n_val :]),
        seed=seed,
    )


def export_jsonl(bundles: Iterable[PromptBundle], path: str | Path) -> None:
    """One chat-format record per line: system, user, and assistant messages."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as fh:
            for bundle in bundles:
                record = {
                    "messages": [
                        {"role": "system", "content": bundle.system_text},
                        {"role": "user", "content": bundle.user_text},
                        {"role": "assistant", "content": bundle.expected_text},
                    ]
                }
                fh.write(json.dumps(record) + "\n")
    except OSError as exc:
        raise OSError(f"cannot export JSONL to {path}: {exc}") from exc


def import_jsonl(path: str | Path) -> list[PromptBundle]:
    path = Path(path)
    bundles = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                messages = {m["role"]: m["content"] for m in record["messages"]}
                bundles.append(
                    PromptBundle(
                        system_text=messages["system"],
                        user_text=messages["user"],
                        expected_text=messages["assistant"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: bad JSONL record: {exc}") from exc
    return bundles

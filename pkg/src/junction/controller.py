"""Traffic-controller implementations and the tolerant report parser.

Three controllers share one call surface: the oracle-backed reference (perfect
by construction), a scripted mock for degenerate baselines, and a remote
chat-completions client with retries, bounded concurrency, and transcripts.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .errors import TransportError
from .layout import IntersectionLayout
from .oracle import OracleConfig, analyze, render_report
from .promptkit import PromptBundle

SECTION_HEADER_RE = re.compile(r"\*\*\s*([^*\n]+?)\s*\*{2,}\s*:", re.IGNORECASE)
PAIR_RE = re.compile(r"Vehicle (V\d+) and Vehicle (V\d+)")
PRIORITY_RE = re.compile(r"Vehicle (V\d+)\s*:\s*Priority\s*(\d+)")
WAIT_RE = re.compile(r"Vehicle (V\d+)\s*:\s*(\d+)\s*seconds")


@dataclass(frozen=True)
class ControllerReport:
    verdict: str  # "yes" | "no" | "unparseable"
    pairs: tuple[tuple[str, str], ...] = ()
    decisions: tuple[str, ...] = ()
    priorities: dict[str, int] = field(default_factory=dict)
    waits: dict[str, int] = field(default_factory=dict)
    raw_text: str = ""


def _split_sentences(text: str) -> list[str]:
    return [s.strip() for s in re.split(r"[.!?\n]", text) if s.strip()]


def parse_report(text: str) -> ControllerReport:
    """Total on arbitrary text; unparseable is a value, never an exception."""
    headers = list(SECTION_HEADER_RE.finditer(text))
    verdict = "unparseable"
    for position, match in enumerate(headers):
        if match.group(1).strip().lower() != "conflict status":
            continue
        end = headers[position + 1].start() if position + 1 < len(headers) else len(text)
        value = text[match.end() : end].strip().lower()
        if value.startswith("no") or "no conflict" in value:
            verdict = "no"
        elif value.startswith("yes") or "conflict detected" in value:
            verdict = "yes"
        break
    if verdict == "unparseable":
        return ControllerReport(verdict="unparseable", raw_text=text)

    pairs = tuple((a, b) for a, b in PAIR_RE.findall(text))
    priorities = {vid: int(rank) for vid, rank in PRIORITY_RE.findall(text)}
    waits = {vid: int(seconds) for vid, seconds in WAIT_RE.findall(text)}
    decisions = tuple(s for s in _split_sentences(text) if "yield" in s.lower())
    return ControllerReport(
        verdict=verdict,
        pairs=pairs,
        decisions=decisions,
        priorities=priorities,
        waits=waits,
        raw_text=text,
    )


def verdict_label(report: ControllerReport, unparseable_as: str = "negative") -> bool:
    """Binary conflict label; unparseable maps per policy (default negative)."""
    if report.verdict == "yes":
        return True
    if report.verdict == "no":
        return False
    if unparseable_as == "negative":
        return False
    if unparseable_as == "positive":
        return True
    raise ValueError(f"unknown unparseable policy {unparseable_as!r}")


class ReferenceController:
    """Replays the oracle verbatim; the evaluation fixed point."""

    name = "reference"

    def __init__(self, layout: IntersectionLayout, cfg: OracleConfig | None = None):
        self.layout = layout
        self.cfg = cfg if cfg is not None else OracleConfig()

    def assess(self, bundle: PromptBundle) -> str:
        if bundle.scenario is None:
            raise ValueError("reference controller needs bundles built with a scenario")
        return render_report(analyze(bundle.scenario, self.layout, self.cfg))


class MockController:
    """Returns scripted text: a constant, a per-call sequence, or a callable."""

    name = "mock"

    def __init__(self, script: str | Sequence[str] | Callable[[PromptBundle], str]):
        self.script = script
        self._calls = 0

    def assess(self, bundle: PromptBundle) -> str:
        self._calls += 1
        if callable(self.script):
            return self.script(bundle)
        if isinstance(self.script, str):
            return self.script
        return self.script[(self._calls - 1) % len(self.script)]


ALWAYS_NO_TEXT = "**Conflict Status**: No conflict detected."
ALWAYS_YES_TEXT = "**Conflict Status**: Conflict detected."


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str
    model: str
    timeout_s: float = 30.0
    max_concurrent: int = 4
    max_retries: int = 3
    backoff_base_s: float = 0.5
    credential_env: str = "JUNCTION_API_KEY"

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")


_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class RemoteController:
    """Chat-completions client: temperature 0, retries with exponential backoff."""

    name = "remote"

    def __init__(self, config: RemoteConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(timeout=config.timeout_s, transport=transport)
        self._semaphore = threading.Semaphore(config.max_concurrent)

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.credential_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def assess(self, bundle: PromptBundle) -> str:
        body = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
            "temperature": 0,
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt > 0:
                time.sleep(self.config.backoff_base_s * 2 ** (attempt - 1))
            try:
                with self._semaphore:
                    response = self._client.post(
                        self.config.endpoint, headers=self._headers(), json=body
                    )
                if response.status_code in _RETRYABLE_STATUS:
                    last_error = TransportError(f"HTTP {response.status_code}")
                    continue
                response.raise_for_status()
                payload = response.json()
                return str(payload["choices"][0]["message"]["content"])
            except httpx.HTTPStatusError as exc:
                raise TransportError(
                    f"{self._whom(bundle)}: endpoint rejected request: {exc}"
                ) from exc
            except (httpx.TransportError, httpx.TimeoutException) as exc:
                last_error = exc
            except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
                raise TransportError(
                    f"{self._whom(bundle)}: malformed completion payload: {exc}"
                ) from exc
        raise TransportError(
            f"{self._whom(bundle)}: transport failed after "
            f"{self.config.max_retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _whom(bundle: PromptBundle) -> str:
        if bundle.scenario is not None:
            return "scenario " + "/".join(bundle.scenario.vehicle_ids())
        return "scenario <detached>"

    def assess_batch(self, bundles: Sequence[PromptBundle]) -> list[str | TransportError]:
        """Run all requests with bounded concurrency; results merged by index."""
        results: list[str | TransportError] = [TransportError("not attempted")] * len(bundles)

        def run(index: int) -> None:
            try:
                results[index] = self.assess(bundles[index])
            except TransportError as exc:
                results[index] = exc

        with ThreadPoolExecutor(max_workers=self.config.max_concurrent) as pool:
            list(pool.map(run, range(len(bundles))))
        return results


def write_transcript(path: str | Path, model: str, responses: Sequence[str | Exception]) -> None:
    """Persist raw responses (or errors) as replayable JSONL, one record per index."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for index, item in enumerate(responses):
            if isinstance(item, Exception):
                record = {"index": index, "model": model, "error": str(item)}
            else:
                record = {"index": index, "model": model, "response": item}
            fh.write(json.dumps(record) + "\n")


def read_transcript(path: str | Path) -> dict[int, str]:
    """Index -> response text; records carrying errors are omitted."""
    responses: dict[int, str] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if "response" in record:
                responses[int(record["index"])] = record["response"]
    return responses


def make_controller(
    selector: str,
    layout: IntersectionLayout,
    cfg: OracleConfig,
    endpoint: str | None = None,
    model: str | None = None,
):
    """Controller factory for the CLI: reference | mock:<script> | remote."""
    if selector == "reference":
        return ReferenceController(layout, cfg)
    if selector.startswith("mock:"):
        script = selector.split(":", 1)[1]
        if script == "no":
            return MockController(ALWAYS_NO_TEXT)
        if script == "yes":
            return MockController(ALWAYS_YES_TEXT)
        if script == "echo":
            return MockController(lambda bundle: bundle.expected_text)
        raise ValueError(f"unknown mock script {script!r}; use no, yes, or echo")
    if selector == "remote":
        if not endpoint or not model:
            raise ValueError("remote controller needs --endpoint and --model")
        return RemoteController(RemoteConfig(endpoint=endpoint, model=model))
    raise ValueError(f"unknown controller {selector!r}")

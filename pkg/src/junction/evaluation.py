"""Classification metrics and ROUGE-L section scoring for controller outputs."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .controller import (
    SECTION_HEADER_RE,
    ControllerReport,
    parse_report,
    verdict_label,
    write_transcript,
)
from .errors import TransportError
from .layout import IntersectionLayout
from .oracle import ConflictAnalysis, OracleConfig
from .promptkit import build_bundle
from .scenario import Scenario

SCORED_SECTIONS = (
    "Conflicts Overview",
    "Actions & Decisions",
    "Priority Assignment",
    "Vehicle Waiting Times",
)

TOKEN_RE = re.compile(r"\d+\.\d+|[a-z0-9]+")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: tuple[str, ...] = ()


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f_measure: float
    lcs_length: int


@dataclass(frozen=True)
class ScenarioRow:
    index: int
    truth: bool
    prediction: bool
    section_f: dict[str, float]


@dataclass(frozen=True)
class EvalSummary:
    n: int
    confusion: ConfusionMatrix
    metrics: Metrics
    section_means: dict[str, float]
    diagnostics: dict[str, int]
    rows: tuple[ScenarioRow, ...] = field(repr=False, default=())


def confusion(pred: Sequence[bool], truth: Sequence[bool]) -> ConfusionMatrix:
    """Standard counts with the conflict class as positive."""
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(truth)} labels")
    if not pred:
        raise ValueError("cannot build a confusion matrix from zero samples")
    tp = fp = fn = tn = 0
    for p, t in zip(pred, truth):
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif not p and t:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total < 1:
        raise ValueError("confusion matrix is empty")
    degenerate = []
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        degenerate.append("precision")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        degenerate.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        degenerate.append("f1")
    return Metrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        degenerate=tuple(degenerate),
    )


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumeric runs; decimals kept whole."""
    return TOKEN_RE.findall(text.lower())


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Longest common subsequence length via a vectorized row-sweep DP."""
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 0
    if list(a) == list(b):
        return n
    if n * m <= 1024:
        return _lcs_small(a, b)
    codes: dict = {}
    for token in a:
        codes.setdefault(token, len(codes))
    for token in b:
        codes.setdefault(token, len(codes))
    b_codes = np.fromiter((codes[t] for t in b), dtype=np.int32, count=m)
    prev = np.zeros(m + 1, dtype=np.int32)
    for token in a:
        matches = b_codes == codes[token]
        best = np.maximum(prev[1:], prev[:-1] + matches)
        prev = np.concatenate(([0], np.maximum.accumulate(best)))
    return int(prev[-1])


def _lcs_small(a: Sequence, b: Sequence) -> int:
    m = len(b)
    prev = [0] * (m + 1)
    for x in a:
        cur = [0] * (m + 1)
        for j in range(1, m + 1):
            cur[j] = prev[j - 1] + 1 if x == b[j - 1] else max(prev[j], cur[j - 1])
        prev = cur
    return prev[m]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Sentence-level ROUGE-L with a balanced F-measure over token LCS."""
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    if not cand_tokens or not ref_tokens:
        return RougeScore(precision=0.0, recall=0.0, f_measure=0.0, lcs_length=0)
    lcs = lcs_length(cand_tokens, ref_tokens)
    precision = lcs / len(cand_tokens)
    recall = lcs / len(ref_tokens)
    if precision + recall > 0:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = 0.0
    return RougeScore(precision=precision, recall=recall, f_measure=f_measure, lcs_length=lcs)


def split_sections(text: str) -> dict[str, str]:
    """Map normalized section names to their body text, aligned by header match."""
    sections: dict[str, str] = {}
    headers = list(SECTION_HEADER_RE.finditer(text))
    for position, match in enumerate(headers):
        name = re.sub(r"\s+", " ", match.group(1).strip()).lower()
        end = headers[position + 1].start() if position + 1 < len(headers) else len(text)
        sections.setdefault(name, text[match.end() : end].strip())
    return sections


def section_scores(candidate_text: str, truth_text: str) -> dict[str, RougeScore]:
    """Per-section ROUGE-L; a section missing from the candidate scores zero."""
    cand_sections = split_sections(candidate_text)
    truth_sections = split_sections(truth_text)
    scores = {}
    for section in SCORED_SECTIONS:
        key = section.lower()
        truth_body = truth_sections.get(key, "")
        cand_body = cand_sections.get(key)
        if cand_body is None:
            scores[section] = RougeScore(0.0, 0.0, 0.0, 0)
        else:
            scores[section] = rouge_l(cand_body, truth_body)
    return scores


def collect_responses(controller, bundles) -> list[str | TransportError]:
    """One raw response (or transport failure) per bundle, merged by index."""
    if hasattr(controller, "assess_batch"):
        return controller.assess_batch(bundles)
    responses: list[str | TransportError] = []
    for bundle in bundles:
        try:
            responses.append(controller.assess(bundle))
        except TransportError as exc:
            responses.append(exc)
    return responses


def evaluate_corpus(
    controller,
    corpus: Sequence[tuple[Scenario, ConflictAnalysis]],
    layout: IntersectionLayout,
    cfg: OracleConfig | None = None,
    *,
    unparseable_as: str = "negative",
    replay: Mapping[int, str] | None = None,
    transcript_path: str | Path | None = None,
) -> EvalSummary:
    """Assess every scenario (or replay a transcript) and aggregate metrics."""
    if not corpus:
        raise ValueError("corpus is empty")
    cfg = cfg if cfg is not None else OracleConfig()

    bundles = [
        build_bundle(scenario, layout, cfg, analysis=analysis)
        for scenario, analysis in corpus
    ]

    responses: list[str | TransportError]
    if replay is not None:
        responses = [
            replay.get(i, TransportError(f"index {i} missing from transcript"))
            for i in range(len(corpus))
        ]
    else:
        responses = collect_responses(controller, bundles)
        if transcript_path is not None:
            model = getattr(getattr(controller, "config", None), "model", None)
            write_transcript(transcript_path, model or getattr(controller, "name", "?"), responses)

    preds: list[bool] = []
    truths: list[bool] = []
    rows: list[ScenarioRow] = []
    section_totals = {name: 0.0 for name in SCORED_SECTIONS}
    scored = 0
    unparseable = transport_errors = excluded = 0

    for index, ((scenario, analysis), response) in enumerate(zip(corpus, responses)):
        if isinstance(response, TransportError):
            transport_errors += 1
            excluded += 1
            continue
        report: ControllerReport = parse_report(response)
        if report.verdict == "unparseable":
            unparseable += 1
            if unparseable_as == "exclude":
                excluded += 1
                continue
        prediction = verdict_label(report, unparseable_as=unparseable_as)
        truth = analysis.is_conflict
        preds.append(prediction)
        truths.append(truth)
        per_section = section_scores(response, bundles[index].expected_text)
        for name, score in per_section.items():
            section_totals[name] += score.f_measure
        scored += 1
        rows.append(
            ScenarioRow(
                index=index,
                truth=truth,
                prediction=prediction,
                section_f={name: score.f_measure for name, score in per_section.items()},
            )
        )

    if transport_errors == len(corpus):
        raise TransportError("every scenario failed at the transport layer")
    if not preds:
        raise ValueError("no scenarios left to score after exclusions")

    cm = confusion(preds, truths)
    return EvalSummary(
        n=len(corpus),
        confusion=cm,
        metrics=metrics(cm),
        section_means={name: section_totals[name] / scored for name in SCORED_SECTIONS},
        diagnostics={
            "unparseable": unparseable,
            "transport_errors": transport_errors,
            "excluded": excluded,
        },
        rows=tuple(rows),
    )


def summary_to_obj(summary: EvalSummary) -> dict:
    return {
        "n": summary.n,
        "confusion": {
            "tp": summary.confusion.tp,
            "fp": summary.confusion.fp,
            "fn": summary.confusion.fn,
            "tn": summary.confusion.tn,
        },
        "metrics": {
            "accuracy": summary.metrics.accuracy,
            "precision": summary.metrics.precision,
            "recall": summary.metrics.recall,
            "f1": summary.metrics.f1,
            "degenerate": list(summary.metrics.degenerate),
        },
        "rouge_sections": dict(summary.section_means),
        "diagnostics": dict(summary.diagnostics),
    }


def summary_to_json(summary: EvalSummary) -> str:
    return json.dumps(summary_to_obj(summary), indent=2)


def summary_to_text(summary: EvalSummary) -> str:
    cm, m = summary.confusion, summary.metrics
    lines = [
        f"scenarios evaluated : {summary.n}",
        f"confusion           : tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn}",
        f"accuracy            : {m.accuracy:.4f}",
        f"precision           : {m.precision:.4f}",
        f"recall              : {m.recall:.4f}",
        f"f1                  : {m.f1:.4f}",
    ]
    for name in SCORED_SECTIONS:
        lines.append(f"rouge-l {name:<19} : {summary.section_means[name]:.4f}")
    diag = summary.diagnostics
    lines.append(
        "diagnostics         : "
        f"unparseable={diag['unparseable']} transport_errors={diag['transport_errors']} "
        f"excluded={diag['excluded']}"
    )
    return "\n".join(lines)


def write_rows_csv(summary: EvalSummary, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["index", "truth", "prediction"]
            + [f"rouge_{name.lower().replace(' ', '_').replace('&', 'and')}" for name in SCORED_SECTIONS]
        )
        for row in summary.rows:
            writer.writerow(
                [row.index, int(row.truth), int(row.prediction)]
                + [f"{row.section_f[name]:.6f}" for name in SCORED_SECTIONS]
            )

"""Error-analysis machinery: periphery matches, empty-output accounting,
antecedent-direction breakdowns, and referential-form accuracy tables.

Edges of a discontiguous gold answer are its hull edges (min/max of the
token set), the only choice that needs no contiguity assumption.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

from elqa.core import REF_CLOSE, REF_OPEN, Direction, QAInstance
from elqa.errors import MetricsError
from elqa.metrics import TokenF1Result, aggregate_token_f1, exact_match, token_f1
from elqa.predictions import SpanPrediction

DEFINITE_FORM = "the ..."


@dataclass(frozen=True)
class PeripheryCounts:
    left_matches: int
    right_matches: int
    exact_matches: int
    empty_predictions: int
    total: int

    def __post_init__(self):
        if self.exact_matches > min(self.left_matches, self.right_matches):
            raise MetricsError("exact matches exceed an edge-match count")
        if max(self.left_matches, self.right_matches, self.empty_predictions) > self.total:
            raise MetricsError("periphery counts exceed the total")


@dataclass(frozen=True)
class DirectionRow:
    direction: Direction
    count: int
    token: TokenF1Result


@dataclass(frozen=True)
class FormBreakdownRow:
    form: str
    occurrences: int
    exact_match_rate: float


def _check_coverage(instances, predictions):
    missing = sorted({i.instance_id for i in instances} - set(predictions))
    if missing:
        raise MetricsError(f"no prediction for instance id {missing[0]!r}")


def periphery_analysis(
    instances: Sequence[QAInstance], predictions: Mapping[str, SpanPrediction]
) -> PeripheryCounts:
    """Count left-edge / right-edge / exact agreements with the gold answer.

    Empty predictions are counted separately and match neither edge.
    """
    _check_coverage(instances, predictions)
    left = right = exact = empty = 0
    for inst in instances:
        pred = predictions[inst.instance_id]
        if pred.is_empty:
            empty += 1
            continue
        pred_idx = pred.indices()
        if min(pred_idx) == min(inst.gold_answer):
            left += 1
        if max(pred_idx) == max(inst.gold_answer):
            right += 1
        if pred_idx == inst.gold_answer:
            exact += 1
    return PeripheryCounts(left, right, exact, empty, len(instances))


def direction_breakdown(
    instances: Sequence[QAInstance], predictions: Mapping[str, SpanPrediction]
) -> list[DirectionRow]:
    """Token F1 aggregated separately per antecedent direction.

    Directions with no instances get no row; row counts sum to the total.
    """
    _check_coverage(instances, predictions)
    groups: dict[Direction, list[TokenF1Result]] = {}
    for inst in instances:
        pred = predictions[inst.instance_id]
        groups.setdefault(inst.antecedent_direction, []).append(
            token_f1(pred.indices(), inst.gold_answer)
        )
    return [
        DirectionRow(d, len(groups[d]), aggregate_token_f1(groups[d]))
        for d in Direction
        if d in groups
    ]


def question_mention_form(instance: QAInstance) -> str:
    """Lowercased surface form of the question's marked mention.

    Multi-token mentions starting with "the" collapse into the definite
    description group.
    """
    texts = instance.question_token_texts()
    try:
        lo = texts.index(REF_OPEN)
        hi = texts.index(REF_CLOSE)
    except ValueError as exc:
        raise MetricsError(
            f"instance {instance.instance_id!r} has no mention markers"
        ) from exc
    mention = [t.lower() for t in texts[lo + 1 : hi]]
    if not mention:
        raise MetricsError(f"instance {instance.instance_id!r} marks an empty mention")
    if len(mention) > 1 and mention[0] == "the":
        return DEFINITE_FORM
    return " ".join(mention)


def referential_form_breakdown(
    instances: Sequence[QAInstance],
    predictions: Mapping[str, SpanPrediction],
    min_occurrences: int = 1,
) -> list[FormBreakdownRow]:
    """Exact-match rate per mention surface form, frequent forms first."""
    _check_coverage(instances, predictions)
    counts: dict[str, int] = {}
    exact: dict[str, int] = {}
    for inst in instances:
        if not inst.task.is_coref:
            raise MetricsError(
                f"instance {inst.instance_id!r} is not a coreference QA pair"
            )
        form = question_mention_form(inst)
        counts[form] = counts.get(form, 0) + 1
        if exact_match(predictions[inst.instance_id].indices(), inst.gold_answer):
            exact[form] = exact.get(form, 0) + 1
    rows = [
        FormBreakdownRow(form, n, exact.get(form, 0) / n)
        for form, n in counts.items()
        if n >= min_occurrences
    ]
    rows.sort(key=lambda r: (-r.occurrences, r.form))
    return rows


# --- Report rendering -------------------------------------------------------


@dataclass(frozen=True)
class AnalysisBundle:
    periphery: PeripheryCounts
    directions: tuple[DirectionRow, ...]
    forms: tuple[FormBreakdownRow, ...]


def analyze(
    instances: Sequence[QAInstance],
    predictions: Mapping[str, SpanPrediction],
    min_occurrences: int = 1,
) -> AnalysisBundle:
    forms: tuple[FormBreakdownRow, ...] = ()
    if instances and all(i.task.is_coref for i in instances):
        forms = tuple(referential_form_breakdown(instances, predictions, min_occurrences))
    return AnalysisBundle(
        periphery=periphery_analysis(instances, predictions),
        directions=tuple(direction_breakdown(instances, predictions)),
        forms=forms,
    )


def render_analysis(bundle: AnalysisBundle) -> str:
    p = bundle.periphery
    lines = [
        f"instances          {p.total}",
        f"left-edge matches  {p.left_matches}",
        f"right-edge matches {p.right_matches}",
        f"exact matches      {p.exact_matches}",
        f"empty predictions  {p.empty_predictions}",
    ]
    if p.total == 0:
        lines.append("(no instances analyzed)")
    if bundle.directions:
        lines.append("")
        lines.append(f"{'direction':<15}{'count':>7}{'P':>9}{'R':>9}{'F1':>9}")
        for row in bundle.directions:
            lines.append(
                f"{row.direction.value:<15}{row.count:>7}{row.token.precision:>9.4f}"
                f"{row.token.recall:>9.4f}{row.token.f1:>9.4f}"
            )
    if bundle.forms:
        lines.append("")
        lines.append(f"{'form':<24}{'count':>7}{'EM rate':>9}")
        for row in bundle.forms:
            lines.append(f"{row.form:<24}{row.occurrences:>7}{row.exact_match_rate:>9.4f}")
    return "\n".join(lines) + "\n"


def write_analysis_records(bundle: AnalysisBundle, stream: IO[str]) -> None:
    p = bundle.periphery
    stream.write(
        json.dumps(
            {
                "kind": "periphery",
                "left": p.left_matches,
                "right": p.right_matches,
                "exact": p.exact_matches,
                "empty": p.empty_predictions,
                "total": p.total,
            },
            sort_keys=True,
        )
        + "\n"
    )
    for row in bundle.directions:
        stream.write(
            json.dumps(
                {
                    "kind": "direction",
                    "direction": row.direction.value,
                    "count": row.count,
                    "precision": row.token.precision,
                    "recall": row.token.recall,
                    "f1": row.token.f1,
                },
                sort_keys=True,
            )
            + "\n"
        )
    for row in bundle.forms:
        stream.write(
            json.dumps(
                {
                    "kind": "form",
                    "form": row.form,
                    "occurrences": row.occurrences,
                    "exact_match_rate": row.exact_match_rate,
                },
                sort_keys=True,
            )
            + "\n"
        )


def plot_form_breakdown(rows: Sequence[FormBreakdownRow], path) -> None:
    """Bar (exact-match %) and dot (occurrences) chart for referential forms."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    forms = [r.form for r in rows]
    rates = [100 * r.exact_match_rate for r in rows]
    occur = [r.occurrences for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(rows)), 4))
    ax.bar(range(len(rows)), rates, color="#4878a8", label="exact match %")
    ax.set_ylabel("exact match %")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(forms, rotation=45, ha="right")
    ax2 = ax.twinx()
    ax2.plot(range(len(rows)), occur, "o", color="#c44e52", label="occurrences")
    ax2.set_ylabel("occurrences")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

"""Scoring: token-level F1/EM, coreference cluster metrics, subset re-scoring.

Token-level scores treat predictions and gold answers as token-index sets,
so discontiguous gold antecedents are handled directly.  Cluster metrics
(MUC, B-cubed, CEAF with the phi4 similarity, and their unweighted macro
average) operate on mention partitions; the two clusterings are aligned on
the union of their mention universes, with missing mentions treated as
singletons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from elqa.core import QAInstance, TokenSpan
from elqa.errors import MetricsError
from elqa.predictions import SpanPrediction

MentionKey = tuple[str, int, int]  # (doc, start, end)


@dataclass(frozen=True)
class TokenF1Result:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClusterScore:
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def token_f1(pred: Iterable[int], gold: Iterable[int]) -> TokenF1Result:
    """Set-overlap precision/recall/F1; an empty prediction scores zero."""
    pred, gold = frozenset(pred), frozenset(gold)
    if not gold:
        raise MetricsError("empty gold answer")
    common = len(pred & gold)
    p = common / len(pred) if pred else 0.0
    r = common / len(gold)
    return TokenF1Result(p, r, _f1(p, r))


def exact_match(pred: Iterable[int], gold: Iterable[int]) -> bool:
    pred, gold = frozenset(pred), frozenset(gold)
    if not gold:
        raise MetricsError("empty gold answer")
    return pred == gold


def aggregate_token_f1(results: Sequence[TokenF1Result]) -> TokenF1Result:
    """Corpus score: unweighted mean of the per-instance values."""
    if not results:
        raise MetricsError("nothing to aggregate")
    n = len(results)
    return TokenF1Result(
        sum(r.precision for r in results) / n,
        sum(r.recall for r in results) / n,
        sum(r.f1 for r in results) / n,
    )


# --- Cluster metrics -------------------------------------------------------


@dataclass(frozen=True)
class Clustering:
    """A partition of mention identifiers into disjoint non-empty clusters."""

    clusters: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "clusters", tuple(frozenset(c) for c in self.clusters)
        )
        seen = set()
        for cluster in self.clusters:
            if not cluster:
                raise MetricsError("empty cluster")
            if seen & cluster:
                raise MetricsError("clusters are not disjoint")
            seen |= cluster
        object.__setattr__(self, "_mentions", frozenset(seen))

    @property
    def mentions(self) -> frozenset:
        return self._mentions

    def cluster_of(self) -> dict:
        return {m: c for c in self.clusters for m in c}


def _align_universes(gold: Clustering, pred: Clustering) -> tuple[Clustering, Clustering]:
    """Extend both sides with singletons so they share a mention universe.

    Applied by the link- and mention-based metrics, where an unaligned
    mention acts as its own singleton; CEAF compares the cluster sets as
    given.
    """
    universe = gold.mentions | pred.mentions
    def extend(c: Clustering) -> Clustering:
        extra = universe - c.mentions
        if not extra:
            return c
        return Clustering(c.clusters + tuple(frozenset([m]) for m in sorted(extra)))
    return extend(gold), extend(pred)


def muc(gold: Clustering, pred: Clustering) -> ClusterScore:
    """Link-based score: per cluster, |c| minus the number of partitions the
    other side cuts it into, over |c| - 1."""
    gold, pred = _align_universes(gold, pred)

    def half(source: Clustering, target: Clustering) -> float:
        target_of = target.cluster_of()
        num = den = 0
        for cluster in source.clusters:
            partitions = {target_of[m] for m in cluster}
            num += len(cluster) - len(partitions)
            den += len(cluster) - 1
        return num / den if den else 0.0

    r = half(gold, pred)
    p = half(pred, gold)
    return ClusterScore(p, r, _f1(p, r))


def b_cubed(gold: Clustering, pred: Clustering) -> ClusterScore:
    """Mention-based score: per-mention overlap ratios, averaged."""
    gold, pred = _align_universes(gold, pred)
    gold_of, pred_of = gold.cluster_of(), pred.cluster_of()
    mentions = sorted(gold.mentions)
    if not mentions:
        return ClusterScore(0.0, 0.0, 0.0)
    p = sum(len(pred_of[m] & gold_of[m]) / len(pred_of[m]) for m in mentions) / len(mentions)
    r = sum(len(pred_of[m] & gold_of[m]) / len(gold_of[m]) for m in mentions) / len(mentions)
    return ClusterScore(p, r, _f1(p, r))


def ceaf_phi4(gold: Clustering, pred: Clustering) -> ClusterScore:
    """Entity-based score under the optimal one-to-one cluster alignment,
    with phi4(G, P) = 2|G n P| / (|G| + |P|), solved exactly."""
    if not gold.clusters or not pred.clusters:
        return ClusterScore(0.0, 0.0, 0.0)
    phi = np.zeros((len(gold.clusters), len(pred.clusters)))
    for i, g in enumerate(gold.clusters):
        for j, c in enumerate(pred.clusters):
            phi[i, j] = 2 * len(g & c) / (len(g) + len(c))
    rows, cols = linear_sum_assignment(-phi)
    total = float(phi[rows, cols].sum())
    r = total / len(gold.clusters)
    p = total / len(pred.clusters)
    return ClusterScore(p, r, _f1(p, r))


def coref_macro(gold: Clustering, pred: Clustering) -> float:
    """Unweighted mean of the MUC, B-cubed and CEAF-phi4 F1 scores."""
    return (muc(gold, pred).f1 + b_cubed(gold, pred).f1 + ceaf_phi4(gold, pred).f1) / 3


# --- QA pairs -> clusters ---------------------------------------------------


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def clusters(self) -> tuple[frozenset, ...]:
        groups: dict = {}
        for x in self.parent:
            groups.setdefault(self.find(x), set()).add(x)
        return tuple(frozenset(groups[k]) for k in sorted(groups))


def _mention_key(doc_id: str, span: TokenSpan) -> MentionKey:
    return (doc_id, span.start, span.end)


def qa_to_clusters(
    instances: Sequence[QAInstance], predictions: Mapping[str, SpanPrediction]
) -> tuple[Clustering, Clustering]:
    """Reinterpret coreference QA pairs as clusterings.

    Gold: each question mention united with its gold (chain-initial)
    answer span.  Predicted: a question mention is united with the
    predicted span only when that span exactly matches a known mention
    span in the same document; otherwise it stays a singleton.
    """
    gold_uf, pred_uf = _UnionFind(), _UnionFind()
    known: set[MentionKey] = set()
    for inst in instances:
        if not inst.task.is_coref or inst.question_mention is None:
            raise MetricsError(
                f"instance {inst.instance_id!r} is not a coreference QA pair"
            )
        if inst.gold_contiguous is None:
            raise MetricsError(f"instance {inst.instance_id!r} has no contiguous gold span")
        known.add(_mention_key(inst.context_doc_id, inst.question_mention))
        known.add(_mention_key(inst.context_doc_id, inst.gold_contiguous))
    for inst in instances:
        q = _mention_key(inst.context_doc_id, inst.question_mention)
        gold_uf.union(q, _mention_key(inst.context_doc_id, inst.gold_contiguous))
        pred_uf.add(q)
        pred = predictions.get(inst.instance_id)
        if pred is None:
            raise MetricsError(f"no prediction for {inst.instance_id!r}")
        if pred.span is not None:
            key = _mention_key(inst.context_doc_id, pred.span)
            if key in known:
                pred_uf.union(q, key)
    return Clustering(gold_uf.clusters()), Clustering(pred_uf.clusters())


# --- Reports ----------------------------------------------------------------


@dataclass(frozen=True)
class InstanceScore:
    instance_id: str
    precision: float
    recall: float
    f1: float
    exact: bool
    empty: bool


@dataclass(frozen=True)
class CorefScores:
    muc: ClusterScore
    b_cubed: ClusterScore
    ceaf_phi4: ClusterScore
    macro: float


@dataclass(frozen=True)
class EvalReport:
    n: int
    token: TokenF1Result
    exact_match_rate: float
    n_empty: int
    per_instance: tuple[InstanceScore, ...]
    coref: CorefScores | None = None


def _check_coverage(
    instances: Sequence[QAInstance], predictions: Mapping[str, SpanPrediction]
) -> None:
    ids = {inst.instance_id for inst in instances}
    if len(ids) != len(instances):
        raise MetricsError("duplicate instance ids")
    unknown = sorted(set(predictions) - ids)
    if unknown:
        raise MetricsError(f"prediction for unknown instance id {unknown[0]!r}")
    missing = sorted(ids - set(predictions))
    if missing:
        raise MetricsError(f"no prediction for instance id {missing[0]!r}")


def evaluate_instances(
    instances: Sequence[QAInstance],
    predictions: Mapping[str, SpanPrediction],
    with_coref: bool | None = None,
    coref_per_document: bool = False,
) -> EvalReport:
    """Full report over a prediction set covering the instances exactly.

    Cluster metrics are added when every instance is a coreference QA pair
    (or forced on/off via with_coref).  coref_per_document averages the
    cluster metrics over documents instead of pooling mentions corpus-wide.
    """
    if not instances:
        raise MetricsError("nothing to score")
    _check_coverage(instances, predictions)
    per_instance = []
    n_empty = 0
    for inst in instances:
        pred = predictions[inst.instance_id]
        res = token_f1(pred.indices(), inst.gold_answer)
        em = exact_match(pred.indices(), inst.gold_answer)
        if pred.is_empty:
            n_empty += 1
        per_instance.append(
            InstanceScore(inst.instance_id, res.precision, res.recall, res.f1, em, pred.is_empty)
        )
    token = aggregate_token_f1(
        [TokenF1Result(s.precision, s.recall, s.f1) for s in per_instance]
    )
    em_rate = sum(s.exact for s in per_instance) / len(per_instance)

    coref = None
    all_coref = all(
        inst.task.is_coref and inst.question_mention is not None for inst in instances
    )
    if with_coref is None:
        with_coref = all_coref
    if with_coref:
        if not all_coref:
            raise MetricsError("cluster metrics requested on non-coreference instances")
        if coref_per_document:
            by_doc: dict[str, list[QAInstance]] = {}
            for inst in instances:
                by_doc.setdefault(inst.context_doc_id, []).append(inst)
            scores = []
            for doc_id in sorted(by_doc):
                g, p = qa_to_clusters(by_doc[doc_id], predictions)
                scores.append((muc(g, p), b_cubed(g, p), ceaf_phi4(g, p)))
            def mean(parts: list[ClusterScore]) -> ClusterScore:
                n = len(parts)
                return ClusterScore(
                    sum(s.precision for s in parts) / n,
                    sum(s.recall for s in parts) / n,
                    sum(s.f1 for s in parts) / n,
                )
            m = mean([s[0] for s in scores])
            b = mean([s[1] for s in scores])
            c = mean([s[2] for s in scores])
        else:
            g, p = qa_to_clusters(instances, predictions)
            m, b, c = muc(g, p), b_cubed(g, p), ceaf_phi4(g, p)
        coref = CorefScores(m, b, c, (m.f1 + b.f1 + c.f1) / 3)
    return EvalReport(
        n=len(per_instance),
        token=token,
        exact_match_rate=em_rate,
        n_empty=n_empty,
        per_instance=tuple(per_instance),
        coref=coref,
    )


def score_subset(
    instances: Sequence[QAInstance],
    predictions: Mapping[str, SpanPrediction],
    keep: Iterable[str],
    **kwargs,
) -> EvalReport:
    """Re-score on a restricted instance-id subset only."""
    keep = set(keep)
    if not keep:
        raise MetricsError("empty keep set: nothing to score")
    ids = {inst.instance_id for inst in instances}
    stray = sorted(keep - ids)
    if stray:
        raise MetricsError(f"keep set names unknown instance id {stray[0]!r}")
    kept_instances = [inst for inst in instances if inst.instance_id in keep]
    kept_predictions = {i: p for i, p in predictions.items() if i in keep}
    return evaluate_instances(kept_instances, kept_predictions, **kwargs)


def render_report(report: EvalReport) -> str:
    lines = [
        f"instances          {report.n}",
        f"token precision    {report.token.precision:.4f}",
        f"token recall       {report.token.recall:.4f}",
        f"token F1           {report.token.f1:.4f}",
        f"exact match        {report.exact_match_rate:.4f}",
        f"empty predictions  {report.n_empty}",
    ]
    if report.coref is not None:
        for name, score in (
            ("MUC", report.coref.muc),
            ("B3", report.coref.b_cubed),
            ("CEAF-phi4", report.coref.ceaf_phi4),
        ):
            lines.append(
                f"{name:<11}P {score.precision:.4f}  R {score.recall:.4f}  "
                f"F1 {score.f1:.4f}"
            )
        lines.append(f"coref macro F1     {report.coref.macro:.4f}")
    return "\n".join(lines) + "\n"


def write_report_records(report: EvalReport, stream: IO[str]) -> None:
    summary = {
        "kind": "summary",
        "n": report.n,
        "precision": report.token.precision,
        "recall": report.token.recall,
        "f1": report.token.f1,
        "exact_match": report.exact_match_rate,
        "empty": report.n_empty,
    }
    if report.coref is not None:
        summary["coref"] = {
            "muc": vars(report.coref.muc),
            "b_cubed": vars(report.coref.b_cubed),
            "ceaf_phi4": vars(report.coref.ceaf_phi4),
            "macro": report.coref.macro,
        }
    stream.write(json.dumps(summary, sort_keys=True) + "\n")
    for s in report.per_instance:
        stream.write(
            json.dumps(
                {
                    "kind": "instance",
                    "id": s.instance_id,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "exact": s.exact,
                    "empty": s.empty,
                },
                sort_keys=True,
            )
            + "\n"
        )

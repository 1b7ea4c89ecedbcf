import io
import random

import pytest

from elqa.analysis import (
    PeripheryCounts,
    analyze,
    direction_breakdown,
    periphery_analysis,
    question_mention_form,
    referential_form_breakdown,
    render_analysis,
    write_analysis_records,
)
from elqa.core import Direction, TokenSpan
from elqa.errors import MetricsError
from elqa.predictions import EMPTY_PREDICTION, SpanPrediction


def _gold_predictions(instances):
    return {i.instance_id: SpanPrediction(i.gold_contiguous, 1.0) for i in instances}


def test_periphery_perfect_predictions_count_everywhere(vpe_instances):
    contiguous = [i for i in vpe_instances if len(i.gold_answer) == len(i.gold_contiguous)]
    counts = periphery_analysis(contiguous, _gold_predictions(contiguous))
    assert counts.left_matches == counts.total
    assert counts.right_matches == counts.total
    assert counts.exact_matches == counts.total
    assert counts.empty_predictions == 0


def test_periphery_left_match_only(vpe_instances):
    inst = next(i for i in vpe_instances if i.instance_id == "vpe-v1")  # gold (2, 8)
    pred = {inst.instance_id: SpanPrediction(TokenSpan(2, 11), 0.0)}
    counts = periphery_analysis([inst], pred)
    assert (counts.left_matches, counts.right_matches, counts.exact_matches) == (1, 0, 0)


def test_periphery_all_empty(vpe_instances):
    counts = periphery_analysis(
        vpe_instances, {i.instance_id: EMPTY_PREDICTION for i in vpe_instances}
    )
    assert counts.left_matches == counts.right_matches == counts.exact_matches == 0
    assert counts.empty_predictions == counts.total == len(vpe_instances)


def test_periphery_discontiguous_gold_uses_hull_edges(vpe_instances):
    inst = next(i for i in vpe_instances if i.instance_id == "vpe-v6")  # gold {1,2,7,8,9}
    counts = periphery_analysis([inst], {inst.instance_id: SpanPrediction(TokenSpan(1, 10), 0)})
    assert counts.left_matches == 1 and counts.right_matches == 1
    assert counts.exact_matches == 0  # hull is not the discontiguous gold set


def test_periphery_invariant_enforced():
    with pytest.raises(MetricsError):
        PeripheryCounts(left_matches=0, right_matches=0, exact_matches=1,
                        empty_predictions=0, total=2)


def test_direction_rows_sum_to_total(vpe_instances, sluice_conversion):
    instances = list(vpe_instances) + list(sluice_conversion.instances)
    rows = direction_breakdown(instances, _gold_predictions(instances))
    assert sum(r.count for r in rows) == len(instances)
    directions = {r.direction for r in rows}
    assert Direction.FORWARD in directions  # sluice-s2


def test_direction_absent_rows_omitted(vpe_instances):
    backward_only = [
        i for i in vpe_instances if i.antecedent_direction is Direction.BACKWARD
    ]
    rows = direction_breakdown(backward_only, _gold_predictions(backward_only))
    assert [r.direction for r in rows] == [Direction.BACKWARD]


def test_direction_planted_errors_isolated(vpe_instances):
    predictions = {}
    for inst in vpe_instances:
        if inst.antecedent_direction is Direction.SAME_SENTENCE:
            wrong = TokenSpan(inst.gold_contiguous.end, inst.gold_contiguous.end + 1)
            predictions[inst.instance_id] = SpanPrediction(wrong, 0.0)
        else:
            predictions[inst.instance_id] = SpanPrediction(inst.gold_contiguous, 1.0)
    rows = {r.direction: r for r in direction_breakdown(vpe_instances, predictions)}
    assert rows[Direction.SAME_SENTENCE].token.f1 == 0.0
    assert rows[Direction.BACKWARD].token.recall == 1.0


def test_question_mention_form_rules(onto_corpus):
    instances, _ = onto_corpus
    forms = {question_mention_form(i) for i in instances}
    assert "she" in forms
    assert "the ..." in forms  # "the museum" groups as a definite description


def test_form_breakdown_counts_and_rates(onto_corpus):
    instances, _ = onto_corpus
    predictions = _gold_predictions(instances)
    rows = referential_form_breakdown(instances, predictions)
    assert sum(r.occurrences for r in rows) == len(instances)
    assert all(r.exact_match_rate == 1.0 for r in rows)
    # sorted by occurrences descending, then lexicographically
    occ = [r.occurrences for r in rows]
    assert occ == sorted(occ, reverse=True)


def test_form_breakdown_threshold(onto_corpus):
    instances, _ = onto_corpus
    rows = referential_form_breakdown(instances, _gold_predictions(instances),
                                      min_occurrences=100)
    assert rows == []


def test_form_breakdown_rejects_non_coref(vpe_instances):
    with pytest.raises(MetricsError):
        referential_form_breakdown(vpe_instances, _gold_predictions(vpe_instances))


def test_render_analysis_deterministic_and_empty_ok(onto_corpus):
    instances, _ = onto_corpus
    predictions = _gold_predictions(instances)
    a = render_analysis(analyze(instances, predictions))
    b = render_analysis(analyze(list(reversed(instances)), predictions))
    assert a == b
    empty = render_analysis(analyze([], {}))
    assert "0" in empty and "no instances" in empty


def test_analysis_records_round_numbers(onto_corpus):
    instances, _ = onto_corpus
    bundle = analyze(instances, _gold_predictions(instances))
    buf = io.StringIO()
    write_analysis_records(bundle, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 1 + len(bundle.directions) + len(bundle.forms)


def test_analysis_golden_file(vpe_instances, fixtures_dir):
    predictions = {}
    for k, inst in enumerate(sorted(vpe_instances, key=lambda i: i.instance_id)):
        if k % 3 == 0:
            predictions[inst.instance_id] = EMPTY_PREDICTION
        elif k % 3 == 1:
            predictions[inst.instance_id] = SpanPrediction(inst.gold_contiguous, 0.5)
        else:
            span = inst.gold_contiguous
            predictions[inst.instance_id] = SpanPrediction(
                TokenSpan(span.start, span.end + 1), 0.25
            )
    text = render_analysis(analyze(vpe_instances, predictions))
    golden = (fixtures_dir / "analysis.golden.txt").read_text(encoding="utf-8")
    assert text == golden


def test_random_prediction_sets_preserve_invariants(vpe_instances, sluice_conversion):
    instances = list(vpe_instances) + list(sluice_conversion.instances)
    rng = random.Random(23)
    for _ in range(100):
        predictions = {}
        for inst in instances:
            roll = rng.random()
            if roll < 0.25:
                predictions[inst.instance_id] = EMPTY_PREDICTION
            else:
                a = rng.randint(0, 10)
                b = rng.randint(a + 1, a + 6)
                predictions[inst.instance_id] = SpanPrediction(TokenSpan(a, b), roll)
        counts = periphery_analysis(instances, predictions)
        assert counts.exact_matches <= min(counts.left_matches, counts.right_matches)
        rows = direction_breakdown(instances, predictions)
        assert sum(r.count for r in rows) == len(instances)

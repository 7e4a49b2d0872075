from datetime import date

import pytest

from conftest import day, interpretation, minute, pred, stated, sym
from planrec.direct_inference import interpret_predicate
from planrec.discourse import (
    CORRECT,
    DIGRESS,
    Predicate,
    RelationKind,
    detect_cues,
    parse_transcript,
    relation_candidates,
)
from planrec.errors import TranscriptError


@pytest.fixture
def two_trips(travel_kb):
    return interpretation(
        stated(travel_kb, "GO", destination=sym("Sydney"), departure_date=day(2)),
        stated(travel_kb, "FLY", destination=sym("Hawaii"), departure_time=minute(660)),
    )


@pytest.fixture
def leave_adelaide(travel_kb):
    (frag,) = interpret_predicate(pred("LEAVE", origin=sym("Adelaide")), travel_kb)
    return frag


def _by_target(candidates):
    return {(c.kind, c.topic): c.probability for c in candidates}


def test_empty_interpretation_is_introduced(travel_kb, leave_adelaide):
    (only,) = relation_candidates(interpretation(), leave_adelaide, frozenset(), travel_kb)
    assert only.kind == RelationKind.INTRODUCTION
    assert only.topic is None
    assert only.probability == 1.0


def test_weights_decay_with_topic_distance(travel_kb, two_trips, leave_adelaide):
    probs = _by_target(relation_candidates(two_trips, leave_adelaide, frozenset(), travel_kb))
    assert probs[(RelationKind.ELABORATION, 1)] == pytest.approx(1.0 / 1.65)
    assert probs[(RelationKind.ELABORATION, 0)] == pytest.approx(0.5 / 1.65)
    assert probs[(RelationKind.INTRODUCTION, None)] == pytest.approx(0.15 / 1.65)
    assert round(probs[(RelationKind.ELABORATION, 1)], 3) == 0.606
    assert round(probs[(RelationKind.INTRODUCTION, None)], 3) == 0.091


def test_digression_prefers_the_earlier_trip(travel_kb, two_trips, leave_adelaide):
    probs = _by_target(
        relation_candidates(two_trips, leave_adelaide, frozenset({DIGRESS}), travel_kb)
    )
    assert probs[(RelationKind.ELABORATION, 0)] > probs[(RelationKind.ELABORATION, 1)]
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-9)


def test_introduction_is_reduced_when_elaboration_fits(travel_kb, two_trips, leave_adelaide):
    probs = _by_target(relation_candidates(two_trips, leave_adelaide, frozenset(), travel_kb))
    best = max(p for (kind, _), p in probs.items() if kind == RelationKind.ELABORATION)
    assert 0 < probs[(RelationKind.INTRODUCTION, None)] < best / 2


def test_conflicting_topic_gets_no_elaboration(travel_kb, two_trips):
    (frag,) = interpret_predicate(pred("FLY", destination=sym("Perth")), travel_kb)
    probs = _by_target(relation_candidates(two_trips, frag, frozenset(), travel_kb))
    assert (RelationKind.ELABORATION, 0) not in probs
    assert (RelationKind.ELABORATION, 1) not in probs
    assert probs[(RelationKind.INTRODUCTION, None)] == 1.0


def test_correction_needs_its_cue(travel_kb, two_trips):
    (frag,) = interpret_predicate(pred("FLY", destination=sym("Perth")), travel_kb)
    plain = relation_candidates(two_trips, frag, frozenset(), travel_kb)
    assert all(c.kind != RelationKind.CORRECTION for c in plain)

    cued = _by_target(relation_candidates(two_trips, frag, frozenset({CORRECT}), travel_kb))
    assert cued[(RelationKind.CORRECTION, 1)] > cued[(RelationKind.CORRECTION, 0)]
    assert sum(cued.values()) == pytest.approx(1.0, abs=1e-9)


def test_topic_pointer_boosts_its_topic(travel_kb, two_trips, leave_adelaide):
    plain = _by_target(relation_candidates(two_trips, leave_adelaide, frozenset(), travel_kb))
    pointed = _by_target(
        relation_candidates(two_trips, leave_adelaide, frozenset({"TOPIC:0"}), travel_kb)
    )
    assert pointed[(RelationKind.ELABORATION, 0)] > plain[(RelationKind.ELABORATION, 0)]


def test_adjust_hook_rescales_raw_weights(travel_kb, two_trips, leave_adelaide):
    def no_introductions(kind, topic, weight):
        return 0.0 if kind == RelationKind.INTRODUCTION else weight

    probs = _by_target(
        relation_candidates(
            two_trips, leave_adelaide, frozenset(), travel_kb, adjust=no_introductions
        )
    )
    assert (RelationKind.INTRODUCTION, None) not in probs
    assert probs[(RelationKind.ELABORATION, 1)] == pytest.approx(2 / 3)


def test_detect_cues():
    assert detect_cues(pred("DIGRESS")) == {DIGRESS}
    assert detect_cues(pred("CORRECT")) == {CORRECT}
    assert detect_cues(pred("LEAVE", origin=sym("Adelaide"))) == frozenset()
    assert detect_cues(pred("LEAVE", cues=["TOPIC:1"], origin=sym("Adelaide"))) == {"TOPIC:1"}


def test_predicate_record_round_trip():
    record = {
        "predicate": "GO",
        "args": {"destination": {"set": ["Sydney"]}},
        "meta": "WANT",
        "cues": ["DIGRESS"],
    }
    parsed = Predicate.from_record(record)
    assert parsed.args["destination"] == sym("Sydney")
    assert parsed.to_record() == record


def test_transcript_header_and_records():
    transcript = parse_transcript(
        [
            '{"reference_date": "2025-05-07"}',
            "",
            '{"predicate": "DIGRESS"}',
            '{"predicate": "LEAVE", "args": {"origin": {"set": ["Adelaide"]}}}',
        ]
    )
    assert transcript.reference_date == date(2025, 5, 7)
    assert [p.name for p in transcript.predicates] == ["DIGRESS", "LEAVE"]
    assert transcript.predicates[0].is_cue


@pytest.mark.parametrize(
    "lines, line_no",
    [
        (['{"predicate": "GO"}', '{"reference_date": "2025-05-07"}'], 2),
        (['{"predicate": "GO", "cues": ["BY-THE-WAY"]}'], 1),
        (['{"predicate": "GO", "cues": "DIGRESS"}'], 1),
        (['{"predicate": "GO"}', '{"predicate": "GO", "args": {}, "cues": 5}'], 2),
        (['{"predicate": "GO", "cues": [{"topic": 0}]}'], 1),
        (['{"predicate": "GO", "args": {"origin": {"set": []}}}'], 1),
        (['{"predicate": "GO"}', "{oops"], 2),
        (["[1, 2]"], 1),
    ],
)
def test_bad_transcripts_name_the_line(lines, line_no):
    with pytest.raises(TranscriptError) as info:
        parse_transcript(lines)
    assert info.value.line == line_no
    assert str(info.value).startswith(f"line {line_no}:")

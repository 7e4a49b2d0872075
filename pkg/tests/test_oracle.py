"""Exact-fraction enumeration of the direct phase, checked against the engine.

The enumerator knows the toy library by heart and recomputes every
(interpretation, reading, relation) triple with rational arithmetic. Only the
information-content factor is irrational; it enters as the Fraction of its
float value.
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import TOY_PARAMS, pred, sym, toy_raw, toy_streams
from planrec.agent import new_session, process_statement
from planrec.discourse import CORRECT, DIGRESS
from planrec.knowledge import kb_from_dict

TOY = kb_from_dict(toy_raw(), name="toy")

DECAY = Fraction(1, 2)
DAMPING = Fraction(1, 5)
BOOST = Fraction(3)
INTRO = Fraction(3, 20)
THRESHOLD = Fraction(1, 2)
TOLERANCE = Fraction(1, 10**12)
PRIORS = (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))
META = {
    "WANT": (Fraction(1, 5), Fraction(3, 5), Fraction(1, 5)),
    "MUST": (Fraction(1, 5), Fraction(3, 5), Fraction(1, 5)),
    "CAN": (Fraction(3, 5), Fraction(1, 5), Fraction(1, 5)),
}
UNKNOWN = math.log2(0.1 / 3)


def _plan(operator, values):
    return (operator, tuple(values.get(p) for p in TOY_PARAMS[operator]))


def _readings(statement):
    """[(plan-fragment, probability)] following the toy library's patterns and body."""
    args = {name: frozenset(value.symbols) for name, value in statement.args.items()}
    by_rule = {"precondition": [], "effect": [], "body": []}
    if statement.name == "AT":
        loc = args.get("loc")
        by_rule["precondition"] = [_plan("MOVE", {"src": loc}), _plan("STAY", {"loc": loc})]
        by_rule["effect"] = [_plan("MOVE", {"dst": loc})]
    elif statement.name in ("MOVE", "HOP"):
        # HOP refines MOVE, so a HOP statement never reads as MOVE
        by_rule["body"] = [_plan(statement.name, args)]
    elif statement.name == "STAY":
        by_rule["body"] = [_plan("STAY", args)]

    masses = META.get(statement.meta, PRIORS)
    weighted = [(rule, m) for rule, m in zip(("precondition", "effect", "body"), masses)]
    total = sum(m for rule, m in weighted if by_rule[rule])
    readings = []
    for rule, mass in weighted:
        for frag in by_rule[rule]:
            readings.append((frag, mass / total / len(by_rule[rule])))
    return readings


def _winner(first, second):
    if first == second:
        return first
    if {first, second} == {"MOVE", "HOP"}:
        return "HOP"
    return None


def _unify(plan, frag):
    operator = _winner(plan[0], frag[0])
    if operator is None:
        return None
    values = []
    for old, new in zip(plan[1], frag[1]):
        if old is None or new is None:
            values.append(old if new is None else new)
        elif old & new:
            values.append(old & new)
        else:
            return None
    return (operator, tuple(values))


def _correct(plan, frag):
    operator = _winner(plan[0], frag[0])
    if operator is None:
        return None
    return (operator, tuple(old if new is None else new for old, new in zip(plan[1], frag[1])))


def _relations(plans, frag, cues):
    if not plans:
        return [(("intro", None), Fraction(1))]
    pointed = {int(c.split(":")[1]) for c in cues if c.startswith("TOPIC:")}
    last = len(plans) - 1
    raw = []
    for topic in range(last, -1, -1):
        weight = DECAY ** (last - topic) * (BOOST if topic in pointed else 1)
        if _unify(plans[topic], frag) is not None:
            damped = DAMPING if DIGRESS in cues and topic == last else 1
            raw.append((("elab", topic), weight * damped))
        if CORRECT in cues and _winner(plans[topic][0], frag[0]) is not None:
            raw.append((("corr", topic), BOOST * weight))
    raw.append((("intro", None), INTRO))
    total = sum(w for _, w in raw)
    return [(rel, w / total) for rel, w in raw]


def _apply(plans, frag, rel):
    kind, topic = rel
    if kind == "intro":
        return plans + (frag,)
    merged = (_unify if kind == "elab" else _correct)(plans[topic], frag)
    if merged is None:
        return None
    return plans[:topic] + (merged,) + plans[topic + 1:]


def _normalise(dist):
    total = sum(dist.values())
    return {k: p / total for k, p in dist.items()}


def _prune(dist):
    dist = _normalise(dist)
    best = max(dist.values())
    return _normalise({k: p for k, p in dist.items() if p / best >= THRESHOLD - TOLERANCE})


def _ic(plans):
    return math.fsum(
        UNKNOWN if value is None else math.log2(1 / len(value))
        for _, values in plans
        for value in values
    )


def _inform(dist):
    norm = min(math.fsum([UNKNOWN] * sum(len(v) for _, v in plans)) for plans in dist)
    weighted = {
        plans: p * Fraction(min(1.0, max(0.0, 1.0 - _ic(plans) / norm)))
        for plans, p in dist.items()
    }
    if not any(weighted.values()):
        return dist
    return _normalise(weighted)


def enumerate_direct_phase(stream):
    live = {(): Fraction(1)}
    pending = frozenset()
    for statement in stream:
        cues = pending | statement.cues
        if statement.name in (DIGRESS, CORRECT) and not statement.args:
            pending = cues | {statement.name}
            continue
        pending = frozenset()
        combined = {}
        for plans, prior in live.items():
            for frag, reading in _readings(statement):
                for rel, weight in _relations(plans, frag, cues):
                    result = _apply(plans, frag, rel)
                    if result is not None:
                        combined[result] = combined.get(result, 0) + prior * reading * weight
        live = _prune(_inform(_prune(combined)))
    return {} if live == {(): Fraction(1)} else live


def _engine_key(interp):
    key = []
    for plan in interp.plans:
        values = tuple(
            frozenset(b.value.symbols) if b.defined else None for _, b in plan.params
        )
        key.append((plan.operator, values))
    return tuple(key)


def _engine_direct_phase(stream):
    session = new_session(TOY)
    for statement in stream:
        session = process_statement(session, statement)
    assert not session.diagnostics
    return {_engine_key(i): i.probability for i in session.live}


@settings(max_examples=200)
@given(toy_streams)
def test_engine_matches_exhaustive_enumeration(stream):
    expected = enumerate_direct_phase(stream)
    actual = _engine_direct_phase(stream)
    assert set(actual) == set(expected)
    for key, probability in expected.items():
        assert abs(actual[key] - float(probability)) < 1e-9, key


def test_enumerator_on_a_known_stream():
    stream = [pred("MOVE", src=sym("a")), pred("AT", loc=sym("b"))]
    move_a_to_b = (("MOVE", (frozenset({"a"}), frozenset({"b"}))),)
    assert enumerate_direct_phase(stream) == {move_a_to_b: 1}
    assert _engine_direct_phase(stream) == pytest.approx({move_a_to_b: 1.0})

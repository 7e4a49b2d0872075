import copy
import json

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from planrec.discourse import CORRECT, DIGRESS, Predicate
from planrec.helpers import bundled_path
from planrec.knowledge import (
    InferenceKind,
    IntInterval,
    KnowledgeBase,
    SymbolSet,
    kb_from_dict,
    load_kb,
)
from planrec.plans import Binding, Interpretation, new_plan

settings.register_profile(
    "ci",
    max_examples=1000,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

TRAVEL_KB_PATH = str(bundled_path("kb", "travel.json"))
EXAMPLE1_PATH = str(bundled_path("transcripts", "example1.jsonl"))
EXAMPLE2_PATH = str(bundled_path("transcripts", "example2.jsonl"))

TOY_KB = {
    "domains": {"place": {"values": ["a", "b", "c"]}},
    "operators": [
        {
            "name": "MOVE",
            "params": [
                {"name": "src", "domain": "place", "required": True},
                {"name": "dst", "domain": "place", "required": True},
            ],
            "preconditions": [{"predicate": "AT", "args": {"loc": "src"}}],
            "effects": [{"predicate": "AT", "args": {"loc": "dst"}}],
            "body": ["HOP"],
        },
        {
            "name": "HOP",
            "params": [
                {"name": "src", "domain": "place", "required": True},
                {"name": "dst", "domain": "place", "required": True},
            ],
        },
        {
            "name": "STAY",
            "params": [{"name": "loc", "domain": "place", "required": True}],
            "preconditions": [{"predicate": "AT", "args": {"loc": "loc"}}],
        },
    ],
    "rules": [
        {
            "name": "hop-chains",
            "source": "DomainKnowledge",
            "operators": ["MOVE", "HOP"],
            "target": {"plan": "each", "param": "src"},
            "requires": [{"plan": "previous", "param": "dst"}],
            "value": {"copy": {"plan": "previous", "param": "dst"}},
        },
        {
            "name": "usual-destination",
            "source": "UserModel",
            "operators": ["MOVE"],
            "target": {"plan": "each", "param": "dst"},
            "value": {"constant": {"set": ["b"]}},
        },
        {
            "name": "stay-home",
            "source": "CommonSense",
            "operators": ["STAY"],
            "target": {"plan": "first", "param": "loc"},
            "value": {"constant": {"set": ["a"]}},
        },
    ],
    "config": {},
}


def travel_raw():
    with open(TRAVEL_KB_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


def toy_raw():
    return copy.deepcopy(TOY_KB)


def sym(*names):
    return SymbolSet(frozenset(names))


def day(lower, upper=None):
    return IntInterval(lower, lower if upper is None else upper, "day")


def minute(lower, upper=None):
    return IntInterval(lower, lower if upper is None else upper, "minute")


def pred(name, meta=None, cues=(), **args):
    return Predicate(name=name, args=args, meta=meta, cues=frozenset(cues))


def stated(kb, operator, kind=InferenceKind.USER_STATEMENT, **values):
    """A plan whose given params carry ``kind`` tags; the rest are undefined."""
    tag = kb.tag(kind)
    return new_plan(kb, operator, {p: Binding(v, tag) for p, v in values.items()})


def interpretation(*plans, probability=1.0):
    return Interpretation(plans=tuple(plans), probability=probability)


@pytest.fixture(scope="session")
def travel_kb() -> KnowledgeBase:
    return load_kb(TRAVEL_KB_PATH)


@pytest.fixture(scope="session")
def toy_kb() -> KnowledgeBase:
    return kb_from_dict(toy_raw(), name="toy")


# Random material over the toy knowledge base

PLACES = ("a", "b", "c")
TOY_ARGS = {"AT": ("loc",), "MOVE": ("src", "dst"), "HOP": ("src", "dst"), "STAY": ("loc",)}
TOY_PARAMS = {"MOVE": ("src", "dst"), "HOP": ("src", "dst"), "STAY": ("loc",)}

place_sets = st.sets(st.sampled_from(PLACES), min_size=1).map(frozenset)


@st.composite
def toy_predicates(draw):
    name = draw(st.sampled_from(sorted(TOY_ARGS)))
    names = draw(st.lists(st.sampled_from(TOY_ARGS[name]), unique=True))
    args = {n: SymbolSet(draw(place_sets)) for n in names}
    meta = draw(st.sampled_from([None, "WANT", "CAN", "MUST"]))
    cues = draw(st.sets(st.sampled_from([DIGRESS, CORRECT, "TOPIC:0", "TOPIC:1"]), max_size=2))
    return Predicate(name=name, args=args, meta=meta, cues=frozenset(cues))


toy_statements = st.one_of(
    toy_predicates(),
    toy_predicates(),
    st.sampled_from([Predicate(DIGRESS), Predicate(CORRECT)]),
)
toy_streams = st.lists(toy_statements, min_size=1, max_size=4)

_KINDS = [k for k in InferenceKind if k != InferenceKind.UNDEFINED]


@st.composite
def toy_plans(draw, kb):
    operator = draw(st.sampled_from(sorted(TOY_PARAMS)))
    values = {}
    for name in TOY_PARAMS[operator]:
        if draw(st.booleans()):
            kind = draw(st.sampled_from(_KINDS))
            values[name] = Binding(SymbolSet(draw(place_sets)), kb.tag(kind))
    return new_plan(kb, operator, values)


def toy_interpretations(kb, max_plans=3):
    return st.lists(toy_plans(kb), min_size=1, max_size=max_plans).map(
        lambda plans: Interpretation(plans=tuple(plans))
    )

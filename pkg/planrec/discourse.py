"""Parsed statements, cue markers and discourse-relation candidates."""

from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple

import structlog

from planrec.errors import ParseError, TranscriptError
from planrec.knowledge import KnowledgeBase, ParamValue, parse_value
from planrec.plans import Conflict, Interpretation, PlanFragment, unify
from planrec.utils.data_utils import normalize_weights
from planrec.utils.file_operation import iter_json_lines, read_lines

logger = structlog.get_logger(__name__)

DIGRESS = "DIGRESS"
CORRECT = "CORRECT"
TOPIC_PREFIX = "TOPIC:"
CUE_PREDICATES = (DIGRESS, CORRECT)


def topic_pointers(cues: FrozenSet[str]) -> FrozenSet[int]:
    return frozenset(int(c[len(TOPIC_PREFIX):]) for c in cues if c.startswith(TOPIC_PREFIX))


def _check_cue(cue: Any) -> str:
    if cue in CUE_PREDICATES:
        return cue
    if isinstance(cue, str) and cue.startswith(TOPIC_PREFIX):
        index = cue[len(TOPIC_PREFIX):]
        if index.isdigit():
            return cue
    raise ValueError(f"unknown cue marker {cue!r}")


@dataclass(frozen=True)
class Predicate:
    name: str
    args: Mapping[str, ParamValue] = field(default_factory=dict)
    meta: Optional[str] = None
    cues: FrozenSet[str] = frozenset()

    @property
    def is_cue(self) -> bool:
        return self.name in CUE_PREDICATES and not self.args

    @classmethod
    def from_record(cls, record: Mapping[str, Any], line: Optional[int] = None) -> "Predicate":
        name = record.get("predicate")
        if not isinstance(name, str) or not name:
            raise TranscriptError("missing 'predicate' name", line)
        raw_args = record.get("args") or {}
        if not isinstance(raw_args, dict):
            raise TranscriptError("'args' must be an object", line)
        raw_cues = record.get("cues") or []
        if not isinstance(raw_cues, list):
            raise TranscriptError("'cues' must be a list", line)
        try:
            args = {k: parse_value(v, f"{name}.{k}") for k, v in raw_args.items()}
            cues = frozenset(_check_cue(c) for c in raw_cues)
        except (ParseError, ValueError) as exc:
            raise TranscriptError(str(exc), line)
        meta = record.get("meta")
        if meta is not None and not isinstance(meta, str):
            raise TranscriptError("'meta' must be a string or null", line)
        return cls(name=name, args=args, meta=meta, cues=cues)

    def to_record(self) -> Dict[str, Any]:
        return {
            "predicate": self.name,
            "args": {k: v.to_spec() for k, v in self.args.items()},
            "meta": self.meta,
            "cues": sorted(self.cues),
        }


@dataclass(frozen=True)
class Transcript:
    predicates: Tuple[Predicate, ...]
    reference_date: Optional[date] = None


def parse_transcript(lines: List[str]) -> Transcript:
    """Parse line-delimited records; an optional header must come first."""
    predicates: List[Predicate] = []
    reference_date = None
    for position, (number, record) in enumerate(iter_json_lines(lines)):
        if "reference_date" in record:
            if position != 0:
                raise TranscriptError("header record must be the first record", number)
            try:
                reference_date = date.fromisoformat(record["reference_date"])
            except (TypeError, ValueError):
                raise TranscriptError("reference_date must be an ISO date", number)
            continue
        predicates.append(Predicate.from_record(record, number))
    return Transcript(predicates=tuple(predicates), reference_date=reference_date)


def read_transcript(path: str) -> Transcript:
    return parse_transcript(read_lines(path))


def detect_cues(pred: Predicate) -> FrozenSet[str]:
    """Cue markers carried by ``pred``; a bare cue predicate contributes its own name."""
    if pred.is_cue:
        return frozenset({pred.name}) | pred.cues
    return pred.cues


class RelationKind(str, Enum):
    ELABORATION = "Elaboration"
    INTRODUCTION = "Introduction"
    CORRECTION = "Correction"


@dataclass(frozen=True)
class RelationCandidate:
    kind: RelationKind
    topic: Optional[int]
    probability: float

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "topic": self.topic, "probability": self.probability}


WeightAdjust = Callable[[RelationKind, Optional[int], float], float]


def relation_candidates(
    interp: Interpretation,
    frag: PlanFragment,
    cues: FrozenSet[str],
    kb: KnowledgeBase,
    adjust: Optional[WeightAdjust] = None,
) -> List[RelationCandidate]:
    if not interp.plans:
        return [RelationCandidate(RelationKind.INTRODUCTION, None, 1.0)]

    cfg = kb.config
    pointed = topic_pointers(cues)
    last = len(interp.plans) - 1
    raw: List[Tuple[RelationKind, Optional[int], float]] = []

    for topic in range(last, -1, -1):
        plan = interp.plans[topic]
        decay = cfg.elaboration_decay ** (last - topic)
        boost = cfg.cue_boost if topic in pointed else 1.0

        if not isinstance(unify(plan, frag, kb), Conflict):
            weight = decay * boost
            if DIGRESS in cues and topic == last:
                weight *= cfg.digression_damping
            raw.append((RelationKind.ELABORATION, topic, weight))

        if CORRECT in cues and kb.more_specific(plan.operator, frag.operator) is not None:
            raw.append((RelationKind.CORRECTION, topic, cfg.cue_boost * decay * boost))

    raw.append((RelationKind.INTRODUCTION, None, cfg.intro_weight))

    if adjust is not None:
        raw = [(kind, topic, adjust(kind, topic, weight)) for kind, topic, weight in raw]
    raw = [entry for entry in raw if entry[2] > 0.0]

    probabilities = normalize_weights(weight for _, _, weight in raw)
    candidates = [
        RelationCandidate(kind, topic, float(p))
        for (kind, topic, _), p in zip(raw, probabilities)
    ]
    logger.debug(
        "relation.candidates",
        operator=frag.operator,
        cues=sorted(cues),
        candidates=[(c.kind.value, c.topic, round(c.probability, 6)) for c in candidates],
    )
    return candidates

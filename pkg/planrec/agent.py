from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Dict, FrozenSet, List, Optional, Tuple, Union

import structlog
from langgraph.graph import END, START, StateGraph
from typing_extensions import TypedDict

from planrec.direct_inference import combine, interpret_predicate, prune_with_report
from planrec.discourse import Predicate, Transcript, detect_cues
from planrec.errors import EmptySet, NoInterpretation
from planrec.helpers import bundled_path, env_overrides
from planrec.indirect_inference import saturate
from planrec.knowledge import KnowledgeBase, configure_kb, load_kb
from planrec.plans import Interpretation, PlanFragment, Status
from planrec.scoring import ICReport, ic_interpretation, update_factors, update_probabilities

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class TraceEntry:
    statement: int
    event: str
    interpretation: str = ""
    probability: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "statement": self.statement,
            "event": self.event,
            "interpretation": self.interpretation,
            "probability": self.probability,
        }


@dataclass(frozen=True)
class SessionDiagnostic:
    statement: int
    kind: str
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {"statement": self.statement, "kind": self.kind, "message": self.message}


@dataclass(frozen=True)
class Session:
    """The discourse so far: live interpretations P(I_j | S) and everything logged about them."""

    kb: KnowledgeBase
    live: Tuple[Interpretation, ...] = ()
    pending_cues: FrozenSet[str] = frozenset()
    counter: int = 0
    trace: Tuple[TraceEntry, ...] = ()
    diagnostics: Tuple[SessionDiagnostic, ...] = ()


@dataclass(frozen=True)
class RankedInterpretation:
    interpretation: Interpretation
    report: ICReport
    factor: float


@dataclass(frozen=True)
class FinalResult:
    ranked: Tuple[RankedInterpretation, ...]
    icnorm: Optional[float]
    trace: Tuple[TraceEntry, ...] = ()


class State(TypedDict, total=False):
    session: Session
    predicate: Predicate
    statement: int
    cues: FrozenSet[str]
    fragments: List[PlanFragment]
    candidates: List[Interpretation]
    trace: List[TraceEntry]
    failure: Optional[SessionDiagnostic]


def _entries(statement: int, event: str, items: List[Interpretation]) -> List[TraceEntry]:
    return [TraceEntry(statement, event, i.describe(), i.probability) for i in items]


# Step 1: cue detection; bare cue predicates only update the pending set
def detect_statement_cues(state: State):
    session = state["session"]
    pred = state["predicate"]
    statement = session.counter + 1
    cues = session.pending_cues | detect_cues(pred)
    return {"statement": statement, "cues": cues, "trace": [], "failure": None}


def record_cue(state: State):
    session = state["session"]
    logger.info("statement.cue_pending", statement=state["statement"], cues=sorted(state["cues"]))
    entry = TraceEntry(state["statement"], "cue", ",".join(sorted(state["cues"])))
    return {
        "session": replace(
            session,
            pending_cues=state["cues"],
            counter=state["statement"],
            trace=session.trace + (entry,),
        )
    }


def route_statement(state: State) -> str:
    return "record_cue" if state["predicate"].is_cue else "direct_inference"


# Step 2: direct inference, P(i_k | s)
def direct_inference(state: State):
    session = state["session"]
    try:
        fragments = interpret_predicate(state["predicate"], session.kb, state["statement"])
    except NoInterpretation as exc:
        logger.warning("statement.no_interpretation", statement=state["statement"], reason=str(exc))
        return {"failure": SessionDiagnostic(state["statement"], "NoInterpretation", str(exc))}
    return {"fragments": fragments}


def route_after_direct(state: State) -> str:
    return "commit" if state.get("failure") else "combine"


# Step 3: Bayes combination with the live set
def combine_with_live(state: State):
    session = state["session"]
    try:
        candidates = combine(
            list(session.live), state["fragments"], session.kb, state["cues"]
        )
    except EmptySet as exc:
        logger.warning("statement.empty_set", statement=state["statement"], reason=str(exc))
        return {"failure": SessionDiagnostic(state["statement"], "EmptySet", str(exc))}
    return {
        "candidates": candidates,
        "trace": state["trace"] + _entries(state["statement"], "candidate", candidates),
    }


def route_after_combine(state: State) -> str:
    return "commit" if state.get("failure") else "prune_direct"


def _prune(state: State, threshold: float):
    result = prune_with_report(state["candidates"], threshold)
    return {
        "candidates": result.kept,
        "trace": state["trace"] + _entries(state["statement"], "dropped", result.dropped),
    }


def prune_direct(state: State):
    return _prune(state, state["session"].kb.config.threshold_direct)


# Step 4: information-content reweighting after the direct phase
def information_update(state: State):
    return {"candidates": update_probabilities(state["candidates"], state["session"].kb)}


def route_after_informed(state: State) -> str:
    per_statement = state["session"].kb.config.indirect_mode == "per-statement"
    return "indirect_inference" if per_statement else "commit"


def indirect_inference(state: State):
    kb = state["session"].kb
    saturated = [saturate(i, kb) for i in state["candidates"]]
    state = {**state, "candidates": update_probabilities(saturated, kb)}
    return _prune(state, kb.config.threshold_direct)


def commit(state: State):
    session = state["session"]
    statement = state["statement"]
    trace = session.trace + tuple(state.get("trace") or ())
    failure = state.get("failure")
    if failure is not None:
        return {
            "session": replace(
                session,
                pending_cues=frozenset(),
                counter=statement,
                trace=trace + (TraceEntry(statement, "diagnostic", failure.message),),
                diagnostics=session.diagnostics + (failure,),
            )
        }

    live = tuple(state["candidates"])
    logger.info(
        "statement.processed",
        statement=statement,
        predicate=state["predicate"].name,
        live=len(live),
    )
    return {
        "session": replace(
            session,
            live=live,
            pending_cues=frozenset(),
            counter=statement,
            trace=trace + tuple(_entries(statement, "kept", list(live))),
        )
    }


def create_workflow():
    # per-statement pipeline as a LangGraph workflow
    builder = StateGraph(State)
    builder.add_node("detect_cues", detect_statement_cues)
    builder.add_node("record_cue", record_cue)
    builder.add_node("direct_inference", direct_inference)
    builder.add_node("combine", combine_with_live)
    builder.add_node("prune_direct", prune_direct)
    builder.add_node("information_update", information_update)
    builder.add_node("prune_informed", prune_direct)
    builder.add_node("indirect_inference", indirect_inference)
    builder.add_node("commit", commit)

    builder.add_edge(START, "detect_cues")
    builder.add_conditional_edges("detect_cues", route_statement, ["record_cue", "direct_inference"])
    builder.add_edge("record_cue", END)
    builder.add_conditional_edges("direct_inference", route_after_direct, ["combine", "commit"])
    builder.add_conditional_edges("combine", route_after_combine, ["prune_direct", "commit"])
    builder.add_edge("prune_direct", "information_update")
    builder.add_edge("information_update", "prune_informed")
    builder.add_conditional_edges(
        "prune_informed", route_after_informed, ["indirect_inference", "commit"]
    )
    builder.add_edge("indirect_inference", "commit")
    builder.add_edge("commit", END)
    return builder.compile()


@lru_cache(maxsize=1)
def _workflow():
    return create_workflow()


def new_session(kb: KnowledgeBase) -> Session:
    return Session(kb=kb)


def process_statement(session: Session, pred: Predicate) -> Session:
    output = _workflow().invoke({"session": session, "predicate": pred})
    return output["session"]


def finalize(session: Session) -> FinalResult:
    """Saturate the live set in rank order, reweight by information content and prune."""
    kb = session.kb
    if not session.live:
        return FinalResult(ranked=(), icnorm=None, trace=session.trace)

    saturated: List[Interpretation] = []
    done = False
    for interp in session.live:
        if done:
            saturated.append(interp)
            continue
        interp = saturate(interp, kb)
        saturated.append(interp)
        done = kb.config.stop_on_complete and interp.status == Status.COMPLETE

    update = update_factors(saturated, kb)
    norm = update.icnorm if update is not None else None
    factors = update.factors if update is not None else (1.0,) * len(saturated)
    by_signature = {i.signature(): f for i, f in zip(saturated, factors)}
    reweighted = update_probabilities(saturated, kb)

    pruned = prune_with_report(reweighted, kb.config.threshold_indirect)
    statement = session.counter
    trace = session.trace + tuple(_entries(statement, "final-dropped", pruned.dropped))

    ranked = []
    for interp in pruned.kept:
        report = ic_interpretation(interp, kb)
        if norm is not None:
            report = replace(report, icnorm=norm)
        ranked.append(RankedInterpretation(interp, report, by_signature[interp.signature()]))
    trace = trace + tuple(_entries(statement, "final", pruned.kept))
    return FinalResult(ranked=tuple(ranked), icnorm=norm, trace=trace)


def run_transcript(kb: KnowledgeBase, predicates: List[Predicate]) -> Tuple[Session, FinalResult]:
    session = new_session(kb)
    for pred in predicates:
        session = process_statement(session, pred)
    return session, finalize(session)


class Agent:
    def __init__(self, kb_path: Optional[str] = None, **overrides: Any):
        self.kb_path = kb_path or str(bundled_path("kb", "travel.json"))
        self.overrides = overrides
        self.workflow = None
        self.kb: Optional[KnowledgeBase] = None

    def initialize(self):
        """Load the knowledge base, apply env and explicit overrides, build the workflow"""
        self.workflow = _workflow()
        kb = load_kb(self.kb_path)
        self.kb = configure_kb(kb, env_overrides(), self.overrides)

    def process(
        self, transcript: Union[Transcript, List[Predicate]]
    ) -> Tuple[Session, FinalResult]:
        """Run every statement through the workflow and finalize"""
        if self.workflow is None or self.kb is None:
            raise RuntimeError("Agent not initialized. Call initialize() first.")
        predicates = (
            list(transcript.predicates) if isinstance(transcript, Transcript) else transcript
        )
        return run_transcript(self.kb, predicates)

"""Direct inference: predicate readings, relation application, Bayes combination, pruning."""

from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

import structlog

from planrec.discourse import (
    Predicate,
    RelationCandidate,
    RelationKind,
    WeightAdjust,
    relation_candidates,
)
from planrec.errors import EmptySet, NoInterpretation
from planrec.knowledge import (
    RULE_KINDS,
    InferenceKind,
    KnowledgeBase,
    Operator,
    ParamValue,
)
from planrec.plans import (
    Binding,
    Conflict,
    Interpretation,
    PlanFragment,
    correct,
    plan_from_fragment,
    unify,
)
from planrec.utils.data_utils import normalize_weights

logger = structlog.get_logger(__name__)

PRUNE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Invalid:
    reason: str


@dataclass(frozen=True)
class PruneResult:
    kept: List[Interpretation]
    dropped: List[Interpretation]


def _bind(
    kb: KnowledgeBase, op: Operator, mapping: Dict[str, str], args: Dict[str, ParamValue]
) -> Optional[Dict[str, ParamValue]]:
    """Map predicate arguments onto operator params; None when any argument is not admitted."""
    bound = {}
    for arg, value in args.items():
        param = mapping.get(arg)
        decl = op.param(param) if param is not None else None
        if decl is None or not kb.domains[decl.domain].admits(value):
            return None
        bound[param] = value
    return bound


def _matches(pred: Predicate, kb: KnowledgeBase, rule: str) -> List[Tuple[str, Dict[str, ParamValue]]]:
    args = dict(pred.args)
    found = []
    if rule in ("precondition", "effect"):
        for op in kb.operators:
            for pattern in op.patterns(rule):
                if pattern.predicate != pred.name:
                    continue
                bound = _bind(kb, op, dict(pattern.args), args)
                if bound is not None:
                    found.append((op.name, bound))
                    break
        return found

    for op in kb.operators:
        if op.name != pred.name and pred.name not in op.body:
            continue
        bound = _bind(kb, op, {p.name: p.name for p in op.params}, args)
        if bound is not None:
            found.append((op.name, bound))
    names = {name for name, _ in found}
    return [
        (name, bound)
        for name, bound in found
        if not (kb.body_closure(name) & (names - {name}))
    ]


def interpret_predicate(
    pred: Predicate, kb: KnowledgeBase, statement: int = 0
) -> List[PlanFragment]:
    """Every operator reading of ``pred`` with its probability P(i_k | s)."""
    cfg = kb.config
    matches = {rule: _matches(pred, kb, rule) for rule in RULE_KINDS}
    successful = [rule for rule in RULE_KINDS if matches[rule]]
    if not successful:
        raise NoInterpretation(f"no operator explains {pred.name}")

    masses = dict(zip(RULE_KINDS, cfg.rule_masses(pred.meta)))
    rule_mass = dict(
        zip(successful, normalize_weights(masses[rule] for rule in successful))
    )

    tag = kb.tag(InferenceKind.USER_STATEMENT)
    fragments = []
    for rule in successful:
        weights = normalize_weights(
            cfg.operator_weights.get(name, 1.0) for name, _ in matches[rule]
        )
        for (name, bound), share in zip(matches[rule], weights):
            fragments.append(
                PlanFragment(
                    operator=name,
                    bindings={p: Binding(v, tag) for p, v in bound.items()},
                    rule=rule,
                    probability=float(rule_mass[rule] * share),
                    statement=statement,
                )
            )
    return fragments


def apply_relation(
    interp: Interpretation,
    frag: PlanFragment,
    rel: RelationCandidate,
    kb: KnowledgeBase,
) -> Union[Interpretation, Invalid]:
    plans = list(interp.plans)
    if rel.kind == RelationKind.INTRODUCTION:
        plans.append(plan_from_fragment(kb, frag))
    else:
        if rel.topic is None or not 0 <= rel.topic < len(plans):
            return Invalid(f"{rel.kind.value} names no existing topic")
        merge = unify if rel.kind == RelationKind.ELABORATION else correct
        result = merge(plans[rel.topic], frag, kb)
        if isinstance(result, Conflict):
            return Invalid(result.reason)
        plans[rel.topic] = result
    return replace(interp, plans=tuple(plans), history=interp.history + (rel,))


def combine(
    live: List[Interpretation],
    frags: List[PlanFragment],
    kb: KnowledgeBase,
    cues: FrozenSet[str] = frozenset(),
    adjust: Optional[WeightAdjust] = None,
) -> List[Interpretation]:
    """P(I_jkm | S') = alpha * P(I_j | S) * P(i_k | s) * P(R_m | i_k, I_j), coalesced by structure."""
    priors = live or [Interpretation()]
    merged: Dict[Tuple, Interpretation] = {}
    mass: Dict[Tuple, float] = {}

    for interp in priors:
        for frag in frags:
            for rel in relation_candidates(interp, frag, cues, kb, adjust):
                result = apply_relation(interp, frag, rel, kb)
                if isinstance(result, Invalid):
                    continue
                key = result.signature()
                if key not in merged:
                    merged[key] = result
                    mass[key] = 0.0
                mass[key] += interp.probability * frag.probability * rel.probability

    if not merged:
        raise EmptySet("every relation candidate was invalid")

    keys = list(merged)
    probabilities = normalize_weights(mass[k] for k in keys)
    return [merged[k].with_probability(p) for k, p in zip(keys, probabilities)]


def prune_with_report(items: List[Interpretation], threshold: float) -> PruneResult:
    if not items:
        return PruneResult([], [])
    probabilities = normalize_weights(i.probability for i in items)
    best = probabilities.max()
    keep = probabilities / best >= threshold - PRUNE_TOLERANCE

    dropped = [items[i] for i in range(len(items)) if not keep[i]]
    survivors = [(i, p) for i, p in enumerate(probabilities) if keep[i]]
    rescaled = normalize_weights(p for _, p in survivors)
    ranked = sorted(zip(survivors, rescaled), key=lambda entry: (-entry[1], entry[0][0]))
    kept = [items[i].with_probability(p) for (i, _), p in ranked]

    for interp in dropped:
        logger.info(
            "prune.dropped",
            threshold=threshold,
            probability=round(float(interp.probability), 6),
            interpretation=interp.describe(),
        )
    return PruneResult(kept, dropped)


def normalize_and_prune(items: List[Interpretation], threshold: float) -> List[Interpretation]:
    """Keep interpretations with P/P_max >= threshold, renormalised and ranked."""
    return prune_with_report(items, threshold).kept

"""Indirect inference: strength-gated gap filling from the rule base."""

from dataclasses import replace
from typing import FrozenSet, List, Optional, Set, Tuple

import structlog

from planrec.knowledge import (
    Constant,
    Copy,
    IndirectRule,
    IntInterval,
    KnowledgeBase,
    Lookup,
    ParamRef,
    ParamValue,
    Shift,
)
from planrec.plans import Binding, Interpretation, Status
from planrec.scoring import completion_check, ic_param

logger = structlog.get_logger(__name__)

Slot = Tuple[int, str]


def _plan_index(ref_plan: str, at: int, count: int) -> Optional[int]:
    index = {
        "self": at,
        "previous": at - 1,
        "next": at + 1,
        "first": 0,
        "last": count - 1,
    }[ref_plan]
    return index if 0 <= index < count else None


def resolve(interp: Interpretation, ref: ParamRef, at: int) -> Optional[Binding]:
    index = _plan_index(ref.plan, at, len(interp.plans))
    if index is None:
        return None
    return interp.plans[index].binding(ref.param)


def _defined(interp: Interpretation, ref: ParamRef, at: int) -> Optional[ParamValue]:
    binding = resolve(interp, ref, at)
    if binding is None or not binding.defined:
        return None
    return binding.value


def _key(interp: Interpretation, refs: Tuple[ParamRef, ...], at: int) -> Optional[Tuple[str, ...]]:
    key = []
    for ref in refs:
        value = _defined(interp, ref, at)
        symbol = value.single() if value is not None else None
        if symbol is None:
            return None
        key.append(symbol)
    return tuple(key)


def evaluate(rule: IndirectRule, interp: Interpretation, at: int) -> Optional[ParamValue]:
    expr = rule.value
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, Copy):
        return _defined(interp, expr.ref, at)
    if isinstance(expr, Lookup):
        key = _key(interp, expr.keys, at)
        return expr.entries.get(key) if key is not None else None
    if isinstance(expr, Shift):
        base = _defined(interp, expr.base, at)
        key = _key(interp, expr.keys, at)
        if not isinstance(base, IntInterval) or key is None or key not in expr.entries:
            return None
        return base.shift(expr.entries[key])
    return None


def _positions(rule: IndirectRule, count: int) -> List[int]:
    if count == 0:
        return []
    if rule.target_plan == "first":
        return [0]
    if rule.target_plan == "last":
        return [count - 1]
    return list(range(count))


def _applies(rule: IndirectRule, interp: Interpretation, at: int) -> bool:
    plan = interp.plans[at]
    if rule.operators and plan.operator not in rule.operators:
        return False
    if plan.binding(rule.target_param) is None:
        return False
    if any(_defined(interp, ref, at) is None for ref in rule.requires):
        return False
    for left, right in rule.same:
        a, b = _defined(interp, left, at), _defined(interp, right, at)
        if a is None or a != b:
            return False
    return True


def _apply(
    interp: Interpretation,
    rule: IndirectRule,
    kb: KnowledgeBase,
    locked: FrozenSet[Slot] = frozenset(),
) -> Tuple[Interpretation, List[Slot]]:
    tag = kb.tag(rule.source)
    changed: List[Slot] = []
    for at in _positions(rule, len(interp.plans)):
        slot = (at, rule.target_param)
        if slot in locked or not _applies(rule, interp, at):
            continue
        value = evaluate(rule, interp, at)
        plan = interp.plans[at]
        if value is None or not kb.domain_of(plan.operator, rule.target_param).admits(value):
            continue
        current = plan.binding(rule.target_param)
        if tag.strength < current.tag.strength or value == current.value:
            continue
        if ic_param(value, tag) < ic_param(current.value, current.tag):
            continue

        plans = list(interp.plans)
        plans[at] = plan.with_binding(rule.target_param, Binding(value, tag))
        interp = replace(interp, plans=tuple(plans))
        changed.append(slot)
        logger.debug(
            "rule.applied",
            rule=rule.name,
            plan=at,
            param=rule.target_param,
            value=value.display(),
        )
    return interp, changed


def try_rule(
    interp: Interpretation, rule: IndirectRule, kb: KnowledgeBase
) -> Optional[Interpretation]:
    """Apply ``rule`` at every plan it fits; None when nothing changed."""
    result, changed = _apply(interp, rule, kb)
    return result if changed else None


def rule_order(kb: KnowledgeBase) -> List[IndirectRule]:
    """Strongest source first, knowledge-base order within equal strength."""
    indexed = list(enumerate(kb.rules))
    indexed.sort(key=lambda entry: (-kb.tag(entry[1].source).strength, entry[0]))
    return [rule for _, rule in indexed]


def saturate(interp: Interpretation, kb: KnowledgeBase) -> Interpretation:
    if completion_check(interp, kb) == Status.COMPLETE:
        return replace(interp, status=Status.COMPLETE)

    rules = rule_order(kb)
    slots = sum(len(plan.params) for plan in interp.plans)
    pass_limit = max(1, len(rules) * slots)

    for _ in range(pass_limit):
        locked: Set[Slot] = set()
        for rule in rules:
            interp, changed = _apply(interp, rule, kb, frozenset(locked))
            locked.update(changed)
        status = completion_check(interp, kb, changed=bool(locked))
        if status != Status.IN_PROGRESS:
            return replace(interp, status=status)

    logger.warning("saturate.pass_limit", passes=pass_limit, interpretation=interp.describe())
    return replace(interp, status=Status.STALLED)

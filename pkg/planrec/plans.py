"""Plans, fragments and interpretations, plus parameter-level unification."""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Dict, Mapping, Optional, Tuple, Union

from planrec.knowledge import (
    InferenceKind,
    KnowledgeBase,
    ParamValue,
    StrengthTag,
    Undefined,
)

if TYPE_CHECKING:
    from planrec.discourse import RelationCandidate


class Status(str, Enum):
    IN_PROGRESS = "InProgress"
    COMPLETE = "Complete"
    STALLED = "Stalled"


@dataclass(frozen=True)
class Binding:
    value: ParamValue
    tag: StrengthTag

    @property
    def defined(self) -> bool:
        return self.value.defined


@dataclass(frozen=True)
class Plan:
    """An operator instance; ``params`` follows the operator's declaration order."""

    operator: str
    params: Tuple[Tuple[str, Binding], ...]
    origins: Tuple[int, ...] = ()

    def binding(self, name: str) -> Optional[Binding]:
        for param, binding in self.params:
            if param == name:
                return binding
        return None

    @property
    def bindings(self) -> Dict[str, Binding]:
        return dict(self.params)

    def with_binding(self, name: str, binding: Binding) -> "Plan":
        return replace(
            self,
            params=tuple((p, binding if p == name else b) for p, b in self.params),
        )

    def signature(self) -> Tuple:
        return (
            self.operator,
            tuple((p, b.value, b.tag.kind) for p, b in self.params),
        )

    def describe(self) -> str:
        shown = [f"{p}={b.value.display()}" for p, b in self.params if b.defined]
        return f"{self.operator}({', '.join(shown)})"


@dataclass(frozen=True)
class PlanFragment:
    """A direct-inference reading of one predicate; every binding is user-stated."""

    operator: str
    bindings: Mapping[str, Binding]
    rule: str
    probability: float
    statement: int = 0


@dataclass(frozen=True)
class Interpretation:
    plans: Tuple[Plan, ...] = ()
    probability: float = 1.0
    history: Tuple["RelationCandidate", ...] = ()
    status: Status = Status.IN_PROGRESS

    def signature(self) -> Tuple:
        return tuple(plan.signature() for plan in self.plans)

    def with_probability(self, probability: float) -> "Interpretation":
        return replace(self, probability=float(probability))

    def describe(self) -> str:
        return " | ".join(plan.describe() for plan in self.plans) or "(empty)"


@dataclass(frozen=True)
class Conflict:
    reason: str
    param: Optional[str] = None


def undefined_binding(kb: KnowledgeBase, operator: str, param: str) -> Binding:
    domain = kb.domain_of(operator, param)
    return Binding(Undefined(domain.cardinality), kb.tag(InferenceKind.UNDEFINED))


def new_plan(
    kb: KnowledgeBase,
    operator: str,
    bindings: Mapping[str, Binding],
    origins: Tuple[int, ...] = (),
) -> Plan:
    """Instantiate ``operator`` with every declared param, Undefined where unbound."""
    op = kb.operator(operator)
    if op is None:
        raise KeyError(f"unknown operator {operator!r}")
    params = []
    for decl in op.params:
        binding = bindings.get(decl.name)
        if binding is None or not binding.defined:
            binding = undefined_binding(kb, operator, decl.name)
        params.append((decl.name, binding))
    return Plan(operator=operator, params=tuple(params), origins=origins)


def plan_from_fragment(kb: KnowledgeBase, frag: PlanFragment) -> Plan:
    origins = (frag.statement,) if frag.statement else ()
    return new_plan(kb, frag.operator, frag.bindings, origins)


def merge_binding(left: Binding, right: Binding) -> Union[Binding, Conflict]:
    """Combine two bindings of the same parameter.

    Equal tag kinds intersect; an empty intersection of two user statements is
    a conflict, any other empty intersection keeps the newer (right) value.
    Different kinds resolve to the stronger binding.
    """
    if not left.defined:
        return right
    if not right.defined:
        return left
    if left.tag.kind != right.tag.kind:
        return left if left.tag.strength > right.tag.strength else right
    common = left.value.intersect(right.value)
    if common is not None:
        return Binding(common, left.tag)
    if left.tag.kind == InferenceKind.USER_STATEMENT:
        return Conflict("user-stated values do not intersect")
    return right


def unify(plan: Plan, frag: PlanFragment, kb: KnowledgeBase) -> Union[Plan, Conflict]:
    winner = kb.more_specific(plan.operator, frag.operator)
    if winner is None:
        return Conflict(f"{frag.operator} does not refine or generalise {plan.operator}")

    existing = plan.bindings
    merged: Dict[str, Binding] = {}
    for decl in kb.operator(winner).params:
        left, right = existing.get(decl.name), frag.bindings.get(decl.name)
        if left is None and right is None:
            continue
        if left is None or right is None:
            merged[decl.name] = left or right
            continue
        result = merge_binding(left, right)
        if isinstance(result, Conflict):
            return Conflict(result.reason, decl.name)
        merged[decl.name] = result

    origins = plan.origins
    if frag.statement and frag.statement not in origins:
        origins = tuple(sorted(origins + (frag.statement,)))
    return new_plan(kb, winner, merged, origins)


def correct(plan: Plan, frag: PlanFragment, kb: KnowledgeBase) -> Union[Plan, Conflict]:
    """Overwrite the plan with every value the fragment states.

    Every param the fragment binds replaces the plan's binding, whether or not the
    two conflict; params the fragment leaves unbound keep their current binding.
    """
    winner = kb.more_specific(plan.operator, frag.operator)
    if winner is None:
        return Conflict(f"{frag.operator} cannot correct {plan.operator}")
    merged = {**plan.bindings, **frag.bindings}
    origins = plan.origins
    if frag.statement and frag.statement not in origins:
        origins = tuple(sorted(origins + (frag.statement,)))
    return new_plan(kb, winner, merged, origins)

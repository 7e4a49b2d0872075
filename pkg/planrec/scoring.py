"""Information content of parameters, plans and interpretations.

IC(p) = log2(S(p) / N(p)) where S is the strength of the source that supplied
the value and N the number of values still possible. It is 0 for an exactly
known, user-stated parameter and negative otherwise. Interpretations are
reweighted by the factor ``1 - IC(I) / ICNORM`` which lies in [0, 1].
"""

import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

import numpy as np
import structlog

from planrec.errors import DegenerateDomain, DegenerateNorm
from planrec.knowledge import InferenceKind, KnowledgeBase, ParamValue, StrengthTag
from planrec.plans import Interpretation, Status
from planrec.utils.data_utils import normalize_weights

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class ICReport:
    params: Tuple[Mapping[str, float], ...]
    plans: Tuple[float, ...]
    total: float
    icnorm: float


@dataclass(frozen=True)
class UpdateFactors:
    icnorm: float
    factors: Tuple[float, ...]


def ic_param(value: ParamValue, tag: StrengthTag) -> float:
    n = value.cardinality()
    if n < 1:
        raise DegenerateDomain(f"parameter value {value!r} admits no values")
    return float(np.log2(tag.strength / n))


def worst_case(interp: Interpretation, kb: KnowledgeBase) -> float:
    """IC of the same plan structure with every required param undefined."""
    s_min = kb.config.strengths[InferenceKind.UNDEFINED]
    terms = []
    for plan in interp.plans:
        for name in kb.operator(plan.operator).required_params:
            n = kb.domain_of(plan.operator, name).cardinality
            if n < 1:
                raise DegenerateDomain(f"{plan.operator}.{name} has an empty domain")
            terms.append(float(np.log2(s_min / n)))
    return math.fsum(terms)


def ic_interpretation(interp: Interpretation, kb: KnowledgeBase) -> ICReport:
    per_param = []
    per_plan = []
    for plan in interp.plans:
        required = kb.operator(plan.operator).required_params
        values = {
            name: ic_param(binding.value, binding.tag)
            for name, binding in plan.params
            if name in required
        }
        per_param.append(values)
        per_plan.append(math.fsum(values.values()))
    return ICReport(
        params=tuple(per_param),
        plans=tuple(per_plan),
        total=math.fsum(v for values in per_param for v in values.values()),
        icnorm=worst_case(interp, kb),
    )


def icnorm(items: List[Interpretation], kb: KnowledgeBase, mode: Optional[str] = None) -> float:
    mode = mode or kb.config.icnorm_mode
    if not items:
        raise DegenerateNorm("no interpretations to normalise against")
    if mode == "sum":
        norm = math.fsum(ic_interpretation(i, kb).total for i in items)
    else:
        norm = min(worst_case(i, kb) for i in items)
    if norm >= 0.0:
        raise DegenerateNorm(f"ICNORM is {norm} in {mode} mode")
    return float(norm)


def update_factors(
    items: List[Interpretation], kb: KnowledgeBase, mode: Optional[str] = None
) -> Optional[UpdateFactors]:
    """Shared ICNORM and per-interpretation factors, or None when ICNORM degenerates."""
    try:
        norm = icnorm(items, kb, mode)
    except DegenerateNorm as exc:
        logger.info("information.degenerate_norm", reason=str(exc))
        return None
    totals = np.array([ic_interpretation(i, kb).total for i in items], dtype=float)
    factors = np.clip(1.0 - totals / norm, 0.0, 1.0)
    return UpdateFactors(norm, tuple(float(f) for f in factors))


def update_probabilities(
    items: List[Interpretation], kb: KnowledgeBase, mode: Optional[str] = None
) -> List[Interpretation]:
    """P(I) <- P(I) * (1 - IC(I) / ICNORM), renormalised."""
    update = update_factors(items, kb, mode)
    if update is None:
        return list(items)
    weighted = [i.probability * f for i, f in zip(items, update.factors)]
    if not any(w > 0.0 for w in weighted):
        return list(items)
    return [i.with_probability(p) for i, p in zip(items, normalize_weights(weighted))]


def completion_check(
    interp: Interpretation, kb: KnowledgeBase, changed: Optional[bool] = None
) -> Status:
    if ic_interpretation(interp, kb).total >= 0.0:
        return Status.COMPLETE
    if changed is False:
        return Status.STALLED
    return Status.IN_PROGRESS

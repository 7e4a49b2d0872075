"""Result documents for finalized sessions and the compact REPL view."""

from datetime import date
from typing import Any, Dict, List, Optional

from planrec.agent import FinalResult, RankedInterpretation, Session
from planrec.knowledge import KnowledgeBase
from planrec.plans import Interpretation, Plan
from planrec.scoring import ic_param
from planrec.utils.file_operation import dump_json_text, save_json_data

SCHEMA_VERSION = 1


def _plan_document(
    plan: Plan,
    kb: KnowledgeBase,
    param_ic: Dict[str, float],
    plan_ic: float,
    reference_date: Optional[date],
) -> Dict[str, Any]:
    op = kb.operator(plan.operator)
    params = {}
    for name, binding in plan.params:
        params[name] = {
            "value": binding.value.to_spec(),
            "display": binding.value.display(reference_date),
            "tag": binding.tag.kind.value,
            "strength": binding.tag.strength,
            "ic": param_ic.get(name, ic_param(binding.value, binding.tag)),
            "required": op.param(name).required,
        }
    return {
        "operator": plan.operator,
        "statements": list(plan.origins),
        "ic": plan_ic,
        "params": params,
    }


def interpretation_document(
    rank: int,
    entry: RankedInterpretation,
    kb: KnowledgeBase,
    reference_date: Optional[date] = None,
) -> Dict[str, Any]:
    interp, report = entry.interpretation, entry.report
    return {
        "rank": rank,
        "probability": interp.probability,
        "status": interp.status.value,
        "information_content": report.total,
        "update_factor": entry.factor,
        "plans": [
            _plan_document(plan, kb, report.params[i], report.plans[i], reference_date)
            for i, plan in enumerate(interp.plans)
        ],
        "relations": [rel.to_dict() for rel in interp.history],
    }


def result_document(
    session: Session,
    result: FinalResult,
    reference_date: Optional[date] = None,
    include_trace: bool = False,
) -> Dict[str, Any]:
    kb = session.kb
    cfg = kb.config
    document: Dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "kb": kb.name,
        "reference_date": reference_date.isoformat() if reference_date else None,
        "statements": session.counter,
        "config": {
            "threshold_direct": cfg.threshold_direct,
            "threshold_indirect": cfg.threshold_indirect,
            "icnorm_mode": cfg.icnorm_mode,
            "indirect_mode": cfg.indirect_mode,
        },
        "icnorm": result.icnorm,
        "interpretations": [
            interpretation_document(rank, entry, kb, reference_date)
            for rank, entry in enumerate(result.ranked, start=1)
        ],
        "diagnostics": [d.to_dict() for d in session.diagnostics],
    }
    if include_trace:
        document["trace"] = [entry.to_dict() for entry in result.trace]
    return document


def write_document(document: Dict[str, Any], output_path: Optional[str], stream) -> None:
    if output_path:
        save_json_data(document, output_path)
    else:
        stream.write(dump_json_text(document))


def compact_lines(live: List[Interpretation]) -> List[str]:
    """One line per live interpretation: rank, probability and plan summary."""
    if not live:
        return ["(no live interpretations)"]
    return [
        f"{rank}. p={interp.probability:.4f} {interp.describe()}"
        for rank, interp in enumerate(live, start=1)
    ]

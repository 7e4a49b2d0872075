"""Knowledge base: operator library, indirect rules, value domains and engine config.

The on-disk format is a single JSON document with the top-level keys
``operators``, ``rules``, ``domains`` and ``config``. ``kb/travel.json`` is the
normative example.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import structlog

from planrec.errors import ParseError, ValidationError
from planrec.utils.file_operation import load_json_document, save_json_data

logger = structlog.get_logger(__name__)

RULE_KINDS = ("precondition", "effect", "body")
PLAN_REFS = ("self", "previous", "next", "first", "last")
TARGET_PLANS = ("each", "first", "last")
ICNORM_MODES = ("min", "sum")
INDIRECT_MODES = ("final", "per-statement")
MASS_TOLERANCE = 1e-9


class InferenceKind(str, Enum):
    """Information sources, in decreasing order of reliability."""

    USER_STATEMENT = "UserStatement"
    DOMAIN_KNOWLEDGE = "DomainKnowledge"
    DOMAIN_ASSUMPTION = "DomainAssumption"
    USER_MODEL = "UserModel"
    COMMON_SENSE = "CommonSense"
    UNDEFINED = "Undefined"


INDIRECT_KINDS = (
    InferenceKind.DOMAIN_KNOWLEDGE,
    InferenceKind.DOMAIN_ASSUMPTION,
    InferenceKind.USER_MODEL,
    InferenceKind.COMMON_SENSE,
)


@dataclass(frozen=True)
class StrengthTag:
    kind: InferenceKind
    strength: float


# ---------------------------------------------------------------------------
# Parameter values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolSet:
    """A finite, non-empty set of symbolic constants."""

    symbols: FrozenSet[str]

    defined = True

    def cardinality(self) -> int:
        return len(self.symbols)

    def intersect(self, other: "ParamValue") -> Optional["ParamValue"]:
        if not isinstance(other, SymbolSet):
            return None
        common = self.symbols & other.symbols
        return SymbolSet(frozenset(common)) if common else None

    def single(self) -> Optional[str]:
        if len(self.symbols) == 1:
            return next(iter(self.symbols))
        return None

    def to_spec(self) -> Dict[str, Any]:
        return {"set": sorted(self.symbols)}

    def display(self, reference_date: Optional[date] = None) -> str:
        return "|".join(sorted(self.symbols))


@dataclass(frozen=True)
class IntInterval:
    """A closed integer interval in a declared unit (``day`` or ``minute``)."""

    lower: int
    upper: int
    unit: str

    defined = True

    def cardinality(self) -> int:
        return self.upper - self.lower + 1

    def intersect(self, other: "ParamValue") -> Optional["ParamValue"]:
        if not isinstance(other, IntInterval) or other.unit != self.unit:
            return None
        lower, upper = max(self.lower, other.lower), min(self.upper, other.upper)
        if lower > upper:
            return None
        return IntInterval(lower, upper, self.unit)

    def single(self) -> Optional[str]:
        if self.lower == self.upper:
            return str(self.lower)
        return None

    def shift(self, by: int) -> "IntInterval":
        return IntInterval(self.lower + by, self.upper + by, self.unit)

    def to_spec(self) -> Dict[str, Any]:
        return {"interval": [self.lower, self.upper], "unit": self.unit}

    def display(self, reference_date: Optional[date] = None) -> str:
        def _one(point: int) -> str:
            if self.unit == "minute":
                return f"{point // 60:02d}:{point % 60:02d}"
            if self.unit == "day" and reference_date is not None:
                return (reference_date + timedelta(days=point)).isoformat()
            return str(point)

        if self.lower == self.upper:
            return _one(self.lower)
        return f"{_one(self.lower)}..{_one(self.upper)}"


@dataclass(frozen=True)
class Undefined:
    """No value known; carries the cardinality of the parameter's domain."""

    size: int

    defined = False

    def cardinality(self) -> int:
        return self.size

    def intersect(self, other: "ParamValue") -> Optional["ParamValue"]:
        return other

    def single(self) -> Optional[str]:
        return None

    def to_spec(self) -> Optional[Dict[str, Any]]:
        return None

    def display(self, reference_date: Optional[date] = None) -> str:
        return "?"


ParamValue = Union[SymbolSet, IntInterval, Undefined]


def parse_value(spec: Any, where: str = "value") -> ParamValue:
    """Parse a ``{"set": [...]}`` or ``{"interval": [lo, hi], "unit": u}`` spec."""
    if not isinstance(spec, dict):
        raise ParseError(f"{where}: value spec must be an object, got {spec!r}")
    if "set" in spec:
        symbols = spec["set"]
        if not isinstance(symbols, list) or not symbols:
            raise ParseError(f"{where}: 'set' must be a non-empty list")
        if not all(isinstance(s, str) for s in symbols):
            raise ParseError(f"{where}: 'set' members must be strings")
        return SymbolSet(frozenset(symbols))
    if "interval" in spec:
        bounds = spec["interval"]
        if (
            not isinstance(bounds, list)
            or len(bounds) != 2
            or not all(isinstance(b, int) and not isinstance(b, bool) for b in bounds)
        ):
            raise ParseError(f"{where}: 'interval' must be [lower, upper] integers")
        if bounds[0] > bounds[1]:
            raise ParseError(f"{where}: interval lower bound exceeds upper bound")
        unit = spec.get("unit")
        if unit not in ("day", "minute"):
            raise ParseError(f"{where}: interval unit must be 'day' or 'minute'")
        return IntInterval(bounds[0], bounds[1], unit)
    raise ParseError(f"{where}: expected 'set' or 'interval' in {spec!r}")


# ---------------------------------------------------------------------------
# Library types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    name: str
    values: Tuple[str, ...] = ()
    lower: int = 0
    upper: int = -1
    unit: Optional[str] = None

    @property
    def symbolic(self) -> bool:
        return self.unit is None

    @property
    def cardinality(self) -> int:
        if self.symbolic:
            return len(self.values)
        return max(0, self.upper - self.lower + 1)

    def admits(self, value: ParamValue) -> bool:
        if isinstance(value, SymbolSet):
            return self.symbolic and value.symbols <= set(self.values)
        if isinstance(value, IntInterval):
            return (
                not self.symbolic
                and value.unit == self.unit
                and self.lower <= value.lower
                and value.upper <= self.upper
            )
        return False


@dataclass(frozen=True)
class ParamDecl:
    name: str
    domain: str
    required: bool = True


@dataclass(frozen=True)
class Pattern:
    """A predicate pattern; ``args`` maps predicate argument -> operator param."""

    predicate: str
    args: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Operator:
    name: str
    params: Tuple[ParamDecl, ...]
    preconditions: Tuple[Pattern, ...] = ()
    effects: Tuple[Pattern, ...] = ()
    body: Tuple[str, ...] = ()

    def param(self, name: str) -> Optional[ParamDecl]:
        for decl in self.params:
            if decl.name == name:
                return decl
        return None

    @property
    def required_params(self) -> Tuple[str, ...]:
        return tuple(decl.name for decl in self.params if decl.required)

    def patterns(self, rule: str) -> Tuple[Pattern, ...]:
        return self.preconditions if rule == "precondition" else self.effects


@dataclass(frozen=True)
class ParamRef:
    plan: str
    param: str


@dataclass(frozen=True)
class Copy:
    ref: ParamRef


@dataclass(frozen=True)
class Constant:
    value: ParamValue


@dataclass(frozen=True)
class Lookup:
    keys: Tuple[ParamRef, ...]
    entries: Mapping[Tuple[str, ...], ParamValue]


@dataclass(frozen=True)
class Shift:
    base: ParamRef
    keys: Tuple[ParamRef, ...]
    entries: Mapping[Tuple[str, ...], int]


ValueExpr = Union[Copy, Constant, Lookup, Shift]


def expression_refs(expr: ValueExpr) -> Tuple[ParamRef, ...]:
    if isinstance(expr, Copy):
        return (expr.ref,)
    if isinstance(expr, Lookup):
        return expr.keys
    if isinstance(expr, Shift):
        return (expr.base,) + expr.keys
    return ()


@dataclass(frozen=True)
class IndirectRule:
    name: str
    source: InferenceKind
    target_plan: str
    target_param: str
    value: ValueExpr
    operators: Tuple[str, ...] = ()
    requires: Tuple[ParamRef, ...] = ()
    same: Tuple[Tuple[ParamRef, ParamRef], ...] = ()


# ---------------------------------------------------------------------------
# Engine configuration
# ---------------------------------------------------------------------------


def _default_strengths() -> Dict[InferenceKind, float]:
    return {
        InferenceKind.USER_STATEMENT: 1.0,
        InferenceKind.DOMAIN_KNOWLEDGE: 0.85,
        InferenceKind.DOMAIN_ASSUMPTION: 0.7,
        InferenceKind.USER_MODEL: 0.55,
        InferenceKind.COMMON_SENSE: 0.4,
        InferenceKind.UNDEFINED: 0.1,
    }


def _default_meta_bias() -> Dict[str, Tuple[float, float, float]]:
    return {
        "WANT": (0.2, 0.6, 0.2),
        "CAN": (0.6, 0.2, 0.2),
        "MUST": (0.2, 0.6, 0.2),
    }


@dataclass(frozen=True)
class EngineConfig:
    rule_priors: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    meta_bias: Mapping[str, Tuple[float, float, float]] = field(
        default_factory=_default_meta_bias
    )
    strengths: Mapping[InferenceKind, float] = field(default_factory=_default_strengths)
    intro_weight: float = 0.15  # c_intro
    elaboration_decay: float = 0.5  # lambda, per topic step
    cue_boost: float = 3.0  # beta
    digression_damping: float = 0.2  # delta
    threshold_direct: float = 0.5
    threshold_indirect: float = 0.7
    icnorm_mode: str = "min"
    indirect_mode: str = "final"
    stop_on_complete: bool = True
    operator_weights: Mapping[str, float] = field(default_factory=dict)

    def tag(self, kind: InferenceKind) -> StrengthTag:
        return StrengthTag(kind, self.strengths[kind])

    def rule_masses(self, meta: Optional[str]) -> Tuple[float, float, float]:
        if meta is None:
            return self.rule_priors
        row = self.meta_bias.get(meta)
        if row is None:
            logger.warning("config.unknown_meta", meta=meta)
            return self.rule_priors
        return row


def _masses_from_dict(raw: Any, where: str) -> Tuple[float, float, float]:
    if not isinstance(raw, dict) or set(raw) != set(RULE_KINDS):
        raise ParseError(f"{where}: expected keys {list(RULE_KINDS)}")
    try:
        return tuple(float(raw[k]) for k in RULE_KINDS)  # type: ignore[return-value]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: masses must be numbers ({exc})")


def _masses_to_dict(masses: Sequence[float]) -> Dict[str, float]:
    return dict(zip(RULE_KINDS, masses))


CONFIG_STRINGS = ("icnorm_mode", "indirect_mode")


def _number(value: Any, where: str) -> float:
    # bool is an int subclass; JSON true/false is never a weight
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def config_from_dict(raw: Mapping[str, Any]) -> EngineConfig:
    if not isinstance(raw, dict):
        raise ParseError("config: must be an object")
    known = {f.name for f in dataclasses.fields(EngineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ParseError(f"config: unknown keys {sorted(unknown)}")

    kwargs: Dict[str, Any] = {}
    for key, value in raw.items():
        if key == "rule_priors":
            kwargs[key] = _masses_from_dict(value, "config.rule_priors")
        elif key == "meta_bias":
            if not isinstance(value, dict):
                raise ParseError("config.meta_bias: must be an object")
            kwargs[key] = {
                meta: _masses_from_dict(row, f"config.meta_bias.{meta}")
                for meta, row in value.items()
            }
        elif key == "strengths":
            if not isinstance(value, dict):
                raise ParseError("config.strengths: must be an object")
            strengths = _default_strengths()
            for kind_name, strength in value.items():
                try:
                    kind = InferenceKind(kind_name)
                except ValueError:
                    raise ParseError(f"config.strengths: unknown kind {kind_name!r}")
                strengths[kind] = _number(strength, f"config.strengths.{kind_name}")
            kwargs[key] = strengths
        elif key == "operator_weights":
            if not isinstance(value, dict):
                raise ParseError("config.operator_weights: must be an object")
            kwargs[key] = {
                name: _number(w, f"config.operator_weights.{name}") for name, w in value.items()
            }
        elif key == "stop_on_complete":
            if not isinstance(value, bool):
                raise ParseError(
                    f"config.stop_on_complete: expected true or false, got {value!r}"
                )
            kwargs[key] = value
        elif key in CONFIG_STRINGS:
            if not isinstance(value, str):
                raise ParseError(f"config.{key}: expected a string, got {value!r}")
            kwargs[key] = value
        else:
            kwargs[key] = _number(value, f"config.{key}")
    return EngineConfig(**kwargs)


def config_to_dict(config: EngineConfig) -> Dict[str, Any]:
    return {
        "rule_priors": _masses_to_dict(config.rule_priors),
        "meta_bias": {m: _masses_to_dict(r) for m, r in config.meta_bias.items()},
        "strengths": {k.value: s for k, s in config.strengths.items()},
        "intro_weight": config.intro_weight,
        "elaboration_decay": config.elaboration_decay,
        "cue_boost": config.cue_boost,
        "digression_damping": config.digression_damping,
        "threshold_direct": config.threshold_direct,
        "threshold_indirect": config.threshold_indirect,
        "icnorm_mode": config.icnorm_mode,
        "indirect_mode": config.indirect_mode,
        "stop_on_complete": config.stop_on_complete,
        "operator_weights": dict(config.operator_weights),
    }


# ---------------------------------------------------------------------------
# Knowledge base
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.entity}: {self.message}"


@dataclass(frozen=True)
class KnowledgeBase:
    operators: Tuple[Operator, ...]
    rules: Tuple[IndirectRule, ...]
    domains: Mapping[str, Domain]
    config: EngineConfig = field(default_factory=EngineConfig)
    name: str = field(default="kb", compare=False)

    @cached_property
    def _operator_index(self) -> Dict[str, Operator]:
        return {op.name: op for op in self.operators}

    def operator(self, name: str) -> Optional[Operator]:
        return self._operator_index.get(name)

    def domain_of(self, operator: str, param: str) -> Domain:
        decl = self._operator_index[operator].param(param)
        if decl is None:
            raise KeyError(f"{operator} declares no param {param!r}")
        return self.domains[decl.domain]

    def reachable(self, name: str) -> FrozenSet[str]:
        """Every operator reachable through body entries; contains ``name`` only on a cycle."""
        seen = set()
        stack = list(self._operator_index[name].body) if name in self._operator_index else []
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            op = self._operator_index.get(current)
            if op is not None:
                stack.extend(op.body)
        return frozenset(seen)

    def body_closure(self, name: str) -> FrozenSet[str]:
        return self.reachable(name) - {name}

    def more_specific(self, first: str, second: str) -> Optional[str]:
        """The operator that refines the other, or None when they are unrelated."""
        if first == second:
            return first
        if second in self.body_closure(first):
            return second
        if first in self.body_closure(second):
            return first
        return None

    def with_config(self, **overrides: Any) -> "KnowledgeBase":
        changes = {k: v for k, v in overrides.items() if v is not None}
        if not changes:
            return self
        return dataclasses.replace(self, config=dataclasses.replace(self.config, **changes))

    def tag(self, kind: InferenceKind) -> StrengthTag:
        return self.config.tag(kind)


# ---------------------------------------------------------------------------
# JSON <-> objects
# ---------------------------------------------------------------------------


def _get(raw: Mapping[str, Any], key: str, where: str, kind: type = object) -> Any:
    if not isinstance(raw, dict) or key not in raw:
        raise ParseError(f"{where}: missing {key!r}")
    value = raw[key]
    if kind is not object and not isinstance(value, kind):
        raise ParseError(f"{where}.{key}: expected {kind.__name__}")
    return value


def _domain_from_dict(name: str, raw: Any) -> Domain:
    where = f"domains.{name}"
    if not isinstance(raw, dict):
        raise ParseError(f"{where}: must be an object")
    if "values" in raw:
        values = raw["values"]
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise ParseError(f"{where}.values: must be a list of strings")
        return Domain(name=name, values=tuple(values))
    if "interval" in raw:
        bounds = parse_value(raw, where)
        assert isinstance(bounds, IntInterval)
        return Domain(name=name, lower=bounds.lower, upper=bounds.upper, unit=bounds.unit)
    raise ParseError(f"{where}: expected 'values' or 'interval'")


def _domain_to_dict(domain: Domain) -> Dict[str, Any]:
    if domain.symbolic:
        return {"values": list(domain.values)}
    return {"interval": [domain.lower, domain.upper], "unit": domain.unit}


def _pattern_from_dict(raw: Any, where: str) -> Pattern:
    predicate = _get(raw, "predicate", where, str)
    args = raw.get("args", {})
    if not isinstance(args, dict) or not all(isinstance(v, str) for v in args.values()):
        raise ParseError(f"{where}.args: must map argument names to param names")
    return Pattern(predicate=predicate, args=dict(args))


def _operator_from_dict(raw: Any, index: int) -> Operator:
    where = f"operators[{index}]"
    name = _get(raw, "name", where, str)
    where = f"operator {name}"
    params = []
    for i, p in enumerate(_get(raw, "params", where, list)):
        p_where = f"{where}.params[{i}]"
        params.append(
            ParamDecl(
                name=_get(p, "name", p_where, str),
                domain=_get(p, "domain", p_where, str),
                required=bool(p.get("required", True)),
            )
        )
    preconditions = tuple(
        _pattern_from_dict(p, f"{where}.preconditions[{i}]")
        for i, p in enumerate(raw.get("preconditions", []))
    )
    effects = tuple(
        _pattern_from_dict(p, f"{where}.effects[{i}]")
        for i, p in enumerate(raw.get("effects", []))
    )
    body = raw.get("body", [])
    if not isinstance(body, list) or not all(isinstance(b, str) for b in body):
        raise ParseError(f"{where}.body: must be a list of operator names")
    return Operator(
        name=name,
        params=tuple(params),
        preconditions=preconditions,
        effects=effects,
        body=tuple(body),
    )


def _operator_to_dict(op: Operator) -> Dict[str, Any]:
    return {
        "name": op.name,
        "params": [
            {"name": d.name, "domain": d.domain, "required": d.required} for d in op.params
        ],
        "preconditions": [
            {"predicate": p.predicate, "args": dict(p.args)} for p in op.preconditions
        ],
        "effects": [{"predicate": p.predicate, "args": dict(p.args)} for p in op.effects],
        "body": list(op.body),
    }


def _ref_from_dict(raw: Any, where: str) -> ParamRef:
    plan = _get(raw, "plan", where, str)
    if plan not in PLAN_REFS:
        raise ParseError(f"{where}.plan: expected one of {list(PLAN_REFS)}")
    return ParamRef(plan=plan, param=_get(raw, "param", where, str))


def _ref_to_dict(ref: ParamRef) -> Dict[str, str]:
    return {"plan": ref.plan, "param": ref.param}


def _key_tuple(raw: Any, where: str) -> Tuple[str, ...]:
    if not isinstance(raw, list) or not all(isinstance(k, str) for k in raw):
        raise ParseError(f"{where}: key must be a list of symbols")
    return tuple(raw)


def _expression_from_dict(raw: Any, where: str) -> ValueExpr:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ParseError(f"{where}: expected exactly one of copy/constant/lookup/shift")
    (kind, body), = raw.items()
    if kind == "copy":
        return Copy(_ref_from_dict(body, f"{where}.copy"))
    if kind == "constant":
        return Constant(parse_value(body, f"{where}.constant"))
    if kind == "lookup":
        keys = tuple(
            _ref_from_dict(k, f"{where}.lookup.keys[{i}]")
            for i, k in enumerate(_get(body, "keys", f"{where}.lookup", list))
        )
        entries = {}
        for i, entry in enumerate(_get(body, "entries", f"{where}.lookup", list)):
            e_where = f"{where}.lookup.entries[{i}]"
            entries[_key_tuple(_get(entry, "key", e_where), e_where)] = parse_value(
                _get(entry, "value", e_where), e_where
            )
        return Lookup(keys=keys, entries=entries)
    if kind == "shift":
        keys = tuple(
            _ref_from_dict(k, f"{where}.shift.keys[{i}]")
            for i, k in enumerate(_get(body, "keys", f"{where}.shift", list))
        )
        entries = {}
        for i, entry in enumerate(_get(body, "entries", f"{where}.shift", list)):
            e_where = f"{where}.shift.entries[{i}]"
            entries[_key_tuple(_get(entry, "key", e_where), e_where)] = int(
                _get(entry, "by", e_where, int)
            )
        return Shift(
            base=_ref_from_dict(_get(body, "base", f"{where}.shift"), f"{where}.shift.base"),
            keys=keys,
            entries=entries,
        )
    raise ParseError(f"{where}: unknown value expression {kind!r}")


def _expression_to_dict(expr: ValueExpr) -> Dict[str, Any]:
    if isinstance(expr, Copy):
        return {"copy": _ref_to_dict(expr.ref)}
    if isinstance(expr, Constant):
        return {"constant": expr.value.to_spec()}
    if isinstance(expr, Lookup):
        return {
            "lookup": {
                "keys": [_ref_to_dict(k) for k in expr.keys],
                "entries": [
                    {"key": list(key), "value": value.to_spec()}
                    for key, value in expr.entries.items()
                ],
            }
        }
    return {
        "shift": {
            "base": _ref_to_dict(expr.base),
            "keys": [_ref_to_dict(k) for k in expr.keys],
            "entries": [{"key": list(key), "by": by} for key, by in expr.entries.items()],
        }
    }


def _rule_from_dict(raw: Any, index: int) -> IndirectRule:
    where = f"rules[{index}]"
    name = _get(raw, "name", where, str)
    where = f"rule {name}"
    try:
        source = InferenceKind(_get(raw, "source", where, str))
    except ValueError:
        raise ParseError(f"{where}.source: unknown inference kind {raw['source']!r}")
    target = _get(raw, "target", where, dict)
    target_plan = _get(target, "plan", f"{where}.target", str)
    if target_plan not in TARGET_PLANS:
        raise ParseError(f"{where}.target.plan: expected one of {list(TARGET_PLANS)}")
    operators = raw.get("operators", [])
    if not isinstance(operators, list) or not all(isinstance(o, str) for o in operators):
        raise ParseError(f"{where}.operators: must be a list of operator names")
    same = []
    for i, pair in enumerate(raw.get("same", [])):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ParseError(f"{where}.same[{i}]: must be a pair of references")
        same.append(
            (
                _ref_from_dict(pair[0], f"{where}.same[{i}][0]"),
                _ref_from_dict(pair[1], f"{where}.same[{i}][1]"),
            )
        )
    return IndirectRule(
        name=name,
        source=source,
        target_plan=target_plan,
        target_param=_get(target, "param", f"{where}.target", str),
        value=_expression_from_dict(_get(raw, "value", where), f"{where}.value"),
        operators=tuple(operators),
        requires=tuple(
            _ref_from_dict(r, f"{where}.requires[{i}]")
            for i, r in enumerate(raw.get("requires", []))
        ),
        same=tuple(same),
    )


def _rule_to_dict(rule: IndirectRule) -> Dict[str, Any]:
    return {
        "name": rule.name,
        "source": rule.source.value,
        "operators": list(rule.operators),
        "target": {"plan": rule.target_plan, "param": rule.target_param},
        "requires": [_ref_to_dict(r) for r in rule.requires],
        "same": [[_ref_to_dict(a), _ref_to_dict(b)] for a, b in rule.same],
        "value": _expression_to_dict(rule.value),
    }


def kb_from_dict(raw: Any, name: str = "kb") -> KnowledgeBase:
    """Build a KnowledgeBase from parsed JSON without validating invariants."""
    if not isinstance(raw, dict):
        raise ParseError("knowledge base: top level must be an object")
    for key in ("operators", "rules", "domains"):
        if key not in raw:
            raise ParseError(f"knowledge base: missing top-level key {key!r}")
    if not isinstance(raw["domains"], dict):
        raise ParseError("domains: must be an object")
    if not isinstance(raw["operators"], list) or not isinstance(raw["rules"], list):
        raise ParseError("operators and rules must be lists")

    return KnowledgeBase(
        operators=tuple(_operator_from_dict(o, i) for i, o in enumerate(raw["operators"])),
        rules=tuple(_rule_from_dict(r, i) for i, r in enumerate(raw["rules"])),
        domains={n: _domain_from_dict(n, d) for n, d in raw["domains"].items()},
        config=config_from_dict(raw.get("config", {})),
        name=name,
    )


def kb_to_dict(kb: KnowledgeBase) -> Dict[str, Any]:
    return {
        "operators": [_operator_to_dict(op) for op in kb.operators],
        "rules": [_rule_to_dict(rule) for rule in kb.rules],
        "domains": {name: _domain_to_dict(d) for name, d in kb.domains.items()},
        "config": config_to_dict(kb.config),
    }


def load_kb(path: Union[str, Path]) -> KnowledgeBase:
    """Load, cross-check and return the knowledge base stored at ``path``."""
    path = Path(path)
    raw = load_json_document(str(path))

    kb = kb_from_dict(raw, name=path.stem)
    diagnostics = validate_kb(kb)
    if diagnostics:
        raise ValidationError(diagnostics)

    logger.info(
        "kb.loaded",
        path=str(path),
        operators=len(kb.operators),
        rules=len(kb.rules),
        domains=len(kb.domains),
    )
    return kb


def configure_kb(kb: KnowledgeBase, *layers: Mapping[str, Any]) -> KnowledgeBase:
    """Apply config override layers in order (later wins) and re-check the result."""
    for layer in layers:
        kb = kb.with_config(**layer)
    diagnostics = validate_kb(kb)
    if diagnostics:
        raise ValidationError(diagnostics)
    return kb


def dump_kb(kb: KnowledgeBase, path: Union[str, Path]) -> None:
    save_json_data(kb_to_dict(kb), str(path))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _validate_config(config: EngineConfig) -> List[Diagnostic]:
    found = []

    def _range(name: str, value: float, low: float, high: float, closed: bool) -> None:
        ok = low <= value <= high if closed else low < value < high
        if not ok:
            bracket = "[{}, {}]" if closed else "({}, {})"
            found.append(
                Diagnostic("config-range", name, f"{value} outside {bracket.format(low, high)}")
            )

    _range("intro_weight", config.intro_weight, 0.0, 1.0, closed=False)
    _range("elaboration_decay", config.elaboration_decay, 0.0, 1.0, closed=False)
    _range("digression_damping", config.digression_damping, 0.0, 1.0, closed=False)
    _range("threshold_direct", config.threshold_direct, 0.0, 1.0, closed=True)
    _range("threshold_indirect", config.threshold_indirect, 0.0, 1.0, closed=True)
    if not config.cue_boost > 1.0:
        found.append(Diagnostic("config-range", "cue_boost", f"{config.cue_boost} is not > 1"))
    if config.icnorm_mode not in ICNORM_MODES:
        found.append(
            Diagnostic("config-range", "icnorm_mode", f"{config.icnorm_mode!r} not in {ICNORM_MODES}")
        )
    if config.indirect_mode not in INDIRECT_MODES:
        found.append(
            Diagnostic(
                "config-range", "indirect_mode", f"{config.indirect_mode!r} not in {INDIRECT_MODES}"
            )
        )

    rows = {"rule_priors": config.rule_priors}
    rows.update({f"meta_bias.{m}": r for m, r in config.meta_bias.items()})
    for entity, row in rows.items():
        if any(m < 0 for m in row):
            found.append(Diagnostic("mass-sum", entity, "masses must be non-negative"))
        elif abs(sum(row) - 1.0) > MASS_TOLERANCE:
            found.append(Diagnostic("mass-sum", entity, f"masses sum to {sum(row)}, not 1"))

    ordered = [k for k in InferenceKind]
    for kind in ordered:
        strength = config.strengths.get(kind)
        if strength is None or not 0.0 < strength <= 1.0:
            found.append(Diagnostic("strength-range", kind.value, f"{strength} outside (0, 1]"))
    if config.strengths.get(InferenceKind.USER_STATEMENT) != 1.0:
        found.append(
            Diagnostic("strength-range", InferenceKind.USER_STATEMENT.value, "must be exactly 1.0")
        )
    for stronger, weaker in zip(ordered, ordered[1:]):
        s, w = config.strengths.get(stronger, 0.0), config.strengths.get(weaker, 0.0)
        if not s > w:
            found.append(
                Diagnostic(
                    "strength-order",
                    weaker.value,
                    f"strength {w} must be below {stronger.value} ({s})",
                )
            )

    for op_name, weight in config.operator_weights.items():
        if not weight > 0 or math.isinf(weight):
            found.append(Diagnostic("config-range", f"operator_weights.{op_name}", "must be > 0"))
    return found


def _validate_rule(kb: KnowledgeBase, rule: IndirectRule) -> List[Diagnostic]:
    found = []
    entity = f"rule {rule.name}"
    if rule.source not in INDIRECT_KINDS:
        found.append(
            Diagnostic("rule-source", entity, f"{rule.source.value} is not an indirect source")
        )

    candidates = []
    for op_name in rule.operators:
        op = kb.operator(op_name)
        if op is None:
            found.append(Diagnostic("dangling-operator", entity, f"unknown operator {op_name}"))
        else:
            candidates.append(op)
    if not rule.operators:
        candidates = list(kb.operators)
    declaring = [op for op in candidates if op.param(rule.target_param) is not None]
    if not declaring:
        found.append(
            Diagnostic("rule-param", entity, f"no operator declares {rule.target_param!r}")
        )

    required = set(rule.requires)
    for ref in expression_refs(rule.value):
        if ref not in required:
            found.append(
                Diagnostic(
                    "rule-reference",
                    entity,
                    f"value uses {ref.plan}.{ref.param} which the rule does not require",
                )
            )

    target_domains = {kb.domains.get(op.param(rule.target_param).domain) for op in declaring}
    constants: List[ParamValue] = []
    if isinstance(rule.value, Constant):
        constants = [rule.value.value]
    elif isinstance(rule.value, Lookup):
        constants = list(rule.value.entries.values())
    for value in constants:
        for domain in target_domains:
            if domain is not None and not domain.admits(value):
                found.append(
                    Diagnostic("rule-value", entity, f"{value.to_spec()} not in domain {domain.name}")
                )
    return found


def validate_kb(kb: KnowledgeBase) -> List[Diagnostic]:
    """Return one diagnostic per violated invariant; empty when the KB is sound."""
    found: List[Diagnostic] = []

    for name, domain in kb.domains.items():
        if domain.cardinality < 1:
            found.append(Diagnostic("empty-domain", f"domain {name}", "has no values"))
        repeated = sorted({v for v in domain.values if domain.values.count(v) > 1})
        if repeated:
            found.append(
                Diagnostic("duplicate-value", f"domain {name}", f"lists {repeated} more than once")
            )

    seen_ops = set()
    names = {op.name for op in kb.operators}
    for op in kb.operators:
        entity = f"operator {op.name}"
        if op.name in seen_ops:
            found.append(Diagnostic("duplicate-operator", entity, "declared more than once"))
        seen_ops.add(op.name)

        seen_params = set()
        for decl in op.params:
            if decl.name in seen_params:
                found.append(Diagnostic("duplicate-param", entity, f"param {decl.name} repeated"))
            seen_params.add(decl.name)
            if decl.domain not in kb.domains:
                found.append(
                    Diagnostic("unknown-domain", entity, f"param {decl.name} uses {decl.domain!r}")
                )

        for pattern in op.preconditions + op.effects:
            for arg, param in pattern.args.items():
                if param not in seen_params:
                    found.append(
                        Diagnostic(
                            "unknown-param",
                            entity,
                            f"{pattern.predicate}.{arg} refers to undeclared param {param!r}",
                        )
                    )

        for step in op.body:
            if step not in names:
                found.append(Diagnostic("dangling-operator", entity, f"body names unknown {step}"))
        if op.name in kb.reachable(op.name):
            found.append(Diagnostic("body-cycle", entity, "body reaches the operator itself"))

    seen_rules = set()
    for rule in kb.rules:
        if rule.name in seen_rules:
            found.append(Diagnostic("duplicate-rule", f"rule {rule.name}", "declared more than once"))
        seen_rules.add(rule.name)
        found.extend(_validate_rule(kb, rule))

    found.extend(_validate_config(kb.config))
    return found

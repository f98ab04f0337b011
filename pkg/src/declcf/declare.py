"""Declare templates, rule checking with vacuity tracking, fitness and discovery.

Constraints store their activities by *role*. The textual ``Template[X, Y]``
form follows Declare's conventional argument order, which for ``Precedence``
lists the target first: ``Precedence[A, B]`` ("B only if preceded by A") has
activation ``B`` and target ``A``.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .errors import ConfigError, EmptyLogError, EmptyModelError, ParseError
from .event_log import EventLog, Trace


class Template(enum.Enum):
    Existence1 = "Existence1"
    Absence2 = "Absence2"
    Init = "Init"
    RespondedExistence = "RespondedExistence"
    Response = "Response"
    AlternateResponse = "AlternateResponse"
    ChainResponse = "ChainResponse"
    Precedence = "Precedence"

    @property
    def is_unary(self) -> bool:
        return self in _UNARY


_UNARY = frozenset({Template.Existence1, Template.Absence2, Template.Init})
_TEMPLATE_ORDER = {t: i for i, t in enumerate(Template)}


class Verdict(enum.Enum):
    Satisfied = "satisfied"
    VacuouslySatisfied = "vacuously_satisfied"
    Violated = "violated"

    @property
    def holds(self) -> bool:
        return self is not Verdict.Violated


@dataclass(frozen=True, order=False)
class DeclareConstraint:
    template: Template
    activation: str
    target: str | None = None

    def __post_init__(self):
        if isinstance(self.template, str):
            object.__setattr__(self, "template", Template(self.template))
        if self.template.is_unary:
            if self.target is not None:
                raise ValueError(f"{self.template.value} takes no target")
        else:
            if self.target is None:
                raise ValueError(f"{self.template.value} needs a target")
            if self.target == self.activation:
                raise ValueError(f"{self.template.value}: activation equals target ({self.target!r})")

    @classmethod
    def of(cls, template: Template | str, *args: str) -> DeclareConstraint:
        """Build from conventional argument order, e.g. ``of("Precedence", "A", "B")``."""
        template = Template(template)
        if template.is_unary:
            if len(args) != 1:
                raise ValueError(f"{template.value} takes one activity, got {len(args)}")
            return cls(template, args[0])
        if len(args) != 2:
            raise ValueError(f"{template.value} takes two activities, got {len(args)}")
        first, second = args
        if template is Template.Precedence:
            return cls(template, second, first)
        return cls(template, first, second)

    @property
    def args(self) -> tuple[str, ...]:
        if self.template.is_unary:
            return (self.activation,)
        if self.template is Template.Precedence:
            return (self.target, self.activation)
        return (self.activation, self.target)

    def __str__(self) -> str:
        return f"{self.template.value}[{', '.join(self.args)}]"

    def sort_key(self) -> tuple:
        return (_TEMPLATE_ORDER[self.template],) + self.args

    def to_dict(self) -> dict:
        d = {"template": self.template.value, "activation": self.activation}
        if self.target is not None:
            d["target"] = self.target
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DeclareConstraint:
        try:
            return cls(Template(d["template"]), d["activation"], d.get("target"))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad constraint {d!r}: {exc}") from exc


@dataclass(frozen=True)
class DeclareModel:
    constraints: tuple[DeclareConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(set(self.constraints)) != len(self.constraints):
            raise ValueError("duplicate constraints in Declare model")

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self) -> Iterator[DeclareConstraint]:
        return iter(self.constraints)

    def __bool__(self) -> bool:
        return bool(self.constraints)


@dataclass(frozen=True)
class ActivationTargetSets:
    activations: frozenset[str]
    targets: frozenset[str]

    @property
    def locked(self) -> frozenset[str]:
        return self.activations | self.targets


TraceLike = Union[Trace, Sequence[str]]


def _acts(trace: TraceLike) -> Sequence[str]:
    return trace.activities if isinstance(trace, Trace) else trace


def check(constraint: DeclareConstraint, trace: TraceLike) -> Verdict:
    acts = _acts(trace)
    t, a, b = constraint.template, constraint.activation, constraint.target
    if t is Template.Existence1:
        return Verdict.Satisfied if a in acts else Verdict.Violated
    if t is Template.Init:
        return Verdict.Satisfied if acts and acts[0] == a else Verdict.Violated
    if t is Template.Absence2:
        n = sum(1 for x in acts if x == a)
        if n == 0:
            return Verdict.VacuouslySatisfied
        return Verdict.Satisfied if n == 1 else Verdict.Violated

    if a not in acts:
        return Verdict.VacuouslySatisfied
    if t is Template.RespondedExistence:
        ok = b in acts
    elif t is Template.Response:
        last_a = max(i for i, x in enumerate(acts) if x == a)
        ok = b in acts[last_a + 1:]
    elif t is Template.AlternateResponse:
        ok, pending = True, False
        for x in acts:
            if x == a:
                if pending:
                    ok = False
                    break
                pending = True
            elif x == b:
                pending = False
        ok = ok and not pending
    elif t is Template.ChainResponse:
        n = len(acts)
        ok = all(i + 1 < n and acts[i + 1] == b for i, x in enumerate(acts) if x == a)
    elif t is Template.Precedence:
        # target b must occur before the first activation a
        first_a = acts.index(a)
        ok = b in acts[:first_a]
    else:  # pragma: no cover
        raise AssertionError(t)
    return Verdict.Satisfied if ok else Verdict.Violated


def satisfied_set(model: DeclareModel, trace: TraceLike) -> frozenset[DeclareConstraint]:
    """Constraints of ``model`` that hold on ``trace`` (vacuity included)."""
    return frozenset(c for c in model if check(c, trace).holds)


def trace_fitness(model: DeclareModel, trace: TraceLike) -> float:
    if not model:
        raise EmptyModelError("trace fitness of an empty Declare model is undefined")
    return sum(1 for c in model if check(c, trace).holds) / len(model)


def log_fitness(model: DeclareModel, log: EventLog | Iterable[TraceLike]) -> float:
    if not model:
        raise EmptyModelError("log fitness of an empty Declare model is undefined")
    traces = list(log)
    if not traces:
        raise EmptyLogError("log fitness of an empty log is undefined")
    held = sum(1 for c in model if all(check(c, t).holds for t in traces))
    return held / len(model)


def candidate_constraints(alphabet: Iterable[str]) -> list[DeclareConstraint]:
    acts = sorted(set(alphabet))
    out = []
    for template in Template:
        if template.is_unary:
            out.extend(DeclareConstraint(template, a) for a in acts)
        else:
            out.extend(DeclareConstraint.of(template, x, y) for x in acts for y in acts if x != y)
    return sorted(out, key=DeclareConstraint.sort_key)


def discover(log: EventLog, support: float = 0.9, count_vacuous: bool = False) -> DeclareModel:
    """Keep every template instance whose per-trace support reaches ``support``."""
    if not 0 < support <= 1:
        raise ConfigError(f"support must be in (0, 1], got {support}")
    traces = [t.activities for t in log]
    if not traces:
        return DeclareModel()
    accepted = {Verdict.Satisfied, Verdict.VacuouslySatisfied} if count_vacuous else {Verdict.Satisfied}
    needed = support * len(traces) - 1e-9
    kept = []
    for c in candidate_constraints(log.activity_alphabet):
        hits = sum(1 for t in traces if check(c, t) in accepted)
        if hits >= needed:
            kept.append(c)
    return DeclareModel(tuple(kept))


def filter_conformant(log: EventLog, model: DeclareModel) -> EventLog:
    """Drop traces with trace fitness below 1. An empty model keeps everything."""
    if not model:
        return log
    kept = tuple(t for t in log if all(check(c, t).holds for c in model))
    if not kept:
        raise EmptyLogError("no trace conforms to the Declare model")
    return EventLog(kept)


def activation_target_sets(model: DeclareModel) -> ActivationTargetSets:
    acts = frozenset(c.activation for c in model)
    targets = frozenset(c.target for c in model if c.target is not None)
    return ActivationTargetSets(acts, targets)


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

_DECL_LINE = re.compile(r"^\s*(\w+)\s*\[(.*)\]\s*$")


def parse_constraint(text: str) -> DeclareConstraint:
    m = _DECL_LINE.match(text)
    if not m:
        raise ParseError(f"cannot parse Declare constraint {text!r}")
    name, body = m.groups()
    args = [a.strip() for a in body.split(",") if a.strip()]
    try:
        return DeclareConstraint.of(name, *args)
    except ValueError as exc:
        raise ParseError(f"cannot parse Declare constraint {text!r}: {exc}") from exc


MODEL_SCHEMA_VERSION = 1


def model_to_json(model: DeclareModel) -> list[dict]:
    return [c.to_dict() for c in model]


def model_from_json(data) -> DeclareModel:
    if isinstance(data, dict):
        data = data.get("constraints", [])
    if not isinstance(data, list):
        raise ParseError("Declare model JSON must be an array of constraints")
    try:
        return DeclareModel(tuple(DeclareConstraint.from_dict(d) for d in data))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_model(path: str | Path) -> DeclareModel:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".decl":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            return DeclareModel(tuple(parse_constraint(ln) for ln in lines))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_json(data)


def save_model(model: DeclareModel, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".decl":
        body = "".join(f"{c}\n" for c in model)
        path.write_text(f"# schema_version: {MODEL_SCHEMA_VERSION}\n{body}", encoding="utf-8")
    else:
        payload = {"schema_version": MODEL_SCHEMA_VERSION, "constraints": model_to_json(model)}
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

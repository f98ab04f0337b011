"""Seeded synthetic event logs that conform to a generating Declare model.

A synthesis spec is a JSON document::

    {
      "alphabet": ["Create application", "Submit documents", ...],
      "n_traces": 500,
      "length": {"min": 7, "max": 12},
      "model": ["Init[Create application]", {"template": "Precedence", ...}],
      "trace_attributes": [
        {"name": "amount", "type": "numeric", "min": 1000, "max": 50000, "integer": true},
        {"name": "goal", "type": "categorical", "values": ["car", "house"]}
      ],
      "outcome": {
        "constraint": "Existence1[Approve]",
        "base_rate": 0.5,
        "attribute_effects": {"amount": -1.5, "goal=house": 1.0},
        "activity_weights": {"positive": {"Review": 3.0}, "negative": {"Remind": 3.0}}
      },
      "start": "2023-01-01T00:00:00Z",
      "case_interval_ms": 3600000,
      "event_gap_ms": {"min": 60000, "max": 86400000}
    }

For each trace the outcome is drawn from a logistic model over the trace
attributes (numeric attributes enter rescaled to [-1, 1], categorical ones as
``name=value`` indicators). Activities are then drawn i.i.d. with the
outcome-specific weights and the whole trace is rejected until it satisfies
every generating constraint and agrees with the drawn outcome.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .declare import DeclareConstraint, DeclareModel, check, parse_constraint
from .errors import ConfigError, SynthesisError
from .event_log import Event, EventLog, Trace, Value, parse_timestamp

MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str  # "numeric" | "categorical"
    low: float = 0.0
    high: float = 0.0
    integer: bool = False
    values: tuple[str, ...] = ()


@dataclass(frozen=True)
class SynthesisSpec:
    alphabet: tuple[str, ...]
    n_traces: int
    min_length: int
    max_length: int
    model: DeclareModel
    attributes: tuple[AttributeSpec, ...] = ()
    outcome: DeclareConstraint | None = None
    base_rate: float = 0.5
    attribute_effects: dict[str, float] = field(default_factory=dict)
    positive_weights: dict[str, float] = field(default_factory=dict)
    negative_weights: dict[str, float] = field(default_factory=dict)
    start_ms: int = 1_672_531_200_000
    case_interval_ms: int = 3_600_000
    gap_min_ms: int = 60_000
    gap_max_ms: int = 86_400_000

    @classmethod
    def from_dict(cls, d: dict) -> SynthesisSpec:
        try:
            return cls._from_dict(d)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid synthesis spec: {exc!r}") from exc

    @classmethod
    def _from_dict(cls, d: dict) -> SynthesisSpec:
        def constraint(c):
            return parse_constraint(c) if isinstance(c, str) else DeclareConstraint.from_dict(c)

        alphabet = tuple(d["alphabet"])
        if not alphabet or len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet must be non-empty and duplicate-free")
        attrs = []
        for a in d.get("trace_attributes", []):
            if a["type"] == "numeric":
                lo, hi = float(a["min"]), float(a["max"])
                if hi < lo:
                    raise ValueError(f"attribute {a['name']}: max < min")
                attrs.append(AttributeSpec(a["name"], "numeric", lo, hi, bool(a.get("integer", False))))
            elif a["type"] == "categorical":
                values = tuple(str(v) for v in a["values"])
                if not values:
                    raise ValueError(f"attribute {a['name']}: empty value list")
                attrs.append(AttributeSpec(a["name"], "categorical", values=values))
            else:
                raise ValueError(f"attribute {a['name']}: unknown type {a['type']!r}")
        outcome = d.get("outcome", {})
        weights = outcome.get("activity_weights", {})
        length = d["length"]
        gap = d.get("event_gap_ms", {})
        spec = cls(
            alphabet=alphabet,
            n_traces=int(d["n_traces"]),
            min_length=int(length["min"]),
            max_length=int(length["max"]),
            model=DeclareModel(tuple(constraint(c) for c in d.get("model", []))),
            attributes=tuple(attrs),
            outcome=constraint(outcome["constraint"]) if "constraint" in outcome else None,
            base_rate=float(outcome.get("base_rate", 0.5)),
            attribute_effects={k: float(v) for k, v in outcome.get("attribute_effects", {}).items()},
            positive_weights={k: float(v) for k, v in weights.get("positive", {}).items()},
            negative_weights={k: float(v) for k, v in weights.get("negative", {}).items()},
            start_ms=parse_timestamp(str(d["start"])) if "start" in d else cls.start_ms,
            case_interval_ms=int(d.get("case_interval_ms", cls.case_interval_ms)),
            gap_min_ms=int(gap.get("min", cls.gap_min_ms)),
            gap_max_ms=int(gap.get("max", cls.gap_max_ms)),
        )
        if not 1 <= spec.min_length <= spec.max_length:
            raise ValueError("need 1 <= length.min <= length.max")
        if spec.n_traces < 0 or not 0 < spec.base_rate < 1:
            raise ValueError("need n_traces >= 0 and 0 < base_rate < 1")
        if not 0 <= spec.gap_min_ms <= spec.gap_max_ms:
            raise ValueError("need 0 <= event_gap_ms.min <= event_gap_ms.max")
        return spec

    @classmethod
    def load(cls, path: str | Path) -> SynthesisSpec:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: synthesis spec must be a JSON object")
        return cls.from_dict(data)


def _weights(spec: SynthesisSpec, table: dict[str, float]) -> np.ndarray:
    w = np.array([table.get(a, 1.0) for a in spec.alphabet], dtype=float)
    if (w < 0).any() or w.sum() <= 0:
        raise ConfigError("activity weights must be nonnegative with a positive sum")
    return w / w.sum()


def _draw_attributes(spec: SynthesisSpec, rng: np.random.Generator) -> dict[str, Value]:
    out: dict[str, Value] = {}
    for a in spec.attributes:
        if a.kind == "numeric":
            if a.integer:
                out[a.name] = int(rng.integers(math.ceil(a.low), math.floor(a.high) + 1))
            else:
                out[a.name] = float(rng.uniform(a.low, a.high))
        else:
            out[a.name] = a.values[int(rng.integers(len(a.values)))]
    return out


def _positive_probability(spec: SynthesisSpec, attrs: dict[str, Value]) -> float:
    logit = math.log(spec.base_rate / (1 - spec.base_rate))
    for a in spec.attributes:
        value = attrs[a.name]
        if a.kind == "numeric":
            w = spec.attribute_effects.get(a.name, 0.0)
            span = a.high - a.low
            scaled = 0.0 if span == 0 else 2 * (value - a.low) / span - 1
            logit += w * scaled
        else:
            logit += spec.attribute_effects.get(f"{a.name}={value}", 0.0)
    return 1 / (1 + math.exp(-logit))


def synthesize_log(spec: SynthesisSpec, seed: int) -> EventLog:
    rng = np.random.default_rng(seed)
    weights = {True: _weights(spec, spec.positive_weights), False: _weights(spec, spec.negative_weights)}
    alphabet = np.array(spec.alphabet, dtype=object)
    width = max(5, len(str(max(spec.n_traces - 1, 0))))
    traces = []
    for i in range(spec.n_traces):
        attrs = _draw_attributes(spec, rng)
        positive = bool(rng.random() < _positive_probability(spec, attrs)) if spec.outcome else True
        p = weights[positive]
        for _ in range(MAX_ATTEMPTS):
            n = int(rng.integers(spec.min_length, spec.max_length + 1))
            acts = [str(a) for a in rng.choice(alphabet, size=n, p=p)]
            if not all(check(c, acts).holds for c in spec.model):
                continue
            if spec.outcome is not None and check(spec.outcome, acts).holds != positive:
                continue
            break
        else:
            raise SynthesisError(
                f"trace {i}: no conforming trace after {MAX_ATTEMPTS} attempts; "
                "the generating model is too restrictive")
        case = f"case_{i:0{width}d}"
        ts = spec.start_ms + i * spec.case_interval_ms
        events = []
        for a in acts:
            events.append(Event(a, case, ts))
            ts += int(rng.integers(spec.gap_min_ms, spec.gap_max_ms + 1))
        traces.append(Trace(case, tuple(events), attrs))
    return EventLog(tuple(traces))

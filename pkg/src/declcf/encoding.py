"""Simple-index and simple-trace-index encodings of (prefix) traces.

A feature vector is a plain tuple: static trace attributes first (in schema
order), then one activity slot per prefix position. Slots past the end of a
short prefix hold :data:`PAD`.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import SchemaError
from .event_log import LabeledPrefix, Trace, Value

PAD = "<PAD>"
UNK = "<UNK>"

FeatureVector = tuple  # tuple[Value, ...]


class UnseenValueWarning(UserWarning):
    """A categorical value outside the schema domain was replaced by UNK."""


class DecodeWarning(UserWarning):
    """Activity slots after a PAD were dropped while decoding."""


class EncodingKind(enum.Enum):
    SimpleIndex = "SimpleIndex"
    SimpleTraceIndex = "SimpleTraceIndex"


@dataclass(frozen=True)
class Categorical:
    values: tuple[str, ...]

    def __contains__(self, value) -> bool:
        return value in self._index

    @cached_property
    def _index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.values)}

    def code(self, value) -> int:
        return self._index.get(value, -1)

    def to_dict(self) -> dict:
        return {"type": "categorical", "values": list(self.values)}


@dataclass(frozen=True)
class Numeric:
    low: float
    high: float
    integer: bool = False

    @property
    def span(self) -> float:
        return self.high - self.low

    def __contains__(self, value) -> bool:
        return isinstance(value, (int, float)) and not isinstance(value, bool)

    def to_dict(self) -> dict:
        return {"type": "numeric", "min": self.low, "max": self.high, "integer": self.integer}


Domain = Union[Categorical, Numeric]


def domain_from_dict(d: dict) -> Domain:
    if d["type"] == "categorical":
        return Categorical(tuple(d["values"]))
    if d["type"] == "numeric":
        return Numeric(d["min"], d["max"], bool(d.get("integer", False)))
    raise SchemaError(f"unknown domain type {d['type']!r}")


@dataclass(frozen=True)
class EncodingSchema:
    kind: EncodingKind
    prefix_length: int
    static_features: tuple[tuple[str, Domain], ...]
    activities: Categorical

    def __post_init__(self):
        if self.kind is EncodingKind.SimpleIndex and self.static_features:
            raise SchemaError("simple-index schemas carry no static features")
        if PAD not in self.activities:
            raise SchemaError("activity domain must contain PAD")

    @property
    def n_static(self) -> int:
        return len(self.static_features)

    @property
    def n_features(self) -> int:
        return self.n_static + self.prefix_length

    @property
    def static_indexes(self) -> range:
        return range(self.n_static)

    @property
    def cf_indexes(self) -> range:
        return range(self.n_static, self.n_features)

    def is_cf(self, i: int) -> bool:
        return i >= self.n_static

    @cached_property
    def domains(self) -> tuple[Domain, ...]:
        return tuple(d for _, d in self.static_features) + (self.activities,) * self.prefix_length

    @cached_property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.static_features) + tuple(
            f"event_{i + 1}" for i in range(self.prefix_length))

    @cached_property
    def numeric_mask(self) -> np.ndarray:
        return np.array([isinstance(d, Numeric) for d in self.domains])

    @cached_property
    def numeric_spans(self) -> np.ndarray:
        """Per-feature range for numeric features, 0 for categorical ones."""
        return np.array([d.span if isinstance(d, Numeric) else 0.0 for d in self.domains], dtype=float)

    def check_vector(self, vector: Sequence) -> None:
        if len(vector) != self.n_features:
            raise SchemaError(f"vector has {len(vector)} features, schema expects {self.n_features}")

    def conforms(self, vector: Sequence) -> bool:
        if len(vector) != self.n_features:
            return False
        return all(v in d or v == UNK for v, d in zip(vector, self.domains))

    def to_matrix(self, vectors: Iterable[Sequence]) -> np.ndarray:
        """Numeric view: categorical values become domain codes (-1 if unseen)."""
        rows = [self._row(v) for v in vectors]
        if not rows:
            return np.zeros((0, self.n_features))
        return np.array(rows, dtype=float)

    def _row(self, vector: Sequence) -> list[float]:
        self.check_vector(vector)
        return [float(v) if isinstance(d, Numeric) else d.code(v) for v, d in zip(vector, self.domains)]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "prefix_length": self.prefix_length,
            "static_features": [{"name": n, **d.to_dict()} for n, d in self.static_features],
            "activities": list(self.activities.values),
        }

    @classmethod
    def from_dict(cls, d: dict) -> EncodingSchema:
        statics = tuple((f["name"], domain_from_dict(f)) for f in d["static_features"])
        return cls(EncodingKind(d["kind"]), int(d["prefix_length"]), statics,
                   Categorical(tuple(d["activities"])))


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def build_schema(training: Sequence[LabeledPrefix | Trace], kind: EncodingKind | str,
                 prefix_length: int) -> EncodingSchema:
    kind = EncodingKind(kind)
    traces = [p.prefix if isinstance(p, LabeledPrefix) else p for p in training]
    if not traces:
        raise SchemaError("cannot build a schema from an empty training set")
    if prefix_length < 1:
        raise SchemaError(f"prefix length must be >= 1, got {prefix_length}")
    activities = sorted({a for t in traces for a in t.activities} | {PAD})
    statics: list[tuple[str, Domain]] = []
    if kind is EncodingKind.SimpleTraceIndex:
        names: list[str] = []
        for t in traces:
            for name in t.trace_attributes:
                if name not in names:
                    names.append(name)
        for name in names:
            values = []
            for t in traces:
                if name not in t.trace_attributes:
                    raise SchemaError(f"trace {t.case_id!r} lacks static attribute {name!r}")
                values.append(t.trace_attributes[name])
            if all(_is_number(v) for v in values):
                statics.append((name, Numeric(min(values), max(values),
                                              all(isinstance(v, int) for v in values))))
            elif all(isinstance(v, str) for v in values):
                statics.append((name, Categorical(tuple(sorted(set(values))))))
            else:
                raise SchemaError(f"attribute {name!r} mixes numeric and string values")
    return EncodingSchema(kind, prefix_length, tuple(statics), Categorical(tuple(activities)))


def encode(schema: EncodingSchema, prefix: Trace) -> FeatureVector:
    if len(prefix) > schema.prefix_length:
        raise ValueError(f"prefix of length {len(prefix)} exceeds schema length {schema.prefix_length}")
    out: list[Value] = []
    for name, domain in schema.static_features:
        value = prefix.trace_attributes.get(name)
        if isinstance(domain, Numeric):
            if not _is_number(value):
                raise SchemaError(f"static attribute {name!r} must be numeric, got {value!r}")
            out.append(value)
        elif value in domain:
            out.append(value)
        else:
            warnings.warn(f"unseen value {value!r} for {name!r} mapped to {UNK}", UnseenValueWarning,
                          stacklevel=2)
            out.append(UNK)
    for a in prefix.activities:
        if a in schema.activities and a != PAD:
            out.append(a)
        else:
            warnings.warn(f"unseen activity {a!r} mapped to {UNK}", UnseenValueWarning, stacklevel=2)
            out.append(UNK)
    out.extend([PAD] * (schema.prefix_length - len(prefix)))
    return tuple(out)


def decoded_activities(schema: EncodingSchema, vector: Sequence) -> tuple[str, ...]:
    """Activity sequence of ``vector``, truncated at the first PAD."""
    acts = []
    for i in schema.cf_indexes:
        if vector[i] == PAD:
            break
        acts.append(vector[i])
    return tuple(acts)


def decode(schema: EncodingSchema, vector: Sequence, case_id: str = "decoded",
           warn: bool = True) -> Trace:
    schema.check_vector(vector)
    acts = decoded_activities(schema, vector)
    if warn:
        tail = [vector[i] for i in schema.cf_indexes[len(acts):]]
        if any(v != PAD for v in tail):
            warnings.warn(f"dropped activities after PAD: {tail}", DecodeWarning, stacklevel=2)
    attrs = {name: vector[i] for i, (name, _) in enumerate(schema.static_features) if vector[i] != UNK}
    return Trace.from_activities(acts, case_id, attrs)

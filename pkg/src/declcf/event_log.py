"""Events, traces, logs and the prefix datasets derived from them.

Timestamps are integer milliseconds since the Unix epoch. Attribute values are
``str``, ``int`` or ``float``.
"""

from __future__ import annotations

import csv
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence, Union

from .errors import EmptyDatasetError, IntegrityError, ParseError

if TYPE_CHECKING:
    from .declare import DeclareConstraint

Value = Union[str, int, float]


@dataclass(frozen=True)
class Event:
    activity: str
    case_id: str
    timestamp: int
    attributes: dict[str, Value] = field(default_factory=dict)

    def __post_init__(self):
        if not self.activity:
            raise IntegrityError(f"event of case {self.case_id!r} has an empty activity name")
        if self.timestamp < 0:
            raise IntegrityError(f"negative timestamp {self.timestamp} in case {self.case_id!r}")


@dataclass(frozen=True)
class Trace:
    """One case: its events in time order plus static trace attributes.

    Traces built by :func:`declcf.encoding.decode` may be empty; every trace
    that lives in an :class:`EventLog` has at least one event.
    """

    case_id: str
    events: tuple[Event, ...]
    trace_attributes: dict[str, Value] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        last = -1
        for e in self.events:
            if e.case_id != self.case_id:
                raise IntegrityError(
                    f"event with case id {e.case_id!r} inside trace {self.case_id!r}")
            if e.timestamp < last:
                raise IntegrityError(f"timestamps decrease inside trace {self.case_id!r}")
            last = e.timestamp

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    @property
    def start(self) -> int:
        return self.events[0].timestamp if self.events else 0

    def __len__(self) -> int:
        return len(self.events)

    def prefix(self, k: int) -> Trace:
        return Trace(self.case_id, self.events[:k], dict(self.trace_attributes))

    @classmethod
    def from_activities(cls, activities: Iterable[str], case_id: str = "t",
                        trace_attributes: dict[str, Value] | None = None,
                        step_ms: int = 1000) -> Trace:
        """Build a trace with evenly spaced synthetic timestamps."""
        events = tuple(Event(a, case_id, i * step_ms) for i, a in enumerate(activities))
        return cls(case_id, events, dict(trace_attributes or {}))


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...]

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        for t in self.traces:
            if not t.events:
                raise IntegrityError(f"trace {t.case_id!r} is empty")

    @property
    def activity_alphabet(self) -> frozenset[str]:
        return frozenset(a for t in self.traces for a in t.activities)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)


@dataclass(frozen=True)
class LabeledPrefix:
    prefix: Trace
    label: int | None
    source_case: str

    def with_label(self, label: int) -> LabeledPrefix:
        return LabeledPrefix(self.prefix, label, self.source_case)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CsvColumnMap:
    """Names of the structural CSV columns.

    Columns listed in ``static`` or starting with ``static_prefix`` become
    trace attributes (the prefix is stripped); everything else becomes an
    event attribute.
    """

    case_id: str = "case_id"
    activity: str = "activity"
    timestamp: str = "timestamp"
    static: tuple[str, ...] = ()
    static_prefix: str = "trace:"


def parse_timestamp(raw: str) -> int:
    """Epoch milliseconds from an integer string or an ISO-8601 string."""
    raw = raw.strip()
    try:
        value = int(raw)
    except ValueError:
        pass
    else:
        if value < 0:
            raise ParseError(f"negative timestamp {raw!r}")
        return value
    text = raw[:-1] + "+00:00" if raw.endswith("Z") else raw
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"unparseable timestamp {raw!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    # exact integer arithmetic; float timestamps drift at the microsecond level
    delta = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def parse_value(raw: str) -> Value:
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        value = float(raw)
    except ValueError:
        return raw
    return value if math.isfinite(value) else raw


def _build_log(rows: Iterable[tuple[str, int, str, dict, dict]]) -> EventLog:
    """Group (case, ts, activity, event attrs, trace attrs) rows into traces."""
    cases: dict[str, list] = {}
    statics: dict[str, dict[str, Value]] = {}
    for order, (case, ts, activity, attrs, trace_attrs) in enumerate(rows):
        cases.setdefault(case, []).append((ts, order, activity, attrs))
        known = statics.setdefault(case, {})
        for name, value in trace_attrs.items():
            if name in known and known[name] != value:
                raise IntegrityError(
                    f"static attribute {name!r} is not constant in case {case!r}: "
                    f"{known[name]!r} vs {value!r}")
            known[name] = value
    traces = []
    for case, rows_ in cases.items():
        rows_.sort(key=lambda r: (r[0], r[1]))
        events = tuple(Event(a, case, ts, attrs) for ts, _, a, attrs in rows_)
        traces.append(Trace(case, events, statics[case]))
    return EventLog(tuple(traces))


def parse_csv(path: str | Path, column_map: CsvColumnMap | None = None) -> EventLog:
    cm = column_map or CsvColumnMap()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in (cm.case_id, cm.activity, cm.timestamp):
            if required not in header:
                raise ParseError(f"{path}: missing column {required!r}")
        static_cols = {c: c for c in cm.static if c in header}
        if cm.static_prefix:
            static_cols.update({c: c[len(cm.static_prefix):] for c in header
                                if c.startswith(cm.static_prefix)})
        structural = {cm.case_id, cm.activity, cm.timestamp}
        event_cols = [c for c in header if c not in structural and c not in static_cols]

        def rows():
            for line_no, row in enumerate(reader, start=2):
                if None in row:
                    raise ParseError(f"{path}:{line_no}: more fields than header columns")
                try:
                    ts = parse_timestamp(row[cm.timestamp])
                except ParseError as exc:
                    raise ParseError(f"{path}:{line_no}: {exc}") from None
                attrs = {c: parse_value(row[c]) for c in event_cols if row[c] not in ("", None)}
                trace_attrs = {name: parse_value(row[c]) for c, name in static_cols.items()
                               if row[c] not in ("", None)}
                if not row[cm.activity]:
                    raise ParseError(f"{path}:{line_no}: empty activity")
                yield row[cm.case_id], ts, row[cm.activity], attrs, trace_attrs

        return _build_log(rows())


def _fmt(value: Value | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(log: EventLog, path: str | Path, static_prefix: str = "trace:") -> None:
    """Canonical CSV: rows sorted by case id then timestamp, epoch-ms timestamps."""
    event_cols = sorted({k for t in log for e in t.events for k in e.attributes})
    trace_cols = sorted({k for t in log for k in t.trace_attributes})
    header = ["case_id", "activity", "timestamp"] + event_cols + [static_prefix + c for c in trace_cols]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for trace in sorted(log.traces, key=lambda t: t.case_id):
            for e in sorted(trace.events, key=lambda e: e.timestamp):
                w.writerow([trace.case_id, e.activity, str(e.timestamp)]
                           + [_fmt(e.attributes.get(c)) for c in event_cols]
                           + [_fmt(trace.trace_attributes.get(c)) for c in trace_cols])


# ---------------------------------------------------------------------------
# XES (subset: string/date/int/float attributes)
# ---------------------------------------------------------------------------

_XES_TYPES = {"string", "date", "int", "float"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _xes_attr(elem: ET.Element, where: str) -> tuple[str, Value]:
    kind = _local(elem.tag)
    if kind not in _XES_TYPES:
        raise ParseError(f"unsupported XES attribute type <{kind}> in {where}")
    key, raw = elem.get("key"), elem.get("value")
    if key is None or raw is None:
        raise ParseError(f"<{kind}> without key/value in {where}")
    try:
        if kind == "int":
            return key, int(raw)
        if kind == "float":
            return key, float(raw)
        if kind == "date":
            return key, parse_timestamp(raw)
    except ValueError as exc:
        raise ParseError(f"bad {kind} value {raw!r} for {key!r} in {where}") from exc
    return key, raw


def parse_xes(path: str | Path) -> EventLog:
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise ParseError(f"{path}: malformed XML: {exc}") from exc
    if _local(root.tag) != "log":
        raise ParseError(f"{path}: root element is <{_local(root.tag)}>, expected <log>")

    def rows():
        for t_index, trace in enumerate(c for c in root if _local(c.tag) == "trace"):
            case = str(t_index)
            trace_attrs: dict[str, Value] = {}
            events = []
            for child in trace:
                if _local(child.tag) == "event":
                    events.append(child)
                    continue
                key, value = _xes_attr(child, f"trace {t_index}")
                if key == "concept:name":
                    case = str(value)
                else:
                    trace_attrs[key] = value
            for e_index, ev in enumerate(events):
                where = f"trace {case!r}, event {e_index}"
                attrs = dict(_xes_attr(a, where) for a in ev)
                activity = attrs.pop("concept:name", None)
                if not isinstance(activity, str) or not activity:
                    raise ParseError(f"{path}: missing concept:name in {where}")
                ts = attrs.pop("time:timestamp", None)
                if ts is None:
                    raise ParseError(f"{path}: missing time:timestamp in {where}")
                if not isinstance(ts, int):
                    raise ParseError(f"{path}: time:timestamp must be a <date> in {where}")
                yield case, ts, activity, attrs, trace_attrs

    return _build_log(rows())


# ---------------------------------------------------------------------------
# Prefixes, labels, splits
# ---------------------------------------------------------------------------

def prefix_log(log: EventLog, lengths: Iterable[int]) -> list[LabeledPrefix]:
    """Unlabeled prefixes of every trace for each requested length k < |trace|."""
    ks = sorted(set(lengths))
    if any(k < 1 for k in ks):
        raise ValueError(f"prefix lengths must be >= 1, got {ks}")
    out = []
    for trace in log:
        for k in ks:
            if k < len(trace):
                out.append(LabeledPrefix(trace.prefix(k), None, trace.case_id))
    return out


def label_log(log: EventLog, constraint: DeclareConstraint) -> dict[str, int]:
    """1 iff the complete trace satisfies ``constraint`` (vacuously or not)."""
    from .declare import check

    return {t.case_id: int(check(constraint, t).holds) for t in log}


def apply_labels(prefixes: Iterable[LabeledPrefix], labels: dict[str, int]) -> list[LabeledPrefix]:
    return [p.with_label(labels[p.source_case]) for p in prefixes]


def order_by_start(prefixes: Iterable[LabeledPrefix]) -> list[LabeledPrefix]:
    """Stable sort by the start timestamp of the source trace."""
    return sorted(prefixes, key=lambda p: p.prefix.start)


def sequential_split(dataset: Sequence, ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)):
    """Contiguous train/valid/test slices; floor sizes, remainder goes to test."""
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValueError(f"split ratios must be nonnegative and sum to 1, got {ratios}")
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot split an empty dataset")
    n_train = math.floor(ratios[0] * n + 1e-9)
    n_valid = math.floor(ratios[1] * n + 1e-9)
    items = list(dataset)
    return items[:n_train], items[n_train:n_train + n_valid], items[n_train + n_valid:]

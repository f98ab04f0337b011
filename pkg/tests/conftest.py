from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from declcf.declare import DeclareConstraint, DeclareModel, Template  # noqa: E402
from declcf.encoding import EncodingKind, build_schema, encode  # noqa: E402
from declcf.event_log import Trace  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

BOB_ACTIVITIES = ("Create application", "Submit Documents", "Receive missing info email",
                  "Receive Reminder", "Provide missing info")
BOB_ATTRIBUTES = {"application_type": "New credit", "loan_goal": "Not specified",
                  "requested_amount": 15000.0, "credit_score": 540}

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def bob_trace() -> Trace:
    return Trace.from_activities(BOB_ACTIVITIES, "bob", dict(BOB_ATTRIBUTES))


@pytest.fixture
def bob_model() -> DeclareModel:
    return DeclareModel((
        DeclareConstraint.of(Template.Init, "Create application"),
        DeclareConstraint.of(Template.ChainResponse, "Create application", "Submit documents"),
        DeclareConstraint.of(Template.Absence2, "Receive reminder"),
    ))


def loan_traces() -> list[Trace]:
    """A few hand-written loan prefixes sharing Bob's attribute layout."""
    rows = [
        (("Create application", "Submit documents", "Receive missing info email", "Receive reminder",
          "Provide missing info"), ("New credit", "Not specified", 15000.0, 540)),
        (("Create application", "Submit documents", "Review application", "Provide missing info",
          "Receive reminder"), ("New credit", "Car", 8000.0, 700)),
        (("Create application", "Review application", "Submit documents", "Receive missing info email",
          "Review application"), ("Limit raise", "Home", 30000.0, 610)),
    ]
    names = ("application_type", "loan_goal", "requested_amount", "credit_score")
    return [Trace.from_activities(acts, f"case{i}", dict(zip(names, attrs))) for i, (acts, attrs) in enumerate(rows)]


@pytest.fixture
def loan_schema():
    return build_schema(loan_traces(), EncodingKind.SimpleTraceIndex, 5)


@pytest.fixture
def loan_vectors(loan_schema):
    return [encode(loan_schema, t) for t in loan_traces()]

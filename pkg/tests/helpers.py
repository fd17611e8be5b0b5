from __future__ import annotations

from pathlib import Path

from tmkit.behavior import JointSpec
from tmkit.model import Guard, Not, Outcome
from tmkit.parser import parse_file

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
ERRORS = CORPUS / "errors"
GOLDEN = Path(__file__).resolve().parent / "golden"

PAPER_MODELS = ["simple_atm", "banking_atm", "card_instance", "joined_atm"]
ALL_MODELS = PAPER_MODELS + ["atm_part2_stub"]

JOINED_HEADER = (
    "# Banking ATM first part joined to the second-part stub at its three\n"
    "# points of contact: the PIN is equal, the card is not lost or stolen,\n"
    "# and the expiration date has not passed.\n"
)


def load(name: str):
    result = parse_file(CORPUS / f"{name}.tm")
    assert result.ok, result.diagnostics
    return result


def atm_joint_specs() -> list[JointSpec]:
    unless = lambda name: Guard((Not(Outcome(name)),))  # noqa: E731
    return [
        JointSpec("ATM.PinCheck.process", "Session.PinAccepted.create", guard=unless("mismatch")),
        JointSpec("ATM.Response.process", "Session.CardValid.create", guard=unless("stolen")),
        JointSpec("ATM.Expiry.process", "Session.DateValid.create", guard=unless("expired")),
    ]


# Fixture file -> the one diagnostic code it must produce.
FIXTURES = {
    "bad_adjacency": "E_ADJ",
    "dangling_ref": "E_REF",
    "duplicate_sibling": "E_NAME",
    "empty_leaf": "E_EMPTY",
    "bad_trigger_source": "E_TRIG_SRC",
    "bad_trigger_target": "E_TRIG_DST",
    "branch": "E_BRANCH",
    "undeclared_counter": "E_GUARD",
    "duplicate_flow": "E_DUP",
    "bad_generator": "E_GEN_SPEC",
    "unreachable": "W_UNREACH",
    "lexical": "P001",
    "syntax_errors": "P002",
    "duplicate_decl": "P003",
    "disconnected_region": "B002",
    "unresolved_region": "B001",
    "chronology_cycle": "C002",
    "unknown_chronology_event": "C001",
}


def fixture_codes(name: str) -> list[str]:
    """Every diagnostic code a whole-file check reports for a fixture."""
    from tmkit.behavior import check_events
    from tmkit.model import validate

    result = parse_file(ERRORS / f"{name}.tm")
    diags = list(result.diagnostics)
    if result.ok:
        diags += validate(result.model) + check_events(result.model, result.events, result.chronology)
    return sorted({d.code for d in diags})

from __future__ import annotations

from itertools import groupby

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import CORPUS, JOINED_HEADER, atm_joint_specs, load
from tmkit.behavior import (
    BindError,
    ConformanceError,
    EventOccurrence,
    JointError,
    JointSpec,
    bind_events,
    check_chronology,
    joints,
    project,
)
from tmkit.events import Chronology, ChronologyError, EventDecl
from tmkit.model import StageRef, StaticModel, validate
from tmkit.parser import parse
from tmkit.printer import print_canonical
from tmkit.scenario import Scenario, load_scenario
from tmkit.simulator import simulate

SIMPLE_CHRONOLOGY = Chronology((("E1", "E2"), ("E2", "E3"), ("E3", "E4"), ("E3", "E5")))


def behave(model_name: str, scenario_name: str):
    r = load(model_name)
    trace = simulate(r.model, load_scenario(CORPUS / f"{scenario_name}.scn"))
    events = bind_events(r.model, r.events)
    return trace, project(trace, events), r


def ids(occurrences) -> list[str]:
    return [o.event for o in occurrences]


def occ(event: str, start: int) -> EventOccurrence:
    return EventOccurrence(event, start, start, (), 0)


# -- binding ----------------------------------------------------------------


def test_card_insertion_region_binds():
    r = load("simple_atm")
    (e1,) = bind_events(r.model, [d for d in r.events if d.id == "E1"])
    assert "ATM.receive" in e1.paths and "User.Card.create" in e1.paths


def test_empty_region_rejected():
    r = load("simple_atm")
    with pytest.raises(BindError) as exc:
        bind_events(r.model, [EventDecl("E0", "nothing", [])])
    assert [d.code for d in exc.value.diagnostics] == ["B002"]


def test_disconnected_region():
    m = StaticModel("M")
    m.add_thimac("A", ["create", "process"])
    m.add_thimac("B", ["create", "process"])
    m.add_flow("a", "A.create", "A.process")
    m.add_flow("b", "B.create", "B.process")
    region = [StageRef.parse("A.process"), StageRef.parse("B.process")]
    with pytest.raises(BindError) as exc:
        bind_events(m, [EventDecl("E1", "split", region)])
    assert [d.code for d in exc.value.diagnostics] == ["B002"]
    # a trigger between them joins the region
    m.add_trigger("A.process", "B.process")
    assert bind_events(m, [EventDecl("E1", "joined", region)])[0].id == "E1"


def test_unresolved_and_duplicate_events():
    r = load("simple_atm")
    decls = [
        EventDecl("E1", "x", [StageRef.parse("ATM.receive")]),
        EventDecl("E1", "again", [StageRef.parse("ATM.receive")]),
        EventDecl("E2", "ghost", [StageRef.parse("Ghost.receive")]),
    ]
    with pytest.raises(BindError) as exc:
        bind_events(r.model, decls)
    assert sorted(d.code for d in exc.value.diagnostics) == ["B001", "B003"]


# -- projection -------------------------------------------------------------


def hand_projection(trace, r):
    """Map each stage to its event, then collapse each token's runs."""
    owner = {ref.path: d.id for d in r.events for ref in d.region}
    order = [d.id for d in r.events]
    found = []
    for token in sorted({e.token for e in trace}):
        indexed = [(i, e) for i, e in enumerate(trace.events) if e.token == token]
        for event, run in groupby(indexed, key=lambda ie: owner.get(ie[1].path)):
            run = list(run)
            if event is not None:
                found.append((run[0][1].tick, order.index(event), run[0][0], event, run[-1][1].tick))
    return [(event, start, end) for start, _, _, event, end in sorted(found)]


@pytest.mark.parametrize(
    "model_name,scenario_name",
    [
        ("simple_atm", "simple_atm_mismatch"),
        ("simple_atm", "simple_atm_match"),
        ("banking_atm", "three_failures"),
        ("banking_atm", "one_failure"),
        ("banking_atm", "two_failures_then_ok"),
        ("card_instance", "card_waves"),
    ],
)
def test_projection_matches_hand_projection(model_name, scenario_name):
    trace, occurrences, r = behave(model_name, scenario_name)
    assert [(o.event, o.start, o.end) for o in occurrences] == hand_projection(trace, r)
    for o in occurrences:
        assert o.start <= o.end
        assert list(o.indices) == sorted(set(o.indices))
        assert all(trace.events[i].token == o.token for i in o.indices)


def test_match_projects_e1_e2_e3_e5():
    _, occurrences, r = behave("simple_atm", "simple_atm_match")
    assert ids(occurrences) == ["E1", "E2", "E3", "E5"]
    assert check_chronology(occurrences, r.chronology).verdict == "CONFORMS"


def test_mismatch_projects_e1_e2_e3_e4():
    _, occurrences, r = behave("simple_atm", "simple_atm_mismatch")
    assert ids(occurrences) == ["E1", "E2", "E3", "E4"]
    assert check_chronology(occurrences, r.chronology).verdict == "CONFORMS"


def test_empty_trace_projects_nothing():
    r = load("simple_atm")
    trace = simulate(r.model, Scenario())
    assert project(trace, bind_events(r.model, r.events)) == []
    assert project([], []) == []


def test_banking_confiscation_run_conforms_with_e7():
    _, occurrences, r = behave("banking_atm", "three_failures")
    assert ids(occurrences) == ["E1", "E2", "E3", "E8", "E6", "E4", "E4", "E4", "E5", "E5", "E5", "E7"]
    report = check_chronology(occurrences, r.chronology)
    assert report.verdict == "CONFORMS" and report.violations == []


def test_waves_are_separate():
    _, occurrences, _ = behave("card_instance", "card_waves")
    waves = [o for o in occurrences if o.event == "E2"]
    assert len(waves) == 2
    assert waves[0].token != waves[1].token
    assert not set(waves[0].indices) & set(waves[1].indices)


# -- chronology -------------------------------------------------------------


def test_declared_chronology_matches():
    assert load("simple_atm").chronology.edges == SIMPLE_CHRONOLOGY.edges


def test_lonely_e5_violates():
    report = check_chronology([occ("E5", 4)], SIMPLE_CHRONOLOGY)
    assert report.verdict == "VIOLATES"
    assert [(v.event, v.tick, v.missing) for v in report.violations] == [("E5", 4, "E3")]
    assert report.format() == "verdict=VIOLATES\noccurrence event=E5 start=4 end=4\nviolation event=E5 tick=4 missing=E3\n"


def test_same_tick_predecessor_counts():
    assert check_chronology([occ("E1", 0), occ("E2", 0)], SIMPLE_CHRONOLOGY).verdict == "CONFORMS"


def test_unknown_occurrence_id():
    with pytest.raises(ConformanceError) as exc:
        check_chronology([occ("E99", 0)], SIMPLE_CHRONOLOGY)
    assert exc.value.code == "C001"


def test_cycles_rejected():
    with pytest.raises(ChronologyError) as exc:
        Chronology((("A", "B"), ("B", "C"), ("C", "A")))
    assert exc.value.code == "C002"


event_ids = st.sampled_from(["E1", "E2", "E3", "E4", "E5"])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(event_ids, st.integers(0, 10)), max_size=8), st.integers(0, 3))
def test_removing_an_edge_never_breaks_conformance(raw, which):
    occurrences = [occ(e, t) for e, t in raw]
    before = check_chronology(occurrences, SIMPLE_CHRONOLOGY)
    after = check_chronology(occurrences, SIMPLE_CHRONOLOGY.without(SIMPLE_CHRONOLOGY.edges[which]))
    assert len(after.violations) <= len(before.violations)
    if before.verdict == "CONFORMS":
        assert after.verdict == "CONFORMS"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=8))
def test_chronology_accepts_exactly_the_acyclic_graphs(pairs):
    edges = tuple((f"E{a}", f"E{b}") for a, b in pairs)
    # independent cycle check: repeatedly strip vertices with no incoming edge
    remaining = set(edges)
    while True:
        targets = {b for _, b in remaining}
        strip = {e for e in remaining if e[0] not in targets}
        if not strip:
            break
        remaining -= strip
    if remaining:
        with pytest.raises(ChronologyError):
            Chronology(edges)
    else:
        order = Chronology(edges).order()
        for a, b in edges:
            assert order.index(a) < order.index(b)


# -- joints -----------------------------------------------------------------


def joined():
    return joints(load("banking_atm").model, load("atm_part2_stub").model, atm_joint_specs(), name="JoinedATM")


def test_three_joint_edges():
    a, b = load("banking_atm").model, load("atm_part2_stub").model
    merged = joined()
    assert len(merged.triggers) == len(a.triggers) + len(b.triggers) + 3
    assert len(merged.flows) == len(a.flows) + len(b.flows)
    crossing = [t for t in merged.triggers if t.src.path.startswith("ATM.") and t.dst.path.startswith("Session.")]
    assert len(crossing) == 3


def test_merged_model_validates():
    assert [d for d in validate(joined()) if d.is_error] == []


def test_joined_corpus_file_is_the_generated_model():
    part1 = load("banking_atm")
    text = print_canonical(joined(), part1.events, part1.chronology, JOINED_HEADER)
    assert text == (CORPUS / "joined_atm.tm").read_text()


def test_joints_do_not_touch_inputs():
    a = load("banking_atm").model
    before = a.structure()
    joints(a, load("atm_part2_stub").model, atm_joint_specs())
    assert a.structure() == before


def test_empty_joint_list_rejected():
    a = load("banking_atm").model
    with pytest.raises(JointError) as exc:
        joints(a, a, [])
    codes = {d.code for d in exc.value.diagnostics}
    assert "J001" in codes and "J002" in codes


def test_root_collision():
    a = load("banking_atm").model
    with pytest.raises(JointError) as exc:
        joints(a, a, [JointSpec("ATM.PinCheck.process", "Menu.create")])
    assert "J002" in {d.code for d in exc.value.diagnostics}


@pytest.mark.parametrize(
    "spec",
    [
        JointSpec("ATM.receive", "Session.PinAccepted.create"),
        JointSpec("ATM.PinCheck.process", "Nowhere.create"),
        JointSpec("Customer.Card.transfer", "Session.PinAccepted.create"),
    ],
)
def test_illegal_joint_shapes(spec):
    with pytest.raises(JointError) as exc:
        joints(load("banking_atm").model, load("atm_part2_stub").model, [spec])
    assert [d.code for d in exc.value.diagnostics] == ["J001"]


def test_transfer_joint_needs_label():
    part_a = parse("model A { thimac Out { stages: create, release, transfer; flow x: Out.create -> Out.release -> Out.transfer; } }").model
    part_b = parse("model B { thimac In { stages: transfer, receive; flow x: In.transfer -> In.receive; } }").model
    with pytest.raises(JointError):
        joints(part_a, part_b, [JointSpec("Out.transfer", "In.transfer")])
    merged = joints(part_a, part_b, [JointSpec("Out.transfer", "In.transfer", label="x")])
    assert [(f.src.path, f.dst.path) for f in merged.flows if not f.same_thimac] == [("Out.transfer", "In.transfer")]

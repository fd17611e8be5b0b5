"""Acceptance criteria, one test each.

Every test prints a single ``AC<n> PASS|FAIL <summary>`` line; run with
``pytest tests/test_acceptance.py -s`` to see them.
"""

from __future__ import annotations

import re
from collections import Counter

from helpers import ALL_MODELS, CORPUS, FIXTURES, GOLDEN, PAPER_MODELS, fixture_codes, load
from tmkit.behavior import bind_events, check_chronology, project
from tmkit.generators import generate_instance
from tmkit.model import StageKind, allowed_adjacency, validate
from tmkit.parser import parse
from tmkit.printer import print_canonical
from tmkit.render import RenderOptions, to_dot
from tmkit.scenario import load_scenario
from tmkit.simulator import simulate, write_trace

# tolerances: every criterion is exact
OUT_OF_RANGE_ALLOWED = 0
INSTANCE_DRAWS = 1000
DETERMINISM_RUNS = 10


def report(n: int, ok: bool, summary: str, failures: list[str]) -> None:
    print(f"\nAC{n} {'PASS' if ok else 'FAIL'} {summary}")
    for f in failures:
        print(f"    {f}")
    assert ok, failures


def trace_of(model_name: str, scenario_name: str):
    return simulate(load(model_name).model, load_scenario(CORPUS / f"{scenario_name}.scn"))


def test_ac1_corpus_validity():
    failures = []
    for name in PAPER_MODELS:
        r = load(name)
        errors = [d for d in r.diagnostics + validate(r.model) if d.is_error]
        if errors:
            failures.append(f"{name}: {[d.code for d in errors]}")
    for name, code in FIXTURES.items():
        got = fixture_codes(name)
        if got != [code]:
            failures.append(f"fixture {name}: expected [{code}] got {got}")
    report(1, not failures, f"{len(PAPER_MODELS)} models clean, {len(FIXTURES)} fixtures exact", failures)


def test_ac2_simple_atm_branching():
    failures = []
    for scenario in ("simple_atm_mismatch", "simple_atm_match"):
        text = write_trace(trace_of("simple_atm", scenario))
        if text != (GOLDEN / f"{scenario}.trace").read_text():
            failures.append(f"{scenario}: trace differs from golden")
    mismatch = trace_of("simple_atm", "simple_atm_mismatch")
    card_enters = [e.path for e in mismatch.for_token(0) if e.action == "enter"]
    if not card_enters or card_enters[-1] != "Confiscation.receive":
        failures.append(f"mismatch: card ends at {card_enters[-1:]}")
    match = trace_of("simple_atm", "simple_atm_match")
    menus = [e.token for e in match if e.action == "spawn" and e.flow == "menu"]
    if len(menus) != 1:
        failures.append(f"match: {len(menus)} menu spawns")
    else:
        enters = [e.path for e in match.for_token(menus[0]) if e.action == "enter"]
        if enters[-1:] != ["User.receive"]:
            failures.append(f"match: menu ends at {enters[-1:]}")
    report(2, not failures, "mismatch confiscates the card, match delivers a spawned menu", failures)


def test_ac3_three_attempt_rule():
    failures = []
    expected = {
        "one_failure": ([1], False, False),
        "two_failures_then_ok": ([1, 2, 0], False, True),
        "three_failures": ([1, 2, 3], True, False),
    }
    for scenario, (sets, confiscated, menu) in expected.items():
        trace = trace_of("banking_atm", scenario)
        got_sets = [e.value for e in trace if e.action == "counter-set" and e.counter == "pin_fail"]
        retained = [i for i, e in enumerate(trace.events) if e.action == "enter" and e.path == "ATM.Retainer.release"]
        delivered = any(e.flow == "menu" and e.path == "Customer.Screen.receive" and e.action == "enter" for e in trace)
        if got_sets != sets:
            failures.append(f"{scenario}: counter-set values {got_sets} != {sets}")
        if bool(retained) != confiscated:
            failures.append(f"{scenario}: confiscation={bool(retained)}")
        if confiscated:
            last_set = max(i for i, e in enumerate(trace.events) if e.action == "counter-set")
            fires = [e for e in trace.events[last_set:] if e.action == "trigger-fire" and e.path == "ATM.PinCheck.process"]
            if len(retained) != 1 or retained[0] < last_set or not fires:
                failures.append(f"{scenario}: confiscation not exactly once after the third failure")
        if delivered != menu:
            failures.append(f"{scenario}: menu delivered={delivered}")
    report(3, not failures, "[fail] [fail,fail,ok] [fail,fail,fail] behave as required", failures)


def test_ac4_event_conformance():
    failures = []
    for model_name, scenario, want in (
        ("simple_atm", "simple_atm_mismatch", ["E1", "E2", "E3", "E4"]),
        ("simple_atm", "simple_atm_match", ["E1", "E2", "E3", "E5"]),
        ("banking_atm", "three_failures", None),
    ):
        r = load(model_name)
        occurrences = project(trace_of(model_name, scenario), bind_events(r.model, r.events))
        got = [o.event for o in occurrences]
        verdict = check_chronology(occurrences, r.chronology).verdict
        if want is not None and got != want:
            failures.append(f"{scenario}: occurrences {got} != {want}")
        if want is None and "E7" not in got:
            failures.append(f"{scenario}: E7 absent from {got}")
        if want is None and not set(got) <= {f"E{i}" for i in range(1, 10)}:
            failures.append(f"{scenario}: unexpected ids {got}")
        if verdict != "CONFORMS":
            failures.append(f"{scenario}: {verdict}")
    report(4, not failures, "E1E2E3E4 / E1E2E3E5 conform; confiscation run has E7 and conforms", failures)


def card_in_range(attrs) -> bool:
    number, day, month, year = (attrs[k] for k in ("number", "day", "month", "year"))
    return (
        bool(re.fullmatch(r"[1-9]\d{8}", number))
        and bool(re.fullmatch(r"\d{2}", day)) and 1 <= int(day) <= 31
        and bool(re.fullmatch(r"\d{2}", month)) and 1 <= int(month) <= 12
        and bool(re.fullmatch(r"\d{4}", year)) and 2000 <= int(year) <= 2050
    )


def test_ac5_instance_generators():
    gens = load("card_instance").model.thimac("Card").generators
    kinds = [(g.attr, g.kind, g.args) for g in gens]
    failures = []
    if kinds != [("number", "digits", (9,)), ("day", "range", (1, 31)), ("month", "range", (1, 12)), ("year", "range", (2000, 2050))]:
        failures.append(f"generators declared as {kinds}")
    bad = [seed for seed in range(INSTANCE_DRAWS) if not card_in_range(generate_instance(gens, seed))]
    if len(bad) > OUT_OF_RANGE_ALLOWED:
        failures.append(f"{len(bad)} out-of-range draws, first seeds {bad[:5]}")
    for start in ("01-06-2015", "01-06-2019"):
        day, month, year = start.split("-")
        if not card_in_range({"number": "123456789", "day": day, "month": month, "year": year}):
            failures.append(f"documented tuple with date {start} rejected")
    report(5, not failures, f"{INSTANCE_DRAWS} seeded cards in range, documented tuple accepted", failures)


RUNS = [
    ("simple_atm", "simple_atm_mismatch"),
    ("simple_atm", "simple_atm_match"),
    ("banking_atm", "three_failures"),
    ("banking_atm", "one_failure"),
    ("banking_atm", "two_failures_then_ok"),
    ("card_instance", "card_waves"),
]


def test_ac6_property_suites():
    failures = []
    for name in ALL_MODELS:
        r = load(name)
        text = print_canonical(r.model, r.events, r.chronology, r.header)
        again = parse(text)
        if not again.ok or again.model.structure() != r.model.structure():
            failures.append(f"round-trip: {name}")
        elif print_canonical(again.model, again.events, again.chronology, again.header) != text:
            failures.append(f"fixpoint: {name}")
    same = {("transfer", "receive"), ("receive", "process"), ("receive", "release"), ("create", "process"),
            ("create", "release"), ("process", "release"), ("release", "transfer")}
    cross = {("transfer", "transfer")}
    for a in StageKind:
        for b in StageKind:
            for flag, table in ((True, same), (False, cross)):
                if allowed_adjacency(a, b, flag) != ((a.value, b.value) in table):
                    failures.append(f"adjacency ({a}, {b}, same={flag})")
    for model_name, scenario in RUNS:
        outputs = {write_trace(trace_of(model_name, scenario)) for _ in range(DETERMINISM_RUNS)}
        if len(outputs) != 1:
            failures.append(f"determinism: {scenario}")
        trace = trace_of(model_name, scenario)
        first = {}
        for e in trace:
            first.setdefault(e.token, e)
        acts = Counter(e.action for e in trace)
        injections = len(load_scenario(CORPUS / f"{scenario}.scn").injections)
        creations = acts["create"] + sum(e.action == "enter" for e in first.values())
        live = sum(t.state != "consumed" for t in trace.tokens)
        if creations != injections or live != creations + acts["spawn"] - acts["consume"]:
            failures.append(f"conservation: {scenario}")
    report(6, not failures, "round-trip, 50 adjacency cases, 10x determinism, conservation", failures)


def dot_scan(text: str) -> tuple[int, int, int]:
    text = re.sub(r"#[^\n]*", "", text)
    stages = sum(len(m.split(",")) for m in re.findall(r"stages:([^;]*);", text))
    flows = sum(m.count("->") for m in re.findall(r"\bflow\s+\w+\s*:([^;]*);", text))
    triggers = len(re.findall(r"(?m)^\s*trigger\b", text))
    return stages, flows, triggers


def test_ac7_renderer_goldens():
    failures = []
    for name in ALL_MODELS:
        r = load(name)
        for events, suffix in ((False, ".dot"), (True, ".events.dot")):
            dot = to_dot(r.model, r.events, RenderOptions(show_events=events))
            if dot != (GOLDEN / f"{name}{suffix}").read_text():
                failures.append(f"golden: {name}{suffix}")
        nodes = len(re.findall(r'(?m)^\s*"[^"]+" \[label="[a-z]+"', dot))
        got = (nodes, dot.count("style=solid"), dot.count("style=dashed"))
        want = dot_scan((CORPUS / f"{name}.tm").read_text())
        if got != want:
            failures.append(f"counts {name}: dot {got} vs scan {want}")
    report(7, not failures, f"{2 * len(ALL_MODELS)} goldens byte-identical, counts match scan", failures)

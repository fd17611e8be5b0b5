"""Deterministic tick-based token flow over a static model.

Each tick runs, in order:

0. trigger evaluation for things that a trigger placed on a process or
   create stage during the previous tick;
1. scheduled injections (in scenario order);
2. one hop for every free thing along the unique outgoing flow of its
   label, in ascending token id order (things injected this tick wait);
3. trigger evaluation for every process or create stage entered in 1-2,
   triggers in declaration order;
4. settlement: a thing with no outgoing flow parks if some release or
   process trigger in its top-level thimac could resume it, otherwise it
   is consumed.

The run stops once nothing can move and nothing is scheduled, or when
``max_ticks`` ticks have run.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

from tmkit.diagnostics import TMError
from tmkit.generators import generate_instance
from tmkit.model import (
    Compare,
    DateValue,
    Guard,
    GuardRef,
    Not,
    Outcome,
    StageKind,
    StageRef,
    StaticModel,
    TriggerEdge,
)
from tmkit.scenario import Scenario

ACTIONS = ("create", "enter", "exit", "spawn", "park", "unpark", "consume", "trigger-fire", "counter-set")

LIVE, PARKED, CONSUMED = "live", "parked", "consumed"


class SimulationError(TMError):
    code = "E_SIM_REF"


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    token: int
    flow: str
    path: str
    action: str
    counter: str | None = None
    value: int | None = None

    def line(self) -> str:
        text = f"tick={self.tick} token={self.token} flow={self.flow} path={self.path} action={self.action}"
        if self.action == "counter-set":
            text += f" counter={self.counter} value={self.value}"
        return text


@dataclass
class Token:
    id: int
    flow_label: str
    attrs: dict
    at: StageRef
    state: str = LIVE


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)
    final_tick: int = 0
    tokens: list[Token] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def for_token(self, token_id: int) -> list[TraceEvent]:
        return [e for e in self.events if e.token == token_id]

    def actions(self, action: str) -> list[TraceEvent]:
        return [e for e in self.events if e.action == action]


def _coerce(a, b):
    """Bring two literals to a comparable pair, or return None."""
    if isinstance(a, bool) or isinstance(b, bool):
        return (a, b) if type(a) is type(b) else None
    if type(a) is type(b):
        return a, b
    for x, y, swap in ((a, b, False), (b, a, True)):
        if isinstance(x, int) and isinstance(y, str) and y.isdigit():
            pair = (x, int(y))
            return pair[::-1] if swap else pair
        if isinstance(x, DateValue) and isinstance(y, str) and DateValue.PATTERN.match(y):
            pair = (x, DateValue.parse(y))
            return pair[::-1] if swap else pair
    return None


def compare(left, op: str, right) -> bool:
    pair = _coerce(left, right)
    if pair is None:
        return op == "!="
    a, b = pair
    return {
        "==": a == b,
        "!=": a != b,
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
    }[op]


class _Run:
    def __init__(self, model: StaticModel, scenario: Scenario):
        self.model = model
        self.scenario = scenario
        self.trace = Trace()
        self.tokens: list[Token] = []
        self.counters = {c.name: c.initial for c in model.counters}
        self.initial = dict(self.counters)
        self.outcomes = {k: list(v) for k, v in scenario.outcomes.items()}
        self.tick = 0
        self._check_references()
        self._resume_labels = self._resumable()

    # -- setup -----------------------------------------------------------

    def _check_references(self) -> None:
        model = self.model
        labels = {f.label for f in model.flows}
        for inj in self.scenario.injections:
            if not model.resolves(inj.entry):
                raise SimulationError(f"injection entry {inj.entry} does not resolve")
            if inj.entry.kind not in (StageKind.CREATE, StageKind.TRANSFER):
                raise SimulationError(f"injection entry {inj.entry} must be a create or transfer stage")
            if inj.flow not in labels:
                raise SimulationError(f"injection flow {inj.flow!r} is not a flow label of the model")
            if inj.tick < 0:
                raise SimulationError(f"injection tick {inj.tick} is negative")
        for stage, _name in self.scenario.outcomes:
            if not model.resolves(stage):
                raise SimulationError(f"outcome stage {stage} does not resolve")
        supplied = {k for inj in self.scenario.injections for k in inj.attrs}
        supplied |= {g.attr for t in model.thimacs() for g in t.generators}
        for trig in model.triggers:
            guard = model.expand_guard(trig.guard)
            for atom in guard.atoms() if guard else ():
                if isinstance(atom, Compare) and atom.source == "attr" and atom.name not in supplied:
                    raise SimulationError(f"trigger {trig.id}: attribute {atom.name!r} is never supplied")
                if isinstance(atom, GuardRef):
                    raise SimulationError(f"trigger {trig.id}: guard {atom.name!r} does not resolve")
                if isinstance(atom, Compare) and atom.source == "counter" and atom.name not in self.counters:
                    raise SimulationError(f"trigger {trig.id}: counter {atom.name!r} is not declared")
            for action in trig.actions:
                if action.counter not in self.counters:
                    raise SimulationError(f"trigger {trig.id}: counter {action.counter!r} is not declared")

    def _labels_at(self, ref: StageRef) -> set[str]:
        return {f.label for f in self.model.flows if ref in (f.src, f.dst)}

    def _resumable(self) -> set[tuple[str, str]]:
        """(root thimac, label) pairs that some release/process trigger can resume."""
        out = set()
        for trig in self.model.triggers:
            if trig.dst.kind in (StageKind.RELEASE, StageKind.PROCESS):
                root = trig.dst.thimac_path.split(".")[0]
                out |= {(root, label) for label in self._labels_at(trig.dst)}
        return out

    # -- helpers ---------------------------------------------------------

    def emit(self, token: Token, ref: StageRef, action: str, **extra) -> None:
        self.trace.events.append(TraceEvent(self.tick, token.id, token.flow_label, ref.path, action, **extra))

    def new_token(self, label: str, attrs: dict, at: StageRef) -> Token:
        tok = Token(len(self.tokens), label, attrs, at)
        self.tokens.append(tok)
        return tok

    def next_edge(self, tok: Token):
        edges = self.model.outgoing(tok.at, tok.flow_label)
        return edges[0] if edges else None

    # -- guards ----------------------------------------------------------

    def holds(self, atom, tok: Token, stage: StageRef, cache: dict) -> bool:
        if isinstance(atom, Not):
            return not self.holds(atom.term, tok, stage, cache)
        if isinstance(atom, GuardRef):
            gd = self.model.guard_def(atom.name)
            return self.evaluate(gd.guard, tok, stage, cache)
        if isinstance(atom, Outcome):
            return self.outcome(atom.name, tok, stage, cache)
        if atom.source == "counter":
            return compare(self.counters[atom.name], atom.op, atom.value)
        if atom.name not in tok.attrs:
            return False
        return compare(tok.attrs[atom.name], atom.op, atom.value)

    def evaluate(self, guard: Guard | None, tok: Token, stage: StageRef, cache: dict) -> bool:
        if guard is None:
            return True
        return all(self.holds(t, tok, stage, cache) for t in guard.terms)

    def outcome(self, name: str, tok: Token, stage: StageRef, cache: dict) -> bool:
        # one value per stage entry, shared by every trigger that asks
        if name in cache:
            return cache[name]
        queue = self.outcomes.get((stage, name))
        if queue:
            value = queue.pop(0)
        elif isinstance(tok.attrs.get(name), bool):
            value = tok.attrs[name]
        else:
            raise SimulationError(
                f"tick {self.tick}: outcome {name!r} at {stage} is neither supplied nor an attribute of token {tok.id}",
                "E_SIM_OUTCOME",
            )
        cache[name] = value
        return value

    # -- trigger effects -------------------------------------------------

    def fire_all(self, tok: Token, stage: StageRef, deferred: list) -> None:
        cache: dict[str, bool] = {}
        for trig in self.model.triggers_from(stage):
            if self.evaluate(trig.guard, tok, stage, cache):
                self.fire(trig, tok, deferred)

    def fire(self, trig: TriggerEdge, tok: Token, deferred: list) -> None:
        self.emit(tok, trig.src, "trigger-fire")
        for action in trig.actions:
            if action.op == "inc":
                self.counters[action.counter] += 1
            else:
                self.counters[action.counter] = self.initial[action.counter]
            self.emit(tok, trig.src, "counter-set", counter=action.counter, value=self.counters[action.counter])
        target = trig.dst
        if target.kind is StageKind.CREATE:
            labels = [f.label for f in self.model.flows if f.src == target]
            node = self.model.thimac(target.thimac_path)
            new_id = len(self.tokens)
            if node.generators:
                attrs = generate_instance(node.generators, f"{self.scenario.seed}:{new_id}")
            else:
                attrs = dict(tok.attrs)
            spawned = self.new_token(labels[0] if labels else tok.flow_label, attrs, target)
            self.emit(spawned, target, "spawn")
            deferred.append((spawned, target))
            return
        parked = self.oldest_parked(target)
        if parked is None:
            return
        self.emit(parked, parked.at, "unpark")
        parked.at, parked.state = target, LIVE
        self.emit(parked, target, "enter")
        if target.kind is StageKind.PROCESS:
            deferred.append((parked, target))

    def oldest_parked(self, target: StageRef) -> Token | None:
        """FIFO over the nearest enclosing thimac that holds a candidate."""
        labels = self._labels_at(target)
        parts = target.thimac_path.split(".")
        for depth in range(len(parts), 0, -1):
            scope = ".".join(parts[:depth])
            for tok in self.tokens:
                path = tok.at.thimac_path
                if (
                    tok.state == PARKED
                    and tok.flow_label in labels
                    and (path == scope or path.startswith(scope + "."))
                ):
                    return tok
        return None

    # -- main loop -------------------------------------------------------

    def settle(self, tok: Token) -> None:
        if tok.state != LIVE or self.next_edge(tok) is not None:
            return
        root = tok.at.thimac_path.split(".")[0]
        if (root, tok.flow_label) in self._resume_labels:
            tok.state = PARKED
            self.emit(tok, tok.at, "park")
        else:
            tok.state = CONSUMED
            self.emit(tok, tok.at, "consume")

    def run(self) -> Trace:
        pending = sorted(enumerate(self.scenario.injections), key=lambda p: (p[1].tick, p[0]))
        pending = [inj for _, inj in pending]
        deferred: list[tuple[Token, StageRef]] = []
        max_ticks = self.scenario.max_ticks
        while self.tick < max_ticks:
            carried, deferred = deferred, []
            for tok, stage in carried:
                self.fire_all(tok, stage, deferred)

            entered: list[tuple[Token, StageRef]] = []
            fresh: set[int] = set()
            while pending and pending[0].tick <= self.tick:
                inj = pending.pop(0)
                tok = self.new_token(inj.flow, dict(inj.attrs), inj.entry)
                fresh.add(tok.id)
                self.emit(tok, inj.entry, "create" if inj.entry.kind is StageKind.CREATE else "enter")
                entered.append((tok, inj.entry))

            for tok in list(self.tokens):
                if tok.state != LIVE or tok.id in fresh:
                    continue
                edge = self.next_edge(tok)
                if edge is None:
                    continue
                self.emit(tok, edge.src, "exit")
                tok.at = edge.dst
                self.emit(tok, edge.dst, "enter")
                entered.append((tok, edge.dst))

            for tok, stage in entered:
                if stage.kind in (StageKind.PROCESS, StageKind.CREATE):
                    self.fire_all(tok, stage, deferred)

            for tok in self.tokens:
                self.settle(tok)

            movable = any(t.state == LIVE for t in self.tokens)
            if not (movable or pending or deferred):
                break
            self.tick += 1
        self.trace.final_tick = min(self.tick, max_ticks)
        self.trace.tokens = self.tokens
        self.trace.counters = dict(self.counters)
        return self.trace


def simulate(model: StaticModel, scenario: Scenario) -> Trace:
    """Run ``scenario`` against ``model`` and return the full trace."""
    return _Run(model, scenario).run()


def write_trace(trace: Trace, sink=None) -> str:
    """Render ``trace`` one line per micro-event.

    ``sink`` may be a path or a text stream; the text is returned either way.
    """
    text = "".join(e.line() + "\n" for e in trace.events)
    if sink is None:
        return text
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    elif isinstance(sink, io.IOBase) or hasattr(sink, "write"):
        sink.write(text)
    return text

"""Events over the static model: binding, projection, conformance, joints."""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field

from tmkit.diagnostics import DiagnosticsError, TMError, error
from tmkit.events import Chronology, EventDecl
from tmkit.model import (
    TRIGGER_SOURCES,
    TRIGGER_TARGETS,
    CounterAction,
    FlowEdge,
    Guard,
    StageKind,
    StageRef,
    StaticModel,
    TriggerEdge,
    validate,
)
from tmkit.simulator import Trace

CONFORMS = "CONFORMS"
VIOLATES = "VIOLATES"


class BindError(DiagnosticsError):
    pass


class ConformanceError(TMError):
    code = "C001"


class JointError(DiagnosticsError):
    pass


@dataclass(frozen=True)
class BoundEvent:
    id: str
    description: str
    region: frozenset[StageRef]
    paths: frozenset[str]


def _connected(model: StaticModel, region: set[StageRef]) -> bool:
    adj: dict[StageRef, set[StageRef]] = {r: set() for r in region}
    for edge in [*model.flows, *model.triggers]:
        if edge.src in region and edge.dst in region:
            adj[edge.src].add(edge.dst)
            adj[edge.dst].add(edge.src)
    start = next(iter(region))
    seen, queue = {start}, deque([start])
    while queue:
        for nxt in adj[queue.popleft()] - seen:
            seen.add(nxt)
            queue.append(nxt)
    return seen == region


def bind_events(model: StaticModel, decls: list[EventDecl]) -> list[BoundEvent]:
    """Resolve and connectivity-check every event region.

    Raises :class:`BindError` carrying B001/B002/B003 diagnostics.
    """
    diags = []
    bound = []
    seen: set[str] = set()
    for decl in decls:
        span = decl.span
        if decl.id in seen:
            diags.append(error("B003", f"duplicate event id {decl.id!r}", span))
            continue
        seen.add(decl.id)
        if not decl.region:
            diags.append(error("B002", f"event {decl.id} has an empty region", span))
            continue
        missing = [r for r in decl.region if not model.resolves(r)]
        for r in missing:
            diags.append(error("B001", f"event {decl.id}: stage {r} does not resolve", span))
        if missing:
            continue
        region = set(decl.region)
        if not _connected(model, region):
            diags.append(error("B002", f"event {decl.id}: region is not connected by flows or triggers", span))
            continue
        bound.append(BoundEvent(decl.id, decl.description, frozenset(region), frozenset(r.path for r in region)))
    if diags:
        raise BindError(diags)
    return bound


def check_events(model: StaticModel, decls: list[EventDecl], chronology: Chronology | None) -> list:
    """Binding and chronology diagnostics, for whole-file checks."""
    diags = []
    try:
        bind_events(model, decls)
    except BindError as exc:
        diags.extend(exc.diagnostics)
    if chronology is not None:
        known = {d.id for d in decls}
        for a, b in chronology.edges:
            for v in (a, b):
                if v not in known:
                    diags.append(error("C001", f"chronology names unknown event {v!r}", chronology.span))
    return diags


@dataclass(frozen=True)
class EventOccurrence:
    event: str
    start: int
    end: int
    indices: tuple[int, ...]
    token: int


def project(trace: Trace | list, events: list[BoundEvent]) -> list[EventOccurrence]:
    """Cut a trace into event occurrences, one per token pass through a region.

    An occurrence opens on the token's first micro-event inside the region
    and closes on its first micro-event outside it; re-entering opens a new
    occurrence.
    """
    items = list(trace.events if isinstance(trace, Trace) else trace)
    by_token: dict[int, list[int]] = {}
    for i, ev in enumerate(items):
        by_token.setdefault(ev.token, []).append(i)

    found: list[tuple[int, int, int, EventOccurrence]] = []
    for order, event in enumerate(events):
        for token, idxs in by_token.items():
            current: list[int] = []
            for i in idxs + [None]:
                inside = i is not None and items[i].path in event.paths
                if inside:
                    current.append(i)
                elif current:
                    occ = EventOccurrence(event.id, items[current[0]].tick, items[current[-1]].tick, tuple(current), token)
                    found.append((occ.start, order, current[0], occ))
                    current = []
    found.sort(key=lambda x: x[:3])
    return [occ for *_, occ in found]


@dataclass(frozen=True)
class Violation:
    event: str
    tick: int
    missing: str


@dataclass
class ConformanceReport:
    occurrences: list[EventOccurrence]
    violations: list[Violation] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return VIOLATES if self.violations else CONFORMS

    def format(self) -> str:
        lines = [f"verdict={self.verdict}"]
        lines += [f"occurrence event={o.event} start={o.start} end={o.end}" for o in self.occurrences]
        lines += [f"violation event={v.event} tick={v.tick} missing={v.missing}" for v in self.violations]
        return "\n".join(lines) + "\n"


def check_chronology(occurrences: list[EventOccurrence], chronology: Chronology) -> ConformanceReport:
    """Every occurrence needs, for each predecessor, one at or before its start."""
    known = set(chronology.vertices)
    for occ in occurrences:
        if occ.event not in known:
            raise ConformanceError(f"occurrence of unknown event {occ.event!r}")
    earliest: dict[str, int] = {}
    for occ in occurrences:
        earliest[occ.event] = min(earliest.get(occ.event, occ.start), occ.start)
    violations = []
    for occ in occurrences:
        for pred in chronology.predecessors(occ.event):
            if earliest.get(pred, occ.start + 1) > occ.start:
                violations.append(Violation(occ.event, occ.start, pred))
    return ConformanceReport(list(occurrences), violations)


# --------------------------------------------------------------------------
# joints


@dataclass(frozen=True)
class JointSpec:
    """Connect an exit of one model part to an entry of another.

    A transfer-to-transfer joint becomes a flow (``label`` required); a
    process/create source with a create/release/process target becomes a
    trigger.
    """

    source: StageRef
    target: StageRef
    label: str | None = None
    guard: Guard | None = None
    actions: tuple[CounterAction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "source", StageRef.parse(self.source))
        object.__setattr__(self, "target", StageRef.parse(self.target))


def joints(model_a: StaticModel, model_b: StaticModel, specs: list[JointSpec], name: str | None = None) -> StaticModel:
    """Compose two model parts through explicit joints.

    Raises :class:`JointError` with J001 (illegal or missing joint), J002
    (name collision) or the merged model's validation errors.
    """
    diags = []
    if not specs:
        diags.append(error("J001", "at least one joint is required"))
    roots_a = {t.name for t in model_a.roots}
    for t in model_b.roots:
        if t.name in roots_a:
            diags.append(error("J002", f"root thimac {t.name!r} exists in both parts"))
    for kind, names_a, names_b in (
        ("counter", {c.name for c in model_a.counters}, {c.name for c in model_b.counters}),
        ("guard", {g.name for g in model_a.guards}, {g.name for g in model_b.guards}),
    ):
        for n in sorted(names_a & names_b):
            diags.append(error("J002", f"{kind} {n!r} exists in both parts"))

    new_flows, new_triggers = [], []
    for i, spec in enumerate(specs, 1):
        src, dst = spec.source, spec.target
        if not model_a.resolves(src):
            diags.append(error("J001", f"joint {i}: exit {src} is not a stage of {model_a.name}"))
            continue
        if not model_b.resolves(dst):
            diags.append(error("J001", f"joint {i}: entry {dst} is not a stage of {model_b.name}"))
            continue
        if src.kind is StageKind.TRANSFER and dst.kind is StageKind.TRANSFER:
            if not spec.label:
                diags.append(error("J001", f"joint {i}: transfer joint {src} -> {dst} needs a flow label"))
                continue
            new_flows.append(FlowEdge("", spec.label, src, dst))
        elif src.kind in TRIGGER_SOURCES and dst.kind in TRIGGER_TARGETS:
            new_triggers.append(TriggerEdge("", src, dst, spec.guard, tuple(spec.actions)))
        else:
            diags.append(error("J001", f"joint {i}: {src.kind} -> {dst.kind} is neither a transfer nor a trigger joint"))
    if diags:
        raise JointError(diags)

    merged = StaticModel(name or model_a.name)
    for part in (model_a, model_b):
        part = copy.deepcopy(part)
        merged.roots += part.roots
        merged.flows += part.flows
        merged.triggers += part.triggers
        merged.counters += part.counters
        merged.guards += part.guards
    merged.flows += new_flows
    merged.triggers += new_triggers
    merged.canonicalize()
    problems = [d for d in validate(merged) if d.is_error]
    if problems:
        raise JointError(problems)
    return merged

"""In-memory thinging-machine models and their structural rules.

A model is a forest of thimacs. Each thimac declares a subset of the five
generic stages and may nest further thimacs. Things move along solid flow
edges between stages; dashed trigger edges activate other flows.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

from tmkit.diagnostics import (
    Diagnostic,
    SourceSpan,
    TMError,
    error,
    sort_diagnostics,
    warning,
)


class StageKind(str, Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    def __str__(self) -> str:
        return self.value


KIND_NAMES = frozenset(k.value for k in StageKind)

C, P, RL, T, RC = (
    StageKind.CREATE,
    StageKind.PROCESS,
    StageKind.RELEASE,
    StageKind.TRANSFER,
    StageKind.RECEIVE,
)

# PROCESS -> PROCESS is deliberately absent; nest a thimac to re-process.
ALLOWED_SAME = frozenset({(T, RC), (RC, P), (RC, RL), (C, P), (C, RL), (P, RL), (RL, T)})
ALLOWED_CROSS = frozenset({(T, T)})

TRIGGER_SOURCES = frozenset({P, C})
TRIGGER_TARGETS = frozenset({C, RL, P})


def allowed_adjacency(src: StageKind, dst: StageKind, same_thimac: bool) -> bool:
    """Whether a thing may flow directly from ``src`` to ``dst``."""
    table = ALLOWED_SAME if same_thimac else ALLOWED_CROSS
    return (StageKind(src), StageKind(dst)) in table


class ModelError(TMError):
    """A construction request that breaks a structural rule."""


# --------------------------------------------------------------------------
# literals and guards


@dataclass(frozen=True, order=True)
class DateValue:
    """A calendar date written ``DD-MM-YYYY``; orders chronologically."""

    year: int
    month: int
    day: int

    PATTERN = re.compile(r"^(\d{2})-(\d{2})-(\d{4})$")

    @classmethod
    def parse(cls, text: str) -> DateValue:
        m = cls.PATTERN.match(text)
        if not m:
            raise ValueError(f"not a DD-MM-YYYY date: {text!r}")
        day, month, year = (int(g) for g in m.groups())
        if not (1 <= month <= 12 and 1 <= day <= 31):
            raise ValueError(f"date out of range: {text!r}")
        return cls(year, month, day)

    def __str__(self) -> str:
        return f"{self.day:02d}-{self.month:02d}-{self.year:04d}"


Literal = Union[int, str, DateValue]


def literal_text(value: Literal) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, DateValue)):
        return str(value)
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


OPERATORS = ("==", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class Compare:
    """``attr(name) OP literal`` or ``counter(name) OP literal``."""

    source: str  # "attr" | "counter"
    name: str
    op: str
    value: Literal

    def text(self) -> str:
        return f"{self.source}({self.name}) {self.op} {literal_text(self.value)}"


@dataclass(frozen=True)
class Outcome:
    name: str

    def text(self) -> str:
        return f"outcome({self.name})"


@dataclass(frozen=True)
class GuardRef:
    """Reference to a named ``guard`` declaration."""

    name: str

    def text(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    term: Compare | Outcome | GuardRef

    def text(self) -> str:
        return f"not {self.term.text()}"


Atom = Union[Compare, Outcome, GuardRef, Not]


@dataclass(frozen=True)
class Guard:
    """A conjunction of atoms."""

    terms: tuple[Atom, ...]

    def text(self) -> str:
        return " and ".join(t.text() for t in self.terms)

    def atoms(self) -> Iterator[Atom]:
        for t in self.terms:
            yield t.term if isinstance(t, Not) else t


@dataclass(frozen=True)
class CounterAction:
    op: str  # "inc" | "reset"
    counter: str

    def __post_init__(self) -> None:
        if self.op not in ("inc", "reset"):
            raise ValueError(f"unknown counter action {self.op!r}")

    def text(self) -> str:
        return f"{self.op}({self.counter})"


# --------------------------------------------------------------------------
# structure


@dataclass(frozen=True, order=True)
class StageRef:
    thimac_path: str
    kind: StageKind

    @classmethod
    def parse(cls, text: str | StageRef) -> StageRef:
        if isinstance(text, StageRef):
            return text
        head, _, kind = text.rpartition(".")
        if not head or kind not in KIND_NAMES:
            raise ValueError(f"not a stage reference: {text!r}")
        return cls(head, StageKind(kind))

    @property
    def path(self) -> str:
        return f"{self.thimac_path}.{self.kind.value}"

    def __str__(self) -> str:
        return self.path


@dataclass
class GeneratorDecl:
    """An attribute a thimac implants into every thing it creates."""

    attr: str
    kind: str
    args: tuple[int, ...]
    span: SourceSpan | None = field(default=None, compare=False)

    def text(self) -> str:
        return f"{self.kind}({', '.join(str(a) for a in self.args)})"


@dataclass
class Thimac:
    name: str
    stages: list[StageKind] = field(default_factory=list)
    children: list[Thimac] = field(default_factory=list)
    path: str = ""
    generators: list[GeneratorDecl] = field(default_factory=list)
    span: SourceSpan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.stages = [StageKind(s) for s in self.stages]
        if not self.path:
            self.path = self.name

    def walk(self) -> Iterator[Thimac]:
        yield self
        for child in self.children:
            yield from child.walk()

    def stage_refs(self) -> list[StageRef]:
        return [StageRef(self.path, k) for k in self.stages]


@dataclass
class FlowEdge:
    id: str
    label: str
    src: StageRef
    dst: StageRef
    scope: str = ""
    span: SourceSpan | None = field(default=None, compare=False)

    @property
    def same_thimac(self) -> bool:
        return self.src.thimac_path == self.dst.thimac_path

    def key(self) -> tuple:
        return (self.label, self.src, self.dst)


@dataclass
class TriggerEdge:
    id: str
    src: StageRef
    dst: StageRef
    guard: Guard | None = None
    actions: tuple[CounterAction, ...] = ()
    scope: str = ""
    span: SourceSpan | None = field(default=None, compare=False)


@dataclass
class CounterDecl:
    name: str
    initial: int = 0
    owner: str = ""
    span: SourceSpan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.initial < 0:
            raise ValueError("counter values are non-negative")


@dataclass
class GuardDef:
    name: str
    guard: Guard
    scope: str = ""
    span: SourceSpan | None = field(default=None, compare=False)


class StaticModel:
    """A thimac forest with its flow, trigger, counter and guard declarations.

    Edge ids are derived from canonical order: flows are numbered per label
    (``card#1``, ``card#2``...), triggers globally (``t1``, ``t2``...).
    Canonical order visits each container's child thimacs before the
    container's own edges, which is also the printed order.
    """

    def __init__(self, name: str, roots: list[Thimac] | None = None):
        self.name = name
        self.roots: list[Thimac] = list(roots or [])
        self.flows: list[FlowEdge] = []
        self.triggers: list[TriggerEdge] = []
        self.counters: list[CounterDecl] = []
        self.guards: list[GuardDef] = []
        self.span: SourceSpan | None = None

    def __repr__(self) -> str:
        return f"StaticModel({self.name!r}, {len(self.roots)} roots, {len(self.flows)} flows)"

    # -- lookup ------------------------------------------------------------

    def thimacs(self) -> Iterator[Thimac]:
        for root in self.roots:
            yield from root.walk()

    def thimac(self, path: str) -> Thimac | None:
        parts = path.split(".")
        level, node = self.roots, None
        for part in parts:
            node = next((t for t in level if t.name == part), None)
            if node is None:
                return None
            level = node.children
        return node

    def resolves(self, ref: StageRef) -> bool:
        node = self.thimac(ref.thimac_path)
        return node is not None and ref.kind in node.stages

    def stage_refs(self) -> list[StageRef]:
        return [ref for t in self.thimacs() for ref in t.stage_refs()]

    def counter(self, name: str) -> CounterDecl | None:
        return next((c for c in self.counters if c.name == name), None)

    def guard_def(self, name: str) -> GuardDef | None:
        return next((g for g in self.guards if g.name == name), None)

    def outgoing(self, ref: StageRef, label: str) -> list[FlowEdge]:
        return [f for f in self.flows if f.src == ref and f.label == label]

    def triggers_from(self, ref: StageRef) -> list[TriggerEdge]:
        return [t for t in self.triggers if t.src == ref]

    def expand_guard(self, guard: Guard | None, _seen: frozenset = frozenset()) -> Guard | None:
        """Inline named guard references (negated references stay atomic)."""
        if guard is None:
            return None
        terms: list[Atom] = []
        for term in guard.terms:
            if isinstance(term, GuardRef):
                gd = self.guard_def(term.name)
                if gd is None or term.name in _seen:
                    terms.append(term)
                else:
                    terms.extend(self.expand_guard(gd.guard, _seen | {term.name}).terms)
            else:
                terms.append(term)
        return Guard(tuple(terms))

    # -- construction --------------------------------------------------------

    def add_thimac(self, name: str, stages=(), parent: str = "") -> Thimac:
        siblings = self.roots
        path = name
        if parent:
            owner = self.thimac(parent)
            if owner is None:
                raise ModelError(f"unknown parent thimac {parent!r}", "E_REF")
            siblings, path = owner.children, f"{parent}.{name}"
        if any(t.name == name for t in siblings):
            raise ModelError(f"duplicate thimac name {path!r}", "E_NAME")
        node = Thimac(name, list(stages), path=path)
        siblings.append(node)
        return node

    def add_counter(self, name: str, initial: int = 0, owner: str = "") -> CounterDecl:
        if self.counter(name) is not None:
            raise ModelError(f"duplicate counter {name!r}", "E_NAME")
        decl = CounterDecl(name, initial, owner)
        self.counters.append(decl)
        return decl

    def add_guard(self, name: str, guard: Guard, scope: str = "") -> GuardDef:
        if self.guard_def(name) is not None:
            raise ModelError(f"duplicate guard {name!r}", "E_NAME")
        gd = GuardDef(name, guard, scope)
        self.guards.append(gd)
        return gd

    def _require(self, ref: StageRef) -> None:
        if not self.resolves(ref):
            raise ModelError(f"stage {ref} does not resolve", "E_REF")

    def add_flow(self, label: str, src, dst, scope: str = "") -> FlowEdge:
        src, dst = StageRef.parse(src), StageRef.parse(dst)
        self._require(src)
        self._require(dst)
        edge = FlowEdge("", label, src, dst, scope)
        if not allowed_adjacency(src.kind, dst.kind, edge.same_thimac):
            raise ModelError(f"flow {src} -> {dst} is not an allowed adjacency", "E_ADJ")
        if any(f.key() == edge.key() for f in self.flows):
            raise ModelError(f"duplicate flow {label}: {src} -> {dst}", "E_DUP")
        self.flows.append(edge)
        self.canonicalize()
        return edge

    def add_trigger(self, src, dst, guard: Guard | None = None, actions=(), scope: str = "") -> TriggerEdge:
        src, dst = StageRef.parse(src), StageRef.parse(dst)
        self._require(src)
        self._require(dst)
        if src.kind not in TRIGGER_SOURCES:
            raise ModelError(f"trigger source {src} must be a process or create stage", "E_TRIG_SRC")
        if dst.kind not in TRIGGER_TARGETS:
            raise ModelError(f"trigger target {dst} must be a create, release or process stage", "E_TRIG_DST")
        edge = TriggerEdge("", src, dst, guard, tuple(actions), scope)
        self.triggers.append(edge)
        self.canonicalize()
        return edge

    def scope_order(self) -> dict[str, int]:
        """Rank of each container in canonical (children-first) order."""
        order: dict[str, int] = {}

        def visit(node: Thimac) -> None:
            for child in node.children:
                visit(child)
            order[node.path] = len(order)

        for root in self.roots:
            visit(root)
        order[""] = len(order)
        return order

    def canonicalize(self) -> None:
        """Sort declarations into canonical order and renumber edge ids."""
        rank = self.scope_order()
        unknown = len(rank)
        by_scope = lambda item: rank.get(getattr(item, "scope", getattr(item, "owner", "")), unknown)  # noqa: E731
        self.flows.sort(key=by_scope)
        self.triggers.sort(key=by_scope)
        self.counters.sort(key=by_scope)
        self.guards.sort(key=by_scope)
        ordinals: dict[str, int] = {}
        for f in self.flows:
            ordinals[f.label] = ordinals.get(f.label, 0) + 1
            f.id = f"{f.label}#{ordinals[f.label]}"
        for i, t in enumerate(self.triggers, 1):
            t.id = f"t{i}"

    # -- comparison ----------------------------------------------------------

    def structure(self) -> tuple:
        """A span-free value that is equal for structurally identical models."""

        def tree(t: Thimac) -> tuple:
            return (
                t.name,
                tuple(t.stages),
                tuple((g.attr, g.kind, g.args) for g in t.generators),
                tuple(tree(c) for c in t.children),
            )

        return (
            self.name,
            tuple(tree(r) for r in self.roots),
            tuple((f.id, f.label, f.src, f.dst, f.scope) for f in self.flows),
            tuple((t.id, t.src, t.dst, t.guard, t.actions, t.scope) for t in self.triggers),
            tuple((c.name, c.initial, c.owner) for c in self.counters),
            tuple((g.name, g.guard, g.scope) for g in self.guards),
        )


# --------------------------------------------------------------------------
# validation

GENERATOR_ARITY = {"digits": 1, "range": 2}


def check_generator(gen: GeneratorDecl) -> str | None:
    """Return a problem description, or None when the generator is usable."""
    if gen.kind not in GENERATOR_ARITY:
        return f"unknown generator kind {gen.kind!r} (expected digits or range)"
    if len(gen.args) != GENERATOR_ARITY[gen.kind]:
        return f"{gen.kind} takes {GENERATOR_ARITY[gen.kind]} argument(s), got {len(gen.args)}"
    if gen.kind == "digits" and gen.args[0] < 1:
        return "digits needs a positive width"
    if gen.kind == "range" and gen.args[0] > gen.args[1]:
        return f"empty range {gen.args[0]}..{gen.args[1]}"
    return None


def validate(model: StaticModel) -> list[Diagnostic]:
    """Every structural violation in ``model``, sorted deterministically."""
    diags: list[Diagnostic] = []
    span_of = lambda item: item.span or model.span  # noqa: E731

    # thimacs
    def check_siblings(level: list[Thimac]) -> None:
        seen: set[str] = set()
        for t in level:
            if t.name in seen:
                diags.append(error("E_NAME", f"duplicate sibling name {t.path!r}", span_of(t)))
            seen.add(t.name)
            check_siblings(t.children)

    check_siblings(model.roots)
    for t in model.thimacs():
        if not t.stages and not t.children:
            diags.append(error("E_EMPTY", f"thimac {t.path!r} has no stages and no children", span_of(t)))
        if len(set(t.stages)) != len(t.stages):
            diags.append(error("E_STAGE", f"thimac {t.path!r} declares a stage kind twice", span_of(t)))
        for gen in t.generators:
            problem = check_generator(gen)
            if problem:
                diags.append(error("E_GEN_SPEC", f"{t.path}.{gen.attr}: {problem}", gen.span or span_of(t)))

    # flows
    seen_flows: set[tuple] = set()
    for f in model.flows:
        bad = [r for r in (f.src, f.dst) if not model.resolves(r)]
        for r in bad:
            diags.append(error("E_REF", f"flow {f.label}: stage {r} does not resolve", span_of(f)))
        if not bad and not allowed_adjacency(f.src.kind, f.dst.kind, f.same_thimac):
            where = "within a thimac" if f.same_thimac else "across thimacs"
            diags.append(error("E_ADJ", f"flow {f.label}: {f.src.kind} -> {f.dst.kind} is not allowed {where}", span_of(f)))
        if f.key() in seen_flows:
            diags.append(error("E_DUP", f"duplicate flow {f.label}: {f.src} -> {f.dst}", span_of(f)))
        seen_flows.add(f.key())

    branches: dict[tuple, list[FlowEdge]] = {}
    for f in model.flows:
        branches.setdefault((f.src, f.label), []).append(f)
    for (src, label), edges in branches.items():
        targets = {e.dst for e in edges}
        if len(targets) > 1:
            listed = ", ".join(str(d) for d in sorted(targets))
            diags.append(error("E_BRANCH", f"{label} leaves {src} along {len(targets)} flows ({listed})", span_of(edges[1])))

    # triggers
    flow_pairs = {(f.src, f.dst) for f in model.flows}
    for t in model.triggers:
        bad = [r for r in (t.src, t.dst) if not model.resolves(r)]
        for r in bad:
            diags.append(error("E_REF", f"trigger {t.id}: stage {r} does not resolve", span_of(t)))
        if t.src.kind not in TRIGGER_SOURCES:
            diags.append(error("E_TRIG_SRC", f"trigger {t.id}: source {t.src} is not a process or create stage", span_of(t)))
        if t.dst.kind not in TRIGGER_TARGETS:
            diags.append(error("E_TRIG_DST", f"trigger {t.id}: target {t.dst} is not a create, release or process stage", span_of(t)))
        if (t.src, t.dst) in flow_pairs:
            diags.append(error("E_DUP", f"trigger {t.id} duplicates a flow {t.src} -> {t.dst}", span_of(t)))
        for action in t.actions:
            if model.counter(action.counter) is None:
                diags.append(error("E_GUARD", f"trigger {t.id}: undeclared counter {action.counter!r}", span_of(t)))
        diags.extend(_guard_names(model, t.guard, f"trigger {t.id}", span_of(t)))
    for gd in model.guards:
        diags.extend(_guard_names(model, gd.guard, f"guard {gd.name}", span_of(gd)))
    for c in model.counters:
        if c.owner and model.thimac(c.owner) is None:
            diags.append(error("E_REF", f"counter {c.name}: owner {c.owner!r} does not resolve", span_of(c)))

    # reachability: create stages are injection points
    touched = {r for f in model.flows for r in (f.src, f.dst)}
    touched |= {r for t in model.triggers for r in (t.src, t.dst)}
    for t in model.thimacs():
        for ref in t.stage_refs():
            if ref not in touched and ref.kind is not StageKind.CREATE:
                diags.append(warning("W_UNREACH", f"stage {ref} has no incident flow or trigger", span_of(t)))

    return sort_diagnostics(diags)


def _guard_names(model: StaticModel, guard: Guard | None, owner: str, span) -> list[Diagnostic]:
    out = []
    if guard is None:
        return out
    for atom in guard.atoms():
        if isinstance(atom, Compare) and atom.source == "counter" and model.counter(atom.name) is None:
            out.append(error("E_GUARD", f"{owner}: undeclared counter {atom.name!r}", span))
        elif isinstance(atom, GuardRef) and model.guard_def(atom.name) is None:
            out.append(error("E_GUARD", f"{owner}: undeclared guard {atom.name!r}", span))
    return out

"""DOT export of a static model.

Thimacs become nested clusters and stages become nodes named by their full
path. Flows are solid edges labelled with the flowing thing, triggers are
dashed edges labelled with their guard. Counters are note nodes tied to
their owner cluster by a dotted edge (a local convention).
"""

from __future__ import annotations

from dataclasses import dataclass

from tmkit.diagnostics import TMError
from tmkit.events import EventDecl
from tmkit.model import GuardRef, StaticModel, Thimac, TriggerEdge

PREAMBLE = ("rankdir={rankdir};", "compound=true;", "node [shape=circle, fontsize=10];")


class RenderError(TMError):
    code = "R001"


@dataclass(frozen=True)
class RenderOptions:
    show_events: bool = False
    rankdir: str = "LR"
    highlight: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.rankdir not in ("LR", "TB"):
            raise ValueError(f"rankdir must be LR or TB, got {self.rankdir!r}")
        object.__setattr__(self, "highlight", frozenset(self.highlight))
        if self.highlight and not self.show_events:
            raise ValueError("highlight requires show_events")


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def trigger_label(trig: TriggerEdge) -> str | None:
    if trig.guard is None:
        return None
    terms = trig.guard.terms
    if len(terms) == 1 and isinstance(terms[0], GuardRef):
        return terms[0].name
    return trig.guard.text()


def _first_stage(node: Thimac) -> str | None:
    for t in node.walk():
        if t.stages:
            return t.stage_refs()[0].path
    return None


def to_dot(model: StaticModel, events: list[EventDecl] | None = None, options: RenderOptions | None = None) -> str:
    options = options or RenderOptions()
    events = list(events or [])
    known = {e.id for e in events}
    unknown = sorted(options.highlight - known)
    if unknown:
        raise RenderError(f"unknown event id(s) in highlight: {', '.join(unknown)}")
    lit = {r.path for e in events if e.id in options.highlight for r in e.region}

    out = [f"digraph {model.name} {{"]
    out += ["  " + line.format(rankdir=options.rankdir) for line in PREAMBLE]

    def cluster(node: Thimac, depth: int) -> None:
        pad = "  " * depth
        out.append(f"{pad}subgraph {quote('cluster_' + node.path)} {{")
        out.append(f"{pad}  label={quote(node.name)};")
        for ref in node.stage_refs():
            attrs = f"label={quote(ref.kind.value)}"
            if ref.path in lit:
                attrs += ", style=filled, fillcolor=lightyellow"
            out.append(f"{pad}  {quote(ref.path)} [{attrs}];")
        for child in node.children:
            cluster(child, depth + 1)
        out.append(f"{pad}}}")

    for root in model.roots:
        cluster(root, 1)
    for c in model.counters:
        out.append(f"  {quote('counter:' + c.name)} [shape=note, label={quote(f'{c.name} = {c.initial}')}];")

    for f in model.flows:
        out.append(f"  {quote(f.src.path)} -> {quote(f.dst.path)} [style=solid, label={quote(f.label)}];")
    for t in model.triggers:
        label = trigger_label(t)
        attrs = "style=dashed" + (f", label={quote(label)}" if label else "")
        out.append(f"  {quote(t.src.path)} -> {quote(t.dst.path)} [{attrs}];")
    for c in model.counters:
        owner = model.thimac(c.owner) if c.owner else None
        anchor = _first_stage(owner) if owner else None
        if anchor:
            out.append(
                f"  {quote('counter:' + c.name)} -> {quote(anchor)} "
                f"[style=dotted, arrowhead=none, lhead={quote('cluster_' + owner.path)}];"
            )

    if options.show_events:
        for e in events:
            desc = " ".join(e.description.split())
            out.append(f"  // event {e.id}: {desc}")
            out += [f"  //   {r.path}" for r in e.region]
    out.append("}")
    return "\n".join(out) + "\n"

"""Canonical ``.tm`` formatting."""

from __future__ import annotations

from tmkit.events import Chronology, EventDecl
from tmkit.model import FlowEdge, StaticModel, Thimac

INDENT = "  "


def _chains(flows: list[FlowEdge]) -> list[list[FlowEdge]]:
    """Group consecutive same-label edges that continue each other."""
    chains: list[list[FlowEdge]] = []
    for f in flows:
        if chains and chains[-1][-1].label == f.label and chains[-1][-1].dst == f.src:
            chains[-1].append(f)
        else:
            chains.append([f])
    return chains


def _container(model: StaticModel, scope: str, depth: int, node: Thimac | None) -> list[str]:
    pad = INDENT * depth
    lines: list[str] = []
    if node is not None and node.stages:
        lines.append(f"{pad}stages: {', '.join(k.value for k in node.stages)};")
    lines += [f"{pad}counter {c.name} = {c.initial};" for c in model.counters if c.owner == scope]
    lines += [f"{pad}guard {g.name} = {g.guard.text()};" for g in model.guards if g.scope == scope]
    if node is not None:
        lines += [f"{pad}generate {g.attr} = {g.text()};" for g in node.generators]
    for child in node.children if node is not None else model.roots:
        lines.append(f"{pad}thimac {child.name} {{")
        lines += _container(model, child.path, depth + 1, child)
        lines.append(f"{pad}}}")
    for chain in _chains([f for f in model.flows if f.scope == scope]):
        hops = " -> ".join([str(chain[0].src)] + [str(f.dst) for f in chain])
        lines.append(f"{pad}flow {chain[0].label}: {hops};")
    for t in model.triggers:
        if t.scope != scope:
            continue
        text = f"{pad}trigger {t.src} -> {t.dst}"
        if t.guard is not None:
            text += f" when {t.guard.text()}"
        if t.actions:
            text += " do " + ", ".join(a.text() for a in t.actions)
        lines.append(text + ";")
    return lines


def _string(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def print_canonical(
    model: StaticModel,
    events: list[EventDecl] | None = None,
    chronology: Chronology | None = None,
    header: str = "",
) -> str:
    """Deterministic source text for a model, its events and chronology.

    ``header`` is emitted verbatim before the model (a comment block).
    """
    lines = [f"model {model.name} {{"]
    lines += _container(model, "", 1, None)
    for e in events or []:
        region = ", ".join(str(r) for r in e.region)
        lines.append(f"{INDENT}event {e.id} {_string(e.description)} region {{ {region} }}")
    if chronology is not None:
        lines.append(f"{INDENT}chronology {{")
        lines += [f"{INDENT * 2}{a} -> {b};" for a, b in chronology.edges]
        lines.append(f"{INDENT}}}")
    lines.append("}")
    return header + "\n".join(lines) + "\n"

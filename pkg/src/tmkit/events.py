"""Event declarations and chronologies as declared in ``.tm`` files."""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

from tmkit.diagnostics import SourceSpan, TMError
from tmkit.model import StageRef


@dataclass
class EventDecl:
    id: str
    description: str
    region: list[StageRef]
    span: SourceSpan | None = field(default=None, compare=False)


class ChronologyError(TMError):
    code = "C002"


@dataclass(frozen=True)
class Chronology:
    """Event precedence pairs plus the declared event vertices.

    Construction rejects cycles.
    """

    edges: tuple[tuple[str, str], ...]
    vertices: tuple[str, ...] = ()
    span: SourceSpan | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        verts = list(self.vertices)
        for a, b in self.edges:
            for v in (a, b):
                if v not in verts:
                    verts.append(v)
        object.__setattr__(self, "vertices", tuple(verts))
        try:
            self.order()
        except CycleError as exc:
            cycle = " -> ".join(exc.args[1])
            raise ChronologyError(f"chronology has a cycle: {cycle}", span=self.span) from None

    def order(self) -> list[str]:
        ts = TopologicalSorter({v: [] for v in self.vertices})
        for a, b in self.edges:
            ts.add(b, a)
        return list(ts.static_order())

    def predecessors(self, event_id: str) -> list[str]:
        return [a for a, b in self.edges if b == event_id]

    def without(self, edge: tuple[str, str]) -> Chronology:
        return Chronology(tuple(e for e in self.edges if e != edge), self.vertices)

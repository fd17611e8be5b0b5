"""Line-based scenario files driving a simulation run.

::

    inject card at User.Card.create tick=0 attr pin_on_card=1234
    outcome ATM.Compare.process.mismatch = true,false
    maxticks 200
    seed 7
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field

from tmkit.diagnostics import SourceSpan, TMError
from tmkit.model import DateValue, StageRef

DEFAULT_MAX_TICKS = 1000


class ScenarioError(TMError):
    code = "S001"


@dataclass
class Injection:
    tick: int
    flow: str
    entry: StageRef
    attrs: dict[str, object] = field(default_factory=dict)


@dataclass
class Scenario:
    injections: list[Injection] = field(default_factory=list)
    outcomes: dict[tuple[StageRef, str], list[bool]] = field(default_factory=dict)
    max_ticks: int = DEFAULT_MAX_TICKS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_ticks < 1:
            raise ScenarioError(f"max_ticks must be at least 1, got {self.max_ticks}")

    def inject(self, flow: str, entry, tick: int = 0, **attrs) -> Scenario:
        self.injections.append(Injection(tick, flow, StageRef.parse(entry), attrs))
        return self

    def outcome(self, stage, name: str, *values: bool) -> Scenario:
        self.outcomes.setdefault((StageRef.parse(stage), name), []).extend(values)
        return self


def parse_value(text: str):
    """Scenario attribute values: integers, dates, booleans, else strings."""
    if re.fullmatch(r"\d+", text):
        return int(text)
    if DateValue.PATTERN.match(text):
        return DateValue.parse(text)
    if text in ("true", "false"):
        return text == "true"
    return text


def _bools(text: str, span: SourceSpan) -> list[bool]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part not in ("true", "false"):
            raise ScenarioError(f"outcome values must be true or false, got {part!r}", span=span)
        out.append(part == "true")
    return out


def parse_scenario(text: str, file_name: str = "<scenario>") -> Scenario:
    sc = Scenario()
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        span = SourceSpan(file_name, lineno, 1, lineno, max(1, len(raw)))
        try:
            words = shlex.split(line)
        except ValueError as exc:
            raise ScenarioError(str(exc), span=span) from None
        head = words[0]
        try:
            if head == "inject":
                if len(words) < 5 or words[2] != "at" or not words[4].startswith("tick="):
                    raise ValueError("expected: inject <flow> at <path.stage> tick=<n> [attr k=v]...")
                inj = Injection(int(words[4][5:]), words[1], StageRef.parse(words[3]))
                rest = words[5:]
                if rest and rest[0] != "attr":
                    raise ValueError(f"unexpected {rest[0]!r}; expected 'attr'")
                for word in rest:
                    if word == "attr":
                        continue
                    key, eq, value = word.partition("=")
                    if not eq or not key:
                        raise ValueError(f"attribute {word!r} is not k=v")
                    inj.attrs[key] = parse_value(value)
                sc.injections.append(inj)
            elif head == "outcome":
                m = re.fullmatch(r"outcome\s+(\S+)\s*=\s*(.+)", line)
                if not m:
                    raise ValueError("expected: outcome <path.stage>.<name> = true|false[,...]")
                stage, _, name = m.group(1).rpartition(".")
                sc.outcomes.setdefault((StageRef.parse(stage), name), []).extend(_bools(m.group(2), span))
            elif head in ("maxticks", "seed") and len(words) == 2:
                value = int(words[1])
                if head == "maxticks":
                    if value < 1:
                        raise ValueError("maxticks must be at least 1")
                    sc.max_ticks = value
                else:
                    sc.seed = value
            else:
                raise ValueError(f"unknown scenario directive {head!r}")
        except ValueError as exc:
            raise ScenarioError(str(exc), span=span) from None
    return sc


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), str(path))

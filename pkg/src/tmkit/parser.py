"""Lexer and recursive-descent parser for ``.tm`` model files.

Syntax errors are reported as P001 (lexical), P002 (unexpected token) or
P003 (duplicate declaration). After an error the parser skips to the next
``;`` or ``}`` at the depth of the failing item, so one run can report many
problems. Any P-error withholds the model from the result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from tmkit.diagnostics import Diagnostic, SourceSpan, error, sort_diagnostics
from tmkit.events import Chronology, ChronologyError, EventDecl
from tmkit.model import (
    KIND_NAMES,
    OPERATORS,
    Compare,
    CounterAction,
    CounterDecl,
    DateValue,
    FlowEdge,
    GeneratorDecl,
    Guard,
    GuardDef,
    GuardRef,
    Not,
    Outcome,
    StageKind,
    StageRef,
    StaticModel,
    Thimac,
    TriggerEdge,
)

RESERVED = frozenset({"attr", "counter", "outcome", "not", "and", "when", "do"})


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | string | date | op | punct | eof
    text: str
    span: SourceSpan
    value: object = None

    def describe(self) -> str:
        return "end of file" if self.kind == "eof" else repr(self.text)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<date>\d{2}-\d{2}-\d{4}(?![\d-]))
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|==|!=|<=|>=|<|>)
  | (?P<punct>[{}():;,.=])
  | (?P<string>")
    """,
    re.VERBOSE,
)

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


def tokenize(text: str, file_name: str) -> tuple[list[Token], list[Diagnostic]]:
    text = text.replace("\r\n", "\n")
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    pos, line, line_start = 0, 1, 0

    def span(start: int, end: int) -> SourceSpan:
        # single-line tokens only; end is exclusive
        return SourceSpan(file_name, line, start - line_start + 1, line, max(end - line_start, start - line_start + 1))

    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diags.append(error("P001", f"unexpected character {text[pos]!r}", span(pos, pos + 1)))
            pos += 1
            continue
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "string":
            start, i, chars = pos, pos + 1, []
            while i < len(text) and text[i] not in '"\n':
                if text[i] == "\\" and i + 1 < len(text) and text[i + 1] in _ESCAPES:
                    chars.append(_ESCAPES[text[i + 1]])
                    i += 2
                else:
                    chars.append(text[i])
                    i += 1
            if i >= len(text) or text[i] != '"':
                diags.append(error("P001", "unterminated string literal", span(start, i)))
                pos = i
                continue
            tokens.append(Token("string", text[start : i + 1], span(start, i + 1), "".join(chars)))
            pos = i + 1
            continue
        elif kind not in ("ws", "comment"):
            value = None
            if kind == "int":
                value = int(m.group())
            elif kind == "date":
                try:
                    value = DateValue.parse(m.group())
                except ValueError as exc:
                    diags.append(error("P001", str(exc), span(pos, m.end())))
                    pos = m.end()
                    continue
            tokens.append(Token(kind, m.group(), span(pos, m.end()), value))
        pos = m.end()
    end_col = len(text) - line_start + 1
    tokens.append(Token("eof", "", SourceSpan(file_name, line, end_col, line, end_col)))
    return tokens, diags


@dataclass
class ParseResult:
    model: StaticModel | None
    events: list[EventDecl] = field(default_factory=list)
    chronology: Chronology | None = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    header: str = ""

    @property
    def ok(self) -> bool:
        return self.model is not None


class _SyntaxError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


class _Parser:
    def __init__(self, tokens: list[Token], file_name: str):
        self.tokens = tokens
        self.file = file_name
        self.pos = 0
        self.diags: list[Diagnostic] = []
        self.model: StaticModel | None = None
        self.events: list[tuple[str, EventDecl]] = []
        self.chrono: tuple[list[tuple[str, str]], SourceSpan] | None = None
        self.chrono_scope = ""

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("ident", "op", "punct") and self.tok.text == text

    def fail(self, *expected: str) -> None:
        listing = ", ".join(expected)
        raise _SyntaxError(error("P002", f"unexpected {self.tok.describe()}; expected {listing}", self.tok.span))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            self.fail(what)
        return self.advance()

    def integer(self) -> Token:
        if self.tok.kind != "int":
            self.fail("integer")
        return self.advance()

    def duplicate(self, what: str, span: SourceSpan) -> None:
        self.diags.append(error("P003", f"duplicate declaration of {what}", span))

    def sync(self, start: int) -> None:
        """Skip past the failing item: to a ``;`` or a closing ``}`` at its depth."""
        depth = sum(1 if t.text == "{" else -1 if t.text == "}" else 0 for t in self.tokens[start : self.pos] if t.kind == "punct")
        while self.tok.kind != "eof":
            if self.tok.kind == "punct":
                if self.tok.text == ";" and depth <= 0:
                    self.advance()
                    return
                if self.tok.text == "{":
                    depth += 1
                elif self.tok.text == "}":
                    if depth <= 0:
                        return
                    depth -= 1
                    self.advance()
                    if depth == 0:
                        return
                    continue
            self.advance()

    # -- grammar ---------------------------------------------------------

    def parse(self) -> None:
        try:
            self.expect("model")
            name = self.ident("model name")
            self.model = StaticModel(name.text)
            self.model.span = name.span
            self.expect("{")
        except _SyntaxError as exc:
            self.diags.append(exc.diagnostic)
            return
        self.block("", None)
        try:
            self.expect("}")
            if self.tok.kind != "eof":
                self.fail("end of file")
        except _SyntaxError as exc:
            self.diags.append(exc.diagnostic)

    def block(self, scope: str, owner: Thimac | None) -> None:
        siblings = owner.children if owner else self.model.roots
        stages_seen = False
        while self.tok.kind != "eof" and not self.at("}"):
            start = self.pos
            try:
                if self.at("stages") and owner is not None:
                    kw = self.advance()
                    if stages_seen:
                        self.duplicate(f"stages of {scope}", kw.span)
                    stages_seen = True
                    self.stages(owner)
                else:
                    self.item(scope, owner, siblings)
            except _SyntaxError as exc:
                self.diags.append(exc.diagnostic)
                self.sync(start)

    def item(self, scope: str, owner: Thimac | None, siblings: list[Thimac]) -> None:
        word = self.tok.text if self.tok.kind == "ident" else None
        handler = {
            "thimac": self.thimac,
            "flow": self.flow,
            "trigger": self.trigger,
            "counter": self.counter,
            "guard": self.guard_def,
            "event": self.event,
            "chronology": self.chronology,
        }.get(word)
        if word == "generate" and owner is not None:
            self.generate(owner)
        elif word == "thimac":
            self.thimac(scope, siblings)
        elif handler is not None:
            handler(scope)
        else:
            expected = ["'thimac'", "'flow'", "'trigger'", "'counter'", "'guard'", "'event'", "'chronology'"]
            if owner is not None:
                expected = ["'stages'", "'generate'"] + expected
            self.fail(*expected, "'}'")

    def stages(self, owner: Thimac) -> None:
        self.expect(":")
        while True:
            tok = self.ident("stage kind")
            if tok.text not in KIND_NAMES:
                raise _SyntaxError(error("P002", f"unexpected {tok.describe()}; expected stage kind ({', '.join(k.value for k in StageKind)})", tok.span))
            kind = StageKind(tok.text)
            if kind in owner.stages:
                self.duplicate(f"stage {owner.path}.{kind}", tok.span)
            else:
                owner.stages.append(kind)
            if not self.at(","):
                break
            self.advance()
        self.expect(";")

    def thimac(self, scope: str, siblings: list[Thimac]) -> None:
        self.advance()
        name = self.ident("thimac name")
        path = f"{scope}.{name.text}" if scope else name.text
        node = Thimac(name.text, path=path, span=name.span)
        siblings.append(node)
        self.expect("{")
        self.block(path, node)
        self.expect("}")

    def stageref(self) -> tuple[StageRef, SourceSpan]:
        first = self.ident("stage reference")
        parts, last = [first.text], first
        while self.at("."):
            self.advance()
            last = self.ident("identifier or stage kind")
            parts.append(last.text)
        span = first.span.merge(last.span)
        if len(parts) < 2 or parts[-1] not in KIND_NAMES:
            raise _SyntaxError(error("P002", f"stage reference {'.'.join(parts)!r} must end in a stage kind", span))
        return StageRef(".".join(parts[:-1]), StageKind(parts[-1])), span

    def flow(self, scope: str) -> None:
        self.advance()
        label = self.ident("flow label")
        self.expect(":")
        refs = [self.stageref()]
        self.expect("->")
        refs.append(self.stageref())
        while self.at("->"):
            self.advance()
            refs.append(self.stageref())
        self.expect(";")
        for (src, s1), (dst, s2) in zip(refs, refs[1:]):
            self.model.flows.append(FlowEdge("", label.text, src, dst, scope, s1.merge(s2)))

    def trigger(self, scope: str) -> None:
        self.advance()
        src, s1 = self.stageref()
        self.expect("->")
        dst, s2 = self.stageref()
        guard = None
        actions: list[CounterAction] = []
        if self.at("when"):
            self.advance()
            guard = self.gexpr()
        if self.at("do"):
            self.advance()
            actions.append(self.action())
            while self.at(","):
                self.advance()
                actions.append(self.action())
        self.expect(";")
        self.model.triggers.append(TriggerEdge("", src, dst, guard, tuple(actions), scope, s1.merge(s2)))

    def action(self) -> CounterAction:
        if not (self.at("inc") or self.at("reset")):
            self.fail("'inc'", "'reset'")
        op = self.advance().text
        self.expect("(")
        name = self.ident("counter name")
        self.expect(")")
        return CounterAction(op, name.text)

    def gexpr(self) -> Guard:
        terms = [self.gatom()]
        while self.at("and"):
            self.advance()
            terms.append(self.gatom())
        return Guard(tuple(terms))

    def gatom(self):
        if self.at("not"):
            self.advance()
            return Not(self.gbase())
        return self.gbase()

    def gbase(self):
        if self.at("attr") or self.at("counter"):
            source = self.advance().text
            self.expect("(")
            name = self.ident(f"{source} name")
            self.expect(")")
            if not (self.tok.kind == "op" and self.tok.text in OPERATORS):
                self.fail(*(repr(o) for o in OPERATORS))
            op = self.advance().text
            if self.tok.kind not in ("int", "string", "date"):
                self.fail("integer", "string", "date")
            lit = self.advance()
            return Compare(source, name.text, op, lit.value)
        if self.at("outcome"):
            self.advance()
            self.expect("(")
            name = self.ident("outcome name")
            self.expect(")")
            return Outcome(name.text)
        if self.tok.kind == "ident" and self.tok.text not in RESERVED:
            return GuardRef(self.advance().text)
        self.fail("'attr'", "'counter'", "'outcome'", "'not'", "guard name")

    def counter(self, scope: str) -> None:
        self.advance()
        name = self.ident("counter name")
        self.expect("=")
        value = self.integer()
        self.expect(";")
        if self.model.counter(name.text) is not None:
            self.duplicate(f"counter {name.text!r}", name.span)
            return
        self.model.counters.append(CounterDecl(name.text, value.value, scope, name.span))

    def guard_def(self, scope: str) -> None:
        self.advance()
        name = self.ident("guard name")
        if name.text in RESERVED:
            raise _SyntaxError(error("P002", f"{name.text!r} is reserved", name.span))
        self.expect("=")
        guard = self.gexpr()
        self.expect(";")
        if self.model.guard_def(name.text) is not None:
            self.duplicate(f"guard {name.text!r}", name.span)
            return
        self.model.guards.append(GuardDef(name.text, guard, scope, name.span))

    def generate(self, owner: Thimac) -> None:
        self.advance()
        attr = self.ident("attribute name")
        self.expect("=")
        kind = self.ident("generator kind")
        self.expect("(")
        args = [self.integer().value]
        while self.at(","):
            self.advance()
            args.append(self.integer().value)
        self.expect(")")
        self.expect(";")
        if any(g.attr == attr.text for g in owner.generators):
            self.duplicate(f"generator {owner.path}.{attr.text}", attr.span)
            return
        owner.generators.append(GeneratorDecl(attr.text, kind.text, tuple(args), attr.span.merge(kind.span)))

    def event(self, scope: str) -> None:
        self.advance()
        name = self.ident("event id")
        if self.tok.kind != "string":
            self.fail("event description string")
        desc = self.advance().value
        self.expect("region")
        self.expect("{")
        region = [self.stageref()[0]]
        while self.at(","):
            self.advance()
            region.append(self.stageref()[0])
        self.expect("}")
        if any(e.id == name.text for _, e in self.events):
            self.duplicate(f"event {name.text!r}", name.span)
            return
        self.events.append((scope, EventDecl(name.text, desc, region, name.span)))

    def chronology(self, scope: str) -> None:
        kw = self.advance()
        self.expect("{")
        edges: list[tuple[str, str]] = []
        while self.tok.kind == "ident":
            a = self.advance()
            self.expect("->")
            b = self.ident("event id")
            self.expect(";")
            edges.append((a.text, b.text))
        end = self.expect("}")
        if self.chrono is not None:
            self.duplicate("chronology", kw.span)
            return
        self.chrono = (edges, kw.span.merge(end.span))
        self.chrono_scope = scope


def parse(text: str, file_name: str = "<input>") -> ParseResult:
    """Parse ``.tm`` source into a model plus its events and chronology."""
    tokens, diags = tokenize(text, file_name)
    p = _Parser(tokens, file_name)
    p.parse()
    diags = diags + p.diags
    if any(d.is_error and d.code.startswith("P") for d in diags) or p.model is None:
        return ParseResult(None, [], None, sort_diagnostics(diags))

    model = p.model
    model.canonicalize()
    rank = model.scope_order()
    events = [e for _, e in sorted(p.events, key=lambda pair: rank.get(pair[0], len(rank)))]
    chronology = None
    if p.chrono is not None:
        edges, span = p.chrono
        try:
            chronology = Chronology(tuple(edges), tuple(e.id for e in events), span)
        except ChronologyError as exc:
            diags.append(exc.to_diagnostic())
    return ParseResult(model, events, chronology, sort_diagnostics(diags), leading_comments(text))


def leading_comments(text: str) -> str:
    """The ``#`` comment block that opens a file, kept by the formatter."""
    kept = []
    for line in text.replace("\r\n", "\n").split("\n"):
        stripped = line.strip()
        if stripped.startswith("#"):
            kept.append(stripped + "\n")
        elif stripped:
            break
    return "".join(kept)


def parse_file(path) -> ParseResult:
    """Read and parse a file; ``OSError`` propagates to the caller."""
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse(text, str(path))

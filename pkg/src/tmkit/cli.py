"""``tm`` command line: check, simulate, behave, render, fmt.

Exit codes: 0 success, 1 validation or conformance failure, 2 parse error,
3 usage error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from tmkit.behavior import BindError, ConformanceError, bind_events, check_chronology, check_events, project
from tmkit.diagnostics import TMError, format_diagnostics, has_errors
from tmkit.model import validate
from tmkit.parser import parse_file
from tmkit.printer import print_canonical
from tmkit.render import RenderOptions, to_dot
from tmkit.scenario import ScenarioError, load_scenario
from tmkit.simulator import simulate, write_trace

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_USAGE = 3
EXIT_IO = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise _UsageError(f"{self.prog}: error: {message}")


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


def _err(text: str) -> None:
    sys.stderr.write(text if text.endswith("\n") else text + "\n")


def _load(path: str, *, require_valid: bool = True):
    try:
        result = parse_file(path)
    except OSError as exc:
        _err(f"{path}: cannot read: {exc.strerror or exc}")
        raise _Exit(EXIT_IO) from None
    except UnicodeDecodeError as exc:
        _err(f"{path}: not UTF-8: {exc}")
        raise _Exit(EXIT_IO) from None
    if not result.ok:
        _err(format_diagnostics(result.diagnostics))
        raise _Exit(EXIT_PARSE)
    if require_valid:
        diags = result.diagnostics + validate(result.model)
        if has_errors(diags):
            _err(format_diagnostics(d for d in diags if d.is_error))
            raise _Exit(EXIT_INVALID)
    return result


def _scenario(args):
    try:
        sc = load_scenario(args.scenario)
    except OSError as exc:
        _err(f"{args.scenario}: cannot read: {exc.strerror or exc}")
        raise _Exit(EXIT_IO) from None
    except ScenarioError as exc:
        _err(exc.to_diagnostic().format())
        raise _Exit(EXIT_PARSE) from None
    if getattr(args, "seed", None) is not None:
        sc.seed = args.seed
    if getattr(args, "max_ticks", None) is not None:
        sc.max_ticks = args.max_ticks
    return sc


def _run(model, scenario):
    try:
        return simulate(model, scenario)
    except TMError as exc:
        _err(f"error {exc.code}: {exc}")
        raise _Exit(EXIT_INVALID) from None


def cmd_check(args) -> int:
    result = _load(args.file, require_valid=False)
    diags = result.diagnostics + validate(result.model) + check_events(result.model, result.events, result.chronology)
    if diags:
        _err(format_diagnostics(diags))
    return EXIT_INVALID if has_errors(diags) else EXIT_OK


def cmd_simulate(args) -> int:
    if args.max_ticks is not None and args.max_ticks < 1:
        raise _UsageError(f"--max-ticks must be at least 1, got {args.max_ticks}")
    result = _load(args.file)
    trace = _run(result.model, _scenario(args))
    if args.trace_out:
        try:
            write_trace(trace, args.trace_out)
        except OSError as exc:
            _err(f"{args.trace_out}: cannot write: {exc.strerror or exc}")
            return EXIT_IO
    else:
        sys.stdout.write(write_trace(trace))
    return EXIT_OK


def cmd_behave(args) -> int:
    result = _load(args.file)
    if not result.events or result.chronology is None:
        _err(f"{args.file}: behave needs event declarations and a chronology")
        return EXIT_INVALID
    problems = check_events(result.model, result.events, result.chronology)
    if problems:
        _err(format_diagnostics(problems))
        return EXIT_INVALID
    try:
        events = bind_events(result.model, result.events)
    except BindError as exc:
        _err(format_diagnostics(exc.diagnostics))
        return EXIT_INVALID
    trace = _run(result.model, _scenario(args))
    try:
        report = check_chronology(project(trace, events), result.chronology)
    except ConformanceError as exc:
        _err(f"error {exc.code}: {exc}")
        return EXIT_INVALID
    sys.stdout.write(report.format())
    return EXIT_OK if report.verdict == "CONFORMS" else EXIT_INVALID


def cmd_render(args) -> int:
    if args.format != "dot":
        raise _UsageError(f"unsupported format {args.format!r} (only 'dot')")
    result = _load(args.file)
    text = to_dot(result.model, result.events, RenderOptions(show_events=args.events))
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            _err(f"{args.output}: cannot write: {exc.strerror or exc}")
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fmt(args) -> int:
    result = _load(args.file, require_valid=False)
    text = print_canonical(result.model, result.events, result.chronology, result.header)
    with open(args.file, encoding="utf-8", newline="") as fh:
        current = fh.read()
    if args.check:
        if current != text:
            _err(f"{args.file}: not in canonical form")
            return EXIT_INVALID
        return EXIT_OK
    if current != text:
        try:
            with open(args.file, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            _err(f"{args.file}: cannot write: {exc.strerror or exc}")
            return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tm", description="Thinging machine model toolchain.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="parse and validate a model")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run a scenario and print the trace")
    p.add_argument("file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-ticks", type=int)
    p.add_argument("--trace-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("behave", help="check a scenario's events against the chronology")
    p.add_argument("file")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_behave)

    p = sub.add_parser("render", help="export the model as DOT")
    p.add_argument("file")
    p.add_argument("--format", default="dot")
    p.add_argument("-o", "--output")
    p.add_argument("--events", action="store_true", help="annotate event regions")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("fmt", help="rewrite a model in canonical form")
    p.add_argument("file")
    p.add_argument("--check", action="store_true", help="only report whether the file would change")
    p.set_defaults(func=cmd_fmt)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except _Exit as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

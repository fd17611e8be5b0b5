"""Toolchain for thinging-machine (TM) models."""

from tmkit.behavior import (
    BoundEvent,
    ConformanceReport,
    EventOccurrence,
    JointSpec,
    bind_events,
    check_chronology,
    joints,
    project,
)
from tmkit.diagnostics import Diagnostic, SourceSpan
from tmkit.events import Chronology, EventDecl
from tmkit.generators import generate_instance
from tmkit.model import StageKind, StageRef, StaticModel, Thimac, allowed_adjacency, validate
from tmkit.parser import ParseResult, parse, parse_file
from tmkit.printer import print_canonical
from tmkit.render import RenderOptions, to_dot
from tmkit.scenario import Scenario, load_scenario, parse_scenario
from tmkit.simulator import Trace, simulate, write_trace

__all__ = [
    "BoundEvent",
    "Chronology",
    "ConformanceReport",
    "Diagnostic",
    "EventDecl",
    "EventOccurrence",
    "JointSpec",
    "ParseResult",
    "RenderOptions",
    "Scenario",
    "SourceSpan",
    "StageKind",
    "StageRef",
    "StaticModel",
    "Thimac",
    "Trace",
    "allowed_adjacency",
    "bind_events",
    "check_chronology",
    "generate_instance",
    "joints",
    "load_scenario",
    "parse",
    "parse_file",
    "parse_scenario",
    "print_canonical",
    "project",
    "simulate",
    "to_dot",
    "validate",
    "write_trace",
]

"""Deterministic simulation lab for Byzantine broadcast over shared logs."""

from .checkers import CHECKERS, PropertyReport, evaluate
from .errors import (AclViolation, BoundExceeded, DecodeError, DoubleSend, IdentityViolation,
                     InvalidParams, NotSender, ParseError, SemanticError, UnilabError)
from .explore import enumerate_schedules, explore
from .kernel import DeliveryPolicy, Rule, Simulator, SystemParams, new_sim
from .scenario import load, parse_scenario, run_scenario
from .trace import Trace

__version__ = "0.1.0"

__all__ = [
    "AclViolation", "BoundExceeded", "CHECKERS", "DecodeError", "DeliveryPolicy", "DoubleSend",
    "IdentityViolation", "InvalidParams", "NotSender", "ParseError", "PropertyReport", "Rule",
    "SemanticError", "Simulator", "SystemParams", "Trace", "UnilabError", "enumerate_schedules",
    "evaluate", "explore", "load", "new_sim", "parse_scenario", "run_scenario",
]

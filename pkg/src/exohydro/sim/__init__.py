"""Closed-loop bench simulation: plant, controller, scenarios, sweeps."""

from .controller import ForceController, TickOutput, schedule_for_policy
from .plant import InitialState, Ledger, Plant
from .result import SimResult
from .scenarios import SCENARIOS, run_scenario

__all__ = [
    "ForceController",
    "InitialState",
    "Ledger",
    "Plant",
    "SCENARIOS",
    "SimResult",
    "TickOutput",
    "run_scenario",
    "schedule_for_policy",
]

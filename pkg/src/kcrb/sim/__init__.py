"""Deterministic adversarial simulation, attacks and the property oracle."""

from .adversary import STRATEGIES, Adversary, Coalition
from .attack import (AttackError, attack_target, attack_witness, local_progress_probe,
                     partition_attack)
from .engine import (ForgeryError, GroupSchedule, Schedule, SimulationError,
                     StepBudgetExceeded, Trace, TraceEntry, run)
from .oracle import OracleError, OracleReport, Verdict, check_trace
from .scenario import Scenario, ScenarioError, dump_scenario, load_scenario

__all__ = [
    "STRATEGIES", "Adversary", "AttackError", "Coalition", "ForgeryError", "GroupSchedule",
    "OracleError", "OracleReport", "Scenario", "ScenarioError", "Schedule",
    "SimulationError", "StepBudgetExceeded", "Trace", "TraceEntry", "Verdict",
    "attack_target", "attack_witness", "check_trace", "dump_scenario", "load_scenario",
    "local_progress_probe", "partition_attack", "run",
]

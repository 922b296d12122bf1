"""Simulator for a Bell-state semi-quantum key agreement protocol and insider attacks on it."""

from sqka.adversary import BobBehavior, EveBehavior, PlannerInfeasible
from sqka.harness import ExperimentConfig, ExperimentReport, emit_report, replay_paper_examples, run_experiment
from sqka.kernels import BACKEND
from sqka.protocol import AlicePolicy, RunOutcome, Transcript, Variant, run_protocol
from sqka.qsim import BellKind, QuantumRegistry

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AlicePolicy",
    "BellKind",
    "BobBehavior",
    "EveBehavior",
    "ExperimentConfig",
    "ExperimentReport",
    "PlannerInfeasible",
    "QuantumRegistry",
    "RunOutcome",
    "Transcript",
    "Variant",
    "emit_report",
    "replay_paper_examples",
    "run_experiment",
    "run_protocol",
]

"""The three optical experiments, their corrections, and the abstract cloner they realize."""

from .correction import Correction, apply_ci, apply_ruo, clone_target, exchange_element, channel_correction
from ..state import fidelity_to
from .derive import POLICIES, CorrectionNotFound, DerivedCorrection, derive_cd_correction, derive_correction
from .lpc import run_lpc_max, run_lpc_partial
from .machine import MachineResult, abstract_machine
from .nlopc import run_nlopc_partial
from .task import (
    FAILURE,
    SUCCESS,
    CircuitRun,
    CloneTask,
    CloningAngles,
    CorrectionSpec,
    OutcomeBranch,
    checkpoint,
)

CIRCUITS = ("lpc-max", "lpc-partial", "nlopc-partial", "oracle")


def run_circuit(name: str, task: CloneTask, correct: bool = True, policy: str = "channel") -> CircuitRun:
    if name == "lpc-max":
        return run_lpc_max(task)
    if name == "lpc-partial":
        return run_lpc_partial(task, correct)
    if name == "nlopc-partial":
        return run_nlopc_partial(task, correct, policy)
    if name == "oracle":
        return oracle_run(task)
    raise ValueError(f"unknown circuit {name!r}")


def oracle_run(task: CloneTask) -> CircuitRun:
    """Abstract machine wrapped as a two-branch run (ancilla 0 = success, 1 = failure)."""
    res = abstract_machine(task)
    target = clone_target(task, 1, ("0", "1"), paths=("0", "1"))
    ok_state = res.as_photon_state("success")
    branches = [
        OutcomeBranch("ancilla_0", ok_state, res.success_prob, SUCCESS, fidelity_to(ok_state, target)),
        OutcomeBranch(
            "ancilla_1",
            res.as_photon_state("failure") if res.failure_prob > 1e-13 else None,
            res.failure_prob,
            FAILURE,
        ),
    ]
    return CircuitRun("oracle", task, True, branches, [], [], {"machine": res})


__all__ = [
    "CIRCUITS",
    "POLICIES",
    "CircuitRun",
    "CloneTask",
    "CloningAngles",
    "Correction",
    "CorrectionNotFound",
    "CorrectionSpec",
    "DerivedCorrection",
    "MachineResult",
    "OutcomeBranch",
    "abstract_machine",
    "apply_ci",
    "apply_ruo",
    "checkpoint",
    "clone_target",
    "derive_cd_correction",
    "derive_correction",
    "exchange_element",
    "oracle_run",
    "channel_correction",
    "run_circuit",
    "run_lpc_max",
    "run_lpc_partial",
    "run_nlopc_partial",
]

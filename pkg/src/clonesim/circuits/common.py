from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..elements import LinearElement, apply_all, unitary_from_column
from ..state import PureState, fidelity_to, normalize, reduce_to
from .task import CircuitRun, CloneTask, OutcomeBranch

#: Branches with squared norm below this carry no state (their probability is kept).
NULL_BRANCH = 1e-13

X = np.array([[0, 1], [1, 0]], dtype=complex)
INV_SQRT2 = 1 / math.sqrt(2)


def encoder(task: CloneTask) -> np.ndarray:
    """Plate unitary taking H to a H + s b V."""
    return unitary_from_column((task.a, task.sign * task.b))


def source(task: CloneTask, registry) -> PureState:
    """c_h |H>|H> + c_v |V>|V>, both photons on their input path."""
    return PureState(
        registry,
        {("H", "in", "H", "in"): task.c_h, ("V", "in", "V", "in"): task.c_v},
    )


def run_stages(state: PureState, stages: list[tuple[str, list[LinearElement]]]) -> list[tuple[str, PureState]]:
    out = []
    for name, els in stages:
        state = apply_all(state, els)
        out.append((name, state))
    return out


def make_branch(
    label: str,
    component: PureState,
    classification: str,
    target: Optional[PureState] = None,
    photon: Optional[int] = None,
) -> OutcomeBranch:
    p = component.norm2()
    if p < NULL_BRANCH:
        return OutcomeBranch(label, None, p, classification)
    state, _ = normalize(component)
    fid = None
    if target is not None:
        fid = fidelity_to(reduce_to(state, photon), target)
    return OutcomeBranch(label, state, p, classification, fid)


def finish(run: CircuitRun) -> CircuitRun:
    total = run.total_probability()
    if abs(total - 1) > 1e-10:
        raise RuntimeError(f"{run.circuit}: branch probabilities sum to {total!r}")
    return run

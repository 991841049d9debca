"""Local cloning: clones end on photon 1 (polarization + path), photon 2 is the ancilla."""

from __future__ import annotations

import math

from ..elements import (
    beam_splitter,
    hwp,
    pbs,
    phase_retarder,
    polarizer,
    unitary_from_column,
)
from ..state import PATH, ModeRegistry, project
from .common import INV_SQRT2, X, encoder, finish, make_branch, run_stages, source
from .correction import FAIL_PATHS, apply_ruo, clone_target, channel_correction, split_corrected
from .task import (
    FAILURE,
    INCONCLUSIVE,
    LOSS,
    MAX_CH,
    SUCCESS,
    SUCCESS_AFTER_RUO,
    CircuitRun,
    CloneTask,
    CloningAngles,
)

PATHS_1 = ("in", "0", "1", "0'", "1'", "2'", "3'", "loss")
PATHS_2 = ("in", "0", "1", "0'", "a", "b")
REGISTRY = ModeRegistry.for_photons({1: PATHS_1, 2: PATHS_2})


def lpc_stages(task: CloneTask) -> list[tuple[str, list]]:
    """Element list per stage; stage k produces the k-th checkpoint state."""
    ang = CloningAngles.from_theta(task.theta)
    split = {("H", "in"): "0", ("V", "in"): "1"}
    return [
        ("PBS1/PBS2", [pbs(1, split, "PBS1"), pbs(2, split, "PBS2")]),
        ("HWP1", [hwp(1, "1", X, "HWP1")]),
        ("HWP_s", [hwp(1, ["0", "1"], encoder(task), "HWP_s")]),
        ("POL", [polarizer(1, "0", "V"), polarizer(1, "1", "H")]),
        (
            "HWP3/HWP4",
            [
                hwp(1, "0", unitary_from_column((INV_SQRT2, INV_SQRT2), source="V"), "HWP3"),
                hwp(1, "1", unitary_from_column((ang.alpha, ang.beta)), "HWP4"),
            ],
        ),
        ("PBS4", [pbs(1, {("H", "1"): "0", ("V", "1"): "1", ("H", "0"): "1", ("V", "0"): "0"}, "PBS4")]),
        ("HWP0", [hwp(2, "1", X, "HWP0")]),
        (
            "HWP2/RET",
            [
                hwp(2, "1", unitary_from_column((ang.alpha_tilde, ang.beta_tilde)), "HWP2"),
                phase_retarder(2, "0", math.pi / 2, "RET(pi/2)"),
            ],
        ),
        ("PBS3", [pbs(2, {("H", "1"): "0'", ("V", "1"): "1"}, "PBS3")]),
        ("BS", [beam_splitter(2, ("0", "0'"), ("a", "b"))]),
    ]


def _run(task: CloneTask, circuit: str, correct: bool) -> CircuitRun:
    stages = lpc_stages(task)
    checkpoints = run_stages(source(task, REGISTRY), stages)
    final = checkpoints[-1][1]
    mode1, mode2 = (1, PATH), (2, PATH)

    lost = project(final, mode1, "loss")
    kept = final - lost
    raw = {label: project(kept, mode2, label) for label in ("1", "a", "b")}
    leftover = kept - raw["1"] - raw["a"] - raw["b"]
    if leftover.norm2() > 1e-20:
        raise RuntimeError("unexpected photon-2 detection path")

    branches = [make_branch("path_1", raw["1"], FAILURE)]
    info: dict = {"raw": raw, "usd_failure": {}}
    plain_target = clone_target(task, 1, PATHS_1, paths=("0", "1"))
    corrected_target = clone_target(task, 1, PATHS_1)
    if circuit == "lpc-max":
        branches.append(make_branch("path_a", raw["a"], SUCCESS, plain_target, 1))
        branches.append(make_branch("path_b", apply_ruo(raw["b"], 1), SUCCESS_AFTER_RUO, plain_target, 1))
    elif not correct:
        branches.append(make_branch("path_a", raw["a"], SUCCESS, plain_target, 1))
        branches.append(make_branch("path_b", raw["b"], SUCCESS_AFTER_RUO, plain_target, 1))
    else:
        for label, cls, pre in (("a", SUCCESS, False), ("b", SUCCESS_AFTER_RUO, True)):
            fixed = channel_correction(task, 1, pre_ruo=pre).apply(raw[label])
            parts = split_corrected(fixed, 1)
            info["usd_failure"][f"path_{label}"] = parts["usd_fail_2'"] + parts["usd_fail_3'"]
            branches.append(make_branch(f"path_{label}", parts["success"], cls, corrected_target, 1))
            for port in FAIL_PATHS:
                key = f"usd_fail_{port}"
                branches.append(make_branch(f"path_{label}/{key}", parts[key], INCONCLUSIVE))
    branches.append(make_branch("loss", lost, LOSS))

    run = CircuitRun(circuit, task, correct, branches, checkpoints, stages, info)
    return finish(run)


def run_lpc_max(task: CloneTask) -> CircuitRun:
    """Local cloning through the maximally entangled channel; path_b is always RUO-corrected."""
    if abs(task.c_h - MAX_CH) > 1e-12:
        raise ValueError("lpc-max requires c_h = c_v = 1/sqrt(2)")
    return _run(task, "lpc-max", True)


def run_lpc_partial(task: CloneTask, correct: bool = True) -> CircuitRun:
    """Local cloning through c_h|HH> + c_v|VV>, with optional discrimination-based correction."""
    return _run(task, "lpc-partial", correct)

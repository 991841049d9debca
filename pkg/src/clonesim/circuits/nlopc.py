"""Nonlocal cloning: photon 1 is detected, the clones end on photon 2."""

from __future__ import annotations

import math

from ..elements import beam_splitter, hwp, pbs, phase_retarder, unitary_from_column
from ..state import PATH, ModeRegistry, project
from .common import INV_SQRT2, X, encoder, finish, make_branch, run_stages, source
from .correction import FAIL_PATHS, Correction, clone_target, channel_correction, split_corrected
from .task import (
    FAILURE,
    INCONCLUSIVE,
    SUCCESS,
    SUCCESS_AFTER_RUO,
    CircuitRun,
    CloneTask,
    CloningAngles,
    CorrectionSpec,
)

PATHS_1 = ("in", "0", "1", "0tilde", "1tilde", "0'", "0tilde'", "a", "b", "c", "d")
PATHS_2 = ("in", "0", "1", "0'", "1'", "2'", "3'")
REGISTRY = ModeRegistry.for_photons({1: PATHS_1, 2: PATHS_2})

DETECTOR_PATHS = ("1", "a", "b", "0tilde", "c", "d")


def nlopc_stages(task: CloneTask) -> list[tuple[str, list]]:
    ang = CloningAngles.from_theta(task.theta)
    split = {("H", "in"): "0", ("V", "in"): "1"}
    tilde_plate = unitary_from_column((ang.alpha_tilde, ang.beta_tilde))
    return [
        ("source", []),
        (
            "encode",
            [
                pbs(1, split, "PBS1"),
                pbs(2, split, "PBS2"),
                hwp(1, "1", X, "HWP1"),
                hwp(1, ["0", "1"], encoder(task), "HWP_s"),
            ],
        ),
        (
            "split",
            [
                pbs(1, {("H", "0"): "0tilde", ("V", "0"): "0", ("H", "1"): "1", ("V", "1"): "1tilde"}, "PBS-split"),
                hwp(1, ["0", "1tilde"], X, "HWP-flip"),
                hwp(2, "0", unitary_from_column((INV_SQRT2, INV_SQRT2)), "HWP3'"),
                hwp(2, "1", unitary_from_column((ang.alpha, ang.beta), source="V"), "HWP4'"),
                pbs(2, {("H", "0"): "1", ("V", "0"): "0", ("H", "1"): "0", ("V", "1"): "1"}, "PBS4'"),
            ],
        ),
        (
            "interferometers",
            [
                hwp(1, "1", tilde_plate, "HWP2"),
                pbs(1, {("H", "1"): "0'", ("V", "1"): "1"}, "PBS3"),
                phase_retarder(1, "0", math.pi / 2, "RET(pi/2)"),
                beam_splitter(1, ("0", "0'"), ("a", "b"), "BS"),
                hwp(1, "0tilde", tilde_plate, "HWP2~"),
                pbs(1, {("H", "0tilde"): "0tilde'", ("V", "0tilde"): "0tilde"}, "PBS3~"),
                phase_retarder(1, "1tilde", math.pi / 2, "RET~(pi/2)"),
                beam_splitter(1, ("1tilde", "0tilde'"), ("c", "d"), "BS~"),
            ],
        ),
    ]


def raw_branches(task: CloneTask):
    """Checkpoints, stages and the unnormalized photon-1 detection components."""
    stages = nlopc_stages(task)
    checkpoints = run_stages(source(task, REGISTRY), stages)
    final = checkpoints[-1][1]
    raw = {label: project(final, (1, PATH), label) for label in DETECTOR_PATHS}
    rest = final
    for comp in raw.values():
        rest = rest - comp
    if rest.norm2() > 1e-20:
        raise RuntimeError("unexpected photon-1 detection path")
    return checkpoints, stages, raw


def degenerate_cd_correction(task: CloneTask, pre_ruo: bool) -> Correction:
    """Structure of the derived c/d correction, used when c_h = 0 leaves nothing to derive."""
    g = CorrectionSpec.from_task(task).gamma
    return Correction(2, task.theta, g, g, pre_ruo=pre_ruo, exchange=True, exchanged_ci=True)


def run_nlopc_partial(task: CloneTask, correct: bool = True, policy: str = "channel") -> CircuitRun:
    """Nonlocal cloning through c_h|HH> + c_v|VV>.

    With ``correct`` the a/b branches use the discrimination interferometers
    at the closed-form plate angle (RUO first on b) and the c/d branches use
    the correction returned by :func:`derive_cd_correction` under ``policy``.
    """
    checkpoints, stages, raw = raw_branches(task)
    plain_target = clone_target(task, 2, PATHS_2, paths=("0", "1"))
    corrected_target = clone_target(task, 2, PATHS_2)
    branches = [
        make_branch("path_1", raw["1"], FAILURE),
        make_branch("path_0tilde", raw["0tilde"], FAILURE),
    ]
    info: dict = {"raw": raw, "usd_failure": {}}
    heralds = (("a", SUCCESS), ("b", SUCCESS_AFTER_RUO), ("c", SUCCESS), ("d", SUCCESS_AFTER_RUO))
    if not correct:
        for label, cls in heralds:
            branches.append(make_branch(f"path_{label}", raw[label], cls, plain_target, 2))
    else:
        recipes = {"a": channel_correction(task, 2), "b": channel_correction(task, 2, pre_ruo=True)}
        if task.c_h > 0:
            from .derive import derive_cd_correction

            derived = derive_cd_correction(task, policy)
            recipes["c"], recipes["d"] = derived["path_c"].correction, derived["path_d"].correction
        else:
            recipes["c"] = degenerate_cd_correction(task, False)
            recipes["d"] = degenerate_cd_correction(task, True)
        info["corrections"] = {k: v.describe() for k, v in recipes.items()}
        for label, cls in heralds:
            parts = split_corrected(recipes[label].apply(raw[label]), 2)
            info["usd_failure"][f"path_{label}"] = parts["usd_fail_2'"] + parts["usd_fail_3'"]
            branches.append(make_branch(f"path_{label}", parts["success"], cls, corrected_target, 2))
            for port in FAIL_PATHS:
                key = f"usd_fail_{port}"
                branches.append(make_branch(f"path_{label}/{key}", parts[key], INCONCLUSIVE))
    info["policy"] = policy
    run = CircuitRun("nlopc-partial", task, correct, branches, checkpoints, stages, info)
    return finish(run)

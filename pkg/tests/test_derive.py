from __future__ import annotations

import math

import pytest

from clonesim.circuits import POLICIES, CloneTask, run_circuit
from clonesim.circuits.derive import (
    branch_states,
    derive_cd_correction,
    derive_correction,
    transform_bound,
)
from clonesim.circuits.task import MAX_CH, SUCCESS_CLASSES
from clonesim.state import PureState

PARTIAL = CloneTask(math.pi / 3, 1, 0.6)


def channel_gamma(task):
    return 0.5 * math.acos(task.c_h / task.c_v)


@pytest.mark.parametrize("label", ["c", "d"])
def test_channel_recipe_exchanges_then_uses_swapped_interferometers(label):
    found = derive_correction(PARTIAL, label)
    corr = found.correction
    assert corr.exchange and corr.exchanged_ci
    assert corr.gamma0 == pytest.approx(channel_gamma(PARTIAL), abs=1e-9)
    assert corr.gamma1 == pytest.approx(channel_gamma(PARTIAL), abs=1e-9)
    assert found.fidelity == pytest.approx(1, abs=1e-10)
    assert found.candidates == 32


def test_every_accepted_candidate_is_a_perfect_clone_recipe():
    found = derive_correction(PARTIAL, "c", policy="max")
    assert found.accepted
    assert all(0 <= c["success_probability"] <= 1 for c in found.accepted)


def test_max_policy_beats_the_channel_recipe_at_partial_entanglement():
    channel = run_circuit("nlopc-partial", PARTIAL).total()
    best = run_circuit("nlopc-partial", PARTIAL, policy="max").total()
    assert channel == pytest.approx(0.48, abs=1e-10)
    assert best == pytest.approx(0.496, abs=1e-10)
    run = run_circuit("nlopc-partial", PARTIAL, policy="max")
    for b in run.branches:
        if b.classification in SUCCESS_CLASSES:
            assert b.fidelity == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3, 1.2])
@pytest.mark.parametrize("ch", [0.3, 0.6, 0.7])
def test_max_policy_reaches_the_gram_bound(theta, ch):
    task = CloneTask(theta, 1, ch)
    states = branch_states(task, "c")
    bound = transform_bound(states[1], states[-1], math.cos(theta) ** 2)
    best = derive_correction(task, "c", policy="max").success_probability
    channel = derive_correction(task, "c").success_probability
    assert best == pytest.approx(bound, abs=1e-10)
    assert channel <= best + 1e-12


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3, math.pi / 2])
def test_policies_agree_at_maximal_entanglement(theta):
    task = CloneTask.maximal(theta)
    a = run_circuit("nlopc-partial", task).total()
    b = run_circuit("nlopc-partial", task, policy="max").total()
    assert a == pytest.approx(b, abs=1e-12)


def test_bad_policy_and_product_channel_raise():
    assert POLICIES == ("channel", "max")
    with pytest.raises(ValueError):
        derive_correction(PARTIAL, "c", policy="greedy")
    with pytest.raises(ValueError):
        derive_cd_correction(CloneTask(1.0, 1, 0.0))


def test_derivation_does_not_depend_on_sign():
    plus = derive_cd_correction(CloneTask(1.0, 1, 0.5))
    minus = derive_cd_correction(CloneTask(1.0, -1, 0.5))
    assert plus["path_c"].correction == minus["path_c"].correction


def test_transform_bound_examples():
    h = PureState.photon(2, ("0",), {("H", "0"): 1.0})
    v = PureState.photon(2, ("0",), {("V", "0"): 1.0})
    # orthogonal inputs can be mapped anywhere with certainty only if targets are orthogonal
    assert transform_bound(h, v, 0.0) == 1.0
    assert transform_bound(h, v, 0.5) == pytest.approx(1 / 1.5)
    # identical inputs cannot be separated
    assert transform_bound(h, h, 0.5) == 0.0
    assert transform_bound(h, h, 1.0) == 1.0
    assert MAX_CH == pytest.approx(1 / math.sqrt(2))

"""Closed-form stage states of the two optical circuits.

Every state is written down directly as a list of amplitudes rather than
produced by the element code, so it can serve as an independent reference
for the simulator's checkpoints. States are unnormalized with the same
norm the simulator produces from a unit-norm source; lossy stages only
describe the part of the state that is still in the circuit.
"""

from __future__ import annotations

import math

from .circuits import lpc, nlopc
from .circuits.task import CloneTask, CloningAngles
from .state import PATH, PureState, fidelity_to, normalize, project

R2 = 1 / math.sqrt(2)

# number of checkpoints each circuit exposes
LPC_STAGES = 10
NLOPC_STAGES = 4


def _state(registry, terms) -> PureState:
    """Sum of ``coef * |pol1 path1 pol2 path2>`` terms."""
    amps: dict = {}
    for coef, ket in terms:
        amps[ket] = amps.get(ket, 0j) + coef
    return PureState(registry, amps)


def _times(coef, photon1_terms, photon2_ket):
    """Terms of ``coef * (photon-1 superposition) |photon-2 ket>``."""
    return [(coef * c, (pol, path) + photon2_ket) for c, (pol, path) in photon1_terms]


def _times2(coef, photon1_ket, photon2_terms):
    return [(coef * c, photon1_ket + (pol, path)) for c, (pol, path) in photon2_terms]


def phi_clone(ang: CloningAngles):
    """alpha |H 0> + beta |V 1>."""
    return [(ang.alpha, ("H", "0")), (ang.beta, ("V", "1"))]


def phi_cross():
    """(|H 1> + |V 0>)/sqrt2."""
    return [(R2, ("H", "1")), (R2, ("V", "0"))]


def lpc_state(task: CloneTask, k: int) -> PureState:
    """Stage ``k`` (0..9) of local cloning, photon 2 acting as the ancilla."""
    if not 0 <= k < LPC_STAGES:
        raise IndexError(f"stage {k} out of range")
    reg = lpc.REGISTRY
    a, b, s = task.a, task.b, task.sign
    ch, cv = task.c_h, task.c_v
    ang = CloningAngles.from_theta(task.theta)
    psi = [(a, "H"), (s * b, "V")]
    if k == 0:
        return _state(reg, [(ch, ("H", "0", "H", "0")), (cv, ("V", "1", "V", "1"))])
    if k == 1:
        return _state(reg, [(ch, ("H", "0", "H", "0")), (cv, ("H", "1", "V", "1"))])
    if k == 2:
        terms = []
        for c, pol in psi:
            terms += [(c * ch, (pol, "0", "H", "0")), (c * cv, (pol, "1", "V", "1"))]
        return _state(reg, terms)

    big_a, big_b = a * cv, s * b * ch
    if k == 3:
        return _state(reg, [(big_a, ("H", "1", "V", "1")), (big_b, ("V", "0", "H", "0"))])
    if k == 4:
        upper = [(ang.alpha, ("H", "1")), (ang.beta, ("V", "1"))]
        lower = [(R2, ("H", "0")), (R2, ("V", "0"))]
        return _state(reg, _times(big_a, upper, ("V", "1")) + _times(big_b, lower, ("H", "0")))

    clone, cross = phi_clone(ang), phi_cross()
    if k == 5:
        return _state(reg, _times(big_a, clone, ("V", "1")) + _times(big_b, cross, ("H", "0")))
    if k == 6:
        return _state(reg, _times(big_a, clone, ("H", "1")) + _times(big_b, cross, ("H", "0")))
    if k == 7:
        terms = _times(big_a * ang.alpha_tilde, clone, ("H", "1"))
        terms += _times(big_a * ang.beta_tilde, clone, ("V", "1"))
        terms += _times(1j * big_b, cross, ("H", "0"))
        return _state(reg, terms)
    if k == 8:
        terms = _times(big_a * ang.alpha_tilde, clone, ("H", "0'"))
        terms += _times(big_a * ang.beta_tilde, clone, ("V", "1"))
        terms += _times(1j * big_b, cross, ("H", "0"))
        return _state(reg, terms)
    phi1, phi2, phi3 = lpc_detection_states(task)
    terms = _times(big_a * ang.beta_tilde, phi1, ("V", "1"))
    terms += _times(1j * R2, phi2, ("H", "a"))
    terms += _times(R2, phi3, ("H", "b"))
    return _state(reg, terms)


def lpc_detection_states(task: CloneTask):
    """Unnormalized photon-1 terms heralded by photon 2 in paths 1, a and b."""
    ang = CloningAngles.from_theta(task.theta)
    big_a, big_b = task.a * task.c_v, task.sign * task.b * task.c_h
    clone, cross = phi_clone(ang), phi_cross()
    phi2 = [(big_a * ang.alpha_tilde * c, k) for c, k in clone] + [(big_b * c, k) for c, k in cross]
    phi3 = [(big_a * ang.alpha_tilde * c, k) for c, k in clone] + [(-big_b * c, k) for c, k in cross]
    return clone, phi2, phi3


def nlopc_detection_states(task: CloneTask):
    """Unnormalized photon-2 terms of nonlocal cloning, keyed by photon-1 detection path.

    Each value is ``(coefficient, photon-1 ket, photon-2 terms)``.
    """
    ang = CloningAngles.from_theta(task.theta)
    a, b, s = task.a, task.b, task.sign
    ch, cv = task.c_h, task.c_v
    clone, cross = phi_clone(ang), phi_cross()

    def mix(w_clone, w_cross):
        return [(w_clone * c, k) for c, k in clone] + [(w_cross * c, k) for c, k in cross]

    return {
        "1": (a * cv * ang.beta_tilde, ("V", "1"), clone),
        "a": (1j * R2, ("H", "a"), mix(a * cv * ang.alpha_tilde, s * b * ch)),
        "b": (R2, ("H", "b"), mix(a * cv * ang.alpha_tilde, -s * b * ch)),
        "0tilde": (a * ch * ang.beta_tilde, ("V", "0tilde"), cross),
        "c": (1j * R2, ("H", "c"), mix(s * b * cv, a * ch * ang.alpha_tilde)),
        "d": (R2, ("H", "d"), mix(-s * b * cv, a * ch * ang.alpha_tilde)),
    }


def nlopc_state(task: CloneTask, k: int) -> PureState:
    """Stage ``k`` (0..3) of nonlocal cloning: source, encoded, split, after the interferometers."""
    if not 0 <= k < NLOPC_STAGES:
        raise IndexError(f"stage {k} out of range")
    reg = nlopc.REGISTRY
    a, b, s = task.a, task.b, task.sign
    ch, cv = task.c_h, task.c_v
    if k == 0:
        return _state(reg, [(ch, ("H", "in", "H", "in")), (cv, ("V", "in", "V", "in"))])
    if k == 1:
        terms = []
        for c, pol in ((a, "H"), (s * b, "V")):
            terms += [(c * ch, (pol, "0", "H", "0")), (c * cv, (pol, "1", "V", "1"))]
        return _state(reg, terms)
    if k == 2:
        ang = CloningAngles.from_theta(task.theta)
        clone, cross = phi_clone(ang), phi_cross()
        terms = _times2(a * cv, ("H", "1"), clone)
        terms += _times2(s * b * ch, ("H", "0"), cross)
        terms += _times2(a * ch, ("H", "0tilde"), cross)
        terms += _times2(s * b * cv, ("H", "1tilde"), clone)
        return _state(reg, terms)
    terms = []
    for coef, ket1, photon2 in nlopc_detection_states(task).values():
        terms += _times2(coef, ket1, photon2)
    return _state(reg, terms)


def golden_state(circuit: str, task: CloneTask, k: int) -> PureState:
    if circuit in ("lpc-max", "lpc-partial"):
        return lpc_state(task, k)
    if circuit == "nlopc-partial":
        return nlopc_state(task, k)
    raise ValueError(f"no closed-form stages for {circuit!r}")


def in_circuit(state: PureState) -> PureState:
    """Drop the component absorbed by lossy elements."""
    mode = (1, PATH)
    alphabet = state.registry.mode(mode).alphabet
    if "loss" not in alphabet:
        return state
    return state - project(state, mode, "loss")


def checkpoint_agreement(simulated: PureState, golden: PureState) -> tuple[float, float]:
    """(fidelity of the normalized states, largest amplitude difference)."""
    kept = in_circuit(simulated)
    diff = kept - golden
    dev = max((abs(v) for v in diff.amplitudes.values()), default=0.0)
    fid = fidelity_to(normalize(kept)[0], normalize(golden)[0])
    return fid, dev

"""Abstract probabilistic cloning machine on qubits o (original), c (copy), a (ancilla).

Built with plain dense numpy so it stays independent of the optical
simulator it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..state import PureState
from .task import CloneTask, CloningAngles


def _k(*bits: int) -> np.ndarray:
    v = np.zeros(8, dtype=complex)
    v[bits[0] * 4 + bits[1] * 2 + bits[2]] = 1
    return v


def cloning_unitary(theta: float) -> np.ndarray:
    """8x8 unitary on (o, c, a) whose action on |x>_o|0>_c|0>_a is the optimal cloner.

    Columns outside the two-dimensional domain are an arbitrary orthonormal
    completion.
    """
    ang = CloningAngles.from_theta(theta)
    # U|0>_o|Sigma> = (at|0>_a + bt|1>_a)(al|00>_oc + be|11>_oc)
    col0 = (
        ang.alpha_tilde * (ang.alpha * _k(0, 0, 0) + ang.beta * _k(1, 1, 0))
        + ang.beta_tilde * (ang.alpha * _k(0, 0, 1) + ang.beta * _k(1, 1, 1))
    )
    # U|1>_o|Sigma> = |0>_a (|01> + |10>)/sqrt2
    col1 = (_k(0, 1, 0) + _k(1, 0, 0)) / np.sqrt(2)
    fixed = np.column_stack([col0, col1])
    complement = np.linalg.svd(fixed, full_matrices=True)[0][:, 2:]
    u = np.zeros((8, 8), dtype=complex)
    # domain columns sit at the indices of |000> and |100>
    u[:, 0] = col0
    u[:, 4] = col1
    u[:, [i for i in range(8) if i not in (0, 4)]] = complement
    return u


@dataclass
class MachineResult:
    success_state: np.ndarray  # 4-vector on (o, c), unnormalized
    success_prob: float
    failure_state: np.ndarray  # normalized |Phi>_oc
    failure_prob: float

    def as_photon_state(self, which: str = "success", paths=("0", "1")) -> PureState:
        """Encode o as photon-1 polarization and c as photon-1 path."""
        vec = self.success_state if which == "success" else self.failure_state
        vec = vec / np.linalg.norm(vec)
        pol = ("H", "V")
        terms = {(pol[o], paths[c]): vec[2 * o + c] for o in (0, 1) for c in (0, 1)}
        return PureState.photon(1, paths, terms)


def abstract_machine(task: CloneTask) -> MachineResult:
    """Run the cloner on |psi_s>_o |0>_c |0>_a and measure the ancilla."""
    a, b = task.a, task.b
    psi = np.array([a, task.sign * b], dtype=complex)
    inp = np.kron(psi, np.array([1, 0, 0, 0], dtype=complex))
    out = cloning_unitary(task.theta) @ inp
    out = out.reshape(2, 2, 2)
    ok = out[:, :, 0].reshape(4)
    bad = out[:, :, 1].reshape(4)
    p_ok = float(np.vdot(ok, ok).real)
    p_bad = float(np.vdot(bad, bad).real)
    fail = bad / np.sqrt(p_bad) if p_bad > 1e-13 else np.zeros(4, dtype=complex)
    return MachineResult(ok, p_ok, fail, p_bad)

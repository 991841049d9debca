"""Search for the correction of a nonlocal detection branch.

The a/b branches have a closed-form correction. For c/d it is derived here:
candidates are built from the same hardware vocabulary (RUO, a fixed
exchange unitary, the two conditional interferometers in either plate
orientation, chi in {0, pi}); the plate angles of each candidate are solved
in closed form from the branch amplitudes and the candidate is then checked
independently by clone fidelity for both signs.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

from ..elements import apply_all
from ..state import PureState, fidelity_to, normalize, reduce_to
from .correction import Correction, clone_target, exchange_element, ruo_elements, split_corrected
from .nlopc import PATHS_2, raw_branches
from .task import CloneTask

FIDELITY_TOL = 1e-10
_SOLVE_TOL = 1e-9
_CI_PATHS = {"CI0": ("0", "H"), "CI1": ("1", "V")}


class CorrectionNotFound(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (best residual {residual:.3g})")
        self.residual = residual


@dataclass
class DerivedCorrection:
    label: str
    correction: Correction
    success_probability: float  # conditional on the branch
    fidelity: float
    candidates: int = 0
    accepted: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return 1 - self.fidelity


def branch_states(task: CloneTask, label: str) -> dict[int, PureState]:
    """Normalized photon-2 conditional states of ``label`` for both signs."""
    out = {}
    for sign in (1, -1):
        t = CloneTask(task.theta, sign, task.c_h, task.c_v)
        raw = raw_branches(t)[2][label]
        out[sign], _ = normalize(reduce_to(raw, 2))
    return out


def _solve_cos(state: PureState, target: PureState, which: str, exchanged: bool, chi: float):
    """cos(2 gamma) making ``which`` map the path amplitudes of ``state`` onto ``target``'s ratio."""
    path, att = _CI_PATHS[which]
    if exchanged:
        att = "V" if att == "H" else "H"
    keep = "V" if att == "H" else "H"
    x_att, x_keep = state.amplitude((att, path)), state.amplitude((keep, path))
    t_att, t_keep = target.amplitude((att, path)), target.amplitude((keep, path))
    if abs(t_att) < _SOLVE_TOL:
        return 0.0 if abs(x_att) > _SOLVE_TOL else 1.0
    if abs(x_att) < _SOLVE_TOL or abs(t_keep) < _SOLVE_TOL:
        return None
    c = t_att * cmath.exp(1j * chi) * x_keep / (t_keep * x_att)
    if abs(c.imag) > _SOLVE_TOL or c.real < -_SOLVE_TOL or c.real > 1 + _SOLVE_TOL:
        return None
    return min(1.0, max(0.0, c.real))


def _candidates():
    for chis in itertools.product((0.0, math.pi), repeat=2):
        for pre_ruo, exchange, exchanged_ci in itertools.product((False, True), repeat=3):
            yield chis, pre_ruo, exchange, exchanged_ci


POLICIES = ("channel", "max")


def derive_correction(task: CloneTask, label: str, policy: str = "channel") -> DerivedCorrection:
    """Correction for nonlocal branch ``label`` (e.g. ``"c"``) within the candidate family.

    Every accepted candidate reaches unit clone fidelity for both signs. With
    ``policy="channel"`` only candidates whose plate angles both equal the
    channel angle 0.5*arccos(c_h/c_v) are eligible, so the branch performs the
    same discrimination as the a/b branches. ``policy="max"`` takes the
    largest success probability over all accepted candidates, which can beat
    the channel recipe at partial entanglement.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    channel_cos = min(1.0, task.c_h / task.c_v)
    states = branch_states(task, label)
    plain = {s: clone_target(CloneTask(task.theta, s, task.c_h, task.c_v), 2, PATHS_2, ("0", "1")) for s in (1, -1)}
    final = {s: clone_target(CloneTask(task.theta, s, task.c_h, task.c_v), 2, PATHS_2) for s in (1, -1)}
    best = None
    best_residual = 1.0
    tried = 0
    accepted = []
    for (chi0, chi1), pre_ruo, exchange, exchanged_ci in _candidates():
        tried += 1
        pre = (ruo_elements(2) if pre_ruo else []) + ([exchange_element(task.theta, 2)] if exchange else [])
        prepared = apply_all(states[1], pre)
        c0 = _solve_cos(prepared, plain[1], "CI0", exchanged_ci, chi0)
        c1 = _solve_cos(prepared, plain[1], "CI1", exchanged_ci, chi1)
        if c0 is None or c1 is None:
            continue
        corr = Correction(
            2, task.theta, 0.5 * math.acos(c0), 0.5 * math.acos(c1), chi0, chi1,
            pre_ruo=pre_ruo, exchange=exchange, exchanged_ci=exchanged_ci,
        )
        fids, probs = [], []
        for s in (1, -1):
            ok = split_corrected(corr.apply(states[s]), 2)["success"]
            p = ok.norm2()
            if p < 1e-24:
                fids.append(0.0)
                probs.append(0.0)
                continue
            fids.append(fidelity_to(reduce_to(normalize(ok)[0], 2), final[s]))
            probs.append(p)
        fid = min(fids)
        best_residual = min(best_residual, 1 - fid)
        if fid < 1 - FIDELITY_TOL:
            continue
        prob = min(probs)
        accepted.append(corr.describe() | {"success_probability": prob})
        # compared as cos(2 gamma): arccos is ill-conditioned near gamma = 0
        if policy == "channel" and max(abs(c0 - channel_cos), abs(c1 - channel_cos)) > _SOLVE_TOL:
            continue
        if best is None or prob > best.success_probability + 1e-12:
            best = DerivedCorrection(label, corr, prob, fid)
    if best is None:
        raise CorrectionNotFound(f"no {policy} correction found for branch {label}", best_residual)
    best.candidates = tried
    best.accepted = accepted
    return best


@lru_cache(maxsize=256)
def _derive_cd(theta: float, c_h: float, c_v: float, policy: str):
    task = CloneTask(theta, 1, c_h, c_v)
    return {f"path_{k}": derive_correction(task, k, policy) for k in ("c", "d")}


def derive_cd_correction(task: CloneTask, policy: str = "channel") -> dict[str, DerivedCorrection]:
    """Derived corrections for the c and d branches (independent of the sign being cloned)."""
    if task.c_h <= 0:
        raise ValueError("derivation needs c_h > 0")
    return _derive_cd(task.theta, task.c_h, task.c_v, policy)


def transform_bound(s_plus: PureState, s_minus: PureState, target_overlap: float) -> float:
    """Largest k^2 for which some filter maps both inputs to k times targets with |overlap| = target_overlap.

    Inputs must be normalized. Follows from requiring the Gram matrix of the
    inputs to dominate k^2 times the Gram matrix of the targets.
    """
    from ..state import inner_product

    s = abs(inner_product(s_plus, s_minus))
    c = abs(target_overlap)
    if s >= c:
        return 1.0 if c >= 1 else min(1.0, (1 - s) / (1 - c))
    return min(1.0, (1 + s) / (1 + c))

"""Post-detection corrections: the recovery operation and the discrimination interferometers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..elements import (
    LinearElement,
    apply_all,
    conditional_interferometer,
    from_matrix,
    hwp,
    hwp_jones,
    phase_retarder,
)
from ..state import PATH, PureState, project
from .task import CloneTask, CloningAngles, CorrectionSpec

SUCCESS_PATHS = ("0'", "1'")
FAIL_PATHS = ("2'", "3'")


def ruo_elements(photon: int) -> list[LinearElement]:
    """Retarder (pi) on path 1 followed by a zero-tilt plate on both paths.

    Net action: sign flip of V together with sign flip of path 1.
    """
    return [
        phase_retarder(photon, "1", math.pi, name="RUO-RET"),
        hwp(photon, ["0", "1"], hwp_jones(0.0), name="RUO-HWP"),
    ]


def apply_ruo(state: PureState, photon: int = 1) -> PureState:
    return apply_all(state, ruo_elements(photon))


def apply_ci(state: PureState, which: str, spec: CorrectionSpec, photon: int = 1, exchanged: bool = False) -> PureState:
    return conditional_interferometer(photon, which, spec.gamma, spec.chi, exchanged).apply(state)


def exchange_element(theta: float, photon: int) -> LinearElement:
    """Unitary swapping (alpha H0 + beta V1) with (H1 + V0)/sqrt2 and their complements."""
    ang = CloningAngles.from_theta(theta)
    basis = [("H", "0"), ("V", "1"), ("H", "1"), ("V", "0")]
    r = 1 / math.sqrt(2)
    phi = np.array([ang.alpha, ang.beta, 0, 0])
    phi_perp = np.array([ang.beta, -ang.alpha, 0, 0])
    x = np.array([0, 0, r, r])
    x_perp = np.array([0, 0, r, -r])
    w = (
        np.outer(x, phi)
        + np.outer(phi, x)
        + np.outer(x_perp, phi_perp)
        + np.outer(phi_perp, x_perp)
    )
    return from_matrix("EXCH", photon, basis, basis, w)


@dataclass(frozen=True)
class Correction:
    """A correction recipe: optional RUO, optional exchange, then CI0 and CI1."""

    photon: int
    theta: float
    gamma0: float
    gamma1: float
    chi0: float = 0.0
    chi1: float = 0.0
    pre_ruo: bool = False
    exchange: bool = False
    exchanged_ci: bool = False

    def elements(self) -> list[LinearElement]:
        els: list[LinearElement] = []
        if self.pre_ruo:
            els += ruo_elements(self.photon)
        if self.exchange:
            els.append(exchange_element(self.theta, self.photon))
        els.append(conditional_interferometer(self.photon, "CI0", self.gamma0, self.chi0, self.exchanged_ci))
        els.append(conditional_interferometer(self.photon, "CI1", self.gamma1, self.chi1, self.exchanged_ci))
        return els

    def apply(self, state: PureState) -> PureState:
        return apply_all(state, self.elements())

    def describe(self) -> dict:
        return {
            "pre_ruo": self.pre_ruo,
            "exchange": self.exchange,
            "exchanged_ci": self.exchanged_ci,
            "gamma0": self.gamma0,
            "gamma1": self.gamma1,
            "chi0": self.chi0,
            "chi1": self.chi1,
        }


def channel_correction(task: CloneTask, photon: int, pre_ruo: bool = False) -> Correction:
    """CI0/CI1 at gamma = arccos(c_h/c_v)/2, chi = 0, optionally preceded by the RUO."""
    spec = CorrectionSpec.from_task(task)
    return Correction(photon, task.theta, spec.gamma, spec.gamma, spec.chi, spec.chi, pre_ruo=pre_ruo)


def clone_target(task: CloneTask, photon: int, alphabet, paths=SUCCESS_PATHS, sign=None) -> PureState:
    """(a H + s b V) (a |p0> + s b |p1>) on one photon."""
    s = task.sign if sign is None else sign
    a, b = task.a, task.b
    p0, p1 = paths
    return PureState.photon(
        photon,
        alphabet,
        {("H", p0): a * a, ("H", p1): s * a * b, ("V", p0): s * a * b, ("V", p1): b * b},
    )


def split_corrected(state: PureState, photon: int) -> dict[str, PureState]:
    """Split a corrected state into the success ports and each discrimination-failure port."""
    mode = (photon, PATH)
    return {
        "success": project(state, mode, SUCCESS_PATHS),
        "usd_fail_2'": project(state, mode, "2'"),
        "usd_fail_3'": project(state, mode, "3'"),
    }

"""Problem instances and run results shared by all circuits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from ..elements import LinearElement
from ..state import EXACT_TOL, PureState

SUCCESS = "success"
SUCCESS_AFTER_RUO = "success_after_ruo"
FAILURE = "failure"
INCONCLUSIVE = "inconclusive"
LOSS = "loss"
CLASSIFICATIONS = (SUCCESS, SUCCESS_AFTER_RUO, FAILURE, INCONCLUSIVE, LOSS)
SUCCESS_CLASSES = (SUCCESS, SUCCESS_AFTER_RUO)

MAX_CH = 1 / math.sqrt(2)


def _parse_sign(sign: Union[int, str]) -> int:
    if sign in (1, "+", "+1"):
        return 1
    if sign in (-1, "-", "-1", "−"):
        return -1
    raise ValueError(f"sign must be + or -, got {sign!r}")


@dataclass(frozen=True)
class CloneTask:
    """Which state is cloned (``theta``, ``sign``) and through which channel (``c_h``, ``c_v``).

    ``c_v`` defaults to ``sqrt(1 - c_h**2)``.
    """

    theta: float
    sign: int = 1
    c_h: float = MAX_CH
    c_v: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sign", _parse_sign(self.sign))
        theta = float(self.theta)
        if not (0 < theta <= math.pi / 2 + EXACT_TOL):
            raise ValueError(f"theta must lie in (0, pi/2], got {theta}")
        object.__setattr__(self, "theta", min(theta, math.pi / 2))
        c_h = float(self.c_h)
        if self.c_v is not None:
            c_v = float(self.c_v)
        elif c_h == MAX_CH:
            c_v = MAX_CH
        else:
            c_v = math.sqrt(max(0.0, 1 - c_h * c_h))
        if c_h < 0 or c_v < 0:
            raise ValueError("Schmidt coefficients must be non-negative")
        if abs(c_h * c_h + c_v * c_v - 1) > EXACT_TOL:
            raise ValueError(f"c_h^2 + c_v^2 must be 1, got {c_h * c_h + c_v * c_v!r}")
        if c_h > c_v + EXACT_TOL:
            raise ValueError(f"convention requires c_h <= c_v (got c_h={c_h}, c_v={c_v})")
        object.__setattr__(self, "c_h", c_h)
        object.__setattr__(self, "c_v", c_v)

    @classmethod
    def maximal(cls, theta: float, sign: Union[int, str] = 1) -> CloneTask:
        return cls(theta, sign, MAX_CH, MAX_CH)

    @property
    def a(self) -> float:
        return math.cos(self.theta / 2)

    @property
    def b(self) -> float:
        return math.sin(self.theta / 2)

    @property
    def sign_char(self) -> str:
        return "+" if self.sign > 0 else "-"

    @property
    def is_maximal(self) -> bool:
        return abs(self.c_h - self.c_v) <= EXACT_TOL

    def flipped(self) -> CloneTask:
        return CloneTask(self.theta, -self.sign, self.c_h, self.c_v)

    def as_dict(self) -> dict:
        return {"theta": self.theta, "sign": self.sign_char, "c_h": self.c_h, "c_v": self.c_v}


@dataclass(frozen=True)
class CloningAngles:
    alpha: float
    beta: float
    alpha_tilde: float
    beta_tilde: float

    @classmethod
    def from_theta(cls, theta: float) -> CloningAngles:
        t4 = math.tan(theta / 2) ** 4
        root = math.sqrt(1 + t4)
        return cls(
            alpha=1 / root,
            beta=math.tan(theta / 2) ** 2 / root,
            alpha_tilde=math.sqrt((1 + t4) / 2),
            beta_tilde=math.sqrt(max(0.0, (1 - t4) / 2)),
        )


@dataclass(frozen=True)
class CorrectionSpec:
    """Plate angle and phase of the conditional interferometers."""

    gamma: float
    chi: float = 0.0

    @classmethod
    def from_task(cls, task: CloneTask) -> CorrectionSpec:
        ratio = task.c_h / task.c_v if task.c_v > 0 else 1.0
        return cls(0.5 * math.acos(min(1.0, ratio)))


@dataclass
class OutcomeBranch:
    """One detector event.

    ``state`` is the normalized conditional state on the full two-photon
    registry, or ``None`` when the branch has zero probability.
    """

    detector_label: str
    state: Optional[PureState]
    probability: float
    classification: str
    fidelity: Optional[float] = None

    def __post_init__(self):
        if self.classification not in CLASSIFICATIONS:
            raise ValueError(f"unknown classification {self.classification!r}")


@dataclass
class CircuitRun:
    circuit: str
    task: CloneTask
    correct: bool
    branches: list[OutcomeBranch]
    checkpoints: list[tuple[str, PureState]]
    stages: list[tuple[str, list[LinearElement]]] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def branch(self, label: str) -> OutcomeBranch:
        for b in self.branches:
            if b.detector_label == label:
                return b
        raise KeyError(label)

    def total(self, classes=SUCCESS_CLASSES) -> float:
        return math.fsum(b.probability for b in self.branches if b.classification in classes)

    def total_probability(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    def elements(self) -> list[LinearElement]:
        return [el for _, els in self.stages for el in els]


def checkpoint(run: CircuitRun, index: int) -> PureState:
    """State after stage ``index`` (unnormalized, norm^2 = probability of reaching it)."""
    if not 0 <= index < len(run.checkpoints):
        raise IndexError(f"checkpoint {index} out of range 0..{len(run.checkpoints) - 1}")
    return run.checkpoints[index][1]

"""Shot sampling of detector outcomes.

Counts come from numpy's PCG64 generator seeded through ``SeedSequence``,
so a (seed, n_shots, chunks) triple reproduces the same table on every
platform. Parallel sampling splits the shots into chunks whose streams are
spawned from the plan seed; the number of worker threads never changes the
result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .circuits.task import OutcomeBranch

Z = 3.0
NORMALIZATION_TOL = 1e-12
COUNT_COLUMNS = ("branch", "count", "rate", "ci_low", "ci_high")
_SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class ShotPlan:
    n_shots: int
    seed: int = 0

    def __post_init__(self):
        if int(self.n_shots) != self.n_shots or self.n_shots < 1:
            raise ValueError(f"n_shots must be a positive integer, got {self.n_shots!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= _SEED_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


def estimate_interval(count: int, n: int, z: float = Z) -> tuple[float, float]:
    """Normal-approximation interval for a binomial rate, clamped to [0, 1]."""
    if n < 1 or not 0 <= count <= n:
        raise ValueError(f"need 0 <= count <= n and n >= 1, got count={count}, n={n}")
    p = count / n
    half = z * math.sqrt(p * (1 - p) / n)
    return max(0.0, p - half), min(1.0, p + half)


@dataclass(frozen=True)
class CountTable:
    labels: tuple[str, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.counts):
            raise ValueError("labels and counts differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate branch labels")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative count")

    @property
    def n_shots(self) -> int:
        return sum(self.counts)

    def count(self, label: str) -> int:
        return self.counts[self.labels.index(label)]

    def rate(self, label: str) -> float:
        return self.count(label) / self.n_shots

    def rates(self) -> dict[str, float]:
        n = self.n_shots
        return {lab: c / n for lab, c in zip(self.labels, self.counts)}

    def interval(self, label: str) -> tuple[float, float]:
        return estimate_interval(self.count(label), self.n_shots)

    def covers(self, probabilities: dict[str, float]) -> dict[str, bool]:
        """Whether each exact probability lies inside its branch's interval."""
        out = {}
        for label in self.labels:
            lo, hi = self.interval(label)
            out[label] = lo <= probabilities[label] <= hi
        return out

    def merge(self, other: CountTable) -> CountTable:
        """Pool two tables. Associative; labels keep first-seen order."""
        totals = dict(zip(self.labels, self.counts))
        for lab, c in zip(other.labels, other.counts):
            totals[lab] = totals.get(lab, 0) + c
        return CountTable(tuple(totals), tuple(totals.values()))

    def rows(self) -> list[dict]:
        out = []
        for label in self.labels:
            lo, hi = self.interval(label)
            out.append({"branch": label, "count": self.count(label), "rate": self.rate(label), "ci_low": lo, "ci_high": hi})
        return out

    def to_json(self) -> dict:
        return {"n_shots": self.n_shots, "branches": self.rows()}


def _probabilities(branches: Sequence[OutcomeBranch]) -> tuple[tuple[str, ...], np.ndarray]:
    labels = tuple(b.detector_label for b in branches)
    if not labels:
        raise ValueError("no branches to sample")
    p = np.array([b.probability for b in branches], dtype=float)
    if np.any(p < -NORMALIZATION_TOL):
        raise ValueError("negative branch probability")
    total = math.fsum(p)
    if abs(total - 1) > NORMALIZATION_TOL:
        raise ValueError(f"branch probabilities sum to {total!r}, not 1")
    p = np.clip(p, 0.0, None)
    return labels, p / p.sum()


def _draw(p: np.ndarray, n: int, seed: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.multinomial(n, p)


def sample(
    branches: Sequence[OutcomeBranch],
    plan: ShotPlan,
    chunks: int = 1,
    workers: Optional[int] = None,
) -> CountTable:
    """Multinomial draw of ``plan.n_shots`` detector events over ``branches``."""
    labels, p = _probabilities(branches)
    if chunks < 1:
        raise ValueError("chunks must be >= 1")
    root = np.random.SeedSequence(plan.seed)
    if chunks == 1:
        counts = _draw(p, plan.n_shots, root)
        return CountTable(labels, tuple(int(c) for c in counts))
    sizes = [plan.n_shots // chunks + (1 if i < plan.n_shots % chunks else 0) for i in range(chunks)]
    seeds = root.spawn(chunks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_draw, [p] * chunks, sizes, seeds))
    total = np.sum(parts, axis=0)
    return CountTable(labels, tuple(int(c) for c in total))

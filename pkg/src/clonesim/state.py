"""Sparse pure states over labeled photon modes.

Each photon carries a polarization mode (alphabet ``("H", "V")``) and a path
mode whose alphabet is chosen by the circuit. A :class:`PureState` maps basis
kets (tuples with one label per mode, in registry order) to complex
amplitudes. States are never renormalized implicitly: the squared norm of a
state obtained from a unit-norm input is the probability of the branch it
describes.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType
from typing import Union

import numpy as np

#: Amplitudes with modulus below this are dropped from the sparse map.
PRUNE_THRESHOLD = 1e-14
#: Tolerance for "exact" comparisons (norms, probabilities, fidelities).
EXACT_TOL = 1e-12
#: Singular values below this are treated as zero Schmidt coefficients.
SCHMIDT_CUTOFF = 1e-12

POLARIZATION = "polarization"
PATH = "path"
POL_LABELS = ("H", "V")

_KIND_ORDER = {POLARIZATION: 0, PATH: 1}

Ket = tuple[str, ...]
ModeKey = tuple[int, str]


@dataclass(frozen=True)
class Mode:
    photon: int
    kind: str
    alphabet: tuple[str, ...]

    def __post_init__(self):
        if self.photon not in (1, 2):
            raise ValueError(f"photon id must be 1 or 2, got {self.photon}")
        if self.kind not in _KIND_ORDER:
            raise ValueError(f"unknown mode kind {self.kind!r}")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError(f"duplicate labels in alphabet {self.alphabet}")
        if self.kind == POLARIZATION and self.alphabet != POL_LABELS:
            raise ValueError(f"polarization alphabet must be {POL_LABELS}")

    @property
    def key(self) -> ModeKey:
        return (self.photon, self.kind)


@dataclass(frozen=True)
class ModeRegistry:
    """Ordered set of modes; at most one mode of each kind per photon."""

    modes: tuple[Mode, ...]

    def __post_init__(self):
        modes = tuple(sorted(self.modes, key=lambda m: (m.photon, _KIND_ORDER[m.kind])))
        keys = [m.key for m in modes]
        if len(set(keys)) != len(keys):
            raise ValueError(f"repeated (photon, kind) in registry: {keys}")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def for_photons(cls, paths: Mapping[int, Sequence[str]]) -> ModeRegistry:
        """Registry with a polarization and a path mode for each photon in ``paths``."""
        modes = []
        for photon, alphabet in paths.items():
            modes.append(Mode(photon, POLARIZATION, POL_LABELS))
            modes.append(Mode(photon, PATH, tuple(alphabet)))
        return cls(tuple(modes))

    def index(self, mode: ModeKey) -> int:
        for i, m in enumerate(self.modes):
            if m.key == tuple(mode):
                return i
        raise KeyError(f"mode {mode} not in registry")

    def mode(self, mode: ModeKey) -> Mode:
        return self.modes[self.index(mode)]

    @property
    def keys(self) -> tuple[ModeKey, ...]:
        return tuple(m.key for m in self.modes)

    @property
    def photons(self) -> tuple[int, ...]:
        return tuple(sorted({m.photon for m in self.modes}))

    def sub(self, photon: int) -> ModeRegistry:
        return ModeRegistry(tuple(m for m in self.modes if m.photon == photon))

    def sort_key(self, ket: Ket) -> tuple[int, ...]:
        return tuple(m.alphabet.index(label) for m, label in zip(self.modes, ket))

    def check_ket(self, ket: Sequence[str]) -> Ket:
        ket = tuple(ket)
        if len(ket) != len(self.modes):
            raise ValueError(f"ket {ket} has wrong length for {len(self.modes)} modes")
        for m, label in zip(self.modes, ket):
            if label not in m.alphabet:
                raise ValueError(f"label {label!r} not in alphabet of mode {m.key}")
        return ket

    def to_json(self) -> list[dict]:
        return [
            {"photon": m.photon, "kind": m.kind, "alphabet": list(m.alphabet)}
            for m in self.modes
        ]


class PureState:
    """Immutable sparse superposition of basis kets."""

    __slots__ = ("_registry", "_amps")

    def __init__(self, registry: ModeRegistry, amplitudes: Mapping[Sequence[str], complex] = ()):
        self._registry = registry
        amps: dict[Ket, complex] = {}
        items = amplitudes.items() if isinstance(amplitudes, Mapping) else amplitudes
        for ket, amp in items:
            ket = registry.check_ket(ket)
            amps[ket] = amps.get(ket, 0j) + complex(amp)
        self._amps = {k: a for k, a in amps.items() if abs(a) >= PRUNE_THRESHOLD}

    @classmethod
    def _trusted(cls, registry: ModeRegistry, amps: dict[Ket, complex]) -> PureState:
        obj = cls.__new__(cls)
        obj._registry = registry
        obj._amps = {k: a for k, a in amps.items() if abs(a) >= PRUNE_THRESHOLD}
        return obj

    @classmethod
    def basis(cls, registry: ModeRegistry, ket: Sequence[str], amplitude: complex = 1.0) -> PureState:
        return cls(registry, {tuple(ket): amplitude})

    @classmethod
    def photon(cls, photon: int, paths: Sequence[str], terms: Mapping[tuple[str, str], complex]) -> PureState:
        """Single-photon state from ``{(pol, path): amplitude}``."""
        reg = ModeRegistry.for_photons({photon: paths})
        return cls(reg, terms)

    @property
    def registry(self) -> ModeRegistry:
        return self._registry

    @property
    def amplitudes(self) -> Mapping[Ket, complex]:
        return MappingProxyType(self._amps)

    def items(self) -> list[tuple[Ket, complex]]:
        """Amplitudes in canonical ket order."""
        return sorted(self._amps.items(), key=lambda kv: self._registry.sort_key(kv[0]))

    def amplitude(self, ket: Sequence[str]) -> complex:
        return self._amps.get(tuple(ket), 0j)

    def norm2(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._amps.values())

    def is_zero(self) -> bool:
        return not self._amps

    def __len__(self) -> int:
        return len(self._amps)

    # arithmetic ---------------------------------------------------------

    def _check_same(self, other: PureState) -> None:
        if not isinstance(other, PureState):
            raise TypeError(f"expected PureState, got {type(other).__name__}")
        if other._registry != self._registry:
            raise ValueError("registry mismatch")

    def __add__(self, other: PureState) -> PureState:
        self._check_same(other)
        amps = dict(self._amps)
        for k, a in other._amps.items():
            amps[k] = amps.get(k, 0j) + a
        return PureState._trusted(self._registry, amps)

    def __sub__(self, other: PureState) -> PureState:
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> PureState:
        scalar = complex(scalar)
        return PureState._trusted(self._registry, {k: scalar * a for k, a in self._amps.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> PureState:
        return self * (1 / complex(scalar))

    def __neg__(self) -> PureState:
        return self * -1

    def map_kets(self, fn) -> PureState:
        """Relabel kets with ``fn(ket) -> iterable of (ket, factor)``; linear extension."""
        amps: dict[Ket, complex] = {}
        for ket, a in self._amps.items():
            for new, factor in fn(ket):
                amps[new] = amps.get(new, 0j) + a * factor
        return PureState._trusted(self._registry, amps)

    def with_registry(self, registry: ModeRegistry) -> PureState:
        """Re-express the state on a registry with the same mode keys but larger alphabets."""
        if registry.keys != self._registry.keys:
            raise ValueError("mode keys differ")
        return PureState(registry, self._amps)

    def to_vector(self, kets: Sequence[Ket]) -> np.ndarray:
        return np.array([self._amps.get(tuple(k), 0j) for k in kets], dtype=complex)

    def to_json(self) -> dict:
        return {
            "modes": self._registry.to_json(),
            "amplitudes": [
                {"ket": list(k), "re": a.real, "im": a.imag} for k, a in self.items()
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> PureState:
        reg = ModeRegistry(tuple(Mode(m["photon"], m["kind"], tuple(m["alphabet"])) for m in data["modes"]))
        return cls(reg, {tuple(e["ket"]): complex(e["re"], e["im"]) for e in data["amplitudes"]})

    def __repr__(self) -> str:
        terms = " + ".join(
            f"({a.real:.6g}{a.imag:+.6g}j)|{','.join(k)}>" for k, a in self.items()
        )
        return f"PureState({terms or '0'})"


def tensor(s1: PureState, s2: PureState) -> PureState:
    """Product state; the registries must not share a (photon, kind) pair."""
    overlap = set(s1.registry.keys) & set(s2.registry.keys)
    if overlap:
        raise ValueError(f"overlapping mode registries: {sorted(overlap)}")
    reg = ModeRegistry(s1.registry.modes + s2.registry.modes)
    joint_keys = s1.registry.keys + s2.registry.keys
    order = [joint_keys.index(k) for k in reg.keys]
    amps = {}
    for k1, a1 in s1.amplitudes.items():
        for k2, a2 in s2.amplitudes.items():
            joint = k1 + k2
            amps[tuple(joint[i] for i in order)] = a1 * a2
    return PureState._trusted(reg, amps)


def inner_product(s1: PureState, s2: PureState) -> complex:
    """<s1|s2>, conjugate-linear in the first argument."""
    if s1.registry != s2.registry:
        raise ValueError("registry mismatch")
    small, large = (s1, s2) if len(s1) <= len(s2) else (s2, s1)
    total = 0j
    for k, a in small.amplitudes.items():
        b = large.amplitude(k)
        if b:
            total += (a.conjugate() * b) if small is s1 else (b.conjugate() * a)
    return total


LabelSpec = Union[str, Iterable[str]]


def project(s: PureState, mode: ModeKey, label: LabelSpec) -> PureState:
    """Unnormalized component of ``s`` with ``mode`` in ``label`` (a label or a set of labels).

    The squared norm of the result is the joint probability of the outcome.
    """
    idx = s.registry.index(mode)
    alphabet = s.registry.modes[idx].alphabet
    labels = {label} if isinstance(label, str) else set(label)
    unknown = labels - set(alphabet)
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} not in alphabet of mode {mode}")
    return PureState._trusted(
        s.registry, {k: a for k, a in s.amplitudes.items() if k[idx] in labels}
    )


def normalize(s: PureState) -> tuple[PureState, float]:
    p = s.norm2()
    if p <= EXACT_TOL:
        raise ValueError("cannot normalize a zero state")
    return s * (1 / math.sqrt(p)), p


def fidelity_to(s: PureState, target: PureState) -> float:
    """|<target|s>|^2 for normalized states."""
    for name, st in (("state", s), ("target", target)):
        if abs(st.norm2() - 1) > 1e-10:
            raise ValueError(f"{name} is not normalized (norm^2 = {st.norm2()!r})")
    f = abs(inner_product(target, s)) ** 2
    return min(1.0, f)


def reduce_to(s: PureState, photon: int) -> PureState:
    """Drop every mode not belonging to ``photon``.

    Valid only when the dropped modes are in a single definite ket, which is
    the situation after a detector has fixed the other photon's outcome.
    """
    keep = [i for i, m in enumerate(s.registry.modes) if m.photon == photon]
    drop = [i for i, m in enumerate(s.registry.modes) if m.photon != photon]
    rest = {tuple(k[i] for i in drop) for k in s.amplitudes}
    if len(rest) > 1:
        raise ValueError(f"photon {photon} is entangled with the discarded modes")
    sub = s.registry.sub(photon)
    return PureState._trusted(sub, {tuple(k[i] for i in keep): a for k, a in s.amplitudes.items()})


def schmidt_coefficients(s: PureState, bipartition: Iterable[ModeKey]) -> list[float]:
    """Schmidt coefficients of ``s`` across ``bipartition`` | rest, descending.

    Coefficients below :data:`SCHMIDT_CUTOFF` are discarded, so a product
    state returns ``[1.0]``.
    """
    part = [tuple(m) for m in bipartition]
    if not part:
        raise ValueError("empty bipartition")
    if abs(s.norm2() - 1) > 1e-10:
        raise ValueError("state must be normalized")
    idx_a = [s.registry.index(m) for m in part]
    idx_b = [i for i in range(len(s.registry.modes)) if i not in idx_a]
    rows: dict[Ket, int] = {}
    cols: dict[Ket, int] = {}
    entries = []
    for k, a in s.amplitudes.items():
        ra = tuple(k[i] for i in idx_a)
        cb = tuple(k[i] for i in idx_b)
        entries.append((rows.setdefault(ra, len(rows)), cols.setdefault(cb, len(cols)), a))
    m = np.zeros((max(len(rows), 1), max(len(cols), 1)), dtype=complex)
    for r, c, a in entries:
        m[r, c] = a
    sv = np.linalg.svd(m, compute_uv=False)
    return [float(x) for x in sv if x > SCHMIDT_CUTOFF]


def global_phase(s: PureState, target: PureState) -> complex:
    """Unit phase ``e^{i phi}`` with ``s`` closest to ``e^{i phi} * target``."""
    ov = inner_product(target, s)
    return cmath.exp(1j * cmath.phase(ov)) if abs(ov) > 0 else 1.0

"""Optical elements as sparse linear maps on one photon's (polarization, path) pair.

An element only touches kets whose local (pol, path) pair lies in its
domain; everything else passes through unchanged. Blocked light is not
discarded: lossy elements route it to a sink path label so that the total
probability over all outcomes, sink included, stays one.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Optional, Union

import numpy as np

from .state import EXACT_TOL, PATH, POLARIZATION, POL_LABELS, PureState

SINK = "loss"

Local = tuple[str, Optional[str]]  # (pol, path); path None is a wildcard meaning "same path"
Column = tuple[tuple[Local, complex], ...]


@dataclass(frozen=True)
class WaveplateSetting:
    tilt: float

    def __post_init__(self):
        if not (-EXACT_TOL <= self.tilt <= math.pi / 2 + EXACT_TOL):
            raise ValueError(f"tilt {self.tilt} outside [0, pi/2]")


@dataclass(frozen=True)
class LinearElement:
    name: str
    photon: int
    action: Mapping[Local, Column]
    lossy: bool = False
    sink: str = SINK

    def __post_init__(self):
        frozen = {tuple(k): tuple((tuple(o), complex(a)) for o, a in col) for k, col in dict(self.action).items()}
        object.__setattr__(self, "action", MappingProxyType(frozen))

    def _column(self, pol: str, path: str) -> Optional[Column]:
        col = self.action.get((pol, path))
        if col is not None:
            return col
        if path != self.sink:
            return self.action.get((pol, None))
        return None

    def apply(self, state: PureState) -> PureState:
        reg = state.registry
        i_pol = reg.index((self.photon, POLARIZATION))
        i_path = reg.index((self.photon, PATH))
        path_alphabet = reg.modes[i_path].alphabet
        mapped: dict[tuple, complex] = {}
        passed: dict[tuple, complex] = {}
        for ket, amp in state.amplitudes.items():
            col = self._column(ket[i_pol], ket[i_path])
            if col is None:
                passed[ket] = amp
                continue
            for (pol, path), c in col:
                out = list(ket)
                out[i_pol] = pol
                out[i_path] = ket[i_path] if path is None else path
                if out[i_path] not in path_alphabet:
                    raise ValueError(f"{self.name}: output path {out[i_path]!r} not in registry alphabet")
                out = tuple(out)
                mapped[out] = mapped.get(out, 0j) + amp * c
        clash = set(mapped) & set(passed)
        if clash:
            raise ValueError(f"{self.name}: output port already occupied by {sorted(clash)[0]}")
        mapped.update(passed)
        return PureState(reg, mapped)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "photon": self.photon,
            "lossy": self.lossy,
            "entries": [
                {
                    "in": [pol, path if path is not None else "*"],
                    "out": [o[0], o[1] if o[1] is not None else "*"],
                    "re": c.real,
                    "im": c.imag,
                }
                for (pol, path), col in sorted(self.action.items(), key=lambda kv: (kv[0][1] or "", kv[0][0]))
                for o, c in col
            ],
        }


def apply_all(state: PureState, elements: Sequence[LinearElement]) -> PureState:
    for el in elements:
        state = el.apply(state)
    return state


def _check_unitary(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(2)))
    if dev > EXACT_TOL:
        raise ValueError(f"matrix is not unitary (deviation {dev:.3g})")
    return u


def unitary_from_column(image: Sequence[complex], source: str = "H") -> np.ndarray:
    """A 2x2 unitary sending ``|source>`` to ``image`` (in the H, V basis)."""
    u0, u1 = (complex(x) for x in image)
    n = math.hypot(abs(u0), abs(u1))
    if abs(n - 1) > EXACT_TOL:
        raise ValueError("image must be a unit vector")
    other = (-u1.conjugate(), u0.conjugate())
    cols = [(u0, u1), other] if source == "H" else [other, (u0, u1)]
    return np.array(cols, dtype=complex).T


def hwp_jones(tilt: float) -> np.ndarray:
    """Jones matrix of a half-wave plate tilted by ``tilt``."""
    c, s = math.cos(2 * tilt), math.sin(2 * tilt)
    return np.array([[c, s], [s, -c]], dtype=complex)


def _paths(path_condition: Union[str, Sequence[str]]) -> list[Optional[str]]:
    if path_condition == "all":
        return [None]
    if isinstance(path_condition, str):
        return [path_condition]
    return list(path_condition)


def hwp(photon: int, path_condition: Union[str, Sequence[str]], target_unitary, name: str = "HWP") -> LinearElement:
    """Polarization unitary applied on the given path(s); ``"all"`` matches every non-sink path."""
    u = _check_unitary(target_unitary)
    action = {}
    for path in _paths(path_condition):
        for j, pin in enumerate(POL_LABELS):
            action[(pin, path)] = tuple(
                ((pout, path), u[i, j]) for i, pout in enumerate(POL_LABELS) if abs(u[i, j]) > 0
            )
    return LinearElement(name, photon, action)


def pbs(photon: int, routing: Mapping[tuple[str, str], str], name: str = "PBS") -> LinearElement:
    """Polarization-conditioned path relabeling ``{(pol, in_path): out_path}``."""
    seen = set()
    for (pol, _), out in routing.items():
        if pol not in POL_LABELS:
            raise ValueError(f"unknown polarization {pol!r}")
        if (pol, out) in seen:
            raise ValueError(f"non-injective routing for {pol} into path {out!r}")
        seen.add((pol, out))
    action = {(pol, pin): (((pol, out), 1.0),) for (pol, pin), out in routing.items()}
    return LinearElement(name, photon, action)


def beam_splitter(photon: int, in_paths: tuple[str, str], out_paths: tuple[str, str], name: str = "BS") -> LinearElement:
    """50/50 splitter: p -> (r + i t)/sqrt2, q -> (i r + t)/sqrt2, for both polarizations."""
    p, q = in_paths
    r, t = out_paths
    if len({p, q, r, t}) != 4:
        raise ValueError("beam splitter needs four distinct path labels")
    k = 1 / math.sqrt(2)
    action = {}
    for pol in POL_LABELS:
        action[(pol, p)] = (((pol, r), k), ((pol, t), 1j * k))
        action[(pol, q)] = (((pol, r), 1j * k), ((pol, t), k))
    return LinearElement(name, photon, action)


def polarizer(photon: int, path: str, pass_pol: str, name: Optional[str] = None, sink: str = SINK) -> LinearElement:
    """Transmits ``pass_pol`` on ``path``; the other polarization goes to the sink."""
    if pass_pol not in POL_LABELS:
        raise ValueError(f"unknown polarization {pass_pol!r}")
    blocked = POL_LABELS[1 - POL_LABELS.index(pass_pol)]
    action = {
        (pass_pol, path): (((pass_pol, path), 1.0),),
        (blocked, path): (((blocked, sink), 1.0),),
    }
    return LinearElement(name or f"POL({pass_pol.lower()})", photon, action, lossy=True, sink=sink)


def phase_retarder(photon: int, path: str, phase: float, name: str = "RET") -> LinearElement:
    f = complex(math.cos(phase), math.sin(phase))
    action = {(pol, path): (((pol, path), f),) for pol in POL_LABELS}
    return LinearElement(name, photon, action)


# which -> (input path, success path, failure path, attenuated polarization)
_CI_PORTS = {"CI0": ("0", "0'", "2'", "H"), "CI1": ("1", "1'", "3'", "V")}


def conditional_interferometer(
    photon: int,
    which: str,
    gamma: float,
    chi: float = 0.0,
    exchanged: bool = False,
) -> LinearElement:
    """Path-conditioned filter realized by a PBS interferometer with a tilted plate in one arm.

    The attenuated polarization is scaled by ``cos 2 gamma`` into the success
    port and the remainder, rotated by the plate, leaves through the failure
    port; the other polarization crosses with phase ``e^{i chi}``. With
    ``exchanged`` the plate sits in the other arm, so the roles of H and V swap.
    """
    if which not in _CI_PORTS:
        raise ValueError(f"unknown interferometer {which!r}")
    if not (-EXACT_TOL <= gamma <= math.pi / 4 + EXACT_TOL):
        raise ValueError(f"gamma {gamma} outside [0, pi/4]")
    src, ok, fail, att = _CI_PORTS[which]
    if exchanged:
        att = "V" if att == "H" else "H"
    keep = "V" if att == "H" else "H"
    jones = hwp_jones(gamma)
    c, s = jones[0, 0].real, jones[1, 0].real
    action = {
        (att, src): (((att, ok), c), ((keep, fail), s)),
        (keep, src): (((keep, ok), complex(math.cos(chi), math.sin(chi))),),
    }
    name = which + ("x" if exchanged else "")
    return LinearElement(name, photon, action)


def from_matrix(
    name: str,
    photon: int,
    basis_in: Sequence[tuple[str, str]],
    basis_out: Sequence[tuple[str, str]],
    matrix,
) -> LinearElement:
    """Element with ``|basis_in[j]> -> sum_i matrix[i, j] |basis_out[i]>``."""
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (len(basis_out), len(basis_in)):
        raise ValueError("matrix shape does not match bases")
    action = {
        tuple(bin_): tuple((tuple(bout), m[i, j]) for i, bout in enumerate(basis_out) if abs(m[i, j]) > 1e-15)
        for j, bin_ in enumerate(basis_in)
    }
    return LinearElement(name, photon, action)


@dataclass
class ElementReport:
    name: str
    lossy: bool
    max_deviation: float
    column_norms: dict = field(default_factory=dict)
    ok: bool = True


def validate(element: LinearElement, tol: float = EXACT_TOL) -> ElementReport:
    """Check that the domain columns are orthonormal (sink included for lossy elements).

    Never raises; the returned report carries the largest deviation from the
    identity Gram matrix. For lossy elements ``column_norms`` holds the
    squared norm of each column with and without the sink port.
    """
    domain = sorted(element.action, key=lambda k: (k[1] or "", k[0]))
    outs: dict = {}
    for k in domain:
        for (pol, path), _ in element.action[k]:
            # wildcard outputs resolve to the input path
            outs.setdefault((pol, path if path is not None else ("*", k[1])), len(outs))
    m = np.zeros((len(outs), len(domain)), dtype=complex)
    for j, k in enumerate(domain):
        for (pol, path), c in element.action[k]:
            m[outs[(pol, path if path is not None else ("*", k[1]))], j] += c
    gram = m.conj().T @ m
    dev = float(np.max(np.abs(gram - np.eye(len(domain))))) if domain else 0.0
    norms = {}
    if element.lossy:
        sink_rows = [i for (pol, path), i in outs.items() if path == element.sink]
        kept = np.ones(len(outs), dtype=bool)
        kept[sink_rows] = False
        for j, k in enumerate(domain):
            label = f"{k[0]},{k[1] if k[1] is not None else '*'}"
            norms[label] = {
                "with_sink": float(np.sum(np.abs(m[:, j]) ** 2)),
                "without_sink": float(np.sum(np.abs(m[kept, j]) ** 2)),
            }
    return ElementReport(element.name, element.lossy, dev, norms, dev <= tol)

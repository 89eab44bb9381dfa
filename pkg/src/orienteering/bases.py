"""Optimal two-qubit measurements for direction decoding and their guess tables."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import ATOL, dagger, kron, projector
from .states import Direction, pauli_eigenstate, sic_antipodes, sic_states

_SQ2 = np.sqrt(2.0)
_SQ3 = np.sqrt(3.0)
_SQ6 = np.sqrt(6.0)


class SchemeId(str, enum.Enum):
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"
    XY = "xy"
    ZX = "zx"
    ZY = "zy"

    @classmethod
    def parse(cls, name) -> "SchemeId":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("sigma_", "").replace("σ", "").replace(" ", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown measurement scheme {name!r}") from None

    @property
    def is_local(self) -> bool:
        return self in (SchemeId.XY, SchemeId.ZX, SchemeId.ZY)


LOCAL_SCHEMES = (SchemeId.XY, SchemeId.ZX, SchemeId.ZY)

_TETRA = np.array(
    [
        [0.0, 0.0, 1.0],
        [2 * _SQ2 / 3, 0.0, -1 / 3],
        [-_SQ2 / 3, _SQ6 / 3, -1 / 3],
        [-_SQ2 / 3, -_SQ6 / 3, -1 / 3],
    ]
)

# outcome E1..E4 -> guessed direction
GUESSES = {
    SchemeId.PARALLEL: _TETRA,
    SchemeId.ANTIPARALLEL: _TETRA,
    SchemeId.XY: np.array([[1, 1, 0], [-1, -1, 0], [1, -1, 0], [-1, 1, 0]]) / _SQ2,
    SchemeId.ZX: np.array([[1, 0, 1], [-1, 0, 1], [1, 0, -1], [-1, 0, -1]]) / _SQ2,
    SchemeId.ZY: np.array([[0, -1, 1], [0, 1, 1], [0, -1, -1], [0, 1, -1]]) / _SQ2,
}
for _g in GUESSES.values():
    _g.setflags(write=False)

# (walker eigenstate, coin eigenstate) per outcome E1..E4
LOCAL_OUTCOMES = {
    SchemeId.XY: (("+x", "+y"), ("-x", "-y"), ("+x", "-y"), ("-x", "+y")),
    SchemeId.ZX: (("+z", "+x"), ("+z", "-x"), ("-z", "+x"), ("-z", "-x")),
    SchemeId.ZY: (("+z", "-y"), ("+z", "+y"), ("-z", "-y"), ("-z", "+y")),
}

# measured axes (walker qubit, coin qubit) of the local schemes
LOCAL_AXES = {
    SchemeId.XY: (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])),
    SchemeId.ZX: (np.array([0, 0, 1.0]), np.array([1.0, 0, 0])),
    SchemeId.ZY: (np.array([0, 0, 1.0]), np.array([0, 1.0, 0])),
}


@dataclass(frozen=True)
class Povm:
    """Four-outcome measurement on the two-qubit system with a guess per outcome.

    ``elements`` has shape ``(k, 4, 4)``; ``guesses`` has shape ``(k, 3)``.
    """

    elements: np.ndarray
    guesses: np.ndarray
    label: str = ""
    atol: float = field(default=ATOL, repr=False, compare=False)

    def __post_init__(self):
        el = np.array(self.elements, dtype=complex)
        gs = np.array(self.guesses, dtype=float)
        if el.ndim != 3 or el.shape[1:] != (4, 4):
            raise ValueError(f"POVM elements must have shape (k, 4, 4), got {el.shape}")
        if gs.shape != (el.shape[0], 3):
            raise ValueError("need exactly one guess direction per element")
        if not np.allclose(np.linalg.norm(gs, axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("guess directions must be unit vectors")
        for k, e in enumerate(el):
            if not np.allclose(e, dagger(e), rtol=0, atol=self.atol):
                raise ValueError(f"element {k + 1} is not Hermitian")
            if np.linalg.eigvalsh(0.5 * (e + dagger(e)))[0] < -self.atol:
                raise ValueError(f"element {k + 1} is not positive semidefinite")
        if not np.allclose(el.sum(axis=0), np.eye(4), rtol=0, atol=self.atol):
            raise ValueError("POVM elements do not sum to the identity")
        el.setflags(write=False)
        gs.setflags(write=False)
        object.__setattr__(self, "elements", el)
        object.__setattr__(self, "guesses", gs)

    def __len__(self):
        return self.elements.shape[0]

    def guess(self, outcome: int) -> Direction:
        """Guess for a 1-based outcome index."""
        if not 1 <= outcome <= len(self):
            raise IndexError(f"outcome must be in 1..{len(self)}")
        return Direction.from_array(self.guesses[outcome - 1])

    def probabilities(self, kets) -> np.ndarray:
        """Born probabilities for one ket ``(4,)`` or a batch ``(N, 4)``."""
        kets = np.asarray(kets, dtype=complex)
        p = np.einsum("...a,jab,...b->...j", kets.conj(), self.elements, kets).real
        return np.clip(p, 0.0, None)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "elements": [[[[z.real, z.imag] for z in row] for row in e] for e in self.elements],
            "guesses": self.guesses.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, atol: float = ATOL) -> "Povm":
        el = np.array(d["elements"], dtype=float)
        return cls(el[..., 0] + 1j * el[..., 1], np.array(d["guesses"]), d.get("label", ""), atol=atol)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str, atol: float = ATOL) -> "Povm":
        return cls.from_dict(json.loads(text), atol=atol)


def singlet() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex) / _SQ2


def parallel_kets() -> list[np.ndarray]:
    psi = singlet()
    return [_SQ3 / 2 * kron(n, n) + psi / 2 for n in sic_states()]


def antiparallel_kets() -> list[np.ndarray]:
    big, small = (_SQ3 + 1) / (2 * _SQ2), (_SQ3 - 1) / (2 * _SQ2)
    return [big * kron(n, m) + small * kron(m, n) for n, m in zip(sic_states(), sic_antipodes())]


def local_kets(pair) -> list[np.ndarray]:
    pair = SchemeId.parse(pair)
    if not pair.is_local:
        raise ValueError(f"{pair.value} is not a local Pauli-pair scheme")
    return [kron(pauli_eigenstate(a), pauli_eigenstate(b)) for a, b in LOCAL_OUTCOMES[pair]]


def _rank_one(kets, scheme: SchemeId) -> Povm:
    return Povm(np.array([projector(k) for k in kets]), GUESSES[scheme], scheme.value)


def parallel_basis() -> Povm:
    return _rank_one(parallel_kets(), SchemeId.PARALLEL)


def antiparallel_basis() -> Povm:
    return _rank_one(antiparallel_kets(), SchemeId.ANTIPARALLEL)


def local_basis(pair) -> Povm:
    pair = SchemeId.parse(pair)
    return _rank_one(local_kets(pair), pair)


def basis_kets(scheme) -> list[np.ndarray]:
    scheme = SchemeId.parse(scheme)
    if scheme is SchemeId.PARALLEL:
        return parallel_kets()
    if scheme is SchemeId.ANTIPARALLEL:
        return antiparallel_kets()
    return local_kets(scheme)


def analytic_povm(scheme) -> Povm:
    """Ideal measurement for any of the five schemes."""
    scheme = SchemeId.parse(scheme)
    return _rank_one(basis_kets(scheme), scheme)


def guess_for(scheme, outcome: int) -> Direction:
    """Guessed direction for a 1-based outcome of ``scheme``."""
    scheme = SchemeId.parse(scheme)
    if not 1 <= outcome <= 4:
        raise IndexError("outcome must be in 1..4")
    return Direction.from_array(GUESSES[scheme][outcome - 1])


def concurrence(ket) -> float:
    """Concurrence 2|ad - bc| of a pure two-qubit ket."""
    a, b, c, d = np.asarray(ket, dtype=complex)
    return float(2 * abs(a * d - b * c))

"""Qubit kets, Bloch vectors, SIC states and wave-plate unitaries."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import IDENTITY2, PAULI_X, PAULI_Y, PAULI_Z, kron

_SQ2 = np.sqrt(2.0)
_SQ3 = np.sqrt(3.0)


@dataclass(frozen=True)
class Direction:
    """Unit vector on the Bloch sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm2 = self.x**2 + self.y**2 + self.z**2
        if not np.isfinite(norm2) or abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"direction ({self.x}, {self.y}, {self.z}) is not a unit vector")

    @classmethod
    def normalized(cls, x, y, z) -> "Direction":
        v = np.array([x, y, z], dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(*(float(c) for c in v / n))

    @classmethod
    def from_array(cls, v) -> "Direction":
        return cls.normalized(*np.asarray(v, dtype=float))

    @classmethod
    def from_theta(cls, theta: float) -> "Direction":
        """Direction ``(sin theta, 0, cos theta)`` in the xz-plane."""
        return cls.normalized(np.sin(theta), 0.0, np.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __neg__(self) -> "Direction":
        return Direction(-self.x, -self.y, -self.z)

    def dot(self, other: "Direction") -> float:
        return float(self.as_array() @ other.as_array())


def _vec(n) -> np.ndarray:
    if isinstance(n, Direction):
        return n.as_array()
    return np.asarray(n, dtype=float)


def bloch_to_kets(ns) -> np.ndarray:
    """Vectorized :func:`bloch_to_ket` over an ``(N, 3)`` array of unit vectors."""
    ns = np.atleast_2d(np.asarray(ns, dtype=float))
    x, y, z = ns[:, 0], ns[:, 1], ns[:, 2]
    # half angles from atan2 stay accurate near both poles
    half = np.arctan2(np.hypot(x, y), z) / 2
    c, s = np.cos(half), np.sin(half)
    phase = np.exp(1j * np.arctan2(y, x))
    kets = np.stack([c.astype(complex), s * phase], axis=1)
    # south pole: first component vanishes, make the second real positive
    south = c < 1e-15
    kets[south] = [0.0, 1.0]
    return kets


def bloch_to_ket(n) -> np.ndarray:
    """Ket with Bloch vector ``n``; the first nonzero component is real positive."""
    return bloch_to_kets(_vec(n)[None, :])[0]


def ket_to_bloch(ket, atol: float = 1e-10) -> Direction:
    """Bloch vector ``(<X>, <Y>, <Z>)`` of a normalized qubit ket."""
    ket = np.asarray(ket, dtype=complex)
    if ket.shape != (2,):
        raise ValueError("expected a 2-component ket")
    if abs(np.vdot(ket, ket).real - 1.0) > atol:
        raise ValueError("ket is not normalized")
    v = [np.vdot(ket, p @ ket).real for p in (PAULI_X, PAULI_Y, PAULI_Z)]
    return Direction.normalized(*v)


def sic_states() -> list[np.ndarray]:
    """The four tetrahedral qubit kets |n_1>..|n_4>, global phases included."""
    w = np.exp(2j * np.pi / 3)
    return [
        np.array([1.0, 0.0], dtype=complex),
        1j / _SQ3 * np.array([1.0, _SQ2]),
        1j / _SQ3 * np.array([1.0, w * _SQ2]),
        1j / _SQ3 * np.array([-1.0, np.exp(1j * np.pi / 3) * _SQ2]),
    ]


def sic_antipodes() -> list[np.ndarray]:
    """Kets |-n_1>..|-n_4> orthogonal to the corresponding :func:`sic_states`."""
    return [
        np.array([0.0, 1.0], dtype=complex),
        1j / _SQ3 * np.array([_SQ2, -1.0]),
        1j / _SQ3 * np.array([np.exp(-2j * np.pi / 3) * _SQ2, -1.0]),
        1j / _SQ3 * np.array([np.exp(-1j * np.pi / 3) * _SQ2, 1.0]),
    ]


_PAULI_EIGENSTATES = {
    "+x": np.array([1, 1], dtype=complex) / _SQ2,
    "-x": np.array([1, -1], dtype=complex) / _SQ2,
    "+y": np.array([1, 1j], dtype=complex) / _SQ2,
    "-y": np.array([1, -1j], dtype=complex) / _SQ2,
    "+z": np.array([1, 0], dtype=complex),
    "-z": np.array([0, 1], dtype=complex),
}


def pauli_eigenstate(label: str) -> np.ndarray:
    """Eigenket of a Pauli operator, e.g. ``"+x"`` or ``"-z"``."""
    try:
        return _PAULI_EIGENSTATES[label].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli eigenstate {label!r}") from None


class Encoding(str, enum.Enum):
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"


def _antipode_kets(ns) -> np.ndarray:
    ns = np.atleast_2d(np.asarray(ns, dtype=float))
    kets = bloch_to_kets(-ns)
    # xz-plane directions use -sin(t/2)|0> + cos(t/2)|1>
    xz = np.abs(ns[:, 1]) < 1e-15
    theta = np.arctan2(ns[xz, 0], ns[xz, 2])
    kets[xz] = np.stack([-np.sin(theta / 2), np.cos(theta / 2)], axis=1)
    return kets


def encode_many(ns, mode) -> np.ndarray:
    """Two-qubit product kets, shape ``(N, 4)``, for an array of directions."""
    mode = Encoding(mode)
    first = bloch_to_kets(ns)
    second = first if mode is Encoding.PARALLEL else _antipode_kets(ns)
    return np.einsum("na,nb->nab", first, second).reshape(-1, 4)


def encode(n, mode) -> np.ndarray:
    """Alice's encoding |n, n> or |n, -n> of a direction."""
    return encode_many(_vec(n)[None, :], mode)[0]


def encode_theta(theta: float, mode) -> np.ndarray:
    """Encoding of ``(sin theta, 0, cos theta)`` using the half-angle kets verbatim.

    Differs from :func:`encode` at most by a global phase.
    """
    mode = Encoding(mode)
    ket = np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)
    if mode is Encoding.PARALLEL:
        return kron(ket, ket)
    return kron(ket, np.array([-np.sin(theta / 2), np.cos(theta / 2)], dtype=complex))


class PlateKind(str, enum.Enum):
    HWP = "HWP"
    QWP = "QWP"


@dataclass(frozen=True)
class WavePlate:
    """Half- or quarter-wave plate with its axis rotated by ``angle`` radians."""

    kind: PlateKind
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "kind", PlateKind(self.kind))
        if not np.isfinite(self.angle):
            raise ValueError("plate angle must be finite")

    @classmethod
    def hwp(cls, degrees: float) -> "WavePlate":
        return cls(PlateKind.HWP, np.radians(degrees))

    @classmethod
    def qwp(cls, degrees: float) -> "WavePlate":
        return cls(PlateKind.QWP, np.radians(degrees))

    @property
    def degrees(self) -> float:
        return float(np.degrees(self.angle))

    def canonical(self) -> "WavePlate":
        return WavePlate(self.kind, float(np.mod(self.angle, np.pi)))


def waveplate_unitary(plate: WavePlate) -> np.ndarray:
    axis = np.sin(2 * plate.angle) * PAULI_X + np.cos(2 * plate.angle) * PAULI_Z
    if plate.kind is PlateKind.HWP:
        return axis
    return (1 + 1j) / 2 * (IDENTITY2 - 1j * axis)


def compose_plates(plates: Sequence[WavePlate] | Iterable[WavePlate]) -> np.ndarray:
    """Product of plate unitaries in list order; the last plate acts first."""
    plates = list(plates)
    if not plates:
        raise ValueError("need at least one wave plate")
    out = IDENTITY2
    for p in plates:
        out = out @ waveplate_unitary(p)
    return out

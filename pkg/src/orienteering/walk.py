"""Discrete-time quantum walk on a truncated line with absorbing position detectors.

A two-qubit ket ``a|00> + b|01> + c|10> + d|11>`` is embedded as
``a|1,H> + b|1,V> + c|-1,H> + d|-1,V>``: walker positions +1/-1 carry the
first qubit and the coin (polarization) carries the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bases import GUESSES, Povm, SchemeId
from .linalg import ATOL, dagger, is_unitary, partial_trace_walker
from .states import WavePlate, compose_plates

X_MIN, X_MAX = -6, 6
N_SITES = X_MAX - X_MIN + 1
LEAKAGE_TOL = 1e-9

_POLARIZATIONS = {"both": (0, 1), "H": (0,), "V": (1,)}


class WalkLeakageError(RuntimeError):
    """Probability left undetected at the end of a walk."""


def site(x: int) -> int:
    if not X_MIN <= x <= X_MAX:
        raise ValueError(f"position {x} outside the walker window [{X_MIN}, {X_MAX}]")
    return x - X_MIN


@dataclass(frozen=True)
class WalkState:
    """Walker-coin amplitudes; ``amps[..., site(x), c]`` with c=0 for H, 1 for V.

    Leading axes, if any, index a batch of independent walks.
    """

    amps: np.ndarray

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex)
        if a.shape[-2:] != (N_SITES, 2):
            raise ValueError(f"amplitude array must end with ({N_SITES}, 2), got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @classmethod
    def from_mapping(cls, amplitudes: Mapping[int, Sequence[complex]]) -> "WalkState":
        a = np.zeros((N_SITES, 2), dtype=complex)
        for x, pair in amplitudes.items():
            a[site(x)] = pair
        return cls(a)

    def to_mapping(self, atol: float = 0.0) -> dict[int, tuple[complex, complex]]:
        if self.amps.ndim != 2:
            raise ValueError("to_mapping is defined for a single walk, not a batch")
        return {
            x: (complex(self.amps[site(x), 0]), complex(self.amps[site(x), 1]))
            for x in range(X_MIN, X_MAX + 1)
            if np.any(np.abs(self.amps[site(x)]) > atol)
        }

    def probability(self) -> np.ndarray | float:
        p = np.sum(np.abs(self.amps) ** 2, axis=(-2, -1))
        return float(p) if np.ndim(p) == 0 else p


def embed(ket) -> WalkState:
    """Place two-qubit kets ``(..., 4)`` on walker sites +1 and -1."""
    ket = np.asarray(ket, dtype=complex)
    if ket.shape[-1] != 4:
        raise ValueError("expected two-qubit kets with 4 components")
    a = np.zeros(ket.shape[:-1] + (N_SITES, 2), dtype=complex)
    a[..., site(1), :] = ket[..., 0:2]
    a[..., site(-1), :] = ket[..., 2:4]
    return WalkState(a)


def translate(state: WalkState) -> WalkState:
    """Move H amplitude one site right and V amplitude one site left."""
    a = state.amps
    if np.any(np.abs(a[..., -1, 0]) > 0) or np.any(np.abs(a[..., 0, 1]) > 0):
        raise ValueError("walk would leave the truncated window")
    out = np.zeros_like(a)
    out[..., 1:, 0] = a[..., :-1, 0]
    out[..., :-1, 1] = a[..., 1:, 1]
    return WalkState(out)


def _coin_matrix(c) -> np.ndarray:
    return c.matrix if isinstance(c, Coin) else np.asarray(c, dtype=complex)


def apply_coins(state: WalkState, coins: Mapping[int, object]) -> WalkState:
    """Apply site-dependent 2x2 coins; sites without a coin are left alone."""
    a = np.array(state.amps)
    for x, c in coins.items():
        m = _coin_matrix(c)
        if m.shape != (2, 2) or not is_unitary(m):
            raise ValueError(f"coin at position {x} is not a 2x2 unitary")
        i = site(x)
        a[..., i, :] = a[..., i, :] @ m.T
    return WalkState(a)


@dataclass(frozen=True)
class Coin:
    """Coin operator, optionally backed by the wave plates that realize it.

    If only ``plates`` are given the matrix is their product.
    """

    matrix: np.ndarray | None = None
    plates: tuple[WavePlate, ...] | None = None

    def __post_init__(self):
        plates = None if self.plates is None else tuple(self.plates)
        if self.matrix is None:
            if not plates:
                raise ValueError("a coin needs a matrix or a plate list")
            m = compose_plates(plates)
        else:
            m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2) or not is_unitary(m):
            raise ValueError("coin must be a 2x2 unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "plates", plates)

    @classmethod
    def from_plates(cls, *plates: WavePlate) -> "Coin":
        return cls(None, plates)

    def plate_deviation(self) -> float:
        """Max entrywise gap between the matrix and its plate product (0 without plates)."""
        if not self.plates:
            return 0.0
        return float(np.max(np.abs(self.matrix - compose_plates(self.plates))))


@dataclass(frozen=True)
class Detector:
    """Absorbing detector at ``position`` right after step ``step`` (1-based)."""

    position: int
    step: int
    outcome: int
    polarization: str = "both"

    def __post_init__(self):
        site(self.position)
        if self.polarization not in _POLARIZATIONS:
            raise ValueError(f"polarization must be one of {sorted(_POLARIZATIONS)}")
        if self.step < 1 or self.outcome < 1:
            raise ValueError("detector step and outcome are 1-based")


@dataclass(frozen=True)
class CoinSchedule:
    """Per-step coin tables plus detector placement for one measurement scheme."""

    steps: tuple[Mapping[int, Coin], ...]
    detectors: tuple[Detector, ...]
    label: SchemeId | None = None
    n_outcomes: int = field(default=4)

    def __post_init__(self):
        steps = tuple({int(x): (c if isinstance(c, Coin) else Coin(c)) for x, c in s.items()} for s in self.steps)
        for s in steps:
            for x in s:
                site(x)
        dets = tuple(self.detectors)
        outcomes = sorted(d.outcome for d in dets)
        if outcomes != list(range(1, self.n_outcomes + 1)):
            raise ValueError("each outcome must be assigned to exactly one detector")
        if any(d.step > len(steps) for d in dets):
            raise ValueError("detector placed after the last step")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "detectors", dets)
        if self.label is not None:
            object.__setattr__(self, "label", SchemeId.parse(self.label))

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def coin(self, step: int, position: int) -> np.ndarray:
        """Coin matrix at a 1-based step and position (identity if absent)."""
        c = self.steps[step - 1].get(position)
        return np.eye(2, dtype=complex) if c is None else c.matrix

    def plate_deviation(self) -> float:
        return max((c.plate_deviation() for s in self.steps for c in s.values()), default=0.0)


def propagate(state: WalkState, sched: CoinSchedule):
    """Evolve through every step, absorbing amplitude at the detectors.

    Returns
    -------
    final : WalkState
        Amplitude never absorbed.
    detected : list of ndarray
        Per outcome (0-based), the absorbed amplitudes with shape ``(..., n_pol)``.
    """
    detected: list = [None] * sched.n_outcomes
    for t, coins in enumerate(sched.steps, start=1):
        state = translate(apply_coins(state, coins))
        here = [d for d in sched.detectors if d.step == t]
        if here:
            a = np.array(state.amps)
            for d in here:
                pols = _POLARIZATIONS[d.polarization]
                detected[d.outcome - 1] = a[..., site(d.position), pols].copy()
                a[..., site(d.position), pols] = 0
            state = WalkState(a)
    return state, detected


def _outcome_probs(state, sched):
    final, detected = propagate(state, sched)
    probs = np.stack([np.sum(np.abs(amp) ** 2, axis=-1) for amp in detected], axis=-1)
    leak = np.max(np.atleast_1d(final.probability()))
    if leak > LEAKAGE_TOL:
        raise WalkLeakageError(f"{leak:.3e} of the probability was never detected")
    return final, probs


def run(s0, sched: CoinSchedule):
    """Run one embedded two-qubit state through the walk.

    ``s0`` is the ket ``(a, b, c, d)`` or an already embedded :class:`WalkState`.
    Returns the undetected remainder and the four outcome probabilities.
    """
    state = s0 if isinstance(s0, WalkState) else embed(s0)
    return _outcome_probs(state, sched)


def run_batch(kets, sched: CoinSchedule) -> np.ndarray:
    """Outcome probabilities ``(N, 4)`` for a batch of two-qubit kets ``(N, 4)``."""
    return _outcome_probs(embed(kets), sched)[1]


def outcome_isometries(sched: CoinSchedule) -> list[np.ndarray]:
    """Per outcome, the linear map from two-qubit ket to detected amplitudes."""
    _, detected = propagate(embed(np.eye(4, dtype=complex)), sched)
    # row k of detected[j] is the response to basis ket e_k
    return [amp.T for amp in detected]


def detector_elements(sched: CoinSchedule) -> tuple[np.ndarray, float]:
    """Unvalidated detector operators ``A_j^dag A_j`` and the worst undetected weight.

    Useful for diagnosing a broken schedule, where the operators need not sum
    to the identity.
    """
    final, detected = propagate(embed(np.eye(4, dtype=complex)), sched)
    elements = np.array([dagger(a.T) @ a.T for a in detected])
    return elements, float(np.max(final.probability()))


def extract_povm(sched: CoinSchedule, atol: float = ATOL) -> Povm:
    """Effective two-qubit POVM realized by the schedule's detectors."""
    elements, leak = detector_elements(sched)
    if leak > LEAKAGE_TOL:
        raise WalkLeakageError(f"basis input leaves {leak:.3e} undetected")
    if sched.label is None:
        raise ValueError("schedule has no scheme label to attach guesses")
    return Povm(elements, GUESSES[sched.label], sched.label.value, atol=atol)


# -- operator form of the same evolution ------------------------------------


def shift_operator() -> np.ndarray:
    """Conditional translation as a matrix on the truncated walker-coin space."""
    t = np.zeros((2 * N_SITES, 2 * N_SITES), dtype=complex)
    for i in range(N_SITES):
        if i + 1 < N_SITES:
            t[2 * (i + 1), 2 * i] = 1
        if i - 1 >= 0:
            t[2 * (i - 1) + 1, 2 * i + 1] = 1
    return t


def coin_operator(coins: Mapping[int, object]) -> np.ndarray:
    c = np.eye(2 * N_SITES, dtype=complex)
    for x, coin in coins.items():
        i = site(x)
        c[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = _coin_matrix(coin)
    return c


def position_projector(x: int, polarization: str = "both") -> np.ndarray:
    p = np.zeros((2 * N_SITES, 2 * N_SITES), dtype=complex)
    for c in _POLARIZATIONS[polarization]:
        p[2 * site(x) + c, 2 * site(x) + c] = 1
    return p


def povm_from_operators(sched: CoinSchedule, atol: float = ATOL) -> Povm:
    """Same effective POVM as :func:`extract_povm`, built from full step matrices.

    Each detector's Kraus map is ``P_j U_s Q_{s-1} U_{s-1} ... Q_1 U_1 J`` where
    ``Q_t`` removes the detectors firing after step ``t`` and ``J`` embeds the
    two-qubit space; the element is its Gram matrix.
    """
    shift = shift_operator()
    embed_map = np.zeros((2 * N_SITES, 4), dtype=complex)
    embed_map[2 * site(1) : 2 * site(1) + 2, 0:2] = np.eye(2)
    embed_map[2 * site(-1) : 2 * site(-1) + 2, 2:4] = np.eye(2)
    elements = [None] * sched.n_outcomes
    evolved = embed_map
    for t, coins in enumerate(sched.steps, start=1):
        evolved = shift @ coin_operator(coins) @ evolved
        keep = np.eye(2 * N_SITES, dtype=complex)
        for d in sched.detectors:
            if d.step == t:
                p = position_projector(d.position, d.polarization)
                k = p @ evolved
                elements[d.outcome - 1] = dagger(k) @ k
                keep = keep - p
        evolved = keep @ evolved
    if sched.label is None:
        raise ValueError("schedule has no scheme label to attach guesses")
    return Povm(np.array(elements), GUESSES[sched.label], sched.label.value, atol=atol)


def coin_povm(steps: Sequence[Mapping[int, object]], positions: Sequence[int], start: int = 0) -> np.ndarray:
    """Qubit POVM on the coin for a walker starting at ``start``.

    ``Pi_x = Tr_W{(|start><start| x 1) U^dag (|x><x| x 1) U}`` for each final
    position ``x`` in ``positions``; returns shape ``(len(positions), 2, 2)``.
    """
    u = np.eye(2 * N_SITES, dtype=complex)
    shift = shift_operator()
    for coins in steps:
        u = shift @ coin_operator(coins) @ u
    start_proj = position_projector(start)
    return np.array(
        [partial_trace_walker(start_proj @ dagger(u) @ position_projector(x) @ u, N_SITES) for x in positions]
    )

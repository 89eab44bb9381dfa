"""Measurement tomography: probe statistics, maximum-likelihood POVM
reconstruction and fidelity scoring."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bases import Povm, SchemeId
from .linalg import dagger, hermitian_power, kron, psd_sqrt
from .schedules import builtin_schedule
from .states import WavePlate, pauli_eigenstate
from .walk import Coin, CoinSchedule, detector_elements

PAULI_LABELS = ("+x", "-x", "+y", "-y", "+z", "-z")
PROBABILITY_FLOOR = 1e-12
EIGENVALUE_FLOOR = 1e-14
DEFAULT_MAX_ITERS = 5000
DEFAULT_TOL = 1e-10
FIDELITY_DEFINITION = "normalized Uhlmann: [Tr sqrt(sqrt(A) B sqrt(A))]^2 with A=a/Tr a, B=b/Tr b"


class CountsFormatError(ValueError):
    """Malformed or invalid counts table."""


@dataclass(frozen=True)
class ProbeSet:
    """The 36 product probes built from the six Pauli eigenstates per qubit."""

    shots_per_state: int = 100000
    labels: tuple[str, ...] = field(init=False)
    states: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.shots_per_state < 1:
            raise ValueError("shots_per_state must be positive")
        labels, states = [], []
        for a in PAULI_LABELS:
            for b in PAULI_LABELS:
                labels.append(a + b)
                states.append(kron(pauli_eigenstate(a), pauli_eigenstate(b)))
        states = np.array(states)
        states.setflags(write=False)
        object.__setattr__(self, "labels", tuple(labels))
        object.__setattr__(self, "states", states)

    def __len__(self):
        return len(self.labels)

    def density_matrices(self) -> np.ndarray:
        return np.einsum("ia,ib->iab", self.states, self.states.conj())


def collect_statistics(povm, probes: ProbeSet, seed=0, exact: bool = False) -> np.ndarray:
    """Outcome table of shape ``(36, k)``.

    ``povm`` is a :class:`Povm` or a raw ``(k, 4, 4)`` stack of detector
    operators; rows are renormalized, i.e. conditioned on some detector
    firing. Sampled mode draws multinomial counts with
    ``probes.shots_per_state`` per row. ``exact=True`` returns the
    probabilities themselves.
    """
    elements = povm.elements if isinstance(povm, Povm) else np.asarray(povm, dtype=complex)
    psi = probes.states
    p = np.einsum("ia,kab,ib->ik", psi.conj(), elements, psi).real.clip(min=0.0)
    p = p / p.sum(axis=1, keepdims=True)
    if exact:
        return p
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.multinomial(probes.shots_per_state, p)


def povm_fidelity(a, b) -> float:
    """Uhlmann fidelity between two PSD operators after normalizing each to unit trace."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ta, tb = np.trace(a).real, np.trace(b).real
    if ta <= 0 or tb <= 0:
        raise ValueError("operators must have positive trace")
    sa = psd_sqrt(a / ta)
    inner = sa @ (b / tb) @ sa
    w = np.clip(np.linalg.eigvalsh(0.5 * (inner + dagger(inner))), 0.0, None)
    return float(min(np.sum(np.sqrt(w)) ** 2, 1.0))


def log_likelihood(freqs: np.ndarray, probs: np.ndarray) -> float:
    mask = freqs > 0
    return float(np.sum(freqs[mask] * np.log(np.maximum(probs[mask], PROBABILITY_FLOOR))))


@dataclass
class TomographyResult:
    reconstructed: Povm
    fidelities: np.ndarray | None
    overall_fidelity: float | None
    iterations: int
    log_likelihood: float
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "reconstructed": self.reconstructed.to_dict(),
            "fidelities": None if self.fidelities is None else [float(f) for f in self.fidelities],
            "overall_fidelity": self.overall_fidelity,
            "fidelity_definition": FIDELITY_DEFINITION,
            "iterations": self.iterations,
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
        }


def _validate_counts(counts, n_probes):
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2 or counts.shape[0] != n_probes:
        raise CountsFormatError(f"counts must have shape ({n_probes}, k), got {counts.shape}")
    if not np.all(np.isfinite(counts)) or np.any(counts < 0):
        raise CountsFormatError("counts must be finite and nonnegative")
    if np.any(counts.sum(axis=1) <= 0):
        raise CountsFormatError("every probe row needs at least one count")
    return counts


def reconstruct_ml(counts, probes: ProbeSet, max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL,
                   reference: Povm | None = None, keep_history: bool = False,
                   initial=None, callback=None) -> TomographyResult:
    """Maximum-likelihood POVM from probe statistics.

    Iterates ``Pi_j <- L^-1/2 R_j Pi_j R_j L^-1/2`` with
    ``R_j = sum_i (f_ij / p_ij) rho_i`` and ``L = sum_j R_j Pi_j R_j``, starting
    from ``Pi_j = I/k`` unless ``initial`` elements are supplied. Stops once the
    log-likelihood gain drops below ``tol``. Fidelities are scored against
    ``reference`` when given. ``callback(iteration, elements)``, if given, sees
    every iterate.
    """
    counts = _validate_counts(counts, len(probes))
    freqs = counts / counts.sum(axis=1, keepdims=True)
    rhos = probes.density_matrices()
    k = counts.shape[1]
    dim = rhos.shape[1]
    if initial is None:
        pis = np.repeat(np.eye(dim, dtype=complex)[None] / k, k, axis=0)
    else:
        pis = np.array(initial, dtype=complex)
        if pis.shape != (k, dim, dim):
            raise ValueError(f"initial elements must have shape {(k, dim, dim)}")

    def probs_of(p):
        return np.einsum("iab,jba->ij", rhos, p).real

    ll = log_likelihood(freqs, probs_of(pis))
    history = [ll]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        p = np.maximum(probs_of(pis), PROBABILITY_FLOOR)
        r = np.einsum("ij,iab->jab", freqs / p, rhos)
        rpr = r @ pis @ r
        lam = rpr.sum(axis=0)
        lam_isqrt = hermitian_power(0.5 * (lam + dagger(lam)), -0.5, floor=EIGENVALUE_FLOOR)
        pis = lam_isqrt @ rpr @ lam_isqrt
        pis = 0.5 * (pis + dagger(pis))
        if callback is not None:
            callback(it, pis)
        new_ll = log_likelihood(freqs, probs_of(pis))
        history.append(new_ll)
        gain = new_ll - ll
        ll = new_ll
        if abs(gain) < tol:
            converged = True
            break

    label = reference.label if reference is not None else ""
    guesses = reference.guesses if reference is not None else _placeholder_guesses(k)
    povm = Povm(pis, guesses, label, atol=1e-8)
    fids = overall = None
    if reference is not None:
        fids = np.array([povm_fidelity(a, b) for a, b in zip(pis, reference.elements)])
        overall = float(fids.mean())
    return TomographyResult(povm, fids, overall, it, ll, converged, history if keep_history else [])


def _placeholder_guesses(k):
    g = np.zeros((k, 3))
    g[:, 2] = 1.0
    return g


def tomography_error_bars(counts, probes: ProbeSet, reference: Povm, repetitions: int = 100, seed=0,
                          max_iters: int = DEFAULT_MAX_ITERS, tol: float = DEFAULT_TOL, initial=None):
    """Poisson-bootstrap standard deviation of per-element and overall fidelity.

    ``initial`` (typically the point estimate) warm-starts every resampled fit.
    """
    if repetitions < 2:
        raise ValueError("need at least two repetitions")
    counts = _validate_counts(counts, len(probes))
    rng = np.random.Generator(np.random.PCG64(seed))
    fids = np.empty((repetitions, counts.shape[1]))
    for r in range(repetitions):
        res = reconstruct_ml(rng.poisson(counts), probes, max_iters, tol, reference, initial=initial)
        fids[r] = res.fidelities
    return fids.std(axis=0, ddof=1), float(fids.mean(axis=1).std(ddof=1))


class NoiseKind(str, enum.Enum):
    NONE = "none"
    PLATE_ANGLE_JITTER = "plate-angle-jitter"


@dataclass(frozen=True)
class NoiseModel:
    """Independent Gaussian jitter of every wave-plate angle (``sigma`` in radians)."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be a finite nonnegative angle")

    @property
    def kind(self) -> NoiseKind:
        return NoiseKind.NONE if self.sigma == 0 else NoiseKind.PLATE_ANGLE_JITTER


def perturbed_schedule(scheme, noise: NoiseModel, base: CoinSchedule | None = None) -> CoinSchedule:
    """Copy of a schedule with every plate angle jittered; coins are rebuilt from the plates."""
    sched = base if base is not None else builtin_schedule(scheme)
    if noise.kind is NoiseKind.NONE:
        return sched
    rng = np.random.Generator(np.random.PCG64(noise.seed))
    steps = []
    for coins in sched.steps:
        new = {}
        for x in sorted(coins):
            c = coins[x]
            if not c.plates:
                raise ValueError(f"coin at position {x} has no plate table to perturb")
            plates = tuple(replace(p, angle=p.angle + rng.normal(0.0, noise.sigma)) for p in c.plates)
            new[x] = Coin(None, plates)
        steps.append(new)
    return CoinSchedule(tuple(steps), sched.detectors, sched.label)


def realized_elements(scheme, noise: NoiseModel) -> np.ndarray:
    """Detector operators of the (possibly jittered) walk for ``scheme``.

    Jittered plates can steer a little amplitude past every detector, so the
    operators may sum to slightly less than the identity.
    """
    return detector_elements(perturbed_schedule(scheme, noise))[0]


def counts_to_csv(counts, probes: ProbeSet) -> str:
    counts = np.asarray(counts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["probe"] + [f"E{j + 1}" for j in range(counts.shape[1])])
    for label, row in zip(probes.labels, counts):
        w.writerow([label] + [repr(float(v)) if counts.dtype.kind == "f" else str(int(v)) for v in row])
    return buf.getvalue()


def counts_from_csv(text: str, probes: ProbeSet) -> np.ndarray:
    """Parse a counts table; rows must list the probes in :class:`ProbeSet` order."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0].strip().lower() != "probe":
        raise CountsFormatError("missing header starting with 'probe'")
    body = [r for r in rows[1:] if r]
    if [r[0].strip() for r in body] != list(probes.labels):
        raise CountsFormatError("probe labels missing or out of order")
    width = len(rows[0]) - 1
    try:
        values = []
        for r in body:
            if len(r) - 1 != width:
                raise CountsFormatError(f"row {r[0]} has {len(r) - 1} entries, expected {width}")
            values.append([float(v) for v in r[1:]])
    except ValueError as e:
        if isinstance(e, CountsFormatError):
            raise
        raise CountsFormatError(f"non-numeric count: {e}") from None
    counts = _validate_counts(np.array(values), len(probes))
    if np.all(counts == np.round(counts)) and any("." not in v for r in body for v in r[1:]):
        return counts.astype(np.int64)
    return counts


def result_to_json(result: TomographyResult, scheme=None) -> str:
    d = result.to_dict()
    if scheme is not None:
        d = {"scheme": SchemeId.parse(scheme).value, **d}
    return json.dumps(d, indent=2) + "\n"

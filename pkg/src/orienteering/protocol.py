"""Monte Carlo simulation of the direction-transfer protocol.

Randomness comes from numpy's PCG64 bit generator. A run with master seed
``s`` is split into chunks of :data:`CHUNK_SHOTS` shots; chunk ``k`` draws
from ``SeedSequence(s).spawn(n_chunks)[k]``, so results do not depend on how
many workers evaluate the chunks. Poisson resampling uses the separate stream
``SeedSequence(s, spawn_key=(BOOTSTRAP_KEY,))``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bases import GUESSES, LOCAL_AXES, Povm, SchemeId, analytic_povm
from .states import Direction, Encoding, encode_many
from . import walk
from .schedules import builtin_schedule

CHUNK_SHOTS = 8192
BOOTSTRAP_KEY = 2**32
DEFAULT_ERROR_REPS = 100

PARALLEL_AVERAGE = 0.75
ANTIPARALLEL_AVERAGE = (3 + math.sqrt(3)) / 6
LOCC_AVERAGE = (3 + math.sqrt(2)) / 6

OCTAHEDRON = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)

# which measurement may decode which encoding
ALLOWED = {
    Encoding.PARALLEL: (SchemeId.PARALLEL, SchemeId.XY, SchemeId.ZX, SchemeId.ZY),
    Encoding.ANTIPARALLEL: (SchemeId.ANTIPARALLEL,),
}


class Engine(str, enum.Enum):
    ANALYTIC = "analytic-povm"
    WALK = "walk"


def fidelity(n, g):
    """Direction fidelity ``(1 + n.g)/2``; broadcasts over leading axes."""
    n = n.as_array() if isinstance(n, Direction) else np.asarray(n, dtype=float)
    g = g.as_array() if isinstance(g, Direction) else np.asarray(g, dtype=float)
    out = (1.0 + np.sum(n * g, axis=-1)) / 2.0
    return float(out) if np.ndim(out) == 0 else out


def _cubic(v):
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    s2 = math.sqrt(2)
    return s2 * x**3 - 3 * s2 * x * y**2 - 3 * x**2 * z - 3 * y**2 * z + 2 * z**3


def analytic_mean_fidelity(n, scheme, locc_axes=None):
    """Closed-form mean fidelity of ``scheme`` for the true direction ``n``.

    Local schemes measure the first qubit along ``a`` and the second along
    ``b``; ``locc_axes=(a, b)`` overrides the scheme's Pauli pair.
    """
    scheme = SchemeId.parse(scheme)
    v = n.as_array() if isinstance(n, Direction) else np.asarray(n, dtype=float)
    if scheme is SchemeId.PARALLEL:
        out = (18 + _cubic(v)) / 24
    elif scheme is SchemeId.ANTIPARALLEL:
        out = (6 + 2 * math.sqrt(3) + _cubic(v)) / 12
    else:
        a, b = LOCAL_AXES[scheme] if locc_axes is None else locc_axes
        a = a.as_array() if isinstance(a, Direction) else np.asarray(a, dtype=float)
        b = b.as_array() if isinstance(b, Direction) else np.asarray(b, dtype=float)
        if abs(a @ b) > 1e-12:
            raise ValueError("LOCC axes must be orthogonal")
        out = (2 + math.sqrt(2) * (v @ a) ** 2 + math.sqrt(2) * (v @ b) ** 2) / 4
    return float(out) if np.ndim(out) == 0 else out


def born_mean_fidelity(n, encoding, povm: Povm):
    """Mean fidelity sum_j p_j F(n, g_j) computed directly from the Born rule."""
    v = n.as_array() if isinstance(n, Direction) else np.asarray(n, dtype=float)
    vs = np.atleast_2d(v)
    p = povm.probabilities(encode_many(vs, encoding))
    out = np.sum(p * fidelity(vs[:, None, :], povm.guesses[None, :, :]), axis=1)
    return float(out[0]) if v.ndim == 1 else out


def check_pair(encoding, scheme):
    encoding, scheme = Encoding(encoding), SchemeId.parse(scheme)
    if scheme not in ALLOWED[encoding]:
        raise ValueError(f"{scheme.value} measurement is not evaluated on {encoding.value} spins")
    return encoding, scheme


class SamplerKind(str, enum.Enum):
    UNIFORM_SPHERE = "sphere"
    OCTAHEDRON = "octahedron"
    FIXED = "fixed"
    XZ_SWEEP = "sweep"


@dataclass(frozen=True)
class DirectionSampler:
    """Source of Alice's directions.

    ``directions`` is used by the ``fixed`` kind and ``thetas`` (radians,
    direction ``(sin t, 0, cos t)``) by the ``sweep`` kind.
    """

    kind: SamplerKind
    seed: int = 0
    directions: tuple[Direction, ...] = ()
    thetas: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        object.__setattr__(self, "directions", tuple(self.directions))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        if self.kind is SamplerKind.FIXED and not self.directions:
            raise ValueError("fixed sampler needs at least one direction")
        if self.kind is SamplerKind.XZ_SWEEP:
            if not self.thetas:
                raise ValueError("sweep sampler needs at least one angle")
            if not all(math.isfinite(t) for t in self.thetas):
                raise ValueError("sweep angles must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def sphere(cls, seed=0):
        return cls(SamplerKind.UNIFORM_SPHERE, seed)

    @classmethod
    def octahedron(cls, seed=0):
        return cls(SamplerKind.OCTAHEDRON, seed)

    @classmethod
    def fixed(cls, directions, seed=0):
        return cls(SamplerKind.FIXED, seed, directions=tuple(
            d if isinstance(d, Direction) else Direction.from_array(d) for d in directions))

    @classmethod
    def sweep(cls, thetas, seed=0):
        return cls(SamplerKind.XZ_SWEEP, seed, thetas=tuple(thetas))

    def cells(self) -> np.ndarray | None:
        """Finite support as an ``(k, 3)`` array, or None for the sphere."""
        if self.kind is SamplerKind.OCTAHEDRON:
            return OCTAHEDRON
        if self.kind is SamplerKind.FIXED:
            return np.array([d.as_array() for d in self.directions])
        if self.kind is SamplerKind.XZ_SWEEP:
            t = np.array(self.thetas)
            return np.stack([np.sin(t), np.zeros_like(t), np.cos(t)], axis=1)
        return None

    def draw(self, rng: np.random.Generator, m: int):
        """Draw ``m`` directions; returns ``(directions, cell_index)``.

        ``cell_index`` is None for the continuous sphere sampler.
        """
        cells = self.cells()
        if cells is None:
            z = rng.uniform(-1.0, 1.0, m)
            phi = rng.uniform(0.0, 2 * np.pi, m)
            r = np.sqrt(1.0 - z**2)
            return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1), None
        idx = rng.integers(0, len(cells), m)
        return cells[idx], idx


def sample_outcomes(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF outcome sampling: outcome j iff ``cdf[j-1] <= u < cdf[j]``."""
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs / probs.sum(axis=-1, keepdims=True), axis=-1)
    return np.sum(u[:, None] >= cdf[:, :-1], axis=1)


@dataclass(frozen=True)
class CellResult:
    direction: Direction
    mean_fidelity: float
    std_dev: float
    shots: int
    theta: float | None = None


@dataclass
class RunReport:
    scheme: SchemeId
    encoding: Encoding
    cells: list[CellResult]
    overall_mean: float
    overall_std: float
    overall_stderr: float
    shots: int
    seed: int
    engine: Engine = Engine.ANALYTIC
    counts: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "encoding": self.encoding.value,
            "engine": self.engine.value,
            "shots": self.shots,
            "seed": self.seed,
            "overall_mean": self.overall_mean,
            "overall_std": self.overall_std,
            "overall_stderr": self.overall_stderr,
            "cells": [
                {
                    "direction": [c.direction.x, c.direction.y, c.direction.z],
                    "theta": c.theta,
                    "mean_fidelity": c.mean_fidelity,
                    "std_dev": c.std_dev,
                    "shots": c.shots,
                }
                for c in self.cells
            ],
        }

    def csv_rows(self) -> list[dict]:
        rows = []
        for c in self.cells:
            rows.append({
                "scheme": self.scheme.value, "encoding": self.encoding.value, "cell": "direction",
                "direction_x": c.direction.x, "direction_y": c.direction.y, "direction_z": c.direction.z,
                "theta": c.theta, "mean_fidelity": c.mean_fidelity, "std_dev": c.std_dev,
                "shots": c.shots, "seed": self.seed,
            })
        rows.append({
            "scheme": self.scheme.value, "encoding": self.encoding.value, "cell": "average",
            "direction_x": None, "direction_y": None, "direction_z": None, "theta": None,
            "mean_fidelity": self.overall_mean, "std_dev": self.overall_std,
            "shots": self.shots, "seed": self.seed,
        })
        return rows


REPORT_COLUMNS = ("scheme", "encoding", "cell", "direction_x", "direction_y", "direction_z",
                  "theta", "mean_fidelity", "std_dev", "shots", "seed")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(v: str):
    if v == "":
        return None
    if v in ("True", "False"):
        return v == "True"
    for kind in (int, float):
        try:
            return kind(v)
        except ValueError:
            pass
    return v


def rows_to_csv(rows: Iterable[dict], columns: Sequence[str] = REPORT_COLUMNS) -> str:
    """CSV text with floats written via ``repr`` so they parse back exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    """Parse CSV written by :func:`rows_to_csv`.

    Empty cells become None; integers, floats and booleans are restored from
    their text, anything else stays a string.
    """
    return [{k: _parse(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]


def reports_to_json(reports: Sequence[RunReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"


def poisson_error_bars(counts, fidelities, repetitions: int = DEFAULT_ERROR_REPS, seed=0):
    """Spread of mean fidelities under Poisson resampling of the outcome counts.

    Parameters
    ----------
    counts : (k, 4) array
        Observed counts per cell and outcome.
    fidelities : (k, 4) array
        Fidelity credited to each cell/outcome pair.
    repetitions : int
        Number of resampled data sets (>= 2).
    seed : int or SeedSequence

    Returns
    -------
    cell_std : (k,) array
    overall_std : float
        Standard deviation of the pooled mean over all cells.
    """
    if repetitions < 2:
        raise ValueError("need at least two repetitions")
    counts = np.asarray(counts, dtype=float)
    fidelities = np.asarray(fidelities, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    # centre on a reference value so cells whose outcomes all score alike have exactly zero spread
    cell_ref = np.take_along_axis(fidelities, np.argmax(counts, axis=1)[:, None], axis=1)
    ref = float(np.mean(fidelities))
    cell_dev = fidelities - cell_ref
    dev = fidelities - ref
    cell_means = np.empty((repetitions, counts.shape[0]))
    overall = np.empty(repetitions)
    for r in range(repetitions):
        c = rng.poisson(counts)
        tot = c.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cell_means[r] = np.where(tot > 0, np.sum(c * cell_dev, axis=1) / np.where(tot > 0, tot, 1), np.nan)
        overall[r] = np.sum(c * dev) / max(tot.sum(), 1)
    with np.errstate(invalid="ignore"):
        valid = np.sum(~np.isnan(cell_means), axis=0)
        cell_std = np.where(valid >= 2, np.nanstd(np.where(valid >= 2, cell_means, 0.0), axis=0, ddof=1), np.nan)
    return cell_std, float(np.std(overall, ddof=1))


def _probability_source(encoding, scheme, engine):
    if engine is Engine.ANALYTIC:
        povm = analytic_povm(scheme)
        return lambda dirs: povm.probabilities(encode_many(dirs, encoding))
    sched = builtin_schedule(scheme)
    return lambda dirs: walk.run_batch(encode_many(dirs, encoding), sched)


def _run_chunk(sampler, prob_fn, child, m, cells):
    rng = np.random.Generator(np.random.PCG64(child))
    dirs, idx = sampler.draw(rng, m)
    if cells is not None:
        probs = prob_fn(cells)[idx]
    else:
        probs = prob_fn(dirs)
    outcomes = sample_outcomes(probs, rng.random(m))
    return dirs, idx, outcomes


def simulate(sampler: DirectionSampler, encoding, scheme, shots: int, engine="analytic-povm",
             error_reps: int = DEFAULT_ERROR_REPS, workers: int = 1) -> RunReport:
    """Run ``shots`` rounds of encode, measure, guess and score.

    Per-cell ``std_dev`` and ``overall_std`` come from :func:`poisson_error_bars`
    with ``error_reps`` repetitions; with ``error_reps < 2`` they fall back to
    the multinomial standard error of the mean.
    """
    encoding, scheme = check_pair(encoding, scheme)
    engine = Engine(engine)
    if int(shots) < 1:
        raise ValueError("shots must be positive")
    shots = int(shots)
    prob_fn = _probability_source(encoding, scheme, engine)
    cells = sampler.cells()
    n_chunks = -(-shots // CHUNK_SHOTS)
    children = np.random.SeedSequence(int(sampler.seed)).spawn(n_chunks)
    sizes = [min(CHUNK_SHOTS, shots - k * CHUNK_SHOTS) for k in range(n_chunks)]
    jobs = list(zip(children, sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda j: _run_chunk(sampler, prob_fn, j[0], j[1], cells), jobs))
    else:
        parts = [_run_chunk(sampler, prob_fn, c, m, cells) for c, m in jobs]

    outcomes = np.concatenate([p[2] for p in parts])
    if cells is not None:
        idx = np.concatenate([p[1] for p in parts])
        counts = np.zeros((len(cells), 4))
        np.add.at(counts, (idx, outcomes), 1)
        used = counts.sum(axis=1) > 0
        cell_dirs, counts = cells[used], counts[used]
        thetas = np.array(sampler.thetas)[used] if sampler.kind is SamplerKind.XZ_SWEEP else None
    else:
        cell_dirs = np.concatenate([p[0] for p in parts])
        counts = np.zeros((shots, 4))
        counts[np.arange(shots), outcomes] = 1
        thetas = None

    fids = fidelity(cell_dirs[:, None, :], GUESSES[scheme][None, :, :])
    tot = counts.sum(axis=1)
    cell_means = np.sum(counts * fids, axis=1) / tot
    overall = float(np.sum(counts * fids) / shots)
    per_shot_var = float(np.sum(counts * (fids - overall) ** 2) / max(shots - 1, 1))
    stderr = math.sqrt(per_shot_var / shots)

    if error_reps >= 2:
        boot = np.random.SeedSequence(int(sampler.seed), spawn_key=(BOOTSTRAP_KEY,))
        cell_std, overall_std = poisson_error_bars(counts, fids, error_reps, boot)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            var = np.sum(counts * (fids - cell_means[:, None]) ** 2, axis=1) / np.maximum(tot - 1, 1)
        cell_std = np.sqrt(var / tot)
        overall_std = stderr

    results = [
        CellResult(Direction.from_array(d), float(m), float(s), int(n),
                   None if thetas is None else float(thetas[k]))
        for k, (d, m, s, n) in enumerate(zip(cell_dirs, cell_means, cell_std, tot))
    ]
    return RunReport(scheme, encoding, results, overall, float(overall_std), stderr, shots,
                     int(sampler.seed), engine, counts)


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit sub-seed for a labelled sub-run."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def direction_table(directions, pairs, shots_per_direction: int, seed: int = 0,
                    engine="analytic-povm", error_reps: int = DEFAULT_ERROR_REPS) -> list[RunReport]:
    """One report per (encoding, scheme) pair, each direction run separately.

    The overall mean is the plain average of the per-direction means and its
    error bar combines the per-direction bars in quadrature.
    """
    directions = [d if isinstance(d, Direction) else Direction.from_array(d) for d in directions]
    reports = []
    for i, (encoding, scheme) in enumerate(pairs):
        encoding, scheme = check_pair(encoding, scheme)
        cells, counts = [], []
        for k, d in enumerate(directions):
            r = simulate(DirectionSampler.fixed([d], derive_seed(seed, i, k)), encoding, scheme,
                         shots_per_direction, engine, error_reps)
            cells.append(r.cells[0])
            counts.append(r.counts[0])
        means = np.array([c.mean_fidelity for c in cells])
        stds = np.array([c.std_dev for c in cells])
        n = len(cells)
        reports.append(RunReport(
            scheme, encoding, cells, float(means.mean()), float(np.sqrt(np.sum(stds**2)) / n),
            float(np.sqrt(np.sum(stds**2)) / n), shots_per_direction * n, seed, Engine(engine),
            np.array(counts)))
    return reports


TABLE2_PAIRS = (
    (Encoding.PARALLEL, SchemeId.PARALLEL),
    (Encoding.ANTIPARALLEL, SchemeId.ANTIPARALLEL),
    (Encoding.PARALLEL, SchemeId.XY),
    (Encoding.PARALLEL, SchemeId.ZX),
    (Encoding.PARALLEL, SchemeId.ZY),
)


@dataclass(frozen=True)
class SweepRow:
    encoding: Encoding
    scheme: SchemeId
    theta: float
    simulated: float
    std_dev: float
    analytic: float
    pair_simulated: float
    pair_std_dev: float
    pair_analytic: float
    shots: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme.value, "encoding": self.encoding.value, "theta": self.theta,
            "simulated": self.simulated, "std_dev": self.std_dev, "analytic": self.analytic,
            "pair_simulated": self.pair_simulated, "pair_std_dev": self.pair_std_dev,
            "pair_analytic": self.pair_analytic, "shots": self.shots, "seed": self.seed,
        }


SWEEP_COLUMNS = ("scheme", "encoding", "theta", "simulated", "std_dev", "analytic",
                 "pair_simulated", "pair_std_dev", "pair_analytic", "shots", "seed")


def theta_sweep(thetas, pairs=TABLE2_PAIRS[:2], shots: int = 50000, seed: int = 0,
                engine="analytic-povm", error_reps: int = DEFAULT_ERROR_REPS) -> list[SweepRow]:
    """Fidelity along ``(sin t, 0, cos t)`` with the ``(t, t + pi)`` average.

    Each distinct angle (modulo 2 pi, rounded to 1e-12) is simulated once per
    pair, so grids containing both ``t`` and ``t + pi`` reuse the same run.
    """
    thetas = [float(t) for t in thetas]
    if not all(math.isfinite(t) for t in thetas):
        raise ValueError("angles must be finite")

    def key(t):
        a = round(t % (2 * math.pi), 12)
        return 0.0 if a >= round(2 * math.pi, 12) else a

    rows = []
    for i, (encoding, scheme) in enumerate(pairs):
        encoding, scheme = check_pair(encoding, scheme)
        angles = sorted({key(t) for t in thetas} | {key(t + math.pi) for t in thetas})
        sims = {}
        for k, a in enumerate(angles):
            r = simulate(DirectionSampler.sweep([a], derive_seed(seed, i, k)), encoding, scheme,
                         shots, engine, error_reps)
            sims[a] = r.cells[0]
        for t in thetas:
            c0, c1 = sims[key(t)], sims[key(t + math.pi)]
            n0 = np.array([math.sin(t), 0.0, math.cos(t)])
            f0 = analytic_mean_fidelity(n0, scheme)
            f1 = analytic_mean_fidelity(-n0, scheme)
            rows.append(SweepRow(
                encoding, scheme, t, c0.mean_fidelity, c0.std_dev, f0,
                (c0.mean_fidelity + c1.mean_fidelity) / 2, math.hypot(c0.std_dev, c1.std_dev) / 2,
                (f0 + f1) / 2, shots, seed))
    return rows

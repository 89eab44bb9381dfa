"""Five-step coin schedules for the five measurement schemes, and their file format."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bases import SchemeId
from .walk import Coin, CoinSchedule, Detector
from .states import PlateKind, WavePlate

SCHEDULE_FORMAT = "orienteering-coin-schedule"
SCHEDULE_VERSION = 1

_SQ2 = np.sqrt(2.0)
_SQ3 = np.sqrt(3.0)
_SQ6 = np.sqrt(6.0)

ETA0 = (_SQ6 - _SQ2) / 4
ETA1 = (_SQ6 + _SQ2) / 4

# fast-axis angle of the half-wave plate realizing [[-sqrt2, 1], [1, sqrt2]]/sqrt3
_H7_ANGLE = 0.5 * np.arctan2(1 / _SQ3, -_SQ2 / _SQ3)


def _hwp(angle_rad):
    return WavePlate(PlateKind.HWP, angle_rad)


def _qwp(angle_rad):
    return WavePlate(PlateKind.QWP, angle_rad)


def _coin(matrix, *plates):
    return Coin(np.array(matrix, dtype=complex), plates)


SIGMA_X = _coin([[0, 1], [1, 0]], _hwp(np.pi / 4))
SIGMA_Z = _coin([[1, 0], [0, -1]], _hwp(0.0))
HADAMARD = _coin(np.array([[1, 1], [1, -1]]) / _SQ2, _hwp(np.pi / 8))
FLIPPED_HADAMARD = _coin(np.array([[-1, 1], [1, 1]]) / _SQ2, _hwp(3 * np.pi / 8))
SQRT3_MIX = _coin(np.array([[1, _SQ3], [_SQ3, -1]]) / 2, _hwp(np.pi / 6))
SQRT2_MIX = _coin(np.array([[-_SQ2, 1], [1, _SQ2]]) / _SQ3, _hwp(_H7_ANGLE))
ETA_MIX = _coin([[ETA0, ETA1], [ETA1, -ETA0]], _hwp(5 * np.pi / 24))
QUARTER_45 = _coin((1 + 1j) / 2 * np.array([[1, -1j], [-1j, 1]]), _qwp(np.pi / 4))
# Q2 H8 Q1 triple; the last plate in the list is passed first
TRIPLE = _coin((1 - 1j) / 2 * np.array([[1, 1j], [-1, 1j]]), _qwp(0.0), _hwp(np.pi / 4), _qwp(np.pi / 4))


def _steps(scheme: SchemeId):
    if scheme is SchemeId.PARALLEL:
        return (
            {},
            {2: SIGMA_X, 0: FLIPPED_HADAMARD, -2: SIGMA_X},
            {1: SQRT3_MIX, -1: HADAMARD},
            {0: SQRT2_MIX, -2: SIGMA_X},
            {-1: TRIPLE},
        )
    if scheme is SchemeId.ANTIPARALLEL:
        return (
            {},
            {2: SIGMA_X, 0: ETA_MIX, -2: SIGMA_X},
            {1: SIGMA_Z, -1: FLIPPED_HADAMARD},
            {0: SQRT2_MIX, -2: SIGMA_X},
            {-1: TRIPLE},
        )
    if scheme is SchemeId.XY:
        return (
            {1: QUARTER_45, -1: QUARTER_45},
            {2: SIGMA_X, 0: SIGMA_Z, -2: SIGMA_X},
            {1: HADAMARD, -1: HADAMARD},
            {0: SIGMA_Z, -2: SIGMA_X},
            {},
        )
    if scheme is SchemeId.ZX:
        return (
            {},
            {2: SIGMA_X, 0: SIGMA_X, -2: SIGMA_X},
            {1: HADAMARD, -1: SIGMA_X},
            {0: SIGMA_X, -2: SIGMA_X},
            {-1: HADAMARD},
        )
    if scheme is SchemeId.ZY:
        return (
            {},
            {2: SIGMA_X, 0: SIGMA_X, -2: SIGMA_X},
            {1: QUARTER_45, -1: SIGMA_X},
            {0: SIGMA_X, -2: SIGMA_X},
            {-1: QUARTER_45},
        )
    raise ValueError(f"no schedule for {scheme!r}")


def _detectors(scheme: SchemeId, early: bool):
    # outcome positions after step 5; antiparallel swaps E3 and E4
    e3, e4 = (-2, 0) if scheme is SchemeId.ANTIPARALLEL else (0, -2)
    if early:
        first = [Detector(2, 3, 1), Detector(1, 4, 2)]
    else:
        first = [Detector(4, 5, 1), Detector(2, 5, 2)]
    return tuple(first + [Detector(e3, 5, 3), Detector(e4, 5, 4)])


def builtin_schedule(scheme, early_detectors: bool = True) -> CoinSchedule:
    """Coin schedule realizing ``scheme`` with a five-step walk.

    With ``early_detectors`` E1 and E2 sit at positions 2 and 1 after steps 3
    and 4; otherwise every detector reads out after step 5.
    """
    scheme = SchemeId.parse(scheme)
    return CoinSchedule(_steps(scheme), _detectors(scheme, early_detectors), scheme)


# -- file format ---------------------------------------------------------------


def _complex_to_pairs(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _pairs_to_complex(rows):
    a = np.array(rows, dtype=float)
    if a.shape != (2, 2, 2):
        raise ValueError("coin matrix must be 2x2 of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def schedule_to_dict(sched: CoinSchedule, include_matrix: bool = False) -> dict:
    """Serializable form; coins with a plate table are written as plates only
    unless ``include_matrix`` is set."""
    steps = []
    for coins in sched.steps:
        entries = []
        for x in sorted(coins, reverse=True):
            c = coins[x]
            spec = {}
            if c.plates:
                spec["plates"] = [{"kind": p.kind.value, "angle_deg": p.degrees} for p in c.plates]
            if include_matrix or not c.plates:
                spec["matrix"] = _complex_to_pairs(c.matrix)
            entries.append({"position": x, "coin": spec})
        steps.append(entries)
    return {
        "format": SCHEDULE_FORMAT,
        "version": SCHEDULE_VERSION,
        "label": None if sched.label is None else sched.label.value,
        "steps": steps,
        "detectors": [
            {"position": d.position, "step": d.step, "outcome": d.outcome, "polarization": d.polarization}
            for d in sched.detectors
        ],
    }


def schedule_from_dict(d: dict, atol: float = 1e-10) -> CoinSchedule:
    if d.get("format") != SCHEDULE_FORMAT:
        raise ValueError(f"not a coin schedule (format={d.get('format')!r})")
    if d.get("version") != SCHEDULE_VERSION:
        raise ValueError(f"unsupported schedule version {d.get('version')!r}")
    steps = []
    for entries in d["steps"]:
        coins = {}
        for e in entries:
            spec = e["coin"]
            unknown = set(spec) - {"plates", "matrix"}
            if unknown:
                raise ValueError(f"unknown coin keys {sorted(unknown)}")
            plates = None
            if "plates" in spec:
                plates = tuple(WavePlate.hwp(p["angle_deg"]) if p["kind"] == "HWP" else
                               WavePlate.qwp(p["angle_deg"]) if p["kind"] == "QWP" else
                               _bad_plate(p) for p in spec["plates"])
            matrix = _pairs_to_complex(spec["matrix"]) if "matrix" in spec else None
            coin = Coin(matrix, plates)
            if coin.plate_deviation() > atol:
                raise ValueError(f"coin at position {e['position']}: matrix and plate table disagree")
            position = int(e["position"])
            if position in coins:
                raise ValueError(f"two coins at position {position} in one step")
            coins[position] = coin
        steps.append(coins)
    detectors = tuple(
        Detector(int(x["position"]), int(x["step"]), int(x["outcome"]), x.get("polarization", "both"))
        for x in d["detectors"]
    )
    return CoinSchedule(tuple(steps), detectors, d.get("label"))


def _bad_plate(p):
    raise ValueError(f"unknown plate kind {p.get('kind')!r}")


def save_schedule(sched: CoinSchedule, path, include_matrix: bool = False) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(sched, include_matrix), indent=2) + "\n")


def load_schedule(path) -> CoinSchedule:
    return schedule_from_dict(json.loads(Path(path).read_text()))

"""Command-line front end: ``verify``, ``orienteer`` and ``tomography``.

Exit status: 0 on success, 1 when a check fails, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import protocol, tomography
from .bases import SchemeId, analytic_povm
from .protocol import (DEFAULT_ERROR_REPS, OCTAHEDRON, SWEEP_COLUMNS, TABLE2_PAIRS, DirectionSampler,
                       analytic_mean_fidelity, derive_seed, direction_table, rows_to_csv, simulate,
                       theta_sweep)
from .schedules import builtin_schedule, load_schedule, save_schedule
from .states import Direction, Encoding
from .walk import LEAKAGE_TOL, detector_elements

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2
VERIFY_TOL = 1e-9

TABLE2_SHOTS = 50000
FIG2_POINTS = 24
TABLES2_SHOTS = 100000

ORIENTEER_KEYS = {"scheme", "encoding", "shots", "seed", "sampler", "directions", "thetas",
                  "theta_points", "engine", "error_reps", "workers", "format", "out"}
TOMOGRAPHY_KEYS = {"scheme", "shots", "seed", "exact", "noise_sigma_deg", "noise_seed", "max_iters",
                   "tol", "error_reps", "format", "out", "counts"}

SCHEME_CHOICES = [s.value for s in SchemeId]


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="output directory (default: current directory)")
    p.add_argument("--format", choices=["csv", "json"], default=None, help="output format (default csv)")
    p.add_argument("--config", default=None, help="JSON file with option values; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orienteering", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="compare walk-realized measurements with the ideal bases")
    v.add_argument("scheme", nargs="?", default="all", choices=SCHEME_CHOICES + ["all"])
    v.add_argument("--schedule", help="coin schedule file to verify instead of the built-in one")
    v.add_argument("--export", metavar="DIR", help="write the built-in schedules as JSON files to DIR")

    o = sub.add_parser("orienteer", help="simulate the direction-transfer protocol")
    _common(o)
    o.add_argument("--preset", choices=["table2", "fig2"])
    o.add_argument("--scheme", choices=SCHEME_CHOICES)
    o.add_argument("--encoding", choices=[e.value for e in Encoding])
    o.add_argument("--sampler", choices=[k.value for k in protocol.SamplerKind])
    o.add_argument("--direction", action="append", dest="directions", metavar="X,Y,Z",
                   help="direction for the fixed sampler (repeatable)")
    o.add_argument("--theta", action="append", dest="thetas", type=float, metavar="DEG",
                   help="polar angle in degrees for the sweep sampler (repeatable)")
    o.add_argument("--theta-points", type=int, help="uniform sweep grid over [0, 360) degrees")
    o.add_argument("--shots", type=int)
    o.add_argument("--engine", choices=[e.value for e in protocol.Engine])
    o.add_argument("--error-reps", type=int, help="Poisson resamples for error bars")
    o.add_argument("--workers", type=int)

    t = sub.add_parser("tomography", help="measurement tomography of the walk-realized measurements")
    _common(t)
    t.add_argument("--preset", choices=["tableS2"])
    t.add_argument("--scheme", choices=SCHEME_CHOICES + ["all"])
    t.add_argument("--shots", type=int, help="shots per probe state")
    t.add_argument("--exact", action="store_true", default=None, help="use exact probabilities")
    t.add_argument("--noise-sigma-deg", type=float, help="Gaussian wave-plate angle jitter in degrees")
    t.add_argument("--noise-seed", type=int)
    t.add_argument("--counts", help="ingest a counts CSV instead of simulating (needs a single --scheme)")
    t.add_argument("--export-counts", action="store_true", help="also write the counts tables")
    t.add_argument("--max-iters", type=int)
    t.add_argument("--tol", type=float)
    t.add_argument("--error-reps", type=int, help="Poisson resamples for fidelity error bars")
    t.add_argument("--min-fidelity", type=float, help="exit 1 if any element fidelity falls below this")
    return parser


def _resolve(args, allowed: set, defaults: dict) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(cfg) - allowed
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(defaults)
    out.update(cfg)
    for k in allowed:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _write(out_dir, name: str, text: str) -> Path:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / name
    path.write_text(text)
    return path


# -- verify -------------------------------------------------------------------


def cmd_verify(args) -> int:
    if args.export:
        for s in SchemeId:
            save_schedule(builtin_schedule(s), Path(args.export) / f"{s.value}.json")
    if args.schedule:
        try:
            sched = load_schedule(args.schedule)
        except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
            print(f"error: cannot load schedule {args.schedule}: {e}", file=sys.stderr)
            return EXIT_USAGE
        if sched.label is None:
            print("error: schedule file has no scheme label", file=sys.stderr)
            return EXIT_USAGE
        targets = [(sched.label, sched)]
    else:
        schemes = list(SchemeId) if args.scheme == "all" else [SchemeId.parse(args.scheme)]
        targets = [(s, builtin_schedule(s)) for s in schemes]

    status = EXIT_OK
    for scheme, sched in targets:
        elements, leak = detector_elements(sched)
        dev = float(np.max(np.abs(elements - analytic_povm(scheme).elements)))
        ok = dev <= VERIFY_TOL and leak <= LEAKAGE_TOL
        extra = f" undetected={leak:.3e}" if leak > LEAKAGE_TOL else ""
        print(f"{'PASS' if ok else 'FAIL'} {scheme.value} max_deviation={dev:.3e}{extra}")
        if not ok:
            status = EXIT_CHECK_FAILED
    return status


# -- orienteer ----------------------------------------------------------------


def _parse_direction(text) -> Direction:
    try:
        parts = [float(v) for v in (text.split(",") if isinstance(text, str) else text)]
        if len(parts) != 3:
            raise ValueError
        return Direction.normalized(*parts)
    except (ValueError, TypeError):
        raise UsageError(f"bad direction {text!r}; expected X,Y,Z") from None


def _default_encoding(scheme: SchemeId) -> Encoding:
    return Encoding.ANTIPARALLEL if scheme is SchemeId.ANTIPARALLEL else Encoding.PARALLEL


def _table2_rows(reports):
    rows = []
    for rep in reports:
        analytic = [analytic_mean_fidelity(c.direction, rep.scheme) for c in rep.cells]
        for r, a in zip(rep.csv_rows(), analytic + [float(np.mean(analytic))]):
            r["analytic"] = a
            rows.append(r)
    return rows


TABLE2_COLUMNS = protocol.REPORT_COLUMNS[:-2] + ("analytic", "shots", "seed")


def cmd_orienteer(args) -> int:
    opts = _resolve(args, ORIENTEER_KEYS, {
        "seed": 0, "out": ".", "format": "csv", "shots": TABLE2_SHOTS, "engine": "analytic-povm",
        "error_reps": DEFAULT_ERROR_REPS, "workers": 1, "sampler": "octahedron",
    })
    seed, fmt = int(opts["seed"]), opts["format"]
    if fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if opts["shots"] < 1:
        raise UsageError("shots must be positive")

    if args.preset == "table2":
        reports = direction_table(OCTAHEDRON, TABLE2_PAIRS, TABLE2_SHOTS, seed, opts["engine"], DEFAULT_ERROR_REPS)
        rows = _table2_rows(reports)
        for r in rows:
            if r["cell"] == "average":
                print(f"{r['scheme']:>12} average {r['mean_fidelity']:.4f} +- {r['std_dev']:.4f}"
                      f" (analytic {r['analytic']:.4f})")
        text = rows_to_csv(rows, TABLE2_COLUMNS) if fmt == "csv" else protocol.reports_to_json(reports)
        path = _write(opts["out"], f"table2.{fmt}", text)
        print(f"wrote {path}")
        return EXIT_OK

    if args.preset == "fig2":
        grid = [2 * math.pi * k / FIG2_POINTS for k in range(FIG2_POINTS)]
        rows = theta_sweep(grid, TABLE2_PAIRS, TABLE2_SHOTS, seed, opts["engine"], DEFAULT_ERROR_REPS)
        dicts = [r.as_dict() for r in rows]
        text = rows_to_csv(dicts, SWEEP_COLUMNS) if fmt == "csv" else json.dumps(dicts, indent=2) + "\n"
        path = _write(opts["out"], f"fig2.{fmt}", text)
        print(f"wrote {path}")
        return EXIT_OK

    if opts.get("scheme") is None:
        raise UsageError("--scheme is required without a preset")
    scheme = SchemeId.parse(opts["scheme"])
    encoding = Encoding(opts.get("encoding") or _default_encoding(scheme))
    kind = protocol.SamplerKind(opts["sampler"])
    if kind is protocol.SamplerKind.FIXED:
        dirs = opts.get("directions") or []
        if not dirs:
            raise UsageError("fixed sampler needs --direction")
        sampler = DirectionSampler.fixed([_parse_direction(d) for d in dirs], seed)
    elif kind is protocol.SamplerKind.XZ_SWEEP:
        if opts.get("thetas"):
            thetas = [math.radians(t) for t in opts["thetas"]]
        elif opts.get("theta_points"):
            n = int(opts["theta_points"])
            thetas = [2 * math.pi * k / n for k in range(n)]
        else:
            raise UsageError("sweep sampler needs --theta or --theta-points")
        sampler = DirectionSampler.sweep(thetas, seed)
    else:
        sampler = DirectionSampler(kind, seed)
    try:
        report = simulate(sampler, encoding, scheme, int(opts["shots"]), opts["engine"],
                          int(opts["error_reps"]), int(opts["workers"]))
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(f"{scheme.value}/{encoding.value}: mean fidelity {report.overall_mean:.4f} +- {report.overall_std:.4f}"
          f" over {report.shots} shots")
    text = rows_to_csv(report.csv_rows()) if fmt == "csv" else protocol.reports_to_json([report])
    path = _write(opts["out"], f"orienteer.{fmt}", text)
    print(f"wrote {path}")
    return EXIT_OK


# -- tomography ---------------------------------------------------------------

TOMOGRAPHY_COLUMNS = ("scheme", "E1", "E2", "E3", "E4", "overall", "E1_std", "E2_std", "E3_std", "E4_std",
                      "overall_std", "iterations", "converged", "log_likelihood", "shots", "seed")


def cmd_tomography(args) -> int:
    preset = args.preset == "tableS2"
    opts = _resolve(args, TOMOGRAPHY_KEYS, {
        "seed": 0, "out": ".", "format": "csv", "shots": TABLES2_SHOTS, "exact": False,
        "noise_sigma_deg": 0.0, "noise_seed": 0, "max_iters": tomography.DEFAULT_MAX_ITERS,
        "tol": tomography.DEFAULT_TOL, "error_reps": DEFAULT_ERROR_REPS if preset else 0, "scheme": "all",
    })
    if preset:
        opts.update(scheme="all", shots=TABLES2_SHOTS, exact=False, noise_sigma_deg=0.0)
    seed, fmt = int(opts["seed"]), opts["format"]
    if fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if int(opts["shots"]) < 1:
        raise UsageError("shots must be positive")
    schemes = list(SchemeId) if opts["scheme"] == "all" else [SchemeId.parse(opts["scheme"])]
    probes = tomography.ProbeSet(int(opts["shots"]))

    ingested = None
    if opts.get("counts"):
        if len(schemes) != 1:
            raise UsageError("--counts needs a single --scheme")
        try:
            ingested = tomography.counts_from_csv(Path(opts["counts"]).read_text(), probes)
        except OSError as e:
            raise UsageError(f"cannot read counts file: {e}") from None
        except tomography.CountsFormatError as e:
            raise UsageError(f"invalid counts file: {e}") from None

    try:
        noise = tomography.NoiseModel(math.radians(float(opts["noise_sigma_deg"])), int(opts["noise_seed"]))
    except ValueError as e:
        raise UsageError(str(e)) from None

    rows, results = [], []
    status = EXIT_OK
    for i, scheme in enumerate(schemes):
        reference = analytic_povm(scheme)
        if ingested is not None:
            counts = ingested
        else:
            realized = tomography.realized_elements(scheme, noise)
            counts = tomography.collect_statistics(realized, probes, derive_seed(seed, i), bool(opts["exact"]))
        if args.export_counts and ingested is None:
            _write(opts["out"], f"counts_{scheme.value}.csv", tomography.counts_to_csv(counts, probes))
        res = tomography.reconstruct_ml(counts, probes, int(opts["max_iters"]), float(opts["tol"]), reference)
        std = [None] * 4
        overall_std = None
        if int(opts["error_reps"]) >= 2:
            s, overall_std = tomography.tomography_error_bars(
                counts, probes, reference, int(opts["error_reps"]), derive_seed(seed, i, 1),
                int(opts["max_iters"]), float(opts["tol"]), initial=res.reconstructed.elements)
            std = [float(v) for v in s]
        row = {"scheme": scheme.value, "overall": res.overall_fidelity, "overall_std": overall_std,
               "iterations": res.iterations, "converged": res.converged,
               "log_likelihood": res.log_likelihood, "shots": "exact" if opts["exact"] else probes.shots_per_state,
               "seed": seed}
        for j in range(4):
            row[f"E{j + 1}"] = float(res.fidelities[j])
            row[f"E{j + 1}_std"] = std[j]
        rows.append(row)
        results.append({"scheme": scheme.value, **res.to_dict(),
                        "fidelity_std": None if std[0] is None else std, "overall_std": overall_std})
        print(f"{scheme.value:>12} " + " ".join(f"{f:.4f}" for f in res.fidelities)
              + f" overall {res.overall_fidelity:.4f} ({res.iterations} iterations)")
        if args.min_fidelity is not None and np.min(res.fidelities) < args.min_fidelity:
            status = EXIT_CHECK_FAILED

    text = rows_to_csv(rows, TOMOGRAPHY_COLUMNS) if fmt == "csv" else json.dumps(results, indent=2) + "\n"
    path = _write(opts["out"], f"tomography.{fmt}", text)
    print(f"wrote {path}")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"verify": cmd_verify, "orienteer": cmd_orienteer, "tomography": cmd_tomography}[args.command]
    try:
        return handler(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

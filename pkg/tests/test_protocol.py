import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orienteering.bases import SchemeId, analytic_povm
from orienteering.protocol import (ALLOWED, ANTIPARALLEL_AVERAGE, LOCC_AVERAGE, OCTAHEDRON, PARALLEL_AVERAGE,
                                   DirectionSampler, analytic_mean_fidelity, born_mean_fidelity, csv_to_rows,
                                   fidelity, poisson_error_bars, rows_to_csv, sample_outcomes, simulate,
                                   theta_sweep)
from orienteering.states import Direction, Encoding, encode_many

S3 = math.sqrt(3)
PAIRS = [(e, s) for e, schemes in ALLOWED.items() for s in schemes]
unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3).map(
    lambda v: np.array(v) / np.linalg.norm(v))


def test_fidelity_examples():
    z = Direction(0, 0, 1)
    assert fidelity(z, z) == 1.0
    assert fidelity(z, -z) == 0.0
    assert fidelity(z, Direction(1, 0, 0)) == 0.5
    assert np.allclose(fidelity(OCTAHEDRON, OCTAHEDRON[0]), [1, 0, 0.5, 0.5, 0.5, 0.5])


def test_analytic_examples():
    z = Direction(0, 0, 1)
    assert analytic_mean_fidelity(z, "parallel") == pytest.approx(20 / 24, abs=1e-15)
    assert analytic_mean_fidelity(z, "antiparallel") == pytest.approx((8 + 2 * S3) / 12, abs=1e-15)
    assert analytic_mean_fidelity(z, "xy") == pytest.approx(0.5, abs=1e-15)
    assert analytic_mean_fidelity(z, "zx") == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-15)
    # -z is credited 2/3 by every SIC guess of the parallel scheme
    assert analytic_mean_fidelity(-z, "parallel") == pytest.approx(2 / 3, abs=1e-15)


def test_locc_axes_override():
    n = np.array([0.3, -0.5, np.sqrt(1 - 0.34)])
    assert analytic_mean_fidelity(n, "zx", ((1, 0, 0), (0, 1, 0))) == pytest.approx(analytic_mean_fidelity(n, "xy"))
    with pytest.raises(ValueError):
        analytic_mean_fidelity(n, "xy", ((1, 0, 0), (1, 0, 0)))


@settings(max_examples=200, deadline=None)
@given(unit_vectors, st.sampled_from(PAIRS))
def test_closed_form_matches_born_rule(n, pair):
    encoding, scheme = pair
    assert analytic_mean_fidelity(n, scheme) == pytest.approx(
        born_mean_fidelity(n, encoding, analytic_povm(scheme)), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(unit_vectors, st.sampled_from(PAIRS))
def test_born_probabilities_normalized(n, pair):
    encoding, scheme = pair
    p = analytic_povm(scheme).probabilities(encode_many(n[None], encoding))[0]
    assert np.all(p >= -1e-15)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(unit_vectors)
def test_inversion_symmetry(n):
    for scheme, const in (("parallel", PARALLEL_AVERAGE), ("antiparallel", ANTIPARALLEL_AVERAGE)):
        pair = (analytic_mean_fidelity(n, scheme) + analytic_mean_fidelity(-n, scheme)) / 2
        assert abs(pair - const) < 1e-12


def sphere_average(f, n=64):
    z, w = np.polynomial.legendre.leggauss(n)
    phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1 - zz**2)
    v = np.stack([r * np.cos(pp), r * np.sin(pp), zz], axis=-1)
    vals = np.vectorize(lambda i, j: f(v[i, j]))(*np.indices(zz.shape))
    return float(np.sum(w[:, None] * vals) / (2 * n) / 2)


@pytest.mark.parametrize("scheme, expected", [
    ("parallel", 0.75), ("antiparallel", (3 + S3) / 6),
    ("xy", (3 + math.sqrt(2)) / 6), ("zx", (3 + math.sqrt(2)) / 6), ("zy", (3 + math.sqrt(2)) / 6),
])
def test_sphere_quadrature(scheme, expected):
    assert abs(sphere_average(lambda v: analytic_mean_fidelity(v, scheme), 16) - expected) < 1e-3
    assert LOCC_AVERAGE == pytest.approx((3 + math.sqrt(2)) / 6)


def test_sample_outcomes_half_open():
    p = np.full((5, 4), 0.25)
    u = np.array([0.0, 0.25, 0.4999999, 0.5, 0.99999])
    assert sample_outcomes(p, u).tolist() == [0, 1, 1, 2, 3]
    # a zero-probability outcome is never chosen, even on its boundary
    assert sample_outcomes(np.array([[0.5, 0.0, 0.5, 0.0]] * 2), np.array([0.5, 0.999])).tolist() == [2, 2]


def test_sphere_sampler_moments():
    dirs, idx = DirectionSampler.sphere(3).draw(np.random.default_rng(3), 200000)
    assert idx is None
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1)
    assert np.all(np.abs(dirs.mean(axis=0)) < 0.01)
    assert np.all(np.abs((dirs**2).mean(axis=0) - 1 / 3) < 0.01)
    assert abs(np.mean(dirs[:, 0] * dirs[:, 2])) < 0.01


def test_sampler_validation():
    with pytest.raises(ValueError):
        DirectionSampler.fixed([])
    with pytest.raises(ValueError):
        DirectionSampler.sweep([0.0, float("nan")])


def test_pair_and_shots_rejected():
    s = DirectionSampler.octahedron(1)
    with pytest.raises(ValueError):
        simulate(s, "parallel", "antiparallel", 100)
    with pytest.raises(ValueError):
        simulate(s, "antiparallel", "xy", 100)
    with pytest.raises(ValueError):
        simulate(s, "parallel", "parallel", 0)


def test_report_invariants():
    r = simulate(DirectionSampler.octahedron(5), "parallel", "zy", 20000, error_reps=10)
    assert len(r.cells) == 6
    for c in r.cells:
        assert 0 <= c.mean_fidelity <= 1 and c.std_dev >= 0
    assert sum(c.shots for c in r.cells) == 20000
    assert r.counts.sum() == 20000


def test_deterministic_and_worker_invariant():
    s = DirectionSampler.octahedron(11)
    a = simulate(s, "antiparallel", "antiparallel", 30000, error_reps=5)
    b = simulate(s, "antiparallel", "antiparallel", 30000, error_reps=5, workers=4)
    assert a.to_dict() == b.to_dict()
    assert np.array_equal(a.counts, b.counts)
    c = simulate(DirectionSampler.octahedron(12), "antiparallel", "antiparallel", 30000, error_reps=5)
    assert c.overall_mean != a.overall_mean


def test_sphere_run_deterministic():
    a = simulate(DirectionSampler.sphere(2), "parallel", "parallel", 5000, error_reps=0)
    b = simulate(DirectionSampler.sphere(2), "parallel", "parallel", 5000, error_reps=0, workers=3)
    assert a.to_dict() == b.to_dict()


@pytest.mark.parametrize("encoding, scheme", PAIRS)
def test_walk_engine_agrees_with_analytic(encoding, scheme):
    a = simulate(DirectionSampler.octahedron(21), encoding, scheme, 50000, "analytic-povm", error_reps=0)
    w = simulate(DirectionSampler.octahedron(22), encoding, scheme, 50000, "walk", error_reps=0)
    assert abs(a.overall_mean - w.overall_mean) < 4 * math.hypot(a.overall_stderr, w.overall_stderr)


def test_poisson_degenerate_zero():
    counts = np.array([[5000.0, 0, 0, 0]])
    fids = np.array([[1.0, 1 / 3, 1 / 3, 1 / 3]])
    cell, overall = poisson_error_bars(counts, fids, 50, seed=1)
    assert cell[0] == 0.0 and overall == 0.0
    with pytest.raises(ValueError):
        poisson_error_bars(counts, fids, 1)


def test_poisson_scaling():
    p = np.array([0.75, 1 / 12, 1 / 12, 1 / 12])
    fids = np.array([[1.0, 1 / 3, 1 / 3, 1 / 3]])
    s1 = poisson_error_bars(25000 * p[None], fids, 2000, seed=1)[0][0]
    s2 = poisson_error_bars(50000 * p[None], fids, 2000, seed=2)[0][0]
    assert s2 / s1 == pytest.approx(1 / math.sqrt(2), rel=0.06)
    # and both track the multinomial standard error of the mean
    var = np.sum(p * fids[0] ** 2) - np.sum(p * fids[0]) ** 2
    assert s1 == pytest.approx(math.sqrt(var / 25000), rel=0.06)


def test_csv_round_trip():
    r = simulate(DirectionSampler.octahedron(4), "parallel", "xy", 10000, error_reps=5)
    rows = r.csv_rows()
    back = csv_to_rows(rows_to_csv(rows))
    assert back == rows


def test_theta_sweep_rows():
    rows = theta_sweep([0.0, math.pi / 2, math.pi], shots=2000, seed=1, error_reps=0)
    assert len(rows) == 6
    par = [r for r in rows if r.scheme is SchemeId.PARALLEL]
    assert par[0].analytic == pytest.approx(20 / 24)
    for r in rows:
        const = PARALLEL_AVERAGE if r.scheme is SchemeId.PARALLEL else ANTIPARALLEL_AVERAGE
        assert r.pair_analytic == pytest.approx(const, abs=1e-12)
    # theta and theta+pi share their runs, so the pair columns coincide
    assert par[0].pair_simulated == par[2].pair_simulated
    assert par[0].simulated == pytest.approx(par[2].pair_simulated * 2 - par[2].simulated)
    assert rows[0].encoding is Encoding.PARALLEL

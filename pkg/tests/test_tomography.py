import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orienteering.bases import Povm, SchemeId, analytic_povm
from orienteering.linalg import hermitian_power, kron, projector
from orienteering.schedules import builtin_schedule
from orienteering.states import pauli_eigenstate
from orienteering.tomography import (PAULI_LABELS, CountsFormatError, NoiseModel, ProbeSet, collect_statistics,
                                     counts_from_csv, counts_to_csv, log_likelihood, perturbed_schedule,
                                     povm_fidelity, realized_elements, reconstruct_ml, result_to_json)
from orienteering.walk import extract_povm

SCHEMES = list(SchemeId)
ENTANGLING = {SchemeId.PARALLEL, SchemeId.ANTIPARALLEL}


@pytest.fixture(scope="module")
def probes():
    return ProbeSet(100000)


def random_povm(seed, mix=0.5):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 4, 4)) + 1j * rng.normal(size=(4, 4, 4))
    a = a @ a.conj().transpose(0, 2, 1)
    s = hermitian_power(a.sum(axis=0), -0.5)
    pis = (1 - mix) * (s @ a @ s) + mix * np.eye(4) / 4
    return Povm(pis, np.tile([0.0, 0.0, 1.0], (4, 1)), "random", atol=1e-9)


def test_probe_set(probes):
    assert len(probes) == 36
    assert probes.labels[0] == "+x+x" and probes.labels[7] == "-x-x" and probes.labels[-1] == "-z-z"
    assert np.allclose(np.linalg.norm(probes.states, axis=1), 1)
    assert np.allclose(probes.states[probes.labels.index("+z+z")], [1, 0, 0, 0])
    expected = kron(pauli_eigenstate("+y"), pauli_eigenstate("-x"))
    assert np.allclose(probes.states[probes.labels.index("+y-x")], expected)
    with pytest.raises(ValueError):
        ProbeSet(0)


def test_parallel_row_for_00(probes):
    p = collect_statistics(analytic_povm("parallel"), probes, exact=True)
    # |<Psi_j|00>|^2 = 3/4 |<n_j|0>|^4, i.e. 3/4 then 3/4 * 1/9
    assert np.allclose(p[probes.labels.index("+z+z")], [3 / 4, 1 / 12, 1 / 12, 1 / 12], atol=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_statistics_rows(probes, scheme):
    povm = analytic_povm(scheme)
    exact = collect_statistics(povm, probes, exact=True)
    assert np.allclose(exact, povm.probabilities(probes.states), atol=1e-12)
    counts = collect_statistics(povm, probes, seed=4)
    assert counts.dtype.kind == "i" and np.all(counts >= 0)
    assert np.all(counts.sum(axis=1) == 100000)
    assert np.array_equal(counts, collect_statistics(povm, probes, seed=4))
    assert np.max(np.abs(counts / 100000 - exact)) < 0.01


def test_povm_fidelity_examples():
    p = projector(kron([1, 0], [1, 0]))
    assert povm_fidelity(p, p) == pytest.approx(1.0)
    assert povm_fidelity(p, 3 * p) == pytest.approx(1.0)
    assert povm_fidelity(p, projector(kron([1, 0], [0, 1]))) == pytest.approx(0.0, abs=1e-12)
    # <Psi_1 par|Psi_1 anti> = 1/4 by hand
    f = povm_fidelity(analytic_povm("parallel").elements[0], analytic_povm("antiparallel").elements[0])
    assert f == pytest.approx(1 / 16, abs=1e-8)
    with pytest.raises(ValueError):
        povm_fidelity(np.zeros((4, 4)), p)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_povm_fidelity_symmetric(seed, ra, rb):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, ra)) + 1j * rng.normal(size=(4, ra))
    b = rng.normal(size=(4, rb)) + 1j * rng.normal(size=(4, rb))
    a, b = a @ a.conj().T, b @ b.conj().T
    fab, fba = povm_fidelity(a, b), povm_fidelity(b, a)
    assert fab == pytest.approx(fba, abs=1e-7)
    assert 0 <= fab <= 1
    assert povm_fidelity(a, 2.5 * a) == pytest.approx(1.0, abs=1e-7)
    if not np.allclose(a / np.trace(a), b / np.trace(b), atol=1e-3):
        assert fab < 1 - 1e-9


@pytest.mark.parametrize("scheme", SCHEMES)
def test_ml_monotone_and_feasible(probes, scheme):
    counts = collect_statistics(analytic_povm(scheme), probes, seed=8)
    seen = []

    def check(it, pis):
        assert np.allclose(pis.sum(axis=0), np.eye(4), atol=1e-8)
        assert min(np.linalg.eigvalsh(p).min() for p in pis) >= -1e-8
        seen.append(it)

    res = reconstruct_ml(counts, probes, max_iters=400, reference=analytic_povm(scheme), keep_history=True,
                         callback=check)
    assert seen == list(range(1, res.iterations + 1))
    assert np.all(np.diff(res.history) >= -1e-9)
    assert len(res.history) == res.iterations + 1


@pytest.mark.parametrize("scheme", SCHEMES)
def test_exact_statistics_reconstruct(probes, scheme):
    p = collect_statistics(analytic_povm(scheme), probes, exact=True)
    res = reconstruct_ml(p, probes, reference=analytic_povm(scheme))
    assert res.overall_fidelity >= 0.9999
    assert res.converged


@pytest.mark.parametrize("scheme", SCHEMES)
def test_sampled_walk_povm_reconstructs(probes, scheme):
    counts = collect_statistics(extract_povm(builtin_schedule(scheme)), probes, seed=9)
    res = reconstruct_ml(counts, probes, reference=analytic_povm(scheme))
    assert np.all(res.fidelities >= 0.99)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_povm_round_trip(probes, seed):
    true = random_povm(seed)
    res = reconstruct_ml(collect_statistics(true, probes, exact=True), probes, tol=1e-14)
    err = np.linalg.norm(res.reconstructed.elements - true.elements, axis=(1, 2))
    assert np.max(err) < 1e-6


def test_initial_and_log_likelihood(probes):
    p = collect_statistics(analytic_povm("zx"), probes, exact=True)
    warm = reconstruct_ml(p, probes, initial=analytic_povm("zx").elements, max_iters=5)
    assert warm.iterations <= 2
    assert log_likelihood(p, p) == pytest.approx(np.sum(p[p > 0] * np.log(p[p > 0])))
    with pytest.raises(ValueError):
        reconstruct_ml(p, probes, initial=np.eye(4)[None])


@pytest.mark.parametrize("scheme", [s for s in SCHEMES if s not in ENTANGLING])
def test_fast_convergence_invariant(probes, scheme):
    """||Pi_j - Pi_j true||_F < 1e-5 within 2000 iterations on exact statistics."""
    p = collect_statistics(analytic_povm(scheme), probes, exact=True)
    res = reconstruct_ml(p, probes, max_iters=2000, tol=0.0)
    err = np.linalg.norm(res.reconstructed.elements - analytic_povm(scheme).elements, axis=(1, 2))
    assert np.max(err) < 1e-5


@pytest.mark.xfail(strict=True, reason="1e-5 within 2000 iterations is not reached for rank-one entangled targets")
@pytest.mark.parametrize("scheme", sorted(ENTANGLING, key=lambda s: s.value))
def test_fast_convergence_invariant_entangling(probes, scheme):
    p = collect_statistics(analytic_povm(scheme), probes, exact=True)
    res = reconstruct_ml(p, probes, max_iters=2000, tol=0.0)
    err = np.linalg.norm(res.reconstructed.elements - analytic_povm(scheme).elements, axis=(1, 2))
    assert np.max(err) < 1e-5


@pytest.mark.parametrize("scheme", sorted(ENTANGLING, key=lambda s: s.value))
def test_entangling_convergence_rate(probes, scheme):
    # the error falls like 1/t: halving it takes about twice the iterations
    p = collect_statistics(analytic_povm(scheme), probes, exact=True)
    errs = []
    for n in (500, 1000, 2000):
        res = reconstruct_ml(p, probes, max_iters=n, tol=0.0)
        errs.append(np.max(np.linalg.norm(res.reconstructed.elements - analytic_povm(scheme).elements,
                                          axis=(1, 2))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[0] == pytest.approx(0.5, abs=0.08)
    assert errs[2] / errs[1] == pytest.approx(0.5, abs=0.08)
    assert errs[2] < 5e-4


def test_perturbed_schedule_identity():
    base = builtin_schedule("parallel")
    assert perturbed_schedule("parallel", NoiseModel(0.0), base) is base
    same = perturbed_schedule("parallel", NoiseModel(0.0))
    assert same.detectors == base.detectors
    for s1, s2 in zip(same.steps, base.steps):
        assert s1.keys() == s2.keys()
        assert all(np.array_equal(s1[x].matrix, s2[x].matrix) and s1[x].plates == s2[x].plates for x in s1)
    with pytest.raises(ValueError):
        NoiseModel(-0.1)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_perturbed_schedule_band(scheme):
    noise = NoiseModel(np.radians(0.5), seed=1)
    sched = perturbed_schedule(scheme, noise)
    for coins in sched.steps:
        for c in coins.values():
            assert np.allclose(c.matrix.conj().T @ c.matrix, np.eye(2), atol=1e-14)
    assert sched.plate_deviation() < 1e-12
    ideal = analytic_povm(scheme).elements
    elems = realized_elements(scheme, noise)
    fids = [povm_fidelity(a, b) for a, b in zip(elems, ideal)]
    assert all(0.99 < f < 1.0 for f in fids)
    # the jitter is reproducible from its seed
    assert np.array_equal(elems, realized_elements(scheme, noise))


def test_counts_csv_round_trip(probes):
    counts = collect_statistics(analytic_povm("parallel"), probes, seed=1)
    text = counts_to_csv(counts, probes)
    assert text.splitlines()[0] == "probe,E1,E2,E3,E4"
    assert text.splitlines()[1].startswith("+x+x,")
    assert np.array_equal(counts_from_csv(text, probes), counts)


@pytest.mark.parametrize("edit", ["negative", "label", "short", "nan"])
def test_counts_csv_rejects(probes, edit):
    lines = counts_to_csv(collect_statistics(analytic_povm("xy"), probes, seed=1), probes).splitlines()
    if edit == "negative":
        lines[3] = lines[3].rsplit(",", 1)[0] + ",-5"
    elif edit == "label":
        lines[3] = "+q+x" + lines[3][4:]
    elif edit == "short":
        lines = lines[:-1]
    else:
        lines[3] = lines[3].rsplit(",", 1)[0] + ",nan"
    with pytest.raises(CountsFormatError):
        counts_from_csv("\n".join(lines), probes)


def test_result_json(probes):
    import json
    res = reconstruct_ml(collect_statistics(analytic_povm("zy"), probes, exact=True), probes,
                         reference=analytic_povm("zy"))
    d = json.loads(result_to_json(res, "zy"))
    back = Povm.from_dict(d["reconstructed"])
    assert np.allclose(back.elements, res.reconstructed.elements)
    assert "Uhlmann" in d["fidelity_definition"]
    assert PAULI_LABELS[0] == "+x"

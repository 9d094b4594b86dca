import math
from itertools import combinations

import numpy as np
import pytest

import oracles as O
from wcgalab import experiments as E
from wcgalab.analysis import PropertyProfile, h_shape, phi_budget
from wcgalab.dictionaries import build_haar, build_trig
from wcgalab.errors import DomainError, FitError, ResolutionError
from wcgalab.experiments import (SWEEP_COLUMNS, lebesgue_sweep, lower_bound_instance, lower_bound_run,
                                 random_sparse_target, scaling_fit, sigma_n_oracle, thread_count)
from wcgalab.orlicz import YoungFunction
from wcgalab.wcga import WcgaConfig

HILBERT = YoungFunction(2, 0)
P15 = YoungFunction(1.5, 0)


def hilbert_sigma_oracle(samples, width, max_level, n, N):
    """sigma_N by Parseval: ||f||^2 minus the N largest squared Haar coefficients."""
    h = width / n
    norm_sq = 0.5 * h * math.fsum(samples ** 2)  # ||g|| = ||g||_2 / sqrt 2 for Phi = t^2 / 2
    coeffs = []
    for level in range(max_level + 1):
        for offset in range(width * 2 ** level):
            shape = O.haar_shape(width, n, level, offset)
            inner = 0.5 * h * math.fsum(samples * shape)
            coeffs.append(inner * inner / (0.5 * h * math.fsum(shape ** 2)))
    top = sorted(coeffs, reverse=True)[:N]
    return math.sqrt(max(norm_sq - math.fsum(top), 0.0))


# -- sigma_N ----------------------------------------------------------------


def test_sigma_hilbert_matches_parseval():
    d = build_haar(HILBERT, 2, 2, 32)
    rng = np.random.default_rng(0)
    for _ in range(3):
        v = rng.standard_normal(32)
        f = d.grid_function(v)
        for N in (1, 2, 3):
            got = sigma_n_oracle(f, d, N, "exhaustive").error
            assert got == pytest.approx(hilbert_sigma_oracle(v, 2, 2, 32, N), rel=1e-8)


def test_threshold_within_twice_exhaustive_small_dictionary():
    d = build_haar(P15, 2, 2, 16)  # 14 atoms: every support of size <= 3 is searched
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = d.grid_function(rng.standard_normal(16))
        for N in (1, 2, 3):
            ex = sigma_n_oracle(f, d, N, "exhaustive")
            th = sigma_n_oracle(f, d, N, "threshold")
            assert ex.error <= th.error * (1 + 1e-9)
            assert th.error <= 2.0 * ex.error


def test_threshold_within_twice_exhaustive_large_dictionary():
    d = build_haar(P15, 1, 5, 64)  # 63 atoms
    rng = np.random.default_rng(2)
    for _ in range(3):
        f = d.grid_function(rng.standard_normal(64))
        for N in (1, 2):
            ex = sigma_n_oracle(f, d, N, "exhaustive")
            assert sigma_n_oracle(f, d, N, "threshold").error <= 2.0 * ex.error


def test_exhaustive_is_the_minimum_over_supports():
    d = build_haar(P15, 2, 1, 16)
    f = d.grid_function(np.random.default_rng(3).standard_normal(16))
    ex = sigma_n_oracle(f, d, 2, "exhaustive")
    for ids in combinations(range(d.size), 2):
        assert ex.error <= E._projection_error(f, d, ids, WcgaConfig(), ex.error + 1.0) * (1 + 1e-12)


def test_exact_sparse_is_recovered():
    d = build_haar(P15, 2, 2, 32)
    rng = np.random.default_rng(4)
    for N in (1, 2, 3):
        element, f = random_sparse_target(d, N, rng)
        norm = E.luxemburg_norm(f, P15)
        for method in ("threshold", "exhaustive", "beam"):
            res = sigma_n_oracle(f, d, N, method)
            assert res.error <= 1e-10 * norm
            assert set(res.support) == set(element.support)


@pytest.mark.parametrize("method", ["threshold", "beam", "exhaustive"])
def test_sigma_monotone_in_n(method):
    d = build_haar(YoungFunction(3, 1), 2, 1, 16)
    f = d.grid_function(np.random.default_rng(5).standard_normal(16))
    errors = [sigma_n_oracle(f, d, N, method).error for N in range(0, 5)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(errors, errors[1:]))


def test_sigma_zero_terms_and_errors():
    d = build_haar(P15, 2, 1, 16)
    f = d.grid_function(np.random.default_rng(6).standard_normal(16))
    assert sigma_n_oracle(f, d, 0).error == pytest.approx(E.luxemburg_norm(f, P15), rel=1e-15)
    for N, method in [(-1, "threshold"), (1.5, "threshold"), (d.size + 1, "threshold"), (1, "greedy")]:
        with pytest.raises(DomainError):
            sigma_n_oracle(f, d, N, method)


def test_exhaustive_downgrade_is_reported(monkeypatch):
    monkeypatch.setattr(E, "EXHAUSTIVE_LIMIT", 10)
    d = build_haar(P15, 2, 1, 16)
    f = d.grid_function(np.random.default_rng(7).standard_normal(16))
    res = sigma_n_oracle(f, d, 2, "exhaustive")
    assert res.method == "beam" and res.requested == "exhaustive"
    assert "exceeds" in res.note


def test_random_sparse_target():
    d = build_trig(P15, 8, 64)
    element, f = random_sparse_target(d, 5, np.random.default_rng(0), complex_valued=True)
    assert len(element.support) == 5 and np.iscomplexobj(f.samples)
    assert np.allclose(f.samples, element.render(d).samples)
    with pytest.raises(DomainError):
        random_sparse_target(d, d.size + 1, np.random.default_rng(0))


# -- sweep ------------------------------------------------------------------


def test_sweep_hilbert_exact_recovery():
    d = build_haar(HILBERT, 4, 3, 128)
    rng = np.random.default_rng(8)
    Ns = [1, 2, 4, 8]
    targets = [random_sparse_target(d, N, rng)[1] for N in Ns]
    rows = lebesgue_sweep(HILBERT, d, WcgaConfig(), targets, Ns, paired=True)
    assert [r["N"] for r in rows] == Ns
    for r in rows:
        assert tuple(r) == SWEEP_COLUMNS
        assert r["empirical_phi"] == r["N"] and r["flags"] == ""
        assert r["dict"] == "haar" and r["trunc"] == "W=4;J=3"


def test_sweep_soundness_and_budget():
    space = YoungFunction(1.5, 1)
    d = build_haar(space, 4, 3, 128)
    rng = np.random.default_rng(9)
    n = np.arange(1, 129)
    profile = PropertyProfile(space, 0.5, np.maximum(h_shape(space, "haar", n), 1.0) + 1e-12 * n, np.ones(128))
    targets = [random_sparse_target(d, 4, rng)[1] for _ in range(2)]
    rows = lebesgue_sweep(space, d, WcgaConfig(), targets, [2, 4], profile=profile)
    assert len(rows) == 4
    for r in rows:
        assert r["residual_at_phi"] <= 2 * r["sigma_N"] + 1e-9
        assert r["predicted_phi"] == phi_budget(profile, r["N"])
        assert r["empirical_phi"] <= r["predicted_phi"]


def test_sweep_flags_not_reached():
    d = build_haar(P15, 4, 3, 128)
    rng = np.random.default_rng(10)
    targets = [random_sparse_target(d, 8, rng)[1]]
    rows = lebesgue_sweep(P15, d, WcgaConfig(max_iterations=2), targets, [8])
    assert rows[0]["empirical_phi"] is None and rows[0]["residual_at_phi"] is None
    assert "not_reached" in rows[0]["flags"].split(";")


def test_sweep_threads_do_not_change_rows(monkeypatch):
    d = build_haar(P15, 4, 2, 64)
    rng = np.random.default_rng(11)
    targets = [random_sparse_target(d, 3, rng)[1] for _ in range(3)]
    monkeypatch.setenv("WCGALAB_THREADS", "1")
    one = lebesgue_sweep(P15, d, WcgaConfig(), targets, [1, 3])
    monkeypatch.setenv("WCGALAB_THREADS", "3")
    three, traces = lebesgue_sweep(P15, d, WcgaConfig(), targets, [1, 3], return_traces=True)
    assert one == three and len(traces) == 3


def test_sweep_errors():
    d = build_haar(P15, 2, 1, 16)
    f = d.grid_function(np.ones(16))
    with pytest.raises(DomainError):
        lebesgue_sweep(HILBERT, d, WcgaConfig(), [f], [1])
    with pytest.raises(DomainError):
        lebesgue_sweep(P15, d, WcgaConfig(), [f], [1, 2], paired=True)


def test_thread_count(monkeypatch):
    monkeypatch.setenv("WCGALAB_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("WCGALAB_THREADS", "zero")
    with pytest.raises(DomainError):
        thread_count()


# -- lower-bound construction -----------------------------------------------


def fundamental(space, t):
    return 1.0 / O.phi_inverse(1.0 / t, space.p, space.alpha, space.c)


def test_instance_alpha_zero_amplitude():
    inst = lower_bound_instance(P15, 3, 8, c1=0.7)
    assert inst.b == 0.7
    assert inst.metadata["width"] == 4


def test_instance_amplitude_formula():
    space = YoungFunction(1.5, 1)
    inst = lower_bound_instance(space, 4, 16, c1=0.3)
    assert inst.b == pytest.approx(0.3 * math.log(math.e + 16) ** 3, rel=1e-14)


def test_instance_pieces_and_values():
    space = YoungFunction(1.5, 1)
    N, M = 8, 16
    inst = lower_bound_instance(space, N, M)
    d = inst.dictionary
    assert set(inst.coarse_ids).isdisjoint(inst.fine_ids)
    f1 = d.synthesize(list(inst.coarse_ids), np.ones(N))
    f2 = d.synthesize(list(inst.fine_ids), np.full(M, inst.b))
    assert np.array_equal(inst.f.samples, f1.samples + f2.samples)
    r1 = E.luxemburg_norm(f1, space) / fundamental(space, N)
    r2 = E.luxemburg_norm(f2, space) * fundamental(space, 1.0 / M) / inst.b
    assert 0.5 <= r1 <= 2 and 0.5 <= r2 <= 2
    x = O.grid_points("interval", inst.metadata["width"], inst.metadata["grid_size"])
    a = np.abs(inst.f.samples)
    assert np.allclose(a[x < 1], inst.b / fundamental(space, 1.0 / M), rtol=1e-9)
    assert np.allclose(a[(x >= 1) & (x < N + 1)], 1.0 / fundamental(space, 1.0), rtol=1e-9)
    assert np.all(a[x >= N + 1] == 0)
    assert 0.5 <= inst.functional_ratio <= 2.0


def test_instance_determinism():
    space = YoungFunction(1.5, 1)
    a = lower_bound_instance(space, 5, 32)
    b = lower_bound_instance(space, 5, 32)
    assert a.c1 == b.c1 and a.f.samples.tobytes() == b.f.samples.tobytes()


def test_instance_errors():
    with pytest.raises(DomainError):
        lower_bound_instance(P15, 4, 12)
    with pytest.raises(DomainError):
        lower_bound_instance(P15, 0, 8)
    with pytest.raises(ResolutionError):
        lower_bound_instance(P15, 4, 16, grid_size=64)


def test_hilbert_balance_and_order_follow_inner_products():
    inst = lower_bound_instance(HILBERT, 4, 64)
    assert inst.c1_balanced == pytest.approx(1.0, abs=1e-9)
    for c1 in (0.95, 1.05):
        inst = lower_bound_instance(HILBERT, 4, 64, c1=c1)
        d = inst.dictionary
        # direct oracle: inner products with the normalized atoms
        inner = 0.5 * d.step * (d.render_many(list(inst.coarse_ids) + list(inst.fine_ids)).T @ inst.f.samples)
        coarse_first = np.max(np.abs(inner[:4])) > np.max(np.abs(inner[4:]))
        report = lower_bound_run(inst, WcgaConfig())
        assert report["iterations"] >= 4
        assert report["order_ok"] == coarse_first
        if not coarse_first:
            assert report["status"] == "calibration_failure"
            v = report["violation"]
            assert v["step"] == 0 and v["fine_max"] > v["coarse_max"]


@pytest.mark.parametrize("alpha", [0.0, 1.0, -1.0])
def test_lower_bound_order(alpha):
    inst = lower_bound_instance(YoungFunction(1.5, alpha), 4, 16)
    report = lower_bound_run(inst, WcgaConfig())
    assert report["order_ok"], report.get("violation")
    assert report["iterations"] is not None
    assert report["ratio_to_M"] == report["iterations"] / 16


def test_lower_bound_run_needs_tau_one():
    inst = lower_bound_instance(P15, 2, 4)
    with pytest.raises(DomainError):
        lower_bound_run(inst, WcgaConfig(tau=0.5))


# -- fits -------------------------------------------------------------------


def test_fit_exact_power():
    x = np.array([1.0, 2, 4, 8, 16, 32])
    rep = scaling_fit({"x": x, "y": 3 * x ** 2}, "x", "y")
    assert abs(rep.exponent - 2) <= 1e-9 and rep.constant == pytest.approx(3, rel=1e-9)
    assert rep.max_relative_residual <= 1e-12 and rep.rows == 6


def test_fit_power_log():
    x = np.array([2.0, 5, 13, 40, 100, 400, 1000])
    y = 2 * x ** 1.5 * np.log(math.e + x) ** 2
    rows = [{"x": a, "y": b} for a, b in zip(x, y)]
    free = scaling_fit(rows, "x", "y", model="power_log")
    assert free.exponent == pytest.approx(1.5, abs=1e-8) and free.log_exponent == pytest.approx(2, abs=1e-7)
    pinned = scaling_fit(rows, "x", "y", model="power_log", log_exponent=2.0)
    assert pinned.exponent == pytest.approx(1.5, abs=1e-10)


@pytest.mark.parametrize("table,kw", [
    ({"x": [1.0, 1, 1, 1, 1], "y": [1.0, 2, 3, 4, 5]}, {}),
    ({"x": [1.0, 2, 3, 4, 5], "y": [1.0, 0, 3, 4, 5]}, {}),
    ({"x": [1.0, 2, 3], "y": [1.0, 2, 3]}, {}),
    ({"x": [1.0, 2, 3, 4, 5], "y": [1.0, 2, 3, 4, 5]}, {"model": "exp"}),
    ({"x": [1.0, 2, 3, 4, 5]}, {}),
    ({"x": [1.0, 2, 1, 2, 1], "y": [1.0, 2, 1, 2, 1]}, {"model": "power_log"}),
])
def test_fit_errors(table, kw):
    with pytest.raises(FitError):
        scaling_fit(table, "x", "y", **kw)

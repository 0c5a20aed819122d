"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Criteria 3 to 6 run the shipped fixtures through the command line at one
thread; criterion 9 reruns every verify fixture at eight threads and compares
the report bytes.
"""

import json
import time

import numpy as np
import pytest

from conftest import linear_spec, random_linear_spec, record
from mlrd.cli import main
from mlrd.fixtures import fixture_path
from mlrd.hermite import gauss_hermite, hermite_addition_check, hermite_poly, multi_indices, multivariate_hermite
from mlrd.estimators import isserlis_fourth
from mlrd.matalg import random_spd
from mlrd.model import limiting_R, theoretical_gamma
from mlrd.normalize import exact_normalizer, exact_sigma_sq

pytestmark = pytest.mark.slow

VERIFY_FIXTURES = {
    "white_noise_clt": "verify-clt",
    "clt": "verify-clt",
    "fclt": "verify-fclt",
    "subordination": "verify-subordination",
    "autocov_sqrt_n": "verify-autocov",
    "autocov_operator": "verify-autocov",
}


def _run_cli(fixture, out, threads):
    cmd = VERIFY_FIXTURES[fixture]
    t0 = time.perf_counter()
    code = main([cmd, "--config", fixture_path(fixture), "--out", str(out), "--threads", str(threads)])
    elapsed = time.perf_counter() - t0
    stem = "report_" + cmd.split("-", 1)[1]
    raw = (out / f"{stem}.json").read_bytes()
    return code, json.loads(raw), raw, elapsed


@pytest.fixture(scope="session")
def single_thread_runs(tmp_path_factory):
    cache = {}

    def get(fixture):
        if fixture not in cache:
            cache[fixture] = _run_cli(fixture, tmp_path_factory.mktemp(f"{fixture}_t1"), 1)
        return cache[fixture]
    return get


def _by_name(report):
    return {c["name"]: c for c in report["comparisons"] + report["normality"]}


def test_criterion_1_normalization_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260101)
    worst = 0.0
    for _ in range(50):
        spec = random_linear_spec(rng)
        n = int(rng.integers(1, 513))
        S = exact_sigma_sq(spec, n, 10 ** 4)
        N = exact_normalizer(S)
        worst = max(worst, float(np.max(np.abs(N @ S @ N - np.eye(spec.d)))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 60
    record(1, ok, f"max residual {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_r_matrix_consistency():
    t0 = time.perf_counter()
    k, M = 10 ** 3, 10 ** 6
    worst = 0.0
    cross_zero = True
    for dv in [(0.4,), (0.25,), (0.4, 0.25)]:
        spec = linear_spec(dv)
        g = theoretical_gamma(spec, k, M)
        R = limiting_R(spec).entries
        d = np.array(dv)
        scaled = k ** (d[:, None] + d[None, :]) * g
        for i in range(len(dv)):
            for j in range(len(dv)):
                if R[i, j] == 0:
                    cross_zero &= scaled[i, j] == 0
                else:
                    worst = max(worst, abs(scaled[i, j] / R[i, j] - 1))
    elapsed = time.perf_counter() - t0
    ok = worst < 0.05 and cross_zero and elapsed < 120
    record(2, ok, f"max relative error {worst:.4f}, {elapsed:.1f}s")
    assert ok


def test_criterion_3_clt(single_thread_runs):
    code, rep, _, elapsed = single_thread_runs("clt")
    cov = _by_name(rep)["covariance"]
    ks = [c for c in rep["normality"]]
    ok = code == 0 and cov["max_abs_distance"] < 0.15 and cov["passed"] and all(
        c["p_value"] > 0.01 for c in ks) and elapsed < 600
    pvals = ", ".join(f"{c['p_value']:.3f}" for c in ks)
    record(3, ok, f"cov dist {cov['max_abs_distance']:.3f}, KS p [{pvals}], {elapsed:.0f}s")
    assert ok


def test_criterion_4_fclt(single_thread_runs):
    code, rep, _, elapsed = single_thread_runs("fclt")
    comps = _by_name(rep)
    pairs = [c for n, c in comps.items() if n.startswith("cross_cov_")]
    ss = comps["target_self_similarity_residual"]
    inc = comps["target_increment_residual"]
    ok = (code == 0 and len(pairs) == 10 and all(c["passed"] for c in pairs)
          and ss["empirical"][0][0] < 1e-10 and inc["empirical"][0][0] < 1e-10 and elapsed < 900)
    worst = max(c["max_abs_distance"] for c in pairs)
    record(4, ok, f"{len(pairs)} pairs, worst dist {worst:.3f}, self-similarity {ss['empirical'][0][0]:.1e}, "
                  f"increments {inc['empirical'][0][0]:.1e}, {elapsed:.0f}s")
    assert ok


def test_criterion_5_subordination(single_thread_runs):
    code, rep, _, elapsed = single_thread_runs("subordination")
    comps = _by_name(rep)
    cov = comps["covariance_full"]
    tail = comps["reduction_tail_ratio"]
    ok = (code == 0 and rep["diagnostics"]["tau"] == 2 and cov["max_abs_distance"] < 0.2
          and tail["empirical"][0][0] < 1 and elapsed < 900)
    record(5, ok, f"cov dist {cov['max_abs_distance']:.3f}, tail ratio {tail['empirical'][0][0]:.3g} "
                  f"(identically zero: {tail['tail_identically_zero']}), {elapsed:.0f}s")
    assert ok


def test_criterion_6_autocov_dichotomy(single_thread_runs):
    code_i, rep_i, _, t_i = single_thread_runs("autocov_sqrt_n")
    code_ii, rep_ii, _, t_ii = single_thread_runs("autocov_operator")
    ratios = [c for c in rep_i["comparisons"] if c["name"].startswith("variance_ratio")]
    ks = rep_i["normality"]
    spread = [c for c in rep_ii["comparisons"] if c["name"].startswith("second_moment_spread")]
    ratio_ok = all(c["passed"] for c in ratios)
    ks_ok = all(c["passed"] for c in ks)
    spread_ok = all(c["passed"] for c in spread)
    ok = code_i == 0 and code_ii == 0 and ratio_ok and ks_ok and spread_ok and t_i + t_ii < 600
    worst_ks = min(ks, key=lambda c: c["p_value"])
    detail = (f"regime (i): ratios {'ok' if ratio_ok else 'FAIL'}, min KS p {worst_ks['p_value']:.4f} "
              f"({worst_ks['name']}); regime (ii): max spread "
              f"{max(float(np.max(c['empirical'])) for c in spread):.3f}; {t_i + t_ii:.0f}s")
    record(6, ok, detail)
    assert ok


def test_criterion_7_hermite_suite():
    x, w = gauss_hermite(128)
    H = np.array([hermite_poly(l, x) for l in range(9)])
    G = (H * w) @ H.T
    fact = np.array([np.prod(np.arange(1, l + 1)) for l in range(9)], dtype=float)
    orth = float(np.max(np.abs(G - np.diag(fact))))

    rng = np.random.default_rng(7)
    add = 0.0
    for _ in range(100):
        tau = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        a = rng.standard_normal(d)
        a /= np.linalg.norm(a)
        add = max(add, hermite_addition_check(tau, a, rng.uniform(-3, 3, d)))

    h = 1e-4

    def rodrigues_fd(q, xv, S):
        P = np.linalg.inv(S)
        phi = lambda z: np.exp(-0.5 * z @ P @ z)
        # central differences of order q (|q| <= 2)
        steps = [np.eye(len(q))[i] * h for i, qi in enumerate(q) for _ in range(qi)]
        if not steps:
            return 1.0
        if len(steps) == 1:
            e = steps[0]
            val = (phi(xv + e) - phi(xv - e)) / (2 * h)
        elif np.array_equal(steps[0], steps[1]):
            e = steps[0]
            val = (phi(xv + e) - 2 * phi(xv) + phi(xv - e)) / h ** 2
        else:
            e, f = steps
            val = (phi(xv + e + f) - phi(xv + e - f) - phi(xv - e + f) + phi(xv - e - f)) / (4 * h * h)
        return (-1) ** len(steps) * val / phi(xv)

    fd = 0.0
    for d in (1, 2, 3):
        S = random_spd(d, rng, condition=10)
        xv = rng.uniform(-1.5, 1.5, d)
        for order in (0, 1, 2):
            for q in multi_indices(d, order):
                fd = max(fd, abs(multivariate_hermite(q, xv, S) - rodrigues_fd(q, xv, S)))
    ok = orth < 1e-8 and add < 1e-9 and fd < 1e-6
    record(7, ok, f"orthogonality {orth:.1e}, addition {add:.1e}, Rodrigues FD {fd:.1e}")
    assert ok


def test_criterion_8_isserlis_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    zmax = 0.0
    fails = 0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        S = random_spd(d, rng, condition=10)
        idx = tuple(int(i) for i in rng.integers(0, d, 4))
        Z = rng.standard_normal((10 ** 6, d)) @ np.linalg.cholesky(S).T
        prod = Z[:, idx[0]] * Z[:, idx[1]] * Z[:, idx[2]] * Z[:, idx[3]]
        z = abs(prod.mean() - isserlis_fourth(S, *idx)) / (prod.std(ddof=1) / 1e3)
        zmax = max(zmax, z)
        fails += z >= 3
    elapsed = time.perf_counter() - t0
    ok = fails == 0 and elapsed < 60
    record(8, ok, f"max |z| {zmax:.2f} over 20 cases, {elapsed:.1f}s")
    assert ok


def test_criterion_9_thread_determinism(single_thread_runs, tmp_path):
    mismatched = []
    for fixture in VERIFY_FIXTURES:
        _, _, raw1, _ = single_thread_runs(fixture)
        _, _, raw8, _ = _run_cli(fixture, tmp_path / fixture, 8)
        if raw1 != raw8:
            mismatched.append(fixture)
    ok = not mismatched
    record(9, ok, f"{len(VERIFY_FIXTURES)} verify fixtures compared" + (f"; differing: {mismatched}" if mismatched else ""))
    assert ok

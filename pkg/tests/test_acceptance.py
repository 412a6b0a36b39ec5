"""End-to-end acceptance suite.

Each test covers one acceptance criterion at its stated scale and tolerance
and prints a single PASS/FAIL line (bypassing capture) so the run log shows
the verdict per criterion even when everything is green.
"""

import math

import numpy as np
import pytest
from scipy import stats

import empcouple as ec
from empcouple.censored import censored_sup_problems, default_check_grid
from empcouple.coupling import couple_batch
from empcouple.harness import check_floor_bound, check_gamma2_tail, check_min_ratio_law
from empcouple.rng import RngStream
from empcouple.supstats import (
    _solve,
    problem_empirical_full,
    problem_empirical_increment,
    problem_quantile_full,
    problem_quantile_increment,
    problem_restricted,
    problem_tail,
)
from oracles import naive_sup_fast

SEED = 20260824


def _verdict(capsys, criterion: int, passed: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'}: {detail}")


def _bundle(n, seed, rep, t=0.5):
    return ec.build_bundle(seed, n, rep, t, 6)


def test_criterion_1_exact_identities(capsys):
    """Representation identities hold exactly over 9 x 10^3 replicates."""
    failures = 0
    total = 0
    for c in (0.5, 1.0, 2.0):
        model = ec.CensoringModel(c)
        for n in (3, 10, 100):
            for rep in range(1000):
                sample = ec.generate(model, n, ec.derive_stream(SEED, n, rep, f"id-{c}"))
                grid = default_check_grid(sample, model)
                reports = ec.representation_check(sample, model, grid)
                reports += ec.survival_representation_check(sample, model, grid)
                total += len(reports)
                failures += sum(0 if r.passed else 1 for r in reports)
    passed = failures == 0
    _verdict(capsys, 1, passed, f"{failures} failures in {total} identity checks")
    assert passed


def test_criterion_2_exact_laws(capsys):
    """Min-ratio, Gamma(2,1) tail and floor bound at their stated tolerances."""
    root = RngStream(SEED).child("laws")
    reports = [
        check_min_ratio_law([0.05, 0.1, 0.25], 50, 100000, root.child("mr")),
        check_gamma2_tail([0.5, 1.0, 2.0], 100000, root.child("g2")),
        check_floor_bound(n_max=50, grid_points=200),
    ]
    passed = all(r.passed for r in reports)
    detail = "; ".join(f"{r.name}={'ok' if r.passed else r.details}" for r in reports)
    _verdict(capsys, 2, passed, detail)
    assert passed


def test_criterion_3_coupling_quality(capsys):
    """Log growth of the median gap (R^2 >= 0.9), decreasing median/sqrt(m), mu > 0."""
    ladder = [2**k for k in range(8, 15)]
    fit = ec.fit_kmt_tail(ladder, 200, RngStream(SEED).child("kmt"))
    ratios = np.asarray(fit.medians) / np.sqrt(ladder)
    decreasing = bool(np.all(np.diff(ratios) < 0))
    passed = fit.growth_r2 >= 0.9 and decreasing and fit.mu_hat > 0
    _verdict(
        capsys, 3, passed,
        f"R2={fit.growth_r2:.3f} C={fit.C_hat:.3f} mu={fit.mu_hat:.3f} "
        f"median/sqrt(m) decreasing={decreasing}",
    )
    assert passed


def test_criterion_4_marginal_laws(capsys):
    """KS at the 1% level for every stated marginal, 5000 replicates each."""
    m = 1024
    s, w = couple_batch(m, 5000, RngStream(SEED).child("marginals"))
    pvals = {
        "S_m~Gamma(m,1)": stats.kstest(s[:, m], "gamma", args=(float(m),)).pvalue,
        "ratio~Beta": stats.kstest(s[:, m // 2] / s[:, m], "beta",
                                   args=(m / 2.0, m / 2.0)).pvalue,
        "W(m)/sqrt(m)~N(0,1)": stats.kstest(w[:, m] / math.sqrt(m), "norm").pvalue,
    }
    n = 16
    u = np.empty((5000, 3))
    for rep in range(5000):
        b = _bundle(n, SEED + 1, rep)
        u[rep] = b.U[[1, n // 2, n]]
    for label, k in (("U_(1)", 1), ("U_(n/2)", n // 2), ("U_(n)", n)):
        pvals[f"{label}~Beta"] = stats.kstest(
            u[:, (1, n // 2, n).index(k)], "beta", args=(float(k), float(n + 1 - k))
        ).pvalue
    model = ec.CensoringModel(1.0)
    pooled = np.concatenate(
        [ec.generate(model, 500, RngStream(SEED).child("xi", i)).xi for i in range(12)]
    )
    pvals["xi~U(0,1)"] = stats.kstest(pooled, "uniform").pvalue
    passed = all(p > 0.01 for p in pvals.values())
    detail = ", ".join(f"{k}: p={v:.3f}" for k, v in pvals.items())
    _verdict(capsys, 4, passed, detail)
    assert passed


def test_criterion_5_tightness_proxy(capsys):
    """q95-vs-log n slope <= 0 (or 0 within 2 sigma) for every default statistic."""
    requests = ec.default_requests()
    requests += [
        ec.StatRequest(name, name, ec.WeightConfig(), rate_c=1.0, xi_exp=0.1)
        for name in ("cens-h0", "cens-h1")
    ]
    rows = ec.run_requests(requests, [512, 1024, 2048, 4096, 8192], 500, SEED)
    report = ec.summarize(rows)
    verdicts = {}
    for stat, (slope, se) in report.slopes.items():
        verdicts[stat] = slope <= 0 or slope <= 2.0 * se
    passed = all(verdicts.values())
    detail = "; ".join(
        f"{stat} slope={report.slopes[stat][0]:+.3f}±{report.slopes[stat][1]:.3f}"
        f" {'ok' if ok else 'GROWING'}"
        for stat, ok in sorted(verdicts.items())
    )
    _verdict(capsys, 5, passed, detail)
    assert passed


def test_criterion_6_ineq1_shape(capsys):
    """Exponential decay of the tail-interval exceedance in x at n=2^12, d=64."""
    est = ec.estimate_ineq1(
        4096, [64.0], [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], reps=2000, seed=SEED, a=1.0
    )
    passed = est.c_hat > 0 and est.fit_r2 >= 0.8
    _verdict(
        capsys, 6, passed,
        f"c_hat={est.c_hat:.3f} b_hat={est.b_hat:.3f} R2={est.fit_r2:.3f} "
        f"fit_points={est.fit_points} probs={est.probs[0].tolist()}",
    )
    assert passed


def test_criterion_7_oracle_equivalence(capsys):
    """Every statistic equals the exhaustive brute-force scan bit-for-bit."""
    sizes = (8, 16, 32, 64)
    cfg = ec.WeightConfig(eta=0.25, nu=0.1)
    model = ec.CensoringModel(1.0)
    mismatches = 0
    checks = 0
    for rep in range(100):
        n = sizes[rep % len(sizes)]
        b = _bundle(n, SEED + 2, rep)
        problems = {
            "approx1": problem_quantile_full(b, cfg),
            "approx2": problem_empirical_full(b, cfg),
            "approx3": problem_quantile_increment(b, cfg),
            "approx4": problem_empirical_increment(b, cfg),
            "restricted": problem_restricted(b, cfg),
            "ineq1-tail": problem_tail(b, min(8.0, n / 2.0), "left"),
        }
        sample = ec.sample_from_bundle(model, b, ec.derive_stream(SEED + 2, n, rep, "shuffle"))
        problems.update(censored_sup_problems(sample, model, b, xi_exp=0.1))
        for name, prob in problems.items():
            engine = _solve(b, prob, 8).value
            oracle = naive_sup_fast(b, prob, per_cell=8, finer=10)
            checks += 1
            if engine != oracle:
                mismatches += 1
    passed = mismatches == 0
    _verdict(capsys, 7, passed, f"{mismatches} mismatches in {checks} bit-exact comparisons")
    assert passed


def test_criterion_8_parallel_determinism(capsys):
    """`mc` output is byte-identical at thread counts 1, 4 and 16."""
    reqs = [ec.StatRequest("approx4", "approx4", ec.WeightConfig(nu=0.1))]
    outputs = {
        threads: ec.rows_to_csv(ec.run_requests(reqs, [64, 128], 6, SEED, threads=threads))
        for threads in (1, 4, 16)
    }
    passed = outputs[1] == outputs[4] == outputs[16]
    _verdict(capsys, 8, passed, "CSV identical across thread counts {1, 4, 16}")
    assert passed

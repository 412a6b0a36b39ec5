"""Replicated Monte Carlo experiments over the coupled statistics.

The harness owns experiment plumbing: per-replicate RNG stream derivation,
parallel scheduling with deterministic output, CSV/JSON serialization,
quantile summaries with the q95-versus-log n tightness regression, the
exceedance-tail estimator, and the exact-law verification suite.

Determinism contract: a run is fully described by (seed, ladder, reps,
statistic config).  Worker processes receive (n, rep) tasks whose streams
depend only on (seed, n, rep, role), and results are re-sorted before any
aggregation, so the emitted CSV is byte-identical at any thread count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from .censored import CensoringModel, censored_weighted_stats, sample_from_bundle
from .coupling import KmtTailFit, snap_to_integer
from .processes import DEFAULT_REFINE_DEPTH, ProcessBundle
from .rng import RngStream, derive_stream
from .supstats import (
    WeightConfig,
    _alpha_increment_minus_bridge,
    _solve,
    _SupProblem,
    increment_breaks,
    stat_empirical_full,
    stat_empirical_increment,
    stat_quantile_full,
    stat_quantile_increment,
    stat_restricted,
    tail_sup_discrepancy,
)

CSV_HEADER = "statistic,n,rep,value,arg_s,seed"

_STAT_FUNCS = {
    "approx1": stat_quantile_full,
    "approx2": stat_empirical_full,
    "approx3": stat_quantile_increment,
    "approx4": stat_empirical_increment,
    "restricted": stat_restricted,
}

STATISTIC_IDS = tuple(_STAT_FUNCS) + ("ineq1-tail", "cens-h0", "cens-h1")


@dataclass(frozen=True)
class StatRequest:
    """One named statistic to evaluate on each replicate bundle."""

    name: str
    statistic: str
    weights: WeightConfig = WeightConfig()
    d: float = 64.0
    side: str = "left"
    rate_c: float = 1.0
    xi_exp: float = 0.1

    def validate(self) -> None:
        if self.statistic not in STATISTIC_IDS:
            raise ValueError(f"unknown statistic id {self.statistic!r}")
        self.weights.validate()


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one ladder experiment."""

    statistic: str
    weights: WeightConfig
    n_ladder: tuple[int, ...]
    reps: int
    seed: int
    out_csv: str | None = None
    out_json: str | None = None
    threads: int = 1
    grid_per_cell: int = 8
    refine_depth: int = DEFAULT_REFINE_DEPTH
    d: float = 64.0
    side: str = "left"
    rate_c: float = 1.0
    xi_exp: float = 0.1

    def validate(self) -> None:
        self.request().validate()
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not self.n_ladder:
            raise ValueError("n_ladder must be nonempty")
        if list(self.n_ladder) != sorted(self.n_ladder):
            raise ValueError("n_ladder must be sorted ascending")
        if min(self.n_ladder) < 2:
            raise ValueError("all ladder sizes must be >= 2")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def request(self) -> StatRequest:
        return StatRequest(
            name=self.statistic,
            statistic=self.statistic,
            weights=self.weights,
            d=self.d,
            side=self.side,
            rate_c=self.rate_c,
            xi_exp=self.xi_exp,
        )


@dataclass(frozen=True)
class ResultRow:
    statistic: str
    n: int
    rep: int
    value: float
    arg_s: float
    seed: int


@dataclass
class LadderReport:
    rows: list[ResultRow]
    quantiles: dict[str, dict[int, dict[str, float]]]
    slopes: dict[str, tuple[float, float]]  # statistic -> (slope, stderr)
    kmt_fit: KmtTailFit | None = None


def build_bundle(seed: int, n: int, rep: int, t: float, depth: int) -> ProcessBundle:
    """The replicate's bundle; streams depend only on (seed, n, rep, role)."""
    return ProcessBundle.build(
        n,
        derive_stream(seed, n, rep, "path1"),
        derive_stream(seed, n, rep, "path2"),
        t=t,
        depth=depth,
    )


def evaluate_requests(
    bundle: ProcessBundle,
    requests: list[StatRequest],
    seed: int,
    rep: int,
    grid_per_cell: int,
) -> list[ResultRow]:
    """All requested statistics on one shared bundle (one row each)."""
    rows = []
    cens_cache: dict = {}
    for req in requests:
        if req.statistic in ("cens-h0", "cens-h1"):
            key = (req.rate_c, req.xi_exp, req.weights.lam)
            if key not in cens_cache:
                model = CensoringModel(req.rate_c)
                sample = sample_from_bundle(
                    model, bundle, derive_stream(seed, bundle.n, rep, "shuffle")
                )
                cens_cache[key] = censored_weighted_stats(
                    sample, model, bundle, req.xi_exp, req.weights.lam, grid_per_cell
                )
            res = cens_cache[key][req.statistic]
        elif req.statistic == "ineq1-tail":
            res = tail_sup_discrepancy(bundle, req.d, req.side, grid_per_cell)
        else:
            res = _STAT_FUNCS[req.statistic](bundle, req.weights, grid_per_cell)
        rows.append(
            ResultRow(
                statistic=req.name,
                n=bundle.n,
                rep=rep,
                value=res.value,
                arg_s=res.arg_s,
                seed=seed,
            )
        )
    return rows


def _replicate_task(args) -> list[ResultRow]:
    requests, seed, n, rep, depth, grid_per_cell = args
    anchors = {req.weights.t for req in requests}
    if len(anchors) != 1:
        raise ValueError("all requests sharing a bundle must use the same anchor t")
    bundle = build_bundle(seed, n, rep, anchors.pop(), depth)
    return evaluate_requests(bundle, requests, seed, rep, grid_per_cell)


def run_requests(
    requests: list[StatRequest],
    n_ladder,
    reps: int,
    seed: int,
    threads: int = 1,
    grid_per_cell: int = 8,
    refine_depth: int = DEFAULT_REFINE_DEPTH,
) -> list[ResultRow]:
    """Evaluate several statistics on shared bundles across the ladder.

    One bundle is built per (n, rep) and reused for every request, so adding
    statistics to a run never changes the draws of the others.
    """
    for req in requests:
        req.validate()
    tasks = [
        (requests, seed, n, rep, refine_depth, grid_per_cell)
        for n in n_ladder
        for rep in range(reps)
    ]
    if threads > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_replicate_task, tasks, chunksize=chunk))
    else:
        chunks = [_replicate_task(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.statistic, r.n, r.rep))
    return rows


def summarize(rows: list[ResultRow]) -> LadderReport:
    """Quantile tables and the q95-vs-log n tightness regression, per statistic.

    Aggregation is order-independent: rows are grouped and sorted internally.
    """
    by_stat: dict[str, dict[int, list[float]]] = {}
    for r in rows:
        by_stat.setdefault(r.statistic, {}).setdefault(r.n, []).append(r.value)
    quantiles: dict[str, dict[int, dict[str, float]]] = {}
    slopes: dict[str, tuple[float, float]] = {}
    for stat, per_n in by_stat.items():
        quantiles[stat] = {}
        for n in sorted(per_n):
            vals = np.sort(np.asarray(per_n[n]))
            quantiles[stat][n] = {
                f"q{q}": float(np.quantile(vals, q / 100.0)) for q in (50, 90, 95, 99)
            }
        ns = sorted(per_n)
        if len(ns) >= 2:
            fit = sps.linregress(np.log(ns), [quantiles[stat][n]["q95"] for n in ns])
            slopes[stat] = (float(fit.slope), float(fit.stderr))
        else:
            slopes[stat] = (float("nan"), float("nan"))
    return LadderReport(rows=sorted(rows, key=lambda r: (r.statistic, r.n, r.rep)),
                        quantiles=quantiles, slopes=slopes)


def run_ladder(cfg: ExperimentConfig) -> LadderReport:
    """Run one statistic across the ladder and summarize."""
    cfg.validate()
    rows = run_requests(
        [cfg.request()],
        cfg.n_ladder,
        cfg.reps,
        cfg.seed,
        threads=cfg.threads,
        grid_per_cell=cfg.grid_per_cell,
        refine_depth=cfg.refine_depth,
    )
    return summarize(rows)


# -- serialization ----------------------------------------------------------


def rows_to_csv(rows: list[ResultRow]) -> str:
    """Canonical CSV text (LF, repr-exact floats); byte-stable across runs."""
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(f"{r.statistic},{r.n},{r.rep},{r.value!r},{r.arg_s!r},{r.seed}")
    return "\n".join(lines) + "\n"


def write_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(rows_to_csv(rows))


def report_to_json(report: LadderReport, cfg: ExperimentConfig | None = None) -> str:
    doc: dict = {
        "quantiles": {
            stat: {str(n): q for n, q in per_n.items()}
            for stat, per_n in report.quantiles.items()
        },
        "regression": {
            stat: {"q95_slope_vs_log_n": s, "stderr": se}
            for stat, (s, se) in report.slopes.items()
        },
        "rows": len(report.rows),
    }
    if cfg is not None:
        echo = asdict(cfg)
        echo["weights"] = asdict(cfg.weights)
        echo["n_ladder"] = list(cfg.n_ladder)
        doc["config"] = echo
    if report.kmt_fit is not None:
        doc["kmt_fit"] = asdict(report.kmt_fit)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- exceedance tail estimator ----------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; valid at 0 and 1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes outside [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class Ineq1Estimate:
    """Empirical exceedance surface of the tail-interval discrepancy."""

    n: int
    a_used: float
    d_grid: list[float]
    x_grid: list[float]
    probs: np.ndarray  # shape (len(d_grid), len(x_grid))
    wilson_low: np.ndarray
    wilson_high: np.ndarray
    c_hat: float
    b_hat: float
    fit_r2: float
    fit_points: int
    reps: int
    side: str = "left"


def estimate_ineq1(
    n: int,
    d_grid,
    x_grid,
    reps: int,
    seed: int,
    a: float = 1.0,
    side: str = "left",
    threads: int = 1,
    grid_per_cell: int = 8,
) -> Ineq1Estimate:
    """Exceedance of the tail sup beyond n^{-1/2}(a log d + x), with decay fit.

    For each replicate one bundle is built and the unweighted tail sup is
    computed at every d.  The exceedance probability is then estimated per
    (d, x), and log p is fitted linearly in x over the nonzero estimates of
    the first d (pooled fit when several d are given), giving the decay rate
    c_hat.  An all-zero grid leaves the fit as NaN.
    """
    d_grid = [float(d) for d in d_grid]
    x_grid = [float(x) for x in x_grid]
    if not d_grid or not x_grid:
        raise ValueError("d_grid and x_grid must be nonempty")
    for d in d_grid:
        if not 1.0 <= d <= n:
            raise ValueError(f"d={d} outside [1, n]")
    for d in d_grid:
        for x in x_grid:
            if not 0.0 <= x <= math.sqrt(d):
                raise ValueError(f"x={x} outside [0, sqrt(d)] for d={d}")
    requests = [
        StatRequest(name=f"ineq1-tail-d{d:g}", statistic="ineq1-tail", d=d, side=side)
        for d in d_grid
    ]
    rows = run_requests(
        requests, [n], reps, seed, threads=threads, grid_per_cell=grid_per_cell
    )
    sups = {
        f"ineq1-tail-d{d:g}": np.asarray(
            [r.value for r in rows if r.statistic == f"ineq1-tail-d{d:g}"]
        )
        for d in d_grid
    }
    probs = np.empty((len(d_grid), len(x_grid)))
    lo = np.empty_like(probs)
    hi = np.empty_like(probs)
    for i, d in enumerate(d_grid):
        vals = sups[f"ineq1-tail-d{d:g}"]
        for j, x in enumerate(x_grid):
            thresh = (a * math.log(d) + x) / math.sqrt(n)
            k = int(np.count_nonzero(vals >= thresh))
            probs[i, j] = k / reps
            lo[i, j], hi[i, j] = wilson_interval(k, reps)
    xs, logs = [], []
    for i in range(len(d_grid)):
        for j, x in enumerate(x_grid):
            if probs[i, j] > 0:
                xs.append(x)
                logs.append(math.log(probs[i, j]))
    if len(set(xs)) >= 2:
        fit = sps.linregress(xs, logs)
        c_hat, b_hat = float(-fit.slope), float(math.exp(fit.intercept))
        fit_r2 = float(fit.rvalue**2)
    else:
        c_hat = b_hat = fit_r2 = float("nan")
    return Ineq1Estimate(
        n=n,
        a_used=a,
        d_grid=d_grid,
        x_grid=x_grid,
        probs=probs,
        wilson_low=lo,
        wilson_high=hi,
        c_hat=c_hat,
        b_hat=b_hat,
        fit_r2=fit_r2,
        fit_points=len(xs),
        reps=reps,
        side=side,
    )


# -- exact-law verification --------------------------------------------------


@dataclass
class LawReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)


def _order_stat_batches(n: int, reps: int, stream: RngStream, batch: int = 20000):
    """Yield (batch_size, U) arrays of uniform order statistics via gamma sums."""
    rng = stream.generator()
    done = 0
    while done < reps:
        b = min(batch, reps - done)
        e = rng.exponential(1.0, size=(b, n + 1))
        s = np.cumsum(e, axis=1)
        yield b, s[:, :n] / s[:, n:]
        done += b


def check_min_ratio_law(
    taus, n: int, reps: int, stream: RngStream, sigmas: float = 3.0
) -> LawReport:
    """P{min_k n U_{(k)} / k <= tau} = tau, checked to a binomial tolerance."""
    taus = np.asarray(taus, dtype=float)
    k = np.arange(1, n + 1)
    counts = np.zeros(taus.size)
    for b, u in _order_stat_batches(n, reps, stream):
        m = np.min(n * u / k, axis=1)
        counts += (m[:, None] <= taus[None, :]).sum(axis=0)
    p_hat = counts / reps
    tol = sigmas * np.sqrt(taus * (1 - taus) / reps)
    err = np.abs(p_hat - taus)
    return LawReport(
        name="min-ratio",
        passed=bool(np.all(err <= tol)),
        details={
            "tau": taus.tolist(),
            "p_hat": p_hat.tolist(),
            "tolerance": tol.tolist(),
            "n": n,
            "reps": reps,
        },
    )


def check_gamma2_tail(us, reps: int, stream: RngStream, sigmas: float = 3.0) -> LawReport:
    """P{E1 + E2 > u} = (u + 1) e^{-u}, checked to a binomial tolerance."""
    us = np.asarray(us, dtype=float)
    rng = stream.generator()
    s2 = rng.exponential(1.0, size=(reps, 2)).sum(axis=1)
    p_hat = np.asarray([np.mean(s2 > u) for u in us])
    target = (us + 1.0) * np.exp(-us)
    tol = sigmas * np.sqrt(target * (1 - target) / reps)
    return LawReport(
        name="gamma2-tail",
        passed=bool(np.all(np.abs(p_hat - target) <= tol)),
        details={"u": us.tolist(), "p_hat": p_hat.tolist(), "target": target.tolist(),
                 "tolerance": tol.tolist(), "reps": reps},
    )


def check_floor_bound(n_max: int = 50, grid_points: int = 200) -> LawReport:
    """[nt] - [n(t-s)] - [ns] stays in [-2, 1] over exhaustive s < t grids."""
    g = np.arange(1, grid_points + 1) / (grid_points + 1)
    lo_seen, hi_seen = 0, 0
    for n in range(2, n_max + 1):
        t = g[None, :]
        s = g[:, None]
        mask = s < t
        a = np.floor(snap_to_integer(n * t))
        c = np.floor(snap_to_integer(n * s))
        b = np.floor(snap_to_integer(n * (t - s)))
        comb = (a - b - c)[mask]
        lo_seen = min(lo_seen, int(comb.min()))
        hi_seen = max(hi_seen, int(comb.max()))
    return LawReport(
        name="floor-bound",
        passed=(-2 <= lo_seen and hi_seen <= 1),
        details={"min": lo_seen, "max": hi_seen, "n_max": n_max, "grid_points": grid_points},
    )


def check_bridge_modulus(
    stream: RngStream,
    reps: int = 20000,
    m: int = 512,
    a: float = 0.5,
    h: float = 1.0 / 16.0,
) -> LawReport:
    """Local bridge oscillation tail decays at a Gaussian-type rate in u.

    Estimates p(u) = P{sup_{|s-a|<=h} |B(a) - B(s)| >= u sqrt(h)} on a grid of
    u and requires log p(u) to be decreasing and (up to Monte Carlo slack)
    concave over the nonzero-estimate range.
    """
    rng = stream.generator()
    i_a = int(round(a * m))
    i_lo, i_hi = int(round((a - h) * m)), int(round((a + h) * m))
    u_grid = np.arange(0.5, 3.01, 0.5)
    counts = np.zeros(u_grid.size)
    done = 0
    while done < reps:
        b = min(4000, reps - done)
        w = np.cumsum(rng.standard_normal((b, m)) / np.sqrt(m), axis=1)
        w = np.concatenate([np.zeros((b, 1)), w], axis=1)
        bridge = w - np.linspace(0.0, 1.0, m + 1)[None, :] * w[:, -1:]
        osc = np.max(
            np.abs(bridge[:, i_a : i_a + 1] - bridge[:, i_lo : i_hi + 1]), axis=1
        )
        counts += (osc[:, None] >= u_grid[None, :] * math.sqrt(h)).sum(axis=0)
        done += b
    p = counts / reps
    keep = p > 0
    logs = np.log(p[keep])
    decreasing = bool(np.all(np.diff(logs) < 0))
    concave = True
    if logs.size >= 3:
        concave = bool(np.all(np.diff(logs, 2) <= 0.2))
    return LawReport(
        name="bridge-modulus",
        passed=decreasing and concave,
        details={"u": u_grid.tolist(), "p_hat": p.tolist(), "reps": reps,
                 "decreasing": decreasing, "log_concave": concave},
    )


def verify_exact_laws(seed: int, reps: int = 100000) -> list[LawReport]:
    """The full exact-law suite; each report carries effect sizes."""
    if reps < 10000:
        raise ValueError("exact-law verification needs reps >= 10^4")
    root = RngStream(seed).child("verify")
    return [
        check_min_ratio_law([0.05, 0.1, 0.25], 50, reps, root.child("min-ratio")),
        check_gamma2_tail([0.5, 1.0, 2.0], reps, root.child("gamma2")),
        check_floor_bound(),
        check_bridge_modulus(root.child("bridge"), reps=min(reps, 20000)),
    ]


# -- global sup sanity check -------------------------------------------------


@dataclass
class GlobalSupReport:
    n_ladder: list[int]
    medians: list[float]
    normalized: list[float]
    ratio: float
    passed: bool
    low_confidence: bool


def _global_sup_task(args) -> float:
    seed, n, rep, t, depth = args
    bundle = build_bundle(seed, n, rep, t, depth)
    breaks = np.concatenate([t - bundle.U[1:], increment_breaks(bundle, t)])
    prob = _SupProblem(
        0.0, t, False, breaks, _alpha_increment_minus_bridge(bundle, t),
        0.0, None, 1.0,
    )
    return _solve(bundle, prob, 8).value


def sanity_global_sup(
    n_ladder,
    reps: int,
    seed: int,
    t: float = 0.5,
    threads: int = 1,
    refine_depth: int = DEFAULT_REFINE_DEPTH,
) -> GlobalSupReport:
    """Normalized unweighted sup discrepancy stays bounded across the ladder.

    The median of n^{1/4} sup / ((log n)^{1/2} (log log n)^{1/4}) should be
    flat in n; the pass condition is max/min median ratio <= 3.
    """
    n_ladder = sorted(n_ladder)
    if not n_ladder:
        raise ValueError("ladder must be nonempty")
    tasks = [(seed, n, rep, t, refine_depth) for n in n_ladder for rep in range(reps)]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(_global_sup_task, tasks, chunksize=max(1, len(tasks) // (threads * 8))))
    else:
        vals = [_global_sup_task(task) for task in tasks]
    medians, normalized = [], []
    for i, n in enumerate(n_ladder):
        med = float(np.median(vals[i * reps : (i + 1) * reps]))
        medians.append(med)
        norm = n**0.25 / (math.log(n) ** 0.5 * math.log(math.log(n)) ** 0.25)
        normalized.append(med * norm)
    ratio = max(normalized) / min(normalized) if min(normalized) > 0 else float("inf")
    return GlobalSupReport(
        n_ladder=list(n_ladder),
        medians=medians,
        normalized=normalized,
        ratio=float(ratio),
        passed=bool(ratio <= 3.0),
        low_confidence=reps < 10,
    )


def default_requests(lam: float = 1.0, t: float = 0.5) -> list[StatRequest]:
    """The default parameter sweep: every statistic at its stated exponents."""
    reqs = []
    for eta in (0.0, 0.25, 0.45):
        cfg = WeightConfig(lam=lam, eta=eta, t=t)
        reqs.append(StatRequest(f"approx1-eta{eta:g}", "approx1", cfg))
        reqs.append(StatRequest(f"approx3-eta{eta:g}", "approx3", cfg))
    for nu in (0.0, 0.1, 0.2):
        cfg = WeightConfig(lam=lam, nu=nu, t=t)
        reqs.append(StatRequest(f"approx2-nu{nu:g}", "approx2", cfg))
        reqs.append(StatRequest(f"approx4-nu{nu:g}", "approx4", cfg))
    return reqs

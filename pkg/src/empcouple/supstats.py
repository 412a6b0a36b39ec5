"""Weighted sup discrepancy statistics over a coupled process bundle.

Between breakpoints every discrepancy here is |a + b s| for constants a, b
(the step processes and the dyadic-resolution bridge are constant, the
drift terms linear), and against the weights s^c, (1-s)^c and [s(1-s)]^c
with 0 <= c <= 1 such a ratio has no interior local maximum.  The supremum
over the domain is therefore attained at a breakpoint one-sided limit, so
evaluating both one-sided limits at every breakpoint gives the *exact*
supremum of the discretized processes; any denser grid can only tie it.

Breakpoints are: the dyadic bridge grid j / (n 2^depth) (which contains the
lattice k/n), the jump locations of whichever step process appears in the
numerator, and the domain endpoints.  One-sided limits are evaluated by
resolving all piecewise lookups at the midpoint of the adjacent interval and
then plugging in the endpoint abscissa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .processes import ProcessBundle


@dataclass(frozen=True)
class WeightConfig:
    """Weight/domain parameters for the sup statistics."""

    lam: float = 1.0
    eta: float = 0.0
    nu: float = 0.0
    t: float = 0.5

    def validate(self, n: int | None = None) -> None:
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not 0.0 <= self.eta < 0.5:
            raise ValueError("eta must lie in [0, 1/2)")
        if not 0.0 <= self.nu < 0.25:
            raise ValueError("nu must lie in [0, 1/4)")
        if not 0.0 < self.t < 1.0:
            raise ValueError("t must lie in (0, 1)")
        if n is not None and self.lam / n >= 1.0:
            raise ValueError(f"lam/n must be < 1 (lam={self.lam}, n={n})")


@dataclass
class WeightedSupResult:
    value: float
    arg_s: float
    side: str  # 'right' | 'left' | 'direct'
    grid_points: int
    discretization_note: str  # 'exact-at-jumps' | 'grid-approx'


class _SupProblem:
    """Domain, numerator and weight of one sup statistic."""

    def __init__(self, lo, hi, closed_hi, extra_breaks, numerator, weight_exp, weight_kind, scale):
        self.lo = float(lo)
        self.hi = float(hi)
        self.closed_hi = bool(closed_hi)
        self.extra_breaks = np.asarray(extra_breaks, dtype=float)
        self.numerator = numerator  # (s, s_piece) -> ndarray
        self.weight_exp = weight_exp
        self.weight_kind = weight_kind  # 'sym' | 's' | 'one-minus-s' | None
        self.scale = float(scale)

    def weighted(self, s, s_piece) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        num = self.scale * np.abs(self.numerator(s, s_piece))
        if self.weight_kind is None:
            return num
        if self.weight_kind == "sym":
            return num / (s * (1.0 - s)) ** self.weight_exp
        if self.weight_kind == "s":
            return num / s**self.weight_exp
        if self.weight_kind == "one-minus-s":
            return num / (1.0 - s) ** self.weight_exp
        raise ValueError(self.weight_kind)


def _breakpoints(bundle: ProcessBundle, prob: _SupProblem) -> np.ndarray:
    den = bundle.n * (1 << bundle.depth)
    dyadic = np.arange(den + 1) / den
    pts = np.concatenate([[prob.lo, prob.hi], dyadic, prob.extra_breaks])
    pts = pts[(pts >= prob.lo) & (pts <= prob.hi)]
    return np.unique(pts)


def _grid_points(bundle: ProcessBundle, prob: _SupProblem, per_cell: int) -> np.ndarray:
    if per_cell <= 0:
        return np.empty(0)
    n = bundle.n
    k0 = int(math.floor(prob.lo * n))
    k1 = int(math.floor(prob.hi * n)) + 1
    cells = np.arange(k0, k1 + 1)
    offs = np.arange(per_cell) / per_cell
    s = ((cells[:, None] + offs[None, :]) / n).ravel()
    if prob.closed_hi:
        return s[(s >= prob.lo) & (s <= prob.hi)]
    return s[(s >= prob.lo) & (s < prob.hi)]


def _solve(bundle: ProcessBundle, prob: _SupProblem, grid_per_cell: int) -> WeightedSupResult:
    if not prob.lo < prob.hi:
        raise ValueError(f"empty sup domain [{prob.lo}, {prob.hi})")
    pts = _breakpoints(bundle, prob)
    p, q = pts[:-1], pts[1:]
    mid = 0.5 * (p + q)
    cand_s = [p, q]
    cand_val = [prob.weighted(p, mid), prob.weighted(q, mid)]
    cand_side = ["right", "left"]
    direct_s = _grid_points(bundle, prob, grid_per_cell)
    if prob.closed_hi:
        direct_s = np.concatenate([direct_s, [prob.hi]])
    if direct_s.size:
        cand_s.append(direct_s)
        cand_val.append(prob.weighted(direct_s, direct_s))
        cand_side.append("direct")
    best_val = -math.inf
    best_s = prob.lo
    best_side = "right"
    for s_arr, v_arr, side in zip(cand_s, cand_val, cand_side):
        if s_arr.size == 0:
            continue
        j = int(np.argmax(v_arr))
        if v_arr[j] > best_val:
            best_val = float(v_arr[j])
            best_s = float(s_arr[j])
            best_side = side
    n_evals = 2 * (pts.size - 1) + int(direct_s.size)
    return WeightedSupResult(
        value=best_val,
        arg_s=best_s,
        side=best_side,
        grid_points=n_evals,
        discretization_note="exact-at-jumps",
    )


def reevaluate(bundle: ProcessBundle, prob: _SupProblem, s: float, side: str) -> float:
    """Value of a sup integrand at a recorded (arg_s, side) pair."""
    arr = np.asarray([s], dtype=float)
    # Offset past the near-integer snap tolerance of the piecewise lookups,
    # but far inside the narrowest possible piece.
    off = 32.0 * np.spacing(max(1.0, abs(s)))
    if side == "direct":
        piece = arr
    elif side == "right":
        piece = np.asarray([s + off])
    elif side == "left":
        piece = np.asarray([s - off])
    else:
        raise ValueError(side)
    return float(prob.weighted(arr, piece)[0])


# -- numerators ------------------------------------------------------------


def _beta_minus_bridge(bundle: ProcessBundle):
    sqn = np.sqrt(bundle.n)

    def num(s, s_piece):
        idx = bundle.lattice_index(s_piece)
        w_val = bundle.w_n(np.asarray(s_piece, dtype=float) * bundle.n)
        return sqn * (s - bundle.U[idx]) - bundle.bridge_given_w(s, w_val)

    return num


def _alpha_minus_bridge(bundle: ProcessBundle):
    sqn = np.sqrt(bundle.n)

    def num(s, s_piece):
        cnt = bundle.ecdf_count(s_piece)
        w_val = bundle.w_n(np.asarray(s_piece, dtype=float) * bundle.n)
        return sqn * (cnt / bundle.n - s) - bundle.bridge_given_w(s, w_val)

    return num


def _beta_increment_minus_bridge(bundle: ProcessBundle, anchor: float):
    # The comparison process for the window increments is the coupled
    # bridge's own increment B(anchor) - B(anchor - s), which (in s, on
    # [0, anchor]) has covariance min(s, s') - s s' and is therefore itself
    # a Brownian bridge.  Comparing against B(s) instead leaves a
    # nondegenerate Gaussian gap of variance 2 min(s, anchor - s), which
    # destroys the n^eta-weighted tightness.
    sqn = np.sqrt(bundle.n)
    beta_anchor = float(bundle.quantile_process(np.asarray([anchor]))[0])
    w_anchor = float(bundle.w_n(np.asarray([anchor * bundle.n]))[0])

    def num(s, s_piece):
        sp = np.asarray(s_piece, dtype=float)
        idx = bundle.lattice_index(anchor - sp)
        beta_shift = sqn * ((anchor - s) - bundle.U[idx])
        w_shift = bundle.w_n((anchor - sp) * bundle.n)
        bridge_inc = (s * bundle.w_nn - w_anchor + w_shift) / sqn
        return (beta_anchor - beta_shift) - bridge_inc

    return num


def _alpha_increment_minus_bridge(bundle: ProcessBundle, anchor: float):
    # Same increment-bridge comparison as _beta_increment_minus_bridge.
    sqn = np.sqrt(bundle.n)
    alpha_anchor = float(bundle.empirical_process(np.asarray([anchor]))[0])
    w_anchor = float(bundle.w_n(np.asarray([anchor * bundle.n]))[0])

    def num(s, s_piece):
        sp = np.asarray(s_piece, dtype=float)
        shift_t = anchor - sp
        cnt = bundle.ecdf_count(shift_t)
        alpha_shift = sqn * (cnt / bundle.n - (anchor - s))
        # The restricted domain can reach past the anchor; there the shifted
        # processes are extended by zero, so the increment degenerates to the
        # anchor value itself.
        pos = shift_t > 0.0
        w_shift = np.zeros_like(sp)
        w_shift[pos] = bundle.w_n(shift_t[pos] * bundle.n)
        bridge_inc = np.where(
            pos,
            (s * bundle.w_nn - w_anchor + w_shift) / sqn,
            (anchor * bundle.w_nn - w_anchor) / sqn,
        )
        return (alpha_anchor - alpha_shift) - bridge_inc

    return num


def increment_breaks(bundle: ProcessBundle, anchor: float) -> np.ndarray:
    """Jump abscissae of s -> W((anchor - s) n) on the dyadic bridge grid."""
    den = bundle.n * (1 << bundle.depth)
    return anchor - np.arange(den + 1) / den


# -- public statistics -----------------------------------------------------


def _full_domain(bundle: ProcessBundle, cfg: WeightConfig) -> tuple[float, float]:
    lo = cfg.lam / bundle.n
    hi = 1.0 - cfg.lam / bundle.n
    if not lo < hi:
        raise ValueError(f"empty domain: lam/n = {lo} >= 1 - lam/n")
    return lo, hi


def problem_quantile_full(bundle: ProcessBundle, cfg: WeightConfig) -> _SupProblem:
    lo, hi = _full_domain(bundle, cfg)
    return _SupProblem(
        lo, hi, True, [], _beta_minus_bridge(bundle), 0.5 - cfg.eta, "sym", bundle.n**cfg.eta
    )


def problem_empirical_full(bundle: ProcessBundle, cfg: WeightConfig) -> _SupProblem:
    lo, hi = _full_domain(bundle, cfg)
    return _SupProblem(
        lo,
        hi,
        True,
        bundle.U[1:],
        _alpha_minus_bridge(bundle),
        0.5 - cfg.nu,
        "sym",
        bundle.n**cfg.nu,
    )


def problem_quantile_increment(bundle: ProcessBundle, cfg: WeightConfig) -> _SupProblem:
    lo = cfg.lam / bundle.n
    if not lo < cfg.t:
        raise ValueError(f"empty domain: lam/n = {lo} >= t = {cfg.t}")
    breaks = np.concatenate(
        [cfg.t - np.arange(bundle.n + 1) / bundle.n, increment_breaks(bundle, cfg.t)]
    )
    return _SupProblem(
        lo,
        cfg.t,
        False,
        breaks,
        _beta_increment_minus_bridge(bundle, cfg.t),
        0.5 - cfg.eta,
        "s",
        bundle.n**cfg.eta,
    )


def problem_empirical_increment(bundle: ProcessBundle, cfg: WeightConfig) -> _SupProblem:
    lo = cfg.lam / bundle.n
    if not lo < cfg.t:
        raise ValueError(f"empty domain: lam/n = {lo} >= t = {cfg.t}")
    breaks = np.concatenate([cfg.t - bundle.U[1:], increment_breaks(bundle, cfg.t)])
    return _SupProblem(
        lo,
        cfg.t,
        False,
        breaks,
        _alpha_increment_minus_bridge(bundle, cfg.t),
        0.5 - cfg.nu,
        "s",
        bundle.n**cfg.nu,
    )


def problem_restricted(bundle: ProcessBundle, cfg: WeightConfig) -> _SupProblem:
    if bundle.t_n < 2:
        raise ValueError(f"restricted statistic requires [nt] >= 2, got {bundle.t_n}")
    lo = float(bundle.U[1])
    hi = float(bundle.U[bundle.t_n])
    breaks = np.concatenate([cfg.t - bundle.U[1:], increment_breaks(bundle, cfg.t)])
    return _SupProblem(
        lo,
        hi,
        False,
        breaks,
        _alpha_increment_minus_bridge(bundle, cfg.t),
        0.5 - cfg.nu,
        "s",
        bundle.n**cfg.nu,
    )


def problem_tail(bundle: ProcessBundle, d: float, side: str) -> _SupProblem:
    if not 1.0 <= d <= bundle.n:
        raise ValueError(f"d must lie in [1, n], got {d}")
    if side == "left":
        lo, hi = 0.0, d / bundle.n
    elif side == "right":
        lo, hi = 1.0 - d / bundle.n, 1.0
    else:
        raise ValueError("side must be 'left' or 'right'")
    return _SupProblem(lo, hi, True, [], _beta_minus_bridge(bundle), 0.0, None, 1.0)


def stat_quantile_full(bundle, cfg: WeightConfig, grid_per_cell: int = 8) -> WeightedSupResult:
    """Sup of n^eta |quantile process - bridge| / [s(1-s)]^{1/2-eta}."""
    cfg.validate(bundle.n)
    return _solve(bundle, problem_quantile_full(bundle, cfg), grid_per_cell)


def stat_empirical_full(bundle, cfg: WeightConfig, grid_per_cell: int = 8) -> WeightedSupResult:
    """Sup of n^nu |empirical process - bridge| / [s(1-s)]^{1/2-nu}."""
    cfg.validate(bundle.n)
    return _solve(bundle, problem_empirical_full(bundle, cfg), grid_per_cell)


def stat_quantile_increment(bundle, cfg: WeightConfig, grid_per_cell: int = 8) -> WeightedSupResult:
    """Sup over [lam/n, t) of n^eta |window increment - bridge increment| / s^{1/2-eta}.

    The comparison process is B(t) - B(t-s), the coupled bridge's own window
    increment, which in s is itself a Brownian bridge on [0, t].
    """
    cfg.validate(bundle.n)
    return _solve(bundle, problem_quantile_increment(bundle, cfg), grid_per_cell)


def stat_empirical_increment(bundle, cfg: WeightConfig, grid_per_cell: int = 8) -> WeightedSupResult:
    """Empirical-process counterpart of ``stat_quantile_increment``."""
    cfg.validate(bundle.n)
    return _solve(bundle, problem_empirical_increment(bundle, cfg), grid_per_cell)


def stat_restricted(bundle, cfg: WeightConfig, grid_per_cell: int = 8) -> WeightedSupResult:
    """Increment statistic (vs the bridge increment) restricted to [U_{1}, U_{[nt]})."""
    cfg.validate(bundle.n)
    return _solve(bundle, problem_restricted(bundle, cfg), grid_per_cell)


def tail_sup_discrepancy(
    bundle, d: float, side: str = "left", grid_per_cell: int = 8
) -> WeightedSupResult:
    """Unweighted sup of |quantile process - bridge| over a d/n tail interval."""
    return _solve(bundle, problem_tail(bundle, d, side), grid_per_cell)

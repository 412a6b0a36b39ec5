"""Per-sample-size process objects built on two coupled paths.

For a sample size n, two independent coupled paths supply the n+1
exponential increments (interleaved so that both tails of the order
statistics sit at the *start* of a Brownian motion) and a spliced Brownian
motion W_n on [0, n+1].  From these we get the order statistics
U_k = S_k / S_{n+1}, the empirical and quantile processes, and the coupled
Brownian bridge.

Splice convention: for s <= [n/2] the first branch runs the first path's
Brownian motion backwards from [n/2],

    W_n(s) = W1([n/2]) - W1([n/2] - s),

matching the reversed interleaving of the first block; the second branch is
W1([n/2]) + W2(n+1-[n/2]) - W2(n+1-s).  Both branches agree at s = [n/2]
and W_n is a standard Brownian motion on [0, n+1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import CoupledPath, couple_exponential_sums, snap_to_integer
from .rng import RngStream

DEFAULT_REFINE_DEPTH = 6


def next_power_of_two(k: int) -> int:
    return 1 << max(0, (k - 1).bit_length())


def interleave(n: int, seq1, seq2) -> np.ndarray:
    """Merge two increment sequences into the n+1 interleaved summands.

    The first [n/2] outputs are the first sequence's leading block reversed;
    the remaining n+1-[n/2] outputs are the second sequence's leading block
    reversed.
    """
    if n < 2:
        raise ValueError("interleave requires n >= 2")
    seq1 = np.asarray(seq1, dtype=float)
    seq2 = np.asarray(seq2, dtype=float)
    h = n // 2
    g = n + 1 - h
    if seq1.size < h:
        raise ValueError(f"first sequence needs >= {h} elements, got {seq1.size}")
    if seq2.size < g:
        raise ValueError(f"second sequence needs >= {g} elements, got {seq2.size}")
    return np.concatenate([seq1[:h][::-1], seq2[:g][::-1]])


def floor_combination(n: int, s: float, t: float) -> int:
    """[nt] - [n(t-s)] - [ns]; always within [-2, 1] for 0 <= s < t < 1."""
    if not 0.0 <= s < t < 1.0:
        raise ValueError("floor_combination requires 0 <= s < t < 1")
    vals = snap_to_integer(np.asarray([n * t, n * (t - s), n * s]))
    a, b, c = np.floor(vals).astype(int)
    out = int(a - b - c)
    assert -2 <= out <= 1, (n, s, t, out)
    return out


@dataclass
class ProcessBundle:
    """Order statistics, process evaluators and coupled bridge for one n.

    Immutable after construction: both paths are frozen to ``depth`` extra
    dyadic levels, so concurrent reads are safe.
    """

    n: int
    t: float
    path1: CoupledPath | None
    path2: CoupledPath | None
    Y: np.ndarray
    S: np.ndarray
    U: np.ndarray
    depth: int
    w_nn: float = field(default=float("nan"))

    @property
    def h(self) -> int:
        return self.n // 2

    @property
    def g(self) -> int:
        return self.n + 1 - self.h

    @property
    def t_n(self) -> int:
        return int(math.floor(self.n * self.t))

    # -- Brownian machinery ------------------------------------------------

    def w_n(self, z) -> np.ndarray:
        """Spliced Brownian motion on [0, n+1] (dyadic-grid resolution)."""
        if self.path1 is None or self.path2 is None:
            raise ValueError("synthetic bundle has no Brownian paths")
        z = np.asarray(z, dtype=float)
        if np.any((z < 0.0) | (z > self.n + 1)):
            raise ValueError("w_n argument outside [0, n+1]")
        out = np.empty_like(z)
        lo = z <= self.h
        w1_h = self.path1.values_at(np.asarray([float(self.h)]), self.depth)[0]
        out[lo] = w1_h - self.path1.values_at(self.h - z[lo], self.depth)
        hi = ~lo
        if np.any(hi):
            w2_g = self.path2.values_at(np.asarray([float(self.g)]), self.depth)[0]
            out[hi] = w1_h + w2_g - self.path2.values_at((self.n + 1) - z[hi], self.depth)
        return out

    def bridge(self, s) -> np.ndarray:
        """Coupled bridge n^{-1/2} (s W_n(n) - W_n(s n)); zero at s in {0, 1}."""
        s = np.asarray(s, dtype=float)
        return self.bridge_given_w(s, self.w_n(s * self.n))

    def bridge_given_w(self, s, w_val) -> np.ndarray:
        """Bridge formula with the W_n(s n) lookup supplied by the caller."""
        s = np.asarray(s, dtype=float)
        return (s * self.w_nn - w_val) / np.sqrt(self.n)

    # -- empirical / quantile processes ------------------------------------

    def lattice_index(self, s) -> np.ndarray:
        """[s n] with near-integer snap, clipped to 0..n."""
        z = np.floor(snap_to_integer(np.asarray(s, dtype=float) * self.n)).astype(np.int64)
        return np.clip(z, 0, self.n)

    def ecdf_count(self, s, side: str = "right") -> np.ndarray:
        """Number of order statistics <= s (or < s for side='left')."""
        return np.searchsorted(self.U[1 : self.n + 1], np.asarray(s, dtype=float), side=side)

    def empirical_process(self, s) -> np.ndarray:
        """sqrt(n) (G_n(s) - s) with right-continuous G_n."""
        s = np.asarray(s, dtype=float)
        return np.sqrt(self.n) * (self.ecdf_count(s) / self.n - s)

    def quantile_process(self, s) -> np.ndarray:
        """sqrt(n) (s - U_{[sn]}) with U_0 = 0."""
        s = np.asarray(s, dtype=float)
        return np.sqrt(self.n) * (s - self.U[self.lattice_index(s)])

    @staticmethod
    def increment(f, s: float, t: float):
        """Window increment f(t) - f(t - s); requires 0 <= s < t."""
        if not 0.0 <= s < t:
            raise ValueError("increment requires 0 <= s < t")
        return f(t) - f(t - s)

    # -- constructors ------------------------------------------------------

    @classmethod
    def build(
        cls,
        n: int,
        stream1: RngStream,
        stream2: RngStream,
        t: float = 0.5,
        depth: int = DEFAULT_REFINE_DEPTH,
    ) -> "ProcessBundle":
        if n < 2:
            raise ValueError("ProcessBundle requires n >= 2")
        if not 0.0 < t < 1.0:
            raise ValueError("anchor t must lie in (0, 1)")
        h = n // 2
        g = n + 1 - h
        path1 = couple_exponential_sums(next_power_of_two(h), stream1)
        path2 = couple_exponential_sums(next_power_of_two(g), stream2)
        path1.freeze(depth)
        path2.freeze(depth)
        y = interleave(n, np.diff(path1.S), np.diff(path2.S))
        s = np.empty(n + 2)
        s[0] = 0.0
        np.cumsum(y, out=s[1:])
        bundle = cls(
            n=n, t=t, path1=path1, path2=path2, Y=y, S=s, U=s[: n + 1] / s[n + 1], depth=depth
        )
        bundle.w_nn = float(bundle.w_n(np.asarray([float(n)]))[0])
        return bundle

    @classmethod
    def synthetic(cls, n: int, order_stats, t: float = 0.5) -> "ProcessBundle":
        """Bundle with prescribed order statistics and no Brownian paths.

        Only the empirical/quantile evaluators work; used in tests.
        """
        u = np.concatenate([[0.0], np.asarray(order_stats, dtype=float)])
        if u.size != n + 1 or np.any(np.diff(u) <= 0) or u[-1] >= 1.0:
            raise ValueError("order_stats must be n strictly increasing values in (0, 1)")
        s = np.concatenate([u, [1.0]])
        return cls(n=n, t=t, path1=None, path2=None, Y=np.diff(s), S=s, U=u, depth=0)

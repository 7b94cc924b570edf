"""Block statistics over threshold-normalized series.

This is the computational kernel the estimators and variance estimators
reuse.  A series is any finite 1-d float array.  Observations are
normalized against a threshold u as x/u where x > u and 0 otherwise, so a
block functional sees a window of zeros and values strictly greater than 1.

Window sums come in two flavours: sliding (every start index) and disjoint
(starts at multiples of the block length).  Big blocks group r consecutive
indices; per-big-block sums are the raw material for the pre-asymptotic
variance estimators.

All functions are pure; nothing here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InsufficientBlocksError,
    InvalidThresholdError,
    SchemeError,
    WindowError,
)

__all__ = [
    "as_series",
    "ThresholdSpec",
    "BlockScheme",
    "BlockFunctional",
    "NormalizedSeries",
    "BLOCK_MAX",
    "FIRST_EXCEED",
    "RUNS",
    "BUILTIN_FUNCTIONALS",
    "normalize",
    "scheme_advisories",
    "sliding_window_max",
    "sliding_block_sum",
    "disjoint_block_sum",
    "big_block_sums",
    "window_values",
]


def as_series(values) -> np.ndarray:
    """Validate and freeze raw observations.

    Returns a read-only float64 1-d array of length >= 1 with all entries
    finite.  A copy is made, so later mutation of the input cannot change
    results computed from the returned array.
    """
    x = np.array(values, dtype=np.float64, copy=True)
    if x.ndim != 1:
        raise ValueError(f"series must be 1-d, got shape {x.shape}")
    if x.size < 1:
        raise ValueError("series must contain at least one observation")
    if not np.all(np.isfinite(x)):
        raise ValueError("series entries must all be finite")
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class ThresholdSpec:
    """A threshold level, either given directly or resolved from a rank.

    ``rank(k)`` resolves to the k-th largest order statistic of the series
    it is resolved against.  ``v_hat`` is the empirical exceedance rate
    #{i <= n : x_i > u}/n under strict exceedance; for a rank-k threshold
    on distinct values this equals (k-1)/n, because the k-th largest value
    itself does not strictly exceed the level.  ``d_ratio`` optionally
    records u/u_ref against a reference level for diagnostics.
    """

    kind: str  # "deterministic" | "rank"
    u: float | None = None
    k: int | None = None
    v_hat: float | None = None
    d_ratio: float | None = None

    @staticmethod
    def deterministic(u: float) -> "ThresholdSpec":
        return ThresholdSpec(kind="deterministic", u=float(u))

    @staticmethod
    def rank(k: int) -> "ThresholdSpec":
        if k < 1:
            raise ValueError(f"rank k must be >= 1, got {k}")
        return ThresholdSpec(kind="rank", k=int(k))

    def resolve(self, values, u_ref: float | None = None) -> "ThresholdSpec":
        """Resolve the level against a series and fill in ``v_hat``.

        For rank thresholds, ``u`` becomes the k-th largest order
        statistic; rank k must satisfy 1 <= k <= n.
        """
        x = as_series(values)
        n = x.size
        if self.kind == "rank":
            if not 1 <= self.k <= n:
                raise ValueError(f"rank k={self.k} out of range for n={n}")
            u = float(np.partition(x, n - self.k)[n - self.k])
        else:
            u = float(self.u)
        v_hat = float(np.count_nonzero(x > u)) / n
        d_ratio = u / u_ref if u_ref is not None else None
        return ThresholdSpec(self.kind, u=u, k=self.k, v_hat=v_hat, d_ratio=d_ratio)


@dataclass(frozen=True)
class BlockScheme:
    """Sample size n, block length s, big-block length r, and count m.

    m = floor((n - s + 1) / r) is always derived, never stored.  The
    variance-comparison results additionally require r to be a multiple of
    s; ``require_divisible`` enforces that where needed.
    """

    n: int
    s: int
    r: int

    def __post_init__(self) -> None:
        if not 1 <= self.s <= self.r <= self.n:
            raise SchemeError(
                f"need 1 <= s <= r <= n, got s={self.s}, r={self.r}, n={self.n}"
            )

    @property
    def m(self) -> int:
        return (self.n - self.s + 1) // self.r

    def require_divisible(self) -> None:
        if self.r % self.s != 0:
            raise SchemeError(
                f"big-block length r={self.r} must be a multiple of s={self.s}"
            )

    def advisories(self, v_hat: float) -> list[tuple[str, str, float]]:
        """Finite-sample health checks; see ``scheme_advisories``."""
        return scheme_advisories(self.n, self.s, self.r, v_hat)


def scheme_advisories(n: int, s: int, r: int, v_hat: float) -> list[tuple[str, str, float]]:
    """Finite-sample health checks on the block-scheme orders.

    Returns (level, message, value) triples with level in
    {"green", "yellow", "red"}.  Advisory only, and deliberately usable
    on inconsistent (s, r) combinations: the asymptotic theory needs
    s*v -> 0, r*v -> 0, r = o(sqrt(n*v)) and (for the variance
    comparison) r divisible by s; these bands are pragmatic defaults for
    judging a single finite configuration.
    """
    out = []
    sv = s * v_hat
    out.append(("green" if sv < 0.5 else "yellow", f"s*v_hat = {sv:.4g} (want small)", sv))
    rv = r * v_hat
    out.append(("green" if rv < 1.0 else "yellow", f"r*v_hat = {rv:.4g} (want small)", rv))
    root = np.sqrt(n * v_hat) if v_hat > 0 else np.inf
    ratio = r / root if root > 0 else np.inf
    out.append(
        (
            "green" if ratio <= 2.0 else "yellow",
            f"r / sqrt(n*v_hat) = {ratio:.4g} (want <= 2)",
            float(ratio),
        )
    )
    if s >= r:
        out.append(("red", f"s={s} >= r={r}: small/big block ordering broken", 0.0))
    elif r % s != 0:
        out.append(
            (
                "yellow",
                f"r={r} not a multiple of s={s}: "
                "the sliding-vs-disjoint variance comparison requires r/s to be an integer",
                float(r % s),
            )
        )
    else:
        out.append(("green", f"r mod s = 0 (r/s = {r // s})", 0.0))
    return out


@dataclass(frozen=True)
class BlockFunctional:
    """A named map from a normalized block to a real number.

    ``func`` receives a 1-d array of normalized values (zeros and values
    > 1) and must return 0.0 on an all-zero block.  ``scale`` is the
    normalizing constant a > 0 applied by the ratio statistics; ``bound``
    optionally records a sup-norm bound (informational).  ``kind`` tags
    the built-ins so the kernels can use O(n) vectorized paths instead of
    evaluating ``func`` window by window.
    """

    name: str
    func: Callable[[np.ndarray], float]
    scale: float = 1.0
    bound: float | None = None
    kind: str = "generic"

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def __call__(self, window: np.ndarray) -> float:
        return float(self.func(np.asarray(window, dtype=np.float64)))


def _block_max_func(x: np.ndarray) -> float:
    return 1.0 if x.size and np.max(x) > 1.0 else 0.0


def _first_exceed_func(x: np.ndarray) -> float:
    return 1.0 if x.size and x[0] > 1.0 else 0.0


def _runs_func(x: np.ndarray) -> float:
    if x.size == 0 or x[0] <= 1.0:
        return 0.0
    return 1.0 if np.max(x[1:], initial=0.0) <= 1.0 else 0.0


#: 1 if any entry of the block exceeds the threshold.
BLOCK_MAX = BlockFunctional("block_max", _block_max_func, bound=1.0, kind="block_max")

#: 1 if the first entry of the block exceeds the threshold.
FIRST_EXCEED = BlockFunctional(
    "first_exceed", _first_exceed_func, bound=1.0, kind="first_exceed"
)

#: 1 if the first entry exceeds and no later entry of the block does
#: (the declustering indicator behind the runs estimator).
RUNS = BlockFunctional("runs", _runs_func, bound=1.0, kind="runs")

BUILTIN_FUNCTIONALS = {f.name: f for f in (BLOCK_MAX, FIRST_EXCEED, RUNS)}


class NormalizedSeries:
    """A series together with a resolved threshold.

    Normalized values (x/u where x > u, else 0) are computed on demand;
    pass ``materialize=True`` to cache the normalized array when many
    generic-functional scans will run over the same series.  Indicator
    kernels work directly off threshold comparisons on the raw values and
    never materialize anything.
    """

    def __init__(self, values, u: float, materialize: bool = False):
        self.values = as_series(values)
        if np.any(self.values > 0) and u <= 0:
            raise InvalidThresholdError(
                f"threshold u={u} must be positive when the series has positive entries"
            )
        self.u = float(u)
        self.n = self.values.size
        self._materialize = bool(materialize)
        self._cache: np.ndarray | None = None

    def exceed_mask(self) -> np.ndarray:
        """Boolean array: strict exceedances of the threshold."""
        return self.values > self.u

    def normalized(self) -> np.ndarray:
        """The full normalized array (cached only if materialize=True)."""
        if self._cache is not None:
            return self._cache
        out = np.where(self.values > self.u, self.values / self.u, 0.0)
        if self._materialize:
            out.setflags(write=False)
            self._cache = out
        return out

    def window(self, start: int, s: int) -> np.ndarray:
        """Normalized block of length s starting at 1-based index ``start``."""
        if not 1 <= start <= self.n - s + 1:
            raise WindowError(f"start={start} with s={s} outside series of length {self.n}")
        sl = self.values[start - 1 : start - 1 + s]
        return np.where(sl > self.u, sl / self.u, 0.0)


def normalize(values, thr: ThresholdSpec, materialize: bool = False) -> NormalizedSeries:
    """Attach a resolved threshold to a series.

    Resolves ``thr`` against the data if it is not already resolved.
    Element i of the result is x_i/u when x_i > u and 0 otherwise.
    """
    if thr.u is None:
        thr = thr.resolve(values)
    return NormalizedSeries(values, thr.u, materialize=materialize)


def sliding_window_max(x: np.ndarray, s: int) -> np.ndarray:
    """Maxima over all windows of length s: out[i] = max(x[i:i+s]).

    O(n) via per-block prefix/suffix maxima (the vectorized equivalent of
    a monotone-deque sliding max), so overlapping windows do not cost
    O(n*s).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if not 1 <= s <= n:
        raise WindowError(f"window length s={s} does not fit series of length {n}")
    if s == 1:
        return x.copy()
    pad = (-n) % s
    xp = np.concatenate([x, np.full(pad, -np.inf)]) if pad else x
    blocks = xp.reshape(-1, s)
    prefix = np.maximum.accumulate(blocks, axis=1).ravel()
    suffix = np.maximum.accumulate(blocks[:, ::-1], axis=1)[:, ::-1].ravel()
    return np.maximum(suffix[: n - s + 1], prefix[s - 1 : n])


def _indicator_window_values(ns: NormalizedSeries, s: int, kind: str) -> np.ndarray:
    """Per-start values of a built-in indicator functional, vectorized."""
    x, u, n = ns.values, ns.u, ns.n
    if kind == "first_exceed":
        return (x[: n - s + 1] > u).astype(np.float64)
    wmax = sliding_window_max(x, s)
    if kind == "block_max":
        return (wmax > u).astype(np.float64)
    if kind == "runs":
        first = x[: n - s + 1] > u
        if s == 1:
            return first.astype(np.float64)
        tail_max = sliding_window_max(x[1:], s - 1)[: n - s + 1]
        return (first & (tail_max <= u)).astype(np.float64)
    raise ValueError(f"unknown builtin kind {kind!r}")


def window_values(g: BlockFunctional, ns: NormalizedSeries, s: int) -> np.ndarray:
    """g evaluated on every block start: out[i] = g(block starting at i+1).

    Uses the O(n) indicator kernels for the built-ins and a per-window
    evaluation loop for generic functionals.
    """
    n = ns.n
    if not 1 <= s <= n:
        raise WindowError(f"block length s={s} does not fit series of length {n}")
    if g.kind != "generic":
        return _indicator_window_values(ns, s, g.kind)
    norm = ns.normalized()
    return np.array(
        [g(norm[i : i + s]) for i in range(n - s + 1)], dtype=np.float64
    )


def sliding_block_sum(g: BlockFunctional, ns: NormalizedSeries, s: int) -> float:
    """Sum of g over all n-s+1 sliding blocks of length s."""
    return float(window_values(g, ns, s).sum())


def disjoint_block_sum(g: BlockFunctional, ns: NormalizedSeries, s: int) -> float:
    """Sum of g over the floor(n/s) disjoint blocks starting at 1, s+1, ...

    The last disjoint block always fits inside the series: its window ends
    at floor(n/s)*s <= n.  This is asserted rather than padded around.
    """
    n = ns.n
    if not 1 <= s <= n:
        raise WindowError(f"block length s={s} does not fit series of length {n}")
    nblocks = n // s
    assert (nblocks - 1) * s + s <= n  # last disjoint block fits by construction
    vals = window_values(g, ns, s)
    return float(vals[: nblocks * s : s].sum())


def big_block_sums(
    g: BlockFunctional, ns: NormalizedSeries, scheme: BlockScheme, mode: str
) -> np.ndarray:
    """Per-big-block inner sums of g, one value per big block.

    mode="sliding": block i sums g over window starts (i-1)r+1 .. i*r.
    mode="disjoint": block i sums g over the r/s disjoint starts
    (i-1)r+1, (i-1)r+s+1, ...; requires r divisible by s.
    """
    if scheme.n != ns.n:
        raise SchemeError(f"scheme n={scheme.n} does not match series length {ns.n}")
    m, r, s = scheme.m, scheme.r, scheme.s
    if m == 0:
        raise InsufficientBlocksError(
            f"no complete big block: n={scheme.n}, s={s}, r={r}"
        )
    if mode == "sliding":
        vals = window_values(g, ns, s)[: m * r]
        return vals.reshape(m, r).sum(axis=1)
    if mode == "disjoint":
        scheme.require_divisible()
        vals = window_values(g, ns, s)
        starts = np.arange(0, m * r, s)  # 0-based starts, r/s per big block
        return vals[starts].reshape(m, r // s).sum(axis=1)
    raise ValueError(f"mode must be 'sliding' or 'disjoint', got {mode!r}")

"""Replicated Monte Carlo experiments over the simulators.

An experiment simulates R independent paths from a model with known
extremal index, runs the configured estimators on each, and aggregates:

* per-method bias/variance and standardized errors
  z = sqrt(n * v_hat) * (theta_hat - theta_true) / sqrt(theta*(theta*c-1)),
  with theta_true and the count variance constant c taken from the model
  oracle (the harness tests the theory, not a data pipeline);
* sliding vs disjoint variance dominance for each block functional, with
  a jackknife-based noise band;
* the matrix (Loewner-order) version of the same comparison over a
  functional set;
* equal-limit-law checks: pairwise variance ratios across estimators;
* a sup-CDF normality diagnostic on the standardized errors.

Threshold policy: the configuration names a rank k (or a quantile).  The
deterministic-threshold estimators use the exact marginal quantile of the
model at the matching level; the random-threshold estimator resolves the
k-th largest order statistic per replicate.  This keeps "deterministic
vs random threshold" a meaningful comparison within one experiment.

Determinism: replicate r draws from a counter-based stream keyed by
(master seed, r), results are reduced in replicate order, and files are
written with fixed 17-significant-digit formatting, so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .blocks import (
    BUILTIN_FUNCTIONALS,
    BlockScheme,
    NormalizedSeries,
    ThresholdSpec,
    disjoint_block_sum,
    sliding_block_sum,
)
from .errors import (
    ConfigError,
    HarnessAbort,
    InsufficientSampleError,
    NoExceedancesError,
)
from .estimators import (
    default_block_length,
    theta_disjoint,
    theta_runs,
    theta_sliding,
    theta_sliding_random_u,
)
from .models import ModelSpec, count_variance_limit, simulate
from .variance import (
    disjoint_sum_variance,
    plugin_asymptotic_variance,
    sliding_sum_variance,
)

__all__ = [
    "Bands",
    "ExperimentConfig",
    "ReplicateRow",
    "FunctionalRow",
    "ExperimentResult",
    "NormalityDiagnostic",
    "run_experiment",
    "summarize",
    "variance_dominance_check",
    "loewner_check",
    "equal_limit_law_check",
    "normality_diagnostic",
    "write_rows_csv",
    "write_stats_csv",
    "load_rows_csv",
    "load_stats_csv",
]

logger = logging.getLogger(__name__)

METHODS = ("disjoint", "sliding", "runs", "sliding_random_u")

ROWS_HEADER = "replicate,method,theta_hat,u_used,v_hat,n_exceed,z,status"
STATS_HEADER = (
    "replicate,functional,t_sliding,t_disjoint,ratio_sliding,ratio_disjoint,"
    "bb_var_sliding,bb_var_disjoint"
)


@dataclass(frozen=True)
class Bands:
    """Pass bands for the experiment verdicts."""

    var_ratio: float = 1.5
    normality_max_dev: float = 0.08
    se_multiplier: float = 3.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a replicated experiment needs, with derived defaults.

    Exactly one of ``rank_k`` and ``quantile`` must be set.  Block length
    defaults to ceil(sqrt(n/k)); the big-block length defaults to the
    multiple of s nearest sqrt(n * v) (at least 2s).
    """

    model: ModelSpec
    n: int
    replicates: int
    seed: int
    rank_k: int | None = None
    quantile: float | None = None
    s: int | None = None
    r: int | None = None
    estimators: tuple[str, ...] = METHODS
    functionals: tuple[str, ...] = ("block_max", "first_exceed")
    workers: int = 1
    denominator: str = "trimmed"
    bands: Bands = field(default_factory=Bands)
    max_failure_rate: float = 0.10

    def __post_init__(self) -> None:
        problems = []
        if self.n < 2:
            problems.append(f"n must be >= 2, got {self.n}")
        if self.replicates < 2:
            problems.append(f"replicates must be >= 2, got {self.replicates}")
        if self.seed < 0:
            problems.append(f"seed must be non-negative, got {self.seed}")
        if (self.rank_k is None) == (self.quantile is None):
            problems.append("exactly one of rank_k and quantile must be given")
        if self.rank_k is not None and not 1 <= self.rank_k < self.n:
            problems.append(f"rank_k={self.rank_k} out of range for n={self.n}")
        if self.quantile is not None and not 0.0 < self.quantile < 1.0:
            problems.append(f"quantile must be in (0,1), got {self.quantile}")
        for m in self.estimators:
            if m not in METHODS:
                problems.append(f"unknown estimator {m!r}")
        for g in self.functionals:
            if g not in BUILTIN_FUNCTIONALS:
                problems.append(f"unknown functional {g!r}")
        if not self.estimators:
            problems.append("estimator set must not be empty")
        if not self.functionals:
            problems.append("functional set must not be empty")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        if self.denominator not in ("trimmed", "full"):
            problems.append(f"denominator must be 'trimmed' or 'full', got {self.denominator!r}")
        if problems:
            raise ConfigError(problems)

    @property
    def v_nominal(self) -> float:
        """Target single-observation exceedance rate."""
        if self.rank_k is not None:
            return self.rank_k / self.n
        return 1.0 - self.quantile

    @property
    def k_rank(self) -> int:
        """Rank used by the random-threshold estimator."""
        if self.rank_k is not None:
            return self.rank_k
        return max(1, round(self.n * (1.0 - self.quantile)))

    @property
    def u_det(self) -> float:
        """Deterministic threshold: exact marginal quantile at 1 - v."""
        return self.model.marginal_quantile(1.0 - self.v_nominal)

    @property
    def s_resolved(self) -> int:
        return self.s if self.s is not None else default_block_length(self.n, self.k_rank)

    @property
    def r_resolved(self) -> int:
        if self.r is not None:
            return self.r
        s = self.s_resolved
        return s * max(2, round(math.sqrt(self.n * self.v_nominal) / s))

    @property
    def scheme(self) -> BlockScheme:
        return BlockScheme(self.n, self.s_resolved, self.r_resolved)

    @property
    def theta_true(self) -> float:
        return self.model.theta_true

    @property
    def count_variance(self) -> float:
        return count_variance_limit(self.model)

    @property
    def plugin_variance(self) -> float:
        return plugin_asymptotic_variance(self.theta_true, self.count_variance)

    def resolved(self) -> dict:
        """Fully-resolved effective configuration, JSON-ready."""
        model = {"family": self.model.family}
        if self.model.alpha is not None:
            model["alpha"] = self.model.alpha
        if self.model.q is not None:
            model["q"] = self.model.q
        if self.model.weights is not None:
            model["weights"] = list(self.model.weights)
        return {
            "schema": 1,
            "model": model,
            "n": self.n,
            "replicates": self.replicates,
            "seed": self.seed,
            "threshold": (
                {"kind": "rank", "k": self.rank_k}
                if self.rank_k is not None
                else {"kind": "quantile", "p": self.quantile}
            ),
            "s": self.s_resolved,
            "r": self.r_resolved,
            "estimators": list(self.estimators),
            "functionals": list(self.functionals),
            # workers deliberately not echoed: outputs are worker-invariant,
            # so parallelism is not part of the experiment's identity
            "denominator": self.denominator,
            "bands": {
                "var_ratio": self.bands.var_ratio,
                "normality_max_dev": self.bands.normality_max_dev,
                "se_multiplier": self.bands.se_multiplier,
            },
            "derived": {
                "v_nominal": self.v_nominal,
                "k_rank": self.k_rank,
                "u_deterministic": self.u_det,
                "theta_true": self.theta_true,
                "count_variance": self.count_variance,
                "plugin_variance": self.plugin_variance,
                "advisories": [
                    {"level": lvl, "message": msg}
                    for lvl, msg, _ in self.scheme.advisories(self.v_nominal)
                ],
            },
        }

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        """Build a config from a JSON-style dict, rejecting unknown keys.

        All schema violations are collected and reported together.
        """
        problems: list[str] = []
        known = {
            "schema", "model", "n", "replicates", "seed", "threshold", "s", "r",
            "estimators", "functionals", "workers", "denominator", "bands",
        }
        for key in raw:
            if key not in known:
                problems.append(f"unknown key {key!r}")
        if raw.get("schema") != 1:
            problems.append(f"schema must be 1, got {raw.get('schema')!r}")
        model = None
        mraw = raw.get("model")
        if not isinstance(mraw, dict):
            problems.append("model must be an object with a 'family' field")
        else:
            extra = set(mraw) - {"family", "alpha", "q", "weights"}
            if extra:
                problems.append(f"unknown model keys {sorted(extra)}")
            try:
                model = ModelSpec(
                    family=mraw.get("family", ""),
                    alpha=mraw.get("alpha"),
                    q=mraw.get("q"),
                    weights=tuple(mraw["weights"]) if "weights" in mraw else None,
                )
            except ValueError as exc:
                problems.append(str(exc))
        rank_k = quantile = None
        traw = raw.get("threshold")
        if not isinstance(traw, dict) or "kind" not in traw:
            problems.append("threshold must be an object with a 'kind' field")
        elif traw["kind"] == "rank":
            extra = set(traw) - {"kind", "k"}
            if extra:
                problems.append(f"unknown threshold keys {sorted(extra)}")
            rank_k = traw.get("k")
            if not isinstance(rank_k, int):
                problems.append("threshold.k must be an integer")
        elif traw["kind"] == "quantile":
            extra = set(traw) - {"kind", "p"}
            if extra:
                problems.append(f"unknown threshold keys {sorted(extra)}")
            quantile = traw.get("p")
            if not isinstance(quantile, (int, float)):
                problems.append("threshold.p must be a number")
        else:
            problems.append(f"threshold.kind must be 'rank' or 'quantile', got {traw['kind']!r}")
        bands = Bands()
        braw = raw.get("bands")
        if braw is not None:
            if not isinstance(braw, dict):
                problems.append("bands must be an object")
            else:
                known_bands = {"var_ratio", "normality_max_dev", "se_multiplier"}
                extra = set(braw) - known_bands
                if extra:
                    problems.append(f"unknown bands keys {sorted(extra)}")
                else:
                    bands = Bands(**{k: float(v) for k, v in braw.items()})
        for intkey in ("n", "replicates", "seed"):
            if not isinstance(raw.get(intkey), int):
                problems.append(f"{intkey} must be an integer")
        if problems:
            raise ConfigError(problems)
        return ExperimentConfig(
            model=model,
            n=raw["n"],
            replicates=raw["replicates"],
            seed=raw["seed"],
            rank_k=rank_k,
            quantile=quantile,
            s=raw.get("s"),
            r=raw.get("r"),
            estimators=tuple(raw.get("estimators", METHODS)),
            functionals=tuple(raw.get("functionals", ("block_max", "first_exceed"))),
            workers=raw.get("workers", 1),
            denominator=raw.get("denominator", "trimmed"),
            bands=bands,
        )


@dataclass(frozen=True)
class ReplicateRow:
    """One estimator applied to one replicate."""

    replicate: int
    method: str
    theta_hat: float | None
    u_used: float | None
    v_hat: float | None
    n_exceed: int
    z: float | None
    status: str  # "ok" | "failed"


@dataclass(frozen=True)
class FunctionalRow:
    """Block statistics of one functional on one replicate.

    t_* are the threshold-level statistics normalized with the nominal
    exceedance rate (numerators of the dominance comparison); ratio_* are
    the self-normalized versions; bb_var_* are the within-series big-block
    variance plug-ins.
    """

    replicate: int
    functional: str
    t_sliding: float
    t_disjoint: float
    ratio_sliding: float | None
    ratio_disjoint: float | None
    bb_var_sliding: float | None
    bb_var_disjoint: float | None


@dataclass
class ExperimentResult:
    """Everything an experiment produced, rows plus derived summary."""

    config: ExperimentConfig
    rows: list[ReplicateRow]
    stats: list[FunctionalRow]
    summary: dict

    def write(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        write_rows_csv(os.path.join(out_dir, "rows.csv"), self.rows)
        write_stats_csv(os.path.join(out_dir, "stats.csv"), self.stats)
        _write_json(os.path.join(out_dir, "summary.json"), self.summary)
        _write_json(
            os.path.join(out_dir, "effective_config.json"), self.config.resolved()
        )

    @property
    def passed(self) -> bool:
        return all(
            v["status"].startswith("skipped") or v["status"] == "pass"
            for v in self.summary["verdicts"].values()
        )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _parse_opt_float(tok: str) -> float | None:
    return None if tok == "" else float(tok)


def write_rows_csv(path: str, rows: Sequence[ReplicateRow]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(ROWS_HEADER + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    [
                        str(r.replicate), r.method, _fmt(r.theta_hat), _fmt(r.u_used),
                        _fmt(r.v_hat), str(r.n_exceed), _fmt(r.z), r.status,
                    ]
                )
                + "\n"
            )


def load_rows_csv(path: str) -> list[ReplicateRow]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != ROWS_HEADER:
            raise ValueError(f"unexpected rows header {header!r}")
        for line in fh:
            tok = line.rstrip("\n").split(",")
            out.append(
                ReplicateRow(
                    replicate=int(tok[0]),
                    method=tok[1],
                    theta_hat=_parse_opt_float(tok[2]),
                    u_used=_parse_opt_float(tok[3]),
                    v_hat=_parse_opt_float(tok[4]),
                    n_exceed=int(tok[5]),
                    z=_parse_opt_float(tok[6]),
                    status=tok[7],
                )
            )
    return out


def write_stats_csv(path: str, stats: Sequence[FunctionalRow]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(STATS_HEADER + "\n")
        for r in stats:
            fh.write(
                ",".join(
                    [
                        str(r.replicate), r.functional, _fmt(r.t_sliding),
                        _fmt(r.t_disjoint), _fmt(r.ratio_sliding), _fmt(r.ratio_disjoint),
                        _fmt(r.bb_var_sliding), _fmt(r.bb_var_disjoint),
                    ]
                )
                + "\n"
            )


def load_stats_csv(path: str) -> list[FunctionalRow]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != STATS_HEADER:
            raise ValueError(f"unexpected stats header {header!r}")
        for line in fh:
            tok = line.rstrip("\n").split(",")
            out.append(
                FunctionalRow(
                    replicate=int(tok[0]),
                    functional=tok[1],
                    t_sliding=float(tok[2]),
                    t_disjoint=float(tok[3]),
                    ratio_sliding=_parse_opt_float(tok[4]),
                    ratio_disjoint=_parse_opt_float(tok[5]),
                    bb_var_sliding=_parse_opt_float(tok[6]),
                    bb_var_disjoint=_parse_opt_float(tok[7]),
                )
            )
    return out


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _replicate(cfg: ExperimentConfig, rep: int) -> tuple[list[ReplicateRow], list[FunctionalRow]]:
    x = simulate(cfg.model, cfg.n, (cfg.seed, rep))
    n = cfg.n
    s = cfg.s_resolved
    u = cfg.u_det
    theta = cfg.theta_true
    plugin = cfg.plugin_variance
    v_det = float(np.count_nonzero(x > u)) / n

    rows: list[ReplicateRow] = []
    for method in cfg.estimators:
        try:
            if method == "disjoint":
                est = theta_disjoint(x, u, s, denominator=cfg.denominator)
                v_row = v_det
            elif method == "sliding":
                est = theta_sliding(x, u, s, denominator=cfg.denominator)
                v_row = v_det
            elif method == "runs":
                est = theta_runs(x, u, s, denominator=cfg.denominator)
                v_row = v_det
            else:
                est = theta_sliding_random_u(x, cfg.k_rank, s)
                v_row = est.n_exceed / n
            z = None
            if plugin > 0.0 and v_row > 0.0:
                z = math.sqrt(n * v_row) * (est.theta_hat - theta) / math.sqrt(plugin)
            rows.append(
                ReplicateRow(rep, method, est.theta_hat, est.u_used, v_row,
                             est.n_exceed, z, "ok")
            )
        except NoExceedancesError:
            if method == "sliding_random_u":
                u_row = ThresholdSpec.rank(cfg.k_rank).resolve(x).u
                v_row = float(np.count_nonzero(x > u_row)) / n
            else:
                u_row, v_row = u, v_det
            rows.append(ReplicateRow(rep, method, None, u_row, v_row, 0, None, "failed"))

    ns = NormalizedSeries(x, u)
    den_trim = int(np.count_nonzero(x[: n - s + 1] > u))
    v_nom = cfg.v_nominal
    scheme = cfg.scheme
    stats: list[FunctionalRow] = []
    for gname in cfg.functionals:
        g = BUILTIN_FUNCTIONALS[gname]
        s_slide = sliding_block_sum(g, ns, s)
        s_disj = disjoint_block_sum(g, ns, s)
        t_s = s_slide / (n * v_nom * s * g.scale)
        t_d = s_disj / (n * v_nom * g.scale)
        ratio_s = s_slide / (s * g.scale * den_trim) if den_trim else None
        ratio_d = s_disj / (g.scale * den_trim) if den_trim else None
        try:
            bb_s = sliding_sum_variance(g, x, u, scheme)
            bb_d = disjoint_sum_variance(g, x, u, scheme)
        except NoExceedancesError:
            bb_s = bb_d = None
        stats.append(FunctionalRow(rep, gname, t_s, t_d, ratio_s, ratio_d, bb_s, bb_d))
    return rows, stats


def _replicate_task(args) -> tuple[int, tuple[list[ReplicateRow], list[FunctionalRow]]]:
    cfg, rep = args
    return rep, _replicate(cfg, rep)


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> ExperimentResult:
    """Run all replicates, summarize, and (optionally) write output files.

    Deterministic given the config, including the master seed, for any
    worker count.  Aborts when more than ``max_failure_rate`` of the
    replicate/method rows fail with no exceedances.
    """
    for level, message, _ in cfg.scheme.advisories(cfg.v_nominal):
        if level != "green":
            logger.warning("sequence advisory (%s): %s", level, message)
    tasks = [(cfg, rep) for rep in range(cfg.replicates)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunk = max(1, cfg.replicates // (cfg.workers * 8))
            results = dict(pool.map(_replicate_task, tasks, chunksize=chunk))
    else:
        results = dict(map(_replicate_task, tasks))
    rows: list[ReplicateRow] = []
    stats: list[FunctionalRow] = []
    for rep in range(cfg.replicates):
        rep_rows, rep_stats = results[rep]
        rows.extend(rep_rows)
        stats.extend(rep_stats)
    n_failed = sum(1 for r in rows if r.status != "ok")
    if n_failed > cfg.max_failure_rate * len(rows):
        raise HarnessAbort(
            f"{n_failed}/{len(rows)} replicate rows failed with no exceedances "
            f"(limit {cfg.max_failure_rate:.0%}); raise the exceedance rate or n"
        )
    summary = summarize(cfg, rows, stats)
    result = ExperimentResult(cfg, rows, stats, summary)
    if out_dir is not None:
        result.write(out_dir)
    return result


# --------------------------------------------------------------------------
# summaries and verdicts


def _json_float(x) -> float | None:
    """Floats for the summary document; non-finite becomes None."""
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _jackknife_se_of_variance_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Delete-one jackknife SE of Var(a) - Var(b) over paired samples."""
    n = a.size
    if n < 3:
        return float("inf")

    def loo_var(x: np.ndarray) -> np.ndarray:
        s, q = x.sum(), np.dot(x, x)
        mean_i = (s - x) / (n - 1)
        return (q - x**2 - (n - 1) * mean_i**2) / (n - 2)

    d = loo_var(a) - loo_var(b)
    return float(np.sqrt((n - 1) / n * np.sum((d - d.mean()) ** 2)))


def _jackknife_se_of_min_eigenvalue(slide: np.ndarray, disj: np.ndarray) -> float:
    """Delete-one jackknife SE of lambda_min(cov(disj) - cov(slide))."""
    n = slide.shape[0]
    if n < 3:
        return float("inf")
    idx = np.arange(n)
    vals = np.empty(n)
    for i in range(n):
        keep = idx != i
        diff = np.cov(disj[keep].T) - np.cov(slide[keep].T)
        vals[i] = np.linalg.eigvalsh(np.atleast_2d(diff))[0]
    return float(np.sqrt((n - 1) / n * np.sum((vals - vals.mean()) ** 2)))


@dataclass(frozen=True)
class NormalityDiagnostic:
    """Location/scale plus sup-CDF distance of a sample from N(0, 1)."""

    mean: float
    sd: float
    max_cdf_dev: float


def normality_diagnostic(z, center: bool = True) -> NormalityDiagnostic:
    """Sample mean, sd, and the sup distance between the empirical CDF and
    the standard normal CDF.

    With ``center=True`` (the default) the sample is mean-centered before
    the CDF comparison, so the diagnostic tests distributional shape and
    scale; the location offset is reported via ``mean`` but does not
    drive ``max_cdf_dev``.  Finite-sample bias of block estimators shifts
    the location well before it distorts the shape, and the location is
    deliberately not part of the hard gates.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size < 50:
        raise InsufficientSampleError(f"need at least 50 values, got {z.size}")
    mean = float(z.mean())
    sd = float(z.std(ddof=1))
    zz = np.sort(z - mean if center else z)
    cdf = ndtr(zz)
    i = np.arange(1, z.size + 1, dtype=np.float64)
    dev = max(float(np.max(i / z.size - cdf)), float(np.max(cdf - (i - 1) / z.size)))
    return NormalityDiagnostic(mean, sd, dev)


def _result_of(obj) -> "ExperimentResult":
    if isinstance(obj, ExperimentConfig):
        return run_experiment(obj)
    return obj


def _stat_matrix(stats: Sequence[FunctionalRow], functional: str, attr: str) -> np.ndarray:
    vals = [getattr(r, attr) for r in stats if r.functional == functional]
    return np.array([v for v in vals], dtype=np.float64)


def variance_dominance_check(obj, functional: str | None = None) -> dict:
    """Sliding-vs-disjoint variance comparison across replicates.

    For each functional, compares the empirical variances of the sliding
    and disjoint block statistics (and of their self-normalized ratio
    versions): dominated iff Var_sliding <= Var_disjoint plus
    ``se_multiplier`` jackknife standard errors of the difference.
    """
    result = _result_of(obj)
    cfg = result.config
    cfg.scheme.require_divisible()
    scale = cfg.n * cfg.v_nominal
    names = [functional] if functional else list(cfg.functionals)
    per = {}
    all_pass = True
    for name in names:
        entry = {}
        for label, a_attr, b_attr in (
            ("threshold_level", "t_sliding", "t_disjoint"),
            ("ratio", "ratio_sliding", "ratio_disjoint"),
        ):
            avals = [getattr(r, a_attr) for r in result.stats if r.functional == name]
            bvals = [getattr(r, b_attr) for r in result.stats if r.functional == name]
            pairs = [(a, b) for a, b in zip(avals, bvals) if a is not None and b is not None]
            a = np.array([p[0] for p in pairs]) * math.sqrt(scale)
            b = np.array([p[1] for p in pairs]) * math.sqrt(scale)
            var_s = float(np.var(a, ddof=1)) if len(pairs) >= 2 else float("nan")
            var_d = float(np.var(b, ddof=1)) if len(pairs) >= 2 else float("nan")
            se = _jackknife_se_of_variance_diff(a, b)
            # an infinite band (too few replicates to jackknife) passes trivially
            ok = not var_s - var_d > cfg.bands.se_multiplier * se
            all_pass = all_pass and ok
            entry[label] = {
                "var_sliding": _json_float(var_s),
                "var_disjoint": _json_float(var_d),
                "diff": _json_float(var_s - var_d),
                "se_jackknife": _json_float(se),
                "n_used": len(pairs),
                "pass": ok,
            }
        per[name] = entry
    return {"status": "pass" if all_pass else "fail", "per_functional": per}


def loewner_check(obj, functionals: Sequence[str] | None = None) -> dict:
    """Matrix version of the dominance check over a functional set.

    Builds the across-replicate covariance matrices of the scaled sliding
    and disjoint statistics and tests whether disjoint - sliding is
    positive semi-definite up to ``se_multiplier`` jackknife SEs of its
    minimum eigenvalue.  A singleton set reduces to the scalar variance
    comparison of ``variance_dominance_check``.
    """
    result = _result_of(obj)
    cfg = result.config
    cfg.scheme.require_divisible()
    names = list(functionals) if functionals is not None else list(cfg.functionals)
    if not names:
        raise ValueError("loewner check needs at least 1 functional")
    if len(names) > 16:
        raise ValueError("functional sets larger than 16 are not supported")
    scale = math.sqrt(cfg.n * cfg.v_nominal)
    slide = np.column_stack([_stat_matrix(result.stats, g, "t_sliding") for g in names]) * scale
    disj = np.column_stack([_stat_matrix(result.stats, g, "t_disjoint") for g in names]) * scale
    diff = np.cov(disj.T) - np.cov(slide.T)
    lam_min = float(np.linalg.eigvalsh(np.atleast_2d(diff))[0])
    se = _jackknife_se_of_min_eigenvalue(slide, disj)
    ok = not lam_min < -cfg.bands.se_multiplier * se
    return {
        "status": "pass" if ok else "fail",
        "functionals": names,
        "min_eigenvalue": _json_float(lam_min),
        "se_jackknife": _json_float(se),
    }


def equal_limit_law_check(obj) -> dict:
    """Pairwise variance ratios of the scaled estimation errors.

    Errors are scaled by the deterministic oracle factor
    sqrt(n * v_nominal) (the standardization constants come from the
    model, not the data), so the ratios reduce to plain ratios of
    Var(theta_hat) across estimators.  Compared pairs: every pair within
    {disjoint, sliding, runs}, plus random-threshold sliding against
    deterministic-threshold sliding.  All ratios must lie in
    [1/band, band].  Skipped when the plug-in limit variance is zero.
    """
    result = _result_of(obj)
    cfg = result.config
    if cfg.plugin_variance <= 0.0:
        return {"status": "skipped_degenerate", "ratios": {}, "variances": {}}
    theta = cfg.theta_true
    scale = math.sqrt(cfg.n * cfg.v_nominal)
    variances = {}
    for method in cfg.estimators:
        w = [
            scale * (r.theta_hat - theta)
            for r in result.rows
            if r.method == method and r.status == "ok"
        ]
        if len(w) >= 2:
            variances[method] = float(np.var(np.array(w), ddof=1))
    band = cfg.bands.var_ratio
    ratios = {}
    all_pass = True
    core = [m for m in ("disjoint", "sliding", "runs") if m in variances]
    pairs = [(a, b) for i, a in enumerate(core) for b in core[i + 1 :]]
    if "sliding_random_u" in variances and "sliding" in variances:
        pairs.append(("sliding_random_u", "sliding"))
    for a, b in pairs:
        if variances[b] > 0.0:
            ratio = variances[a] / variances[b]
            ratios[f"{a}/{b}"] = _json_float(ratio)
            all_pass = all_pass and 1.0 / band <= ratio <= band
        else:
            ratios[f"{a}/{b}"] = None
    return {
        "status": "pass" if all_pass else "fail",
        "variances": variances,
        "ratios": ratios,
        "band": band,
    }


def summarize(cfg: ExperimentConfig, rows: Sequence[ReplicateRow],
              stats: Sequence[FunctionalRow]) -> dict:
    """Aggregate per-replicate rows into the summary document.

    Pure function of (config, rows, stats): re-running it on rows loaded
    back from the CSV files reproduces the written summary exactly.
    """
    theta = cfg.theta_true
    plugin = cfg.plugin_variance
    degenerate = plugin <= 0.0
    est_summary = {}
    normality_per = {}
    normality_pass = True
    for method in cfg.estimators:
        ok_rows = [r for r in rows if r.method == method and r.status == "ok"]
        failed = sum(1 for r in rows if r.method == method and r.status != "ok")
        th = np.array([r.theta_hat for r in ok_rows])
        entry = {"n_success": len(ok_rows), "n_failed": failed}
        if len(ok_rows) >= 2:
            w = np.array(
                [math.sqrt(cfg.n * r.v_hat) * (r.theta_hat - theta) for r in ok_rows]
            )
            entry.update(
                mean=float(th.mean()),
                bias=float(th.mean() - theta),
                variance=float(np.var(th, ddof=1)),
                var_scaled=float(np.var(w, ddof=1)),
            )
            zvals = np.array([r.z for r in ok_rows if r.z is not None])
            if not degenerate and zvals.size >= 50:
                diag = normality_diagnostic(zvals, center=True)
                entry.update(
                    z_mean=diag.mean, z_sd=diag.sd, z_max_cdf_dev=diag.max_cdf_dev
                )
                normality_per[method] = {
                    "mean": diag.mean,
                    "sd": diag.sd,
                    "max_cdf_dev": diag.max_cdf_dev,
                }
                normality_pass = normality_pass and (
                    diag.max_cdf_dev < cfg.bands.normality_max_dev
                )
        est_summary[method] = entry

    func_summary = {}
    for name in cfg.functionals:
        sub = [r for r in stats if r.functional == name]
        scale = cfg.n * cfg.v_nominal
        t_s = np.array([r.t_sliding for r in sub]) * math.sqrt(scale)
        t_d = np.array([r.t_disjoint for r in sub]) * math.sqrt(scale)
        bb_s = np.array([r.bb_var_sliding for r in sub if r.bb_var_sliding is not None])
        bb_d = np.array([r.bb_var_disjoint for r in sub if r.bb_var_disjoint is not None])
        func_summary[name] = {
            "var_t_sliding_scaled": float(np.var(t_s, ddof=1)) if t_s.size >= 2 else None,
            "var_t_disjoint_scaled": float(np.var(t_d, ddof=1)) if t_d.size >= 2 else None,
            "mean_bb_var_sliding": float(bb_s.mean()) if bb_s.size else None,
            "mean_bb_var_disjoint": float(bb_d.mean()) if bb_d.size else None,
        }

    shell = ExperimentResult(cfg, list(rows), list(stats), {})
    divisible = cfg.r_resolved % cfg.s_resolved == 0
    if divisible:
        dominance = variance_dominance_check(shell)
        loewner = (
            loewner_check(shell)
            if len(cfg.functionals) >= 2
            else {"status": "skipped_degenerate", "reason": "needs >= 2 functionals"}
        )
    else:
        dominance = {"status": "skipped_degenerate", "reason": "r not a multiple of s"}
        loewner = {"status": "skipped_degenerate", "reason": "r not a multiple of s"}
    equal_law = equal_limit_law_check(shell)
    if degenerate:
        normality = {"status": "skipped_degenerate", "per_method": {}}
    elif not normality_per:
        normality = {"status": "skipped_insufficient", "per_method": {}}
    else:
        normality = {
            "status": "pass" if normality_pass else "fail",
            "per_method": normality_per,
        }

    n_failed = sum(1 for r in rows if r.status != "ok")
    return {
        "schema": 1,
        "model": cfg.model.label(),
        "theta_true": theta,
        "count_variance": cfg.count_variance,
        "plugin_variance": plugin,
        "n": cfg.n,
        "replicates": cfg.replicates,
        "rows_total": len(rows),
        "rows_failed": n_failed,
        "estimators": est_summary,
        "functionals": func_summary,
        "verdicts": {
            "dominance": dominance,
            "loewner": loewner,
            "equal_law": equal_law,
            "normality": normality,
        },
    }

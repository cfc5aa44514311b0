"""Gaussian models, reproducible Monte Carlo, and summary reports.

Sampling uses a counter-based generator (Philox) keyed by (seed, sample
index): sample i always occupies the same slice of the word stream, so
estimates are bit-reproducible for a fixed seed no matter how the work is
sharded or how many worker threads run the shards.  Reductions are performed
in shard order to keep floating-point sums identical as well.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from . import measures
from .measures import ProbabilityMeasure, functional_M
from .metric_core import FiniteMetricSpace, build_from_covariance, greedy_cover_size, greedy_packing

JITTER_START = 1e-12
JITTER_MAX = 1e-6


class FactorizationError(RuntimeError):
    """Cholesky failed even after escalating jitter to JITTER_MAX."""


@dataclass(frozen=True)
class GaussianModel:
    """PSD covariance with a Cholesky factor and the induced metric space."""

    covariance: np.ndarray
    factor: np.ndarray
    jitter: float
    space: FiniteMetricSpace

    @property
    def n(self) -> int:
        return self.covariance.shape[0]

    @property
    def diagonal_factor(self) -> bool:
        return bool(np.count_nonzero(self.factor - np.diag(np.diag(self.factor))) == 0)


def build_model(cov) -> GaussianModel:
    """Factor a covariance, escalating jitter (doubling from 1e-12 to 1e-6)."""
    C = np.array(cov, dtype=float)
    C = (C + C.T) / 2.0
    space = build_from_covariance(C)
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(C + jitter * np.eye(C.shape[0]))
            break
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = JITTER_START
            elif jitter >= JITTER_MAX:
                raise FactorizationError(
                    f"cholesky failed at maximum jitter {JITTER_MAX}") from None
            else:
                jitter = min(jitter * 2.0, JITTER_MAX)
    err = np.abs(L @ L.T - C).max(initial=0.0)
    scale = 1.0 + np.abs(C).max(initial=0.0)
    if err > 1e-6 * scale:
        raise FactorizationError(f"reconstruction error {err} exceeds tolerance")
    return GaussianModel(covariance=C, factor=L, jitter=jitter, space=space)


# ---------------------------------------------------------------------------
# counter-based sampling


def _words_per_sample(n: int) -> int:
    return -(-max(n, 1) // 4) * 4  # Philox emits 4 uint64 words per counter step


def standard_normal_block(seed: int, start: int, stop: int, n: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the i.i.d. N(0,1) stream for this seed.

    Sample i owns words [i*w, (i+1)*w) of the Philox word stream (w = n
    rounded up to a counter block), so any sharding reproduces the same
    values.  Uniforms are clamped away from 0 before the inverse CDF.
    """
    if stop <= start:
        return np.empty((0, n))
    w = _words_per_sample(n)
    bg = Philox(key=seed, counter=start * (w // 4))
    u = Generator(bg).random((stop - start, w))
    u = np.maximum(u[:, :n], 2.0 ** -53)
    return ndtri(u)


def sample_paths(model: GaussianModel, start: int, stop: int, seed: int) -> np.ndarray:
    """Process samples ``start..stop-1`` as rows (factor @ z per sample)."""
    z = standard_normal_block(seed, start, stop, model.n)
    if model.diagonal_factor:
        return z * np.diag(model.factor)
    return z @ model.factor.T


def _default_shard(n: int) -> int:
    return max(256, (1 << 21) // _words_per_sample(n))


def _map_shards(model, n_samples, seed, threads, per_block):
    """Apply per_block to each shard; return results in shard order."""
    shard = _default_shard(model.n)
    bounds = [(s, min(s + shard, n_samples)) for s in range(0, n_samples, shard)]

    def work(b):
        return per_block(sample_paths(model, b[0], b[1], seed))

    if threads and threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(work, bounds))
    return [work(b) for b in bounds]


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class SupremumEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int


def estimate_sup(model: GaussianModel, n_samples: int, seed: int,
                 threads: int = 1) -> SupremumEstimate:
    """Monte Carlo E sup_t X(t): mean of the per-sample max coordinate."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    parts = _map_shards(model, n_samples, seed, threads,
                        lambda x: (x.max(axis=1).sum(), np.square(x.max(axis=1)).sum()))
    s = sum(p[0] for p in parts)
    sq = sum(p[1] for p in parts)
    mean = s / n_samples
    var = max(sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
    return SupremumEstimate(mean=float(mean), stderr=float(math.sqrt(var / n_samples)),
                            n_samples=n_samples, seed=seed)


@dataclass(frozen=True)
class ArgmaxDistribution:
    measure: ProbabilityMeasure
    tie_count: int
    n_samples: int
    seed: int


def argmax_distribution(model: GaussianModel, n_samples: int, seed: int,
                        threads: int = 1) -> ArgmaxDistribution:
    """Empirical law of the argmax index; ties break to the lowest index.

    Exact ties are measure-zero for nondegenerate covariances, but the
    jitter used to factor rank-deficient ones blurs genuinely tied
    coordinates by O(sqrt(jitter)); coordinates within that blur of the
    maximum are counted as tied.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    tol = 0.0 if model.jitter == 0.0 else 10.0 * math.sqrt(2.0 * model.jitter)

    def per_block(x):
        m = x.max(axis=1)
        tied = (m[:, None] - x) <= tol
        idx = tied.argmax(axis=1)  # first index within tolerance of the max
        counts = np.bincount(idx, minlength=model.n)
        ties = int(np.sum(tied.sum(axis=1) > 1))
        return counts, ties

    parts = _map_shards(model, n_samples, seed, threads, per_block)
    counts = np.sum([p[0] for p in parts], axis=0)
    ties = sum(p[1] for p in parts)
    return ArgmaxDistribution(
        measure=ProbabilityMeasure(model.space, counts / n_samples),
        tie_count=ties, n_samples=n_samples, seed=seed)


@dataclass(frozen=True)
class ModulusEstimate:
    delta: float
    value: float
    stderr: float


def estimate_modulus(model: GaussianModel, delta: float, n_samples: int, seed: int,
                     threads: int = 1) -> ModulusEstimate:
    """S(delta): mean of max |X_s - X_t| over pairs with d(s, t) <= delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    D = model.space.dist
    ii, jj = np.triu_indices(model.n, k=1)
    keep = D[ii, jj] <= delta
    ii, jj = ii[keep], jj[keep]
    if ii.size == 0:
        warnings.warn("no admissible pair at this delta; modulus is trivially 0")
        return ModulusEstimate(delta=float(delta), value=0.0, stderr=0.0)

    def per_block(x):
        m = np.abs(x[:, ii] - x[:, jj]).max(axis=1)
        return m.sum(), np.square(m).sum(), m.shape[0]

    parts = _map_shards(model, n_samples, seed, threads, per_block)
    s = sum(p[0] for p in parts)
    sq = sum(p[1] for p in parts)
    mean = s / n_samples
    var = max(sq - n_samples * mean * mean, 0.0) / max(n_samples - 1, 1)
    return ModulusEstimate(delta=float(delta), value=float(mean),
                           stderr=float(math.sqrt(var / n_samples)))


# ---------------------------------------------------------------------------
# structural bounds and checks


def sudakov_bound(space: FiniteMetricSpace):
    """max over separations a of a * sqrt(log2 m(a)), without the constant.

    m(a) is the greedy packing size at pairwise distance >= a.  Returns
    (value, (a, m)) with the maximizing witness.
    """
    if space.n < 2:
        raise ValueError("sudakov_bound needs at least 2 points")
    best = (0.0, (0.0, 1))
    for a in space.distinct_distances():
        m = len(greedy_packing(space, float(a), strict=False))
        val = float(a) * math.sqrt(math.log2(m)) if m > 1 else 0.0
        if val > best[0]:
            best = (val, (float(a), m))
    return best


def concentration_check(model: GaussianModel, u_grid, n_samples: int, seed: int,
                        threads: int = 1):
    """Empirical tails of |sup - mean sup| against 2 exp(-u^2 / 2 sigma^2).

    sigma is the largest pointwise standard deviation (the Lipschitz
    constant of the supremum in the underlying Gaussian); the canonical
    diameter would undershoot it for strongly correlated coordinates.
    Returns a list of rows (u, empirical, bound, stderr, flagged);
    zero-variance models yield an empty table with a warning.
    """
    sigma = math.sqrt(float(np.max(np.diag(model.covariance))))
    if sigma <= 0:
        warnings.warn("degenerate model: zero variance, concentration check skipped")
        return []
    u_grid = [float(u) for u in u_grid]
    parts = _map_shards(model, n_samples, seed, threads,
                        lambda x: (x.max(axis=1).sum(), x.max(axis=1)))
    mean = sum(p[0] for p in parts) / n_samples
    sups = np.concatenate([p[1] for p in parts])
    rows = []
    for u in u_grid:
        emp = float(np.mean(np.abs(sups - mean) >= u))
        bound = 2.0 * math.exp(-u * u / (2.0 * sigma * sigma))
        se = math.sqrt(max(emp * (1 - emp), 1.0 / n_samples) / n_samples)
        rows.append({"u": u, "empirical": emp, "bound": bound,
                     "stderr": se, "flagged": emp > bound + 3.0 * se})
    return rows


# ---------------------------------------------------------------------------
# summary reports


def supremum_report(model: GaussianModel, n_samples: int, seed: int, delta_grid,
                    threads: int = 1, restarts: int = 2, max_iter: int = 150):
    """Empirical ratio E sup / M(mu_F, mu_F) and the two-sided S(delta) proxy.

    For each delta the report carries the Monte Carlo S(delta), the upper
    proxy M(mu^, mu^, 2 delta) at the best measure found by simplex search,
    and the lower expression max_c (M(mu^, mu^, c) - c sqrt(log2 N^(delta))).
    All comparison constants are universal and unknown; only ratios are
    reported here.
    """
    from . import search  # deferred: search pulls estimators from this module

    est = estimate_sup(model, n_samples, seed, threads)
    amd = argmax_distribution(model, n_samples, seed + 1, threads)
    space = model.space
    report = {"esup": est.mean, "esup_stderr": est.stderr, "degenerate": space.n < 2}
    if space.n < 2 or space.diam == 0:
        report.update({"m_self_muF": 0.0, "ratio": 0.0, "flag": "degenerate", "modulus": []})
        return report
    m_mu_f = functional_M(space, amd.measure, amd.measure)
    if math.isinf(m_mu_f):
        report.update({"m_self_muF": math.inf, "ratio": 0.0, "flag": "infinite functional"})
    else:
        report.update({"m_self_muF": m_mu_f, "ratio": est.mean / m_mu_f if m_mu_f > 0 else 0.0,
                       "flag": None})
    report["mu_F"] = [float(v) for v in amd.measure.weights]
    report["tie_count"] = amd.tie_count

    delta_grid = [float(d) for d in delta_grid]
    c_grid = sorted(set(delta_grid) | {space.diam})
    cache = {}

    def best_m_self(c):
        if c not in cache:
            res = search.maximize_M_self(space, delta=c, init_measures=[amd.measure],
                                         restarts=restarts, max_iter=max_iter, seed=seed)
            cache[c] = res.objective
        return cache[c]

    rows = []
    for i, d in enumerate(delta_grid):
        mod = estimate_modulus(model, d, n_samples, seed + 2 + i, threads)
        nhat = greedy_cover_size(space, d)
        log_n = math.sqrt(math.log2(nhat)) if nhat > 1 else 0.0
        upper = best_m_self(min(2.0 * d, space.diam)) + d * log_n
        lower = max(best_m_self(c) - c * log_n for c in c_grid)
        rows.append({"delta": d, "s_delta": mod.value, "s_stderr": mod.stderr,
                     "cover_size": nhat, "upper_proxy": upper, "lower_expression": lower})
    report["modulus"] = rows
    return report


def submodel(model: GaussianModel, indices) -> GaussianModel:
    idx = np.asarray(list(indices), dtype=int)
    return build_model(model.covariance[np.ix_(idx, idx)])


def nested_net_experiment(model: GaussianModel, nested_subsets, n_samples: int, seed: int,
                          threads: int = 1):
    """Per-level M(mu_F, mu_F) along a nested chain of index subsets.

    A desk-scale stand-in for the weak-limit argument: reports the values
    and successive differences as a convergence diagnostic, asserting
    nothing.
    """
    prev = None
    rows = []
    for k, subset in enumerate(nested_subsets):
        if prev is not None and not set(prev).issubset(set(subset)):
            raise ValueError(f"subsets must be nested; level {k} drops points")
        sub = submodel(model, subset)
        amd = argmax_distribution(sub, n_samples, seed, threads)
        val = functional_M(sub.space, amd.measure, amd.measure)
        rows.append({"level": k, "size": len(subset), "m_self": val,
                     "diff": None if not rows else val - rows[-1]["m_self"],
                     "weights": [float(v) for v in amd.measure.weights]})
        prev = subset
    return rows

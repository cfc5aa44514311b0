"""Truncated Hilbert-Schmidt ellipsoid study.

For the linear process <x, g> on the ellipsoid sum x_i^2 / t_i^2 <= 1 the
per-draw supremum has the closed form argmax x_i = g_i t_i^2 / ||gt|| with
value ||gt||.  The module samples that argmax law, snaps it onto a finite
net so the measure functionals apply, and probes the small-ball and
norm-gap inequalities whose universal constants are reported empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .gaussian_lab import standard_normal_block
from .measures import ProbabilityMeasure
from .metric_core import FiniteMetricSpace, build_from_points


@dataclass(frozen=True)
class EllipsoidSpec:
    """Nonincreasing positive semi-axes with cached tail norms.

    ``tail_norms[i]`` is ||t(i+1)|| = sqrt(sum_{j > i} t_j^2) shifted so that
    ``tail_norms[0] = ||t||``; ``tail_sq_norms`` caches the same for the
    squared axes (the t^2(i) sequence of the small-ball bound).
    """

    semi_axes: np.ndarray
    norm_t: float
    tail_norms: np.ndarray      # tail_norms[i] = ||t(i+1)|| in 1-based speak
    tail_sq_norms: np.ndarray

    @property
    def truncation(self) -> int:
        return len(self.semi_axes)

    def tail_norm(self, i: int) -> float:
        """||t(i)|| = sqrt(sum_{j >= i} t_j^2), 1-based i."""
        return float(self.tail_norms[i - 1])

    def tail_sq_norm(self, i: int) -> float:
        """||t^2(i)||, 1-based i."""
        return float(self.tail_sq_norms[i - 1])


def make_spec(semi_axes) -> EllipsoidSpec:
    t = np.array(semi_axes, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("semi_axes must be a nonempty vector")
    if np.any(t <= 0):
        raise ValueError("semi_axes must be positive")
    if np.any(np.diff(t) > 0):
        raise ValueError("semi_axes must be nonincreasing")
    tails = np.sqrt(np.cumsum(t[::-1] ** 2)[::-1])
    tails_sq = np.sqrt(np.cumsum(t[::-1] ** 4)[::-1])
    return EllipsoidSpec(semi_axes=t, norm_t=float(np.linalg.norm(t)),
                         tail_norms=tails, tail_sq_norms=tails_sq)


@dataclass(frozen=True)
class EllipsoidSample:
    gaussian: np.ndarray
    point: np.ndarray        # argmax on the ellipsoid boundary
    sup_value: float         # <x, g> = ||gt||
    tail_profile: np.ndarray  # a_i = ||x(i)||, 1-based, with a_0 = t_1 prepended


def argmax_point(spec: EllipsoidSpec, g) -> EllipsoidSample:
    """Closed-form supremum point x_i = g_i t_i^2 / ||gt|| for one draw."""
    g = np.asarray(g, dtype=float)
    if g.shape != spec.semi_axes.shape:
        raise ValueError("draw dimension must match the truncation")
    if not np.all(np.isfinite(g)):
        raise ValueError("draw must be finite")
    gt = g * spec.semi_axes
    norm_gt = float(np.linalg.norm(gt))
    if norm_gt == 0.0:
        raise ValueError("zero draw has no argmax (measure-zero event)")
    x = g * spec.semi_axes ** 2 / norm_gt
    tails = np.sqrt(np.cumsum(x[::-1] ** 2)[::-1])
    profile = np.r_[spec.semi_axes[0], tails]
    return EllipsoidSample(gaussian=g, point=x, sup_value=norm_gt, tail_profile=profile)


def _argmax_cloud(spec: EllipsoidSpec, n_samples: int, seed: int) -> np.ndarray:
    """Matrix of argmax samples, one per row."""
    g = standard_normal_block(seed, 0, n_samples, spec.truncation)
    gt = g * spec.semi_axes
    norms = np.linalg.norm(gt, axis=1)
    norms[norms == 0.0] = 1.0  # measure-zero guard
    return g * spec.semi_axes ** 2 / norms[:, None]


def esup_check(spec: EllipsoidSpec, n_samples: int, seed: int):
    """MC mean of ||gt|| against ||t||; Jensen forces the ratio into (0, 1]."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    g = standard_normal_block(seed, 0, n_samples, spec.truncation)
    vals = np.linalg.norm(g * spec.semi_axes, axis=1)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return {"mc_mean": mean, "mc_stderr": se, "norm_t": spec.norm_t,
            "closed_ratio": mean / spec.norm_t}


@dataclass(frozen=True)
class EmpiricalMeasure:
    points: np.ndarray
    counts: np.ndarray
    space: FiniteMetricSpace
    measure: ProbabilityMeasure


def empirical_measure(spec: EllipsoidSpec, n_samples: int, seed: int,
                      net_resolution: float | None = None) -> EmpiricalMeasure:
    """Argmax samples snapped onto a greedy Euclidean net of the cloud.

    A sample farther than h from every existing center becomes a new
    center; otherwise it snaps to the nearest one.  The resulting finite
    support plus frequencies is a measure usable by the functionals.
    """
    h = net_resolution if net_resolution is not None else 0.05 * float(spec.semi_axes[0])
    if h <= 0:
        raise ValueError("net resolution must be positive")
    cloud = _argmax_cloud(spec, n_samples, seed)
    dim = spec.truncation
    centers = np.empty((n_samples, dim))
    center_counts = np.zeros(n_samples)
    centers[0] = cloud[0]
    center_counts[0] = 1
    m = 1
    chunk = 2048
    for lo in range(1, n_samples, chunk):
        block = cloud[lo:lo + chunk]
        d = cdist(block, centers[:m])
        near = d.min(axis=1) <= h
        snap = d.argmin(axis=1)
        np.add.at(center_counts, snap[near], 1)
        for x in block[~near]:  # sequential: new centers may absorb later rows
            d2 = np.linalg.norm(centers[:m] - x, axis=1)
            j = int(np.argmin(d2))
            if d2[j] <= h:
                center_counts[j] += 1
            else:
                centers[m] = x
                center_counts[m] = 1
                m += 1
    pts = centers[:m].copy()
    counts = center_counts[:m].copy()
    space = build_from_points(pts)
    return EmpiricalMeasure(points=pts, counts=counts, space=space,
                            measure=ProbabilityMeasure(space, counts / counts.sum()))


def smallball_check(spec: EllipsoidSpec, anchor: EllipsoidSample, i: int, eps_grid,
                    n_samples: int, seed: int):
    """Empirical argmax-law mass of balls around an anchor sample.

    For eps in [a_{i+1}/sqrt2, a_i/sqrt2] the bound predicts
    mass <= exp(-c ||t^2(i)||^2 / t_i^4) for a universal c; rows report the
    implied c (a resolution-limited lower bound when no sample lands in
    the ball).
    """
    if not 1 <= i < spec.truncation:
        raise ValueError("need 1 <= i < truncation")
    a = anchor.tail_profile  # a[0] = t_1, a[i] = ||x(i)||
    lo, hi = a[i + 1] / math.sqrt(2.0), a[i] / math.sqrt(2.0)
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid:
        raise ValueError("empty eps grid (a_{i+1} may equal a_i)")
    for e in eps_grid:
        if not (lo - 1e-12 <= e <= hi + 1e-12):
            raise ValueError(f"eps {e} outside [{lo}, {hi}]")
    cloud = _argmax_cloud(spec, n_samples, seed)
    dist = np.linalg.norm(cloud - anchor.point, axis=1)
    scale = spec.tail_sq_norm(i) ** 2 / spec.semi_axes[i - 1] ** 4
    rows = []
    for e in eps_grid:
        mass = float(np.mean(dist <= e))
        if mass > 0:
            implied = -math.log(mass) / scale
            bound_kind = "estimate"
        else:
            implied = -math.log(1.0 / n_samples) / scale
            bound_kind = "lower-bound"
        rows.append({"eps": e, "mass": mass, "implied_c": implied, "kind": bound_kind})
    return rows


def gap_lower_bound_check(spec: EllipsoidSpec, i: int, n_samples: int, seed: int):
    """E(||x(i)|| - ||x(i+1)||) against t_i^4 / (||t|| ||t^2(i)||).

    The comparison constant is universal and unknown; the rhs is evaluated
    with the constant replaced by 1 and only the ratio is reported.
    """
    if not 1 <= i < spec.truncation:
        raise ValueError("need 1 <= i < truncation")
    cloud = _argmax_cloud(spec, n_samples, seed)
    tail_i = np.sqrt(np.sum(cloud[:, i - 1:] ** 2, axis=1))
    tail_next = np.sqrt(np.sum(cloud[:, i:] ** 2, axis=1))
    gaps = tail_i - tail_next
    lhs = float(gaps.mean())
    se = float(gaps.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    rhs = spec.semi_axes[i - 1] ** 4 / (spec.norm_t * spec.tail_sq_norm(i))
    return {"i": i, "lhs_mc": lhs, "lhs_stderr": se, "rhs": float(rhs),
            "ratio": lhs / rhs if rhs > 0 else math.inf}


def ellipsoid_report(spec: EllipsoidSpec, n_samples: int, seed: int,
                     net_resolution: float | None = None):
    """M(mu, mu) of the snapped empirical argmax measure against ||t||."""
    from .measures import functional_M

    emp = empirical_measure(spec, n_samples, seed, net_resolution)
    m_self = functional_M(emp.space, emp.measure, emp.measure)
    return {"m_self": m_self, "norm_t": spec.norm_t,
            "ratio": m_self / spec.norm_t if spec.norm_t > 0 else math.inf,
            "support_size": emp.space.n, "empirical": emp}

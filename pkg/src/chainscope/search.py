"""Simplex searches for the three functional extrema and the balanced measure.

None of the three extremal problems is known to be convex, so everything
here is local search with restarts from principled initializers: the argmax
distribution mu_F for sup_mu M(mu, mu) and the balanced measure nu_F for
sup_mu inf_t.  Reported values therefore carry feasible-direction
semantics: lower bounds for the sup problems, an upper bound for the inf
problem.

Iterates stay strictly positive (floor 1e-12, then renormalize) so the
objectives remain finite; the gradients are the exact derivatives of the
piecewise-linear-in-eps sigma profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (GAUSSIAN_LOG, YOUNG_INVERSE, ProbabilityMeasure, SigmaEvaluator,
                       WEIGHT_FLOOR, YoungFunction, young_power)
from .metric_core import FiniteMetricSpace


@dataclass(frozen=True)
class OptimizationResult:
    measure: ProbabilityMeasure
    objective: float
    iterations: int
    restarts_used: int
    converged: bool


@dataclass(frozen=True)
class BalancedMeasure:
    measure: ProbabilityMeasure
    phi_values: np.ndarray
    spread: float
    iterations: int
    converged: bool


def _project(w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, WEIGHT_FLOOR)
    return w / w.sum()


def _initializers(space, init_measures, restarts, seed):
    inits = [np.full(space.n, 1.0 / space.n)]
    for m in init_measures or []:
        inits.append(_project(np.array(m.weights, dtype=float)))
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        inits.append(_project(rng.dirichlet(np.ones(space.n))))
    return inits


def _mw_ascend(objective, gradient, w0, max_iter, tol, sign=1.0):
    """Multiplicative-weights local search with a backtracking step size.

    ``sign`` +1 ascends, -1 descends.  Returns (best_w, best_obj, iters,
    converged); convergence means the step size collapsed with no
    improving move left.
    """
    w = w0.copy()
    obj = objective(w)
    eta = 0.5
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        g = gradient(w)
        g = g - np.dot(g, w)  # remove the direction normal to the simplex
        norm = np.abs(g).max()
        if norm <= 1e-14:
            converged = True
            break
        g = g / norm
        improved = False
        while eta > 1e-12:
            cand = _project(w * np.exp(sign * eta * g))
            cobj = objective(cand)
            if sign * (cobj - obj) > tol * (1.0 + abs(obj)):
                w, obj = cand, cobj
                eta = min(eta * 1.5, 4.0)
                improved = True
                break
            eta *= 0.5
        if not improved:
            converged = True
            break
    return w, obj, it, converged


def maximize_M_self(space: FiniteMetricSpace, mode: str = GAUSSIAN_LOG,
                    delta: float | None = None, init_measures=None, restarts: int = 8,
                    max_iter: int = 300, tol: float = 1e-9, seed: int = 0,
                    trace: list | None = None) -> OptimizationResult:
    """Best-found measure for sup_mu M(mu, mu, delta).

    Initialized from uniform, any supplied measures (typically mu_F), and
    Dirichlet restarts; the returned objective is the exact functional at
    the returned measure.  ``trace`` (if given) collects one row per
    initializer with the objective that restart reached.
    """
    if space.n == 0:
        raise ValueError("empty space")
    ev = SigmaEvaluator(space, delta, mode)
    best = None
    total_it = 0
    any_conv = False
    for idx, w0 in enumerate(_initializers(space, init_measures, restarts, seed)):
        w, obj, it, conv = _mw_ascend(ev.m_self, ev.m_self_grad, w0, max_iter, tol)
        total_it += it
        any_conv = any_conv or conv
        if trace is not None:
            trace.append({"problem": "sup_self", "restart": idx,
                          "objective": float(obj), "iterations": it})
        if best is None or obj > best[1]:
            best = (w, obj)
    return OptimizationResult(measure=ProbabilityMeasure(space, best[0]),
                              objective=float(ev.m_self(best[0])),
                              iterations=total_it, restarts_used=restarts, converged=any_conv)


def _soft_value(prof, tau, want_min_of_max):
    if want_min_of_max:  # softmax upper-smooths the max
        m = prof.max()
        return m + tau * math.log(np.sum(np.exp((prof - m) / tau)))
    m = prof.min()
    return m - tau * math.log(np.sum(np.exp(-(prof - m) / tau)))


def _soft_extreme_steps(ev, w0, max_iter, tol, want_min_of_max):
    """Anneal a softmax/softmin smoothing of max_t / min_t sigma.

    Steps follow the smoothed objective (temperature halved every 50
    iterations); the returned point is the best iterate under the exact
    max/min.
    """
    sign = -1.0 if want_min_of_max else 1.0
    w = w0.copy()
    prof = ev.profile(w)
    exact = float(prof.max() if want_min_of_max else prof.min())
    best = (w.copy(), exact)
    tau = max(0.1 * (prof.max() - prof.min()) + 1e-3, 1e-3)
    eta = 0.5
    it = 0
    while it < max_iter:
        it += 1
        if it % 50 == 0:
            tau = max(tau * 0.5, 1e-6)
        prof = ev.profile(w)
        sm = np.exp((prof - prof.max()) / tau) if want_min_of_max \
            else np.exp(-(prof - prof.min()) / tau)
        sm /= sm.sum()
        g = ev.jacobian(w).T @ sm
        g = g - np.dot(g, w)
        norm = np.abs(g).max()
        if norm <= 1e-14:
            break
        g /= norm
        cur_soft = _soft_value(prof, tau, want_min_of_max)
        moved = False
        while eta > 1e-12:
            cand = _project(w * np.exp(sign * eta * g))
            cprof = ev.profile(cand)
            if sign * (_soft_value(cprof, tau, want_min_of_max) - cur_soft) > 0:
                w = cand
                cexact = float(cprof.max() if want_min_of_max else cprof.min())
                if sign * (cexact - best[1]) > tol * (1 + abs(best[1])):
                    best = (cand.copy(), cexact)
                eta = min(eta * 1.5, 4.0)
                moved = True
                break
            eta *= 0.5
        if not moved:
            eta = 0.5
            if tau <= 1e-6:
                break
            tau = max(tau * 0.5, 1e-6)
    return best[0], best[1], it


def minimize_sup_M(space: FiniteMetricSpace, mode: str = GAUSSIAN_LOG, restarts: int = 8,
                   max_iter: int = 400, tol: float = 1e-9, seed: int = 0,
                   trace: list | None = None) -> OptimizationResult:
    """Best-found measure for inf_mu sup_t M(mu, delta_t).

    The reported objective is an upper bound for the true infimum
    (feasible-point semantics).
    """
    if space.n == 0:
        raise ValueError("empty space")
    ev = SigmaEvaluator(space, None, mode)
    best = None
    total_it = 0
    for idx, w0 in enumerate(_initializers(space, None, restarts, seed)):
        w, obj, it = _soft_extreme_steps(ev, w0, max_iter, tol, want_min_of_max=True)
        total_it += it
        if trace is not None:
            trace.append({"problem": "inf_sup", "restart": idx,
                          "objective": float(obj), "iterations": it})
        if best is None or obj < best[1]:
            best = (w, obj)
    return OptimizationResult(measure=ProbabilityMeasure(space, best[0]),
                              objective=float(ev.profile(best[0]).max()),
                              iterations=total_it, restarts_used=restarts, converged=True)


def maximize_inf_M(space: FiniteMetricSpace, mode: str = GAUSSIAN_LOG, restarts: int = 8,
                   max_iter: int = 400, tol: float = 1e-9, seed: int = 0,
                   extra_inits=None, trace: list | None = None) -> OptimizationResult:
    """Best-found measure for sup_mu inf_t M(mu, delta_t).

    The balanced measure is always tried as an initializer: equalized
    integrals keep the inner infimum non-degenerate over the support.
    """
    if space.n == 0:
        raise ValueError("empty space")
    ev = SigmaEvaluator(space, None, mode)
    inits = list(extra_inits or [])
    try:
        inits.append(balanced_measure(space).measure)
    except ValueError:
        pass  # coincident points: no balanced measure exists
    best = None
    total_it = 0
    for idx, w0 in enumerate(_initializers(space, inits, restarts, seed)):
        w, obj, it = _soft_extreme_steps(ev, w0, max_iter, tol, want_min_of_max=False)
        total_it += it
        if trace is not None:
            trace.append({"problem": "sup_inf", "restart": idx,
                          "objective": float(obj), "iterations": it})
        if best is None or obj > best[1]:
            best = (w, obj)
    return OptimizationResult(measure=ProbabilityMeasure(space, best[0]),
                              objective=float(ev.profile(best[0]).min()),
                              iterations=total_it, restarts_used=restarts, converged=True)


def balanced_measure(space: FiniteMetricSpace, young: YoungFunction | None = None,
                     max_iter: int = 2000, damping: float = 0.5, tol: float = 1e-8,
                     init: ProbabilityMeasure | None = None) -> BalancedMeasure:
    """The measure equalizing the young-inverse integrals over all points.

    Damped multiplicative fixed-point iteration with a line search on the
    exponent, so the spread max Phi - min Phi decreases at every accepted
    step.  Requires all points distinct (coincident points force infinite
    integrals on one of them).
    """
    if space.n == 0:
        raise ValueError("empty space")
    if space.n == 1:
        w = np.ones(1)
        ev = SigmaEvaluator(space, None, YOUNG_INVERSE, young or young_power(2.0))
        phi = ev.profile(w)
        return BalancedMeasure(ProbabilityMeasure(space, w), phi, 0.0, 0, True)
    off = space.dist[np.triu_indices(space.n, k=1)]
    if np.any(off == 0):
        raise ValueError("balanced measure requires all points distinct")
    ev = SigmaEvaluator(space, None, YOUNG_INVERSE, young or young_power(2.0))
    w = init.weights.copy() if init is not None else np.full(space.n, 1.0 / space.n)
    w = _project(w)
    phi = ev.profile(w)
    spread = float(phi.max() - phi.min())
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        mean = float(phi.mean())
        if spread <= tol * mean:
            converged = True
            break
        theta = damping
        accepted = False
        while theta > 1e-7:
            cand = _project(w * (phi / mean) ** theta)
            cphi = ev.profile(cand)
            cspread = float(cphi.max() - cphi.min())
            if cspread < spread:
                w, phi, spread = cand, cphi, cspread
                accepted = True
                break
            theta *= 0.5
        if not accepted:
            break
    if spread > 1e-13 * float(phi.mean()):
        # the damped iteration stalls near the solution; polish by least
        # squares on the centered integrals over softmax weights
        w, phi, spread = _balance_polish(ev, w)
    if spread <= tol * float(phi.mean()):
        converged = True
    return BalancedMeasure(measure=ProbabilityMeasure(space, w), phi_values=phi,
                           spread=spread, iterations=it, converged=converged)


def _balance_polish(ev, w):
    from scipy.optimize import least_squares

    def unpack(x):
        e = np.exp(x - x.max())
        return _project(e / e.sum())

    def residual(x):
        phi = ev.profile(unpack(x))
        bad = ~np.isfinite(phi)
        if bad.any():
            phi = np.where(bad, 1e6, phi)
        return phi - phi.mean()

    phi = ev.profile(w)
    spread = float(phi.max() - phi.min())
    for _ in range(4):  # restarting LM resets its trust region
        sol = least_squares(residual, np.log(np.maximum(w, WEIGHT_FLOOR)),
                            method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=5000)
        cand = unpack(sol.x)
        cphi = ev.profile(cand)
        cspread = float(cphi.max() - cphi.min())
        if not (np.all(np.isfinite(cphi)) and cspread < spread):
            break
        w, phi, spread = cand, cphi, cspread
    return w, phi, spread


# ---------------------------------------------------------------------------
# assembled report


@dataclass(frozen=True)
class DualityReport:
    sup_self: float
    inf_sup: float
    sup_inf: float
    esup: float
    esup_stderr: float
    ratios: dict
    flags: list
    measures: dict  # problem name -> best-found weight vector


def duality_report(space: FiniteMetricSpace, model=None, n_samples: int = 20000,
                   seed: int = 0, restarts: int = 8, max_iter: int = 300,
                   threads: int = 1, trace: list | None = None) -> DualityReport:
    """All three extrema plus the Monte Carlo E sup and their pairwise ratios.

    sup_self is re-checked against the sup_inf candidate so the assertable
    pointwise-averaging ordering (sup_inf <= sup_self) holds for the
    reported numbers by construction.
    """
    from .gaussian_lab import argmax_distribution, estimate_sup

    flags = []
    if space.n < 2 or space.diam == 0:
        flags.append("degenerate")
        return DualityReport(0.0, 0.0, 0.0, 0.0, 0.0, {}, flags, {})
    inits = []
    esup, se = 0.0, 0.0
    if model is not None:
        est = estimate_sup(model, n_samples, seed, threads)
        esup, se = est.mean, est.stderr
        inits.append(argmax_distribution(model, n_samples, seed + 1, threads).measure)
    sup_inf = maximize_inf_M(space, restarts=restarts, max_iter=max_iter, seed=seed,
                             trace=trace)
    inf_sup = minimize_sup_M(space, restarts=restarts, max_iter=max_iter, seed=seed,
                             trace=trace)
    sup_self = maximize_M_self(space, init_measures=inits + [sup_inf.measure],
                               restarts=restarts, max_iter=max_iter, seed=seed,
                               trace=trace)
    ev = SigmaEvaluator(space)
    prof = ev.profile(sup_inf.measure.weights)
    if not (prof.min() <= ev.m_self(sup_inf.measure.weights) + 1e-9):
        flags.append("averaging sandwich violated")
    if sup_inf.objective > sup_self.objective + 1e-6:
        flags.append("ordering sup_inf <= sup_self violated")
    vals = {"sup_self": sup_self.objective, "inf_sup": inf_sup.objective,
            "sup_inf": sup_inf.objective, "esup": esup}
    ratios = {}
    for a in vals:
        for b in vals:
            if a < b and vals[b] != 0:
                ratios[f"{a}/{b}"] = vals[a] / vals[b]
    return DualityReport(sup_self=sup_self.objective, inf_sup=inf_sup.objective,
                         sup_inf=sup_inf.objective, esup=esup, esup_stderr=se,
                         ratios=ratios, flags=flags,
                         measures={"sup_self": sup_self.measure.weights,
                                   "inf_sup": inf_sup.measure.weights,
                                   "sup_inf": sup_inf.measure.weights})

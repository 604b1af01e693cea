"""Shared multi-start first-order optimization plumbing.

Every nonconvex estimate in the package is produced by the same recipe:
seeded multi-start, backtracking line search on a value-and-gradient
callback, and a deterministic reduction (best value, ties broken by the
smallest restart index) so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["OptimOptions", "substream", "backtracking", "multistart"]


@dataclass(frozen=True)
class OptimOptions:
    restarts: int = 16
    iters: int = 500
    seed: int = 0
    tol: float = 1e-8
    step0: float = 0.5
    extra_inits: tuple = ()


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent, reproducible RNG substream named by integer keys."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def backtracking(x0, value_and_grad, iters, tol, step0=0.5, maximize=False,
                 project=None, rng=None, stall_retries=5, value_only=None):
    """Gradient descent/ascent with Armijo backtracking and stall escapes.

    ``value_and_grad(x) -> (value, grad)`` works on real parameter vectors;
    ``project`` optionally maps trial points back to the feasible set, and
    ``value_only`` (when given) makes line-search probes cheaper.
    The objectives here are maxima of singular values, so optima sit on
    nonsmooth ridges where a plain line search stalls; on a stall the
    iterate is jittered (seeded, shrinking) a few times before giving up.
    Returns ``(x, value, iterations, converged)``.
    """
    sign = -1.0 if maximize else 1.0
    x = np.asarray(x0, dtype=float).copy()
    if project is not None:
        x = project(x)
    f, g = value_and_grad(x)
    best_x, best_f = x.copy(), f
    step = step0
    nit = 0
    stalls = 0
    mark = best_f  # best value at the last jitter
    converged = False
    while nit < iters:
        nit += 1
        gnorm2 = float(np.dot(g, g))
        stalled = gnorm2 <= tol ** 2
        if not stalled:
            accepted = False
            for _ in range(30):
                trial = x - sign * step * g
                if project is not None:
                    trial = project(trial)
                if value_only is not None:
                    ft, gt = value_only(trial), None
                else:
                    ft, gt = value_and_grad(trial)
                if sign * (ft - f) <= -1e-4 * step * gnorm2:
                    rel = abs(f - ft) / max(1.0, abs(f))
                    if gt is None:
                        ft, gt = value_and_grad(trial)
                    x, f, g = trial, ft, gt
                    accepted = True
                    step = min(step * 2.0, 1e3)
                    if sign * (f - best_f) < 0:
                        best_x, best_f = x.copy(), f
                    stalled = rel < tol
                    break
                step *= 0.5
            stalled = stalled or not accepted
        if stalled:
            # nonsmooth ridge or micro-progress: jitter around the best
            # point; give up once retries pass without material gain
            if sign * (best_f - mark) < -100.0 * tol * max(1.0, abs(mark)):
                stalls = 0
            if rng is None or stalls >= stall_retries:
                converged = True
                break
            stalls += 1
            mark = best_f
            scale = 10.0 ** (-2 - stalls) * max(1.0, float(np.linalg.norm(best_x)))
            x = best_x + scale * rng.standard_normal(x.shape)
            if project is not None:
                x = project(x)
            f, g = value_and_grad(x)
            step = step0 * scale
    if sign * (f - best_f) > 0:
        x, f = best_x, best_f
    return x, f, nit, converged


def multistart(inits, make_objective, opts: OptimOptions, maximize=False,
               project=None):
    """Backtracking from every init point; deterministic seeded reduction.

    ``make_objective(restart_index)`` returns a value-and-grad callback, or
    a ``(value_and_grad, value_only)`` pair for cheaper line searches; the
    factory form lets objectives carry per-restart state.  Returns
    ``(best_x, best_value, trace)``.  With no inits the value is +inf
    (minimizing) or -inf (maximizing) and ``converged`` is False: budget
    starvation is reported, not hidden.
    """
    inits = list(inits)
    best_x = None
    best_f = -np.inf if maximize else np.inf
    total_it = 0
    any_converged = False
    for idx, x0 in enumerate(inits):
        made = make_objective(idx)
        vag, vonly = made if isinstance(made, tuple) else (made, None)
        x, f, nit, conv = backtracking(
            x0, vag, opts.iters, opts.tol, opts.step0,
            maximize=maximize, project=project,
            rng=substream(opts.seed, 0x5A11, idx),
            value_only=vonly,
        )
        total_it += nit
        any_converged = any_converged or conv
        if (f > best_f) if maximize else (f < best_f):
            best_x, best_f = x, f
    trace = {
        "restarts": len(inits),
        "iterations": total_it,
        "seed": opts.seed,
        "converged": bool(any_converged and best_x is not None),
    }
    return best_x, float(best_f), trace

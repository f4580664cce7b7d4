"""Projected gradient descent with spectral steps and a metric hook.

One engine drives every constrained minimization in the package: iterates
are kept feasible by a caller-supplied projection (typically nodewise
absolute value followed by a radial rescale), and the step is taken along
the Riesz representative of the derivative in a caller-chosen inner
product (identity, or a discrete-Laplacian metric that removes the mesh
stiffness from the iteration). Step lengths start from a Barzilai-Borwein
guess and are safeguarded by nonmonotone Armijo backtracking on the
projected trial. The caller also supplies the first-order residual used
for convergence, so manifold geometry stays out of the engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError, ProjectionError

_STEP_MIN = 1e-16
_STEP_MAX = 1e12
_MAX_BACKTRACKS = 60


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    residual: float
    iterations: int
    converged: bool
    stop_reason: str
    trace: list = field(default_factory=list)


def minimize_projected(
    x0: np.ndarray,
    value_fn,
    grad_fn,
    project_fn,
    residual_fn,
    *,
    max_iters: int,
    grad_tol: float,
    value_window_tol: float,
    window: int = 25,
    step0: float = 1.0,
    backtrack: float = 0.5,
    armijo_c: float = 1e-4,
    nonmonotone_memory: int = 8,
    direction_fn=None,
    stop_fn=None,
    keep_trace: bool = False,
) -> DescentResult:
    """Minimize value_fn over the projected feasible set.

    Converged means both: residual_fn(x, g) < grad_tol and the value moved
    by less than value_window_tol (relative) over the trailing window.
    stop_fn(x, f), if given, may end the run early with a named reason.

    A run that can no longer certify any float64 descent (stalled line
    search) while the value window is flat is also reported converged:
    the iterate is numerically stationary to working precision even if
    the residual target was not met.
    """
    x = project_fn(np.asarray(x0, dtype=float))
    f = value_fn(x)
    if not np.isfinite(f):
        raise NonFiniteError("objective is non-finite at the starting point")
    g = grad_fn(x)
    recent = [f]
    values_window = [f]
    best_x, best_f = x, f
    step = step0 if direction_fn is not None else step0 / (1.0 + float(np.max(np.abs(g))))
    trace = []
    converged = False
    stop_reason = "max_iters"
    it = 0

    for it in range(1, max_iters + 1):
        res = residual_fn(x, g)
        if keep_trace:
            trace.append((it - 1, f, res, float(np.max(np.abs(x)))))
        if stop_fn is not None:
            reason = stop_fn(x, f)
            if reason:
                stop_reason = reason
                break
        stalled = False
        if len(values_window) > window:
            f_old = values_window[-window - 1]
            stalled = abs(f_old - f) <= value_window_tol * max(1.0, abs(f))
        if res < grad_tol and stalled:
            converged = True
            stop_reason = "residual_converged"
            break

        if direction_fn is not None:
            d = direction_fn(g, x)
            gd = float(np.dot(g, d))
            if not np.isfinite(gd):
                d = g
                gd = float(np.dot(g, g))
        else:
            d = g
            gd = float(np.dot(g, g))
        # <g, d> >= 0 holds exactly for the metric directions and equals a
        # squared residual norm; falling to roundoff scale certifies
        # first-order stationarity at working precision.
        noise = 1e-14 * float(np.linalg.norm(g)) * float(np.linalg.norm(d))
        if gd <= noise:
            converged = True
            stop_reason = "stationary"
            break

        f_ref = max(recent)
        t = min(max(step, _STEP_MIN), _STEP_MAX)
        accepted = False
        x_new = x
        f_new = f
        for _ in range(_MAX_BACKTRACKS):
            try:
                trial = project_fn(x - t * d)
            except ProjectionError:
                t *= backtrack
                continue
            f_trial = value_fn(trial)
            if np.isfinite(f_trial) and f_trial <= f_ref - armijo_c * t * gd:
                x_new, f_new = trial, f_trial
                accepted = True
                break
            t *= backtrack
        if not accepted:
            # No float64-certifiable descent left; stationary if also flat.
            converged = stalled or res < grad_tol
            stop_reason = "stationary" if converged else "line_search_stall"
            break

        g_new = grad_fn(x_new)
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 0.0:
            # BB1 step in the step metric: <s, M s> ~ t^2 <d, g> for s ~ -t d.
            sms = t * t * gd if direction_fn is not None else float(np.dot(s, s))
            step = sms / sy
        else:
            step = t / backtrack
        x, f, g = x_new, f_new, g_new
        recent.append(f)
        if len(recent) > nonmonotone_memory:
            recent.pop(0)
        values_window.append(f)
        if f < best_f:
            best_f, best_x = f, x

    if not converged and f > best_f:
        # bailed out mid-flight: fall back to the best value seen
        x, f = best_x, best_f
        g = grad_fn(x)
    return DescentResult(
        x=x,
        value=f,
        residual=residual_fn(x, g),
        iterations=it,
        converged=converged,
        stop_reason=stop_reason,
        trace=trace,
    )

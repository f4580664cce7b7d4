"""Constrained minimization of E_lam and the rescaling to solutions.

The ground state is obtained by minimizing E_lam over the unit-level set
of the weighted q-mass (gradient descent in a discrete-Laplacian metric,
nodewise absolute value, radial projection back onto the level set), then
rescaling the minimizer by m^{-1/(p-q)}. The second branch minimizes over
the level set at -1 and rescales by (-m)^{-1/(p-q)}. A short Newton polish
on the unconstrained first-order system sharpens the rescaled field to the
requested residual; the constrained descent remains the global driver
because the problem Hessian degenerates on dead cores, where Newton alone
is unreliable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from .descent import DescentResult, minimize_projected
from .errors import InitializationError, ProjectionError, RegimeError
from .fields import Field
from .functionals import (
    EnergyBreakdown,
    E_raw,
    Problem,
    energy,
    grad_E_raw,
    grad_I_raw,
    grad_weighted_q_mass_raw,
    residual_norm,
    weighted_q_mass,
    weighted_q_mass_raw,
)
from .grids import NEUMANN
from .precond import TangentialMetricDirection
from .weights import Weight

#: relative height below which projected iterates snap to exact zero
SNAP_TOL = 1e-13
#: relative floor used when evaluating |u|^{q-2} reaction curvatures
REACTION_FLOOR = 1e-9
#: E < -OUT_OF_REGIME_TOL on the +1 level set flags lam >= lambda*
OUT_OF_REGIME_TOL = 1e-10


@dataclass(frozen=True)
class SolveOptions:
    """Iteration controls shared by the constrained solvers."""

    max_iters: int = 30000
    grad_tol: float = 1e-8
    energy_window_tol: float = 1e-14
    window: int = 25
    step0: float = 1.0
    backtrack: float = 0.5
    armijo_c: float = 1e-4
    seed: int = 42
    n_starts: int = 3
    residual_target: float = 1e-8
    polish: bool = True
    keep_trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("grad_tol", "energy_window_tol", "step0", "armijo_c",
                     "residual_target"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtracking factor must lie in (0, 1)")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")


@dataclass
class StartResult:
    index: int
    m_value: float
    iterations: int
    converged: bool
    stop_reason: str
    field: Field


@dataclass
class SolveReport:
    """Outcome of one constrained solve (level-set minimizer or solution)."""

    field: Field
    m_value: float
    M_value: float | None
    energies: EnergyBreakdown
    residual: float
    multiplier: float
    iterations: int
    converged: bool
    out_of_regime: bool
    starts: list[StartResult] = field(default_factory=list)
    constrained_field: Field | None = None
    diagnostics: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)


def project_S(u: Field, a: Weight, q: float, sign: int) -> Field:
    """Radial projection onto {int a|u|^q = sign}; sign in {+1, -1}."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    mass = weighted_q_mass(u, a, q)
    if sign * mass <= 0.0:
        raise ProjectionError(
            "radial projection undefined: weighted q-mass is "
            f"{mass:.3e} but the target level set needs sign {sign:+d}"
        )
    return Field(u.grid, u.values * (sign * mass) ** (-1.0 / q))


def _phi1_shape(grid) -> np.ndarray:
    """First-eigenfunction lookalike: product of half sines, or constant."""
    if grid.bc == NEUMANN:
        return np.ones(grid.n_nodes)
    out = np.ones(grid.n_nodes)
    coords = grid.node_coords
    for axis in range(grid.dim):
        out = out * np.sin(np.pi * coords[:, axis] / grid.extent[axis])
    return np.where(grid.dof_mask, out, 0.0)


def default_starts(prob: Problem, sign: int, opts: SolveOptions) -> list[np.ndarray]:
    """Built-in start fields: level-set-compatible shapes plus seeded noise."""
    grid = prob.grid
    w = prob.weight
    dof = grid.dof_mask
    starts: list[np.ndarray] = []
    rng = np.random.default_rng(opts.seed)
    if sign > 0:
        base = np.where(dof, w.a_plus, 0.0)
        scale = base.max()
        if scale <= 0.0:
            raise InitializationError(
                "no free node with a > 0: cannot start on the +1 level set"
            )
        base = base / scale
        for k in range(opts.n_starts):
            noise = rng.uniform(0.0, 1.0, grid.n_nodes) if k else 0.0
            u0 = base * (1.0 + 0.3 * noise)
            starts.append(np.where(dof, u0, 0.0))
        # eigen-lookalike blended to barely positive mass: beyond the
        # threshold this witness has negative energy, so the descent can
        # see the out-of-regime branch instead of a local valley
        phi = _phi1_shape(grid)
        a_vals = w.values.values
        t = 0.01
        blend = None
        for _ in range(60):
            cand = np.where(dof, phi + t * base, 0.0)
            if weighted_q_mass_raw(grid, cand, a_vals, prob.q) > 0.0:
                blend = cand
                break
            t *= 2.0
        if blend is not None:
            starts.append(blend)
        return starts
    minus_bump = np.where(dof, w.a_minus, 0.0)
    if minus_bump.max() <= 0.0:
        raise InitializationError(
            "no free node with a < 0: the -1 level set is unreachable "
            "(negative support too small on this grid)"
        )
    minus_bump = minus_bump / minus_bump.max()
    phi = _phi1_shape(grid)
    a_vals = w.values.values
    for k in range(opts.n_starts):
        noise = rng.uniform(0.0, 1.0, grid.n_nodes) if k else 0.5
        u0 = phi + 0.3 * noise * minus_bump
        # grow the negative-region bump until the q-mass goes negative
        for _ in range(60):
            if weighted_q_mass_raw(grid, np.where(dof, u0, 0.0), a_vals, prob.q) < 0.0:
                break
            u0 = u0 + minus_bump * max(1.0, u0.max())
        else:
            u0 = minus_bump.copy()
        starts.append(np.where(dof, np.abs(u0), 0.0))
    return starts


def _reaction_fn(prob: Problem, multiplier_scale: float):
    grid = prob.grid
    wq = grid.quad_weights * grid.h_volume
    a_abs = np.abs(prob.weight.values.values)
    p, q, lam = prob.p, prob.q, prob.lam

    def reaction(v: np.ndarray) -> np.ndarray:
        mx = float(np.max(np.abs(v)))
        if mx <= 0.0:
            return np.zeros(grid.n_nodes)
        uu = np.maximum(np.abs(v), REACTION_FLOOR * mx)
        alpha = max(abs(multiplier_scale), 0.1)
        return wq * (
            abs(lam) * (p - 1.0) * uu ** (p - 2.0)
            + alpha * q * (q - 1.0) * a_abs * uu ** (q - 2.0)
        )

    return reaction


def _run_level_set_descent(prob: Problem, sign: int, x0: np.ndarray,
                           opts: SolveOptions, grad_tol: float,
                           detect_out_of_regime: bool) -> DescentResult:
    grid = prob.grid
    dof = grid.dof_mask
    hvol = grid.h_volume
    a_vals = prob.weight.values.values
    q = prob.q

    def project(v: np.ndarray) -> np.ndarray:
        v = np.where(dof, np.abs(v), 0.0)
        mx = v.max()
        if mx > 0.0:
            v[v < SNAP_TOL * mx] = 0.0
        mass = weighted_q_mass_raw(grid, v, a_vals, q)
        if sign * mass <= 0.0:
            raise ProjectionError("trial left the level set's side")
        return v * (sign * mass) ** (-1.0 / q)

    def normal(v: np.ndarray) -> np.ndarray:
        n = grad_weighted_q_mass_raw(grid, v, a_vals, q)
        n[~dof] = 0.0
        return n

    def residual(v: np.ndarray, g: np.ndarray) -> float:
        n = normal(v)
        nn = float(np.dot(n, n))
        gt = g - (float(np.dot(g, n)) / nn) * n if nn > 0.0 else g
        gt = np.where((v > 0.0) | (gt < 0.0), gt, 0.0)
        gt[~dof] = 0.0
        return float(np.linalg.norm(gt) / hvol)

    m_guess = E_raw(prob, project(x0.copy()))
    direction = TangentialMetricDirection(
        grid, dof, normal, reaction_fn=_reaction_fn(prob, m_guess * prob.p / prob.q)
    )

    stop_fn = None
    if detect_out_of_regime:
        def stop_fn(_x, f):
            return "out_of_regime" if f < -OUT_OF_REGIME_TOL else None

    return minimize_projected(
        x0,
        lambda v: E_raw(prob, v),
        lambda v: grad_E_raw(prob, v),
        project,
        residual,
        max_iters=opts.max_iters,
        grad_tol=grad_tol,
        value_window_tol=opts.energy_window_tol,
        window=opts.window,
        step0=opts.step0,
        backtrack=opts.backtrack,
        armijo_c=opts.armijo_c,
        direction_fn=direction,
        stop_fn=stop_fn,
        keep_trace=opts.keep_trace,
    )


def minimize_on_S(prob: Problem, sign: int, opts: SolveOptions | None = None,
                  starts=None, grad_tol: float | None = None) -> SolveReport:
    """Minimize E_lam over {int a|u|^q = sign}; returns the level-set minimizer.

    Multistart; the least energy wins, ties (within 1e-12) resolved by start
    index. On the +1 level set a negative energy value flags lam >= lambda*
    (out_of_regime) and stops the run rather than chasing the infimum down.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    opts = opts or SolveOptions()
    tol = opts.grad_tol if grad_tol is None else grad_tol
    grid = prob.grid
    if starts is None:
        start_arrays = default_starts(prob, sign, opts)
    else:
        start_arrays = [s.values.copy() if isinstance(s, Field) else np.asarray(s, float).copy()
                        for s in starts]
        if not start_arrays:
            raise ValueError("starts must be nonempty when given")

    results: list[StartResult] = []
    raw: dict[int, DescentResult] = {}
    out_flag = False
    for k, x0 in enumerate(start_arrays):
        try:
            res = _run_level_set_descent(prob, sign, x0, opts, tol,
                                         detect_out_of_regime=(sign > 0))
        except ProjectionError:
            # start sits on the wrong side of the level set; skip it
            results.append(StartResult(
                index=k, m_value=np.inf, iterations=0, converged=False,
                stop_reason="infeasible_start", field=Field.zeros(grid),
            ))
            continue
        if res.stop_reason == "out_of_regime":
            out_flag = True
        raw[k] = res
        results.append(StartResult(
            index=k, m_value=res.value, iterations=res.iterations,
            converged=res.converged, stop_reason=res.stop_reason,
            field=Field(grid, res.x),
        ))
    if not raw:
        raise InitializationError(
            f"no start reached the {sign:+d} level set (weighted q-mass has "
            "the wrong sign on every initial field)"
        )
    best_k = min(raw)
    for k in raw:
        if raw[k].value < raw[best_k].value - 1e-12:
            best_k = k
    best = raw[best_k]
    v = best.x
    m_value = best.m_value if hasattr(best, "m_value") else best.value

    # multiplier of the level-set stationarity condition, least squares
    gE = grad_E_raw(prob, v)
    n = grad_weighted_q_mass_raw(grid, v, prob.weight.values.values, prob.q)
    n[~grid.dof_mask] = 0.0
    nn = float(np.dot(n, n))
    mult = (prob.q / prob.p) * float(np.dot(gE, n)) / nn if nn > 0 else np.nan

    vf = Field(grid, v)
    return SolveReport(
        field=vf,
        m_value=best.value,
        M_value=None,
        energies=energy(prob, vf),
        residual=best.residual,
        multiplier=mult,
        iterations=best.iterations,
        converged=best.converged and not out_flag,
        out_of_regime=out_flag,
        starts=results,
        constrained_field=vf,
        diagnostics={"grad_tol_used": tol},
        trace=best.trace,
    )


# -- Newton polish of the first-order system ------------------------------

def hessian_I_entries(prob: Problem, v: np.ndarray):
    """COO entries of the Hessian of the discrete I_lam at v."""
    grid = prob.grid
    p, q, lam = prob.p, prob.q, prob.lam
    eps = prob.eps
    a = prob.weight.values.values
    wq = grid.quad_weights * grid.h_volume
    n = grid.n_nodes
    rows, cols, vals = [], [], []
    if grid.dim == 1:
        h = grid.h[0]
        g = np.diff(v) / h
        s = g * g + eps * eps
        sp2 = np.zeros_like(s)
        sp4 = np.zeros_like(s)
        pos = s > 0.0
        sp2[pos] = s[pos] ** ((p - 2.0) / 2.0)
        sp4[pos] = s[pos] ** ((p - 4.0) / 2.0)
        c = (p * sp2 + p * (p - 2.0) * g * g * sp4) / h / p
        i = np.arange(n - 1)
        rows += [i, i + 1, i, i + 1]
        cols += [i, i + 1, i + 1, i]
        vals += [c, c, -c, -c]
    else:
        nx, ny = grid.nodes
        h0, h1 = grid.h
        V = v.reshape(nx, ny)
        gx = (V[1:, :-1] - V[:-1, :-1]) / h0
        gy = (V[:-1, 1:] - V[:-1, :-1]) / h1
        s = gx * gx + gy * gy + eps * eps
        sp2 = np.zeros_like(s)
        sp4 = np.zeros_like(s)
        pos = s > 0.0
        sp2[pos] = s[pos] ** ((p - 2.0) / 2.0)
        sp4[pos] = s[pos] ** ((p - 4.0) / 2.0)
        fxx = p * sp2 + p * (p - 2.0) * gx * gx * sp4
        fyy = p * sp2 + p * (p - 2.0) * gy * gy * sp4
        fxy = p * (p - 2.0) * gx * gy * sp4
        hv = h0 * h1
        flat = np.arange(nx * ny).reshape(nx, ny)
        A = flat[:-1, :-1].ravel()
        B = flat[1:, :-1].ravel()
        C = flat[:-1, 1:].ravel()
        cxx = (hv * fxx / (h0 * h0) / p).ravel()
        cyy = (hv * fyy / (h1 * h1) / p).ravel()
        cxy = (hv * fxy / (h0 * h1) / p).ravel()
        rows += [A, B, A, B]
        cols += [A, B, B, A]
        vals += [cxx, cxx, -cxx, -cxx]
        rows += [A, C, A, C]
        cols += [A, C, C, A]
        vals += [cyy, cyy, -cyy, -cyy]
        rows += [B, C, A, A, B, C, A, A]
        cols += [C, B, A, A, A, A, B, C]
        vals += [cxy, cxy, cxy, cxy, -cxy, -cxy, -cxy, -cxy]
    uu = np.abs(v)
    diag = -lam * (p - 1.0) * wq * uu ** (p - 2.0)
    wpart = np.zeros(n)
    posu = uu > 0.0
    wpart[posu] = a[posu] * (q - 1.0) * wq[posu] * uu[posu] ** (q - 2.0)
    diag = diag - wpart
    i = np.arange(n)
    rows.append(i)
    cols.append(i)
    vals.append(diag)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def newton_polish(prob: Problem, u: np.ndarray, target: float,
                  max_steps: int = 10) -> np.ndarray:
    """Damped Newton on grad I = 0, restricted to strictly positive nodes.

    Root-finding polish (works at saddles too); keeps nonnegativity by
    clamping. Returns the input unchanged whenever a step fails to reduce
    the residual.
    """
    grid = prob.grid
    n = grid.n_nodes
    u = u.copy()
    for _ in range(max_steps):
        rn = residual_norm(prob, Field(grid, u))
        if rn <= target:
            break
        act = grid.dof_mask & (u > 0.0)
        if not act.any():
            break
        rows, cols, vals = hessian_I_entries(prob, u)
        keep = act[rows] & act[cols]
        idx = np.flatnonzero(act)
        remap = -np.ones(n, dtype=int)
        remap[idx] = np.arange(idx.size)
        H = coo_matrix(
            (vals[keep], (remap[rows[keep]], remap[cols[keep]])),
            shape=(idx.size, idx.size),
        ).tocsc()
        g = grad_I_raw(prob, u)
        try:
            d = splu(H).solve(g[idx])
        except RuntimeError:
            break
        if not np.all(np.isfinite(d)):
            break
        step = 1.0
        improved = False
        for _ in range(30):
            trial = u.copy()
            trial[idx] = np.maximum(u[idx] - step * d, 0.0)
            if residual_norm(prob, Field(grid, trial)) < rn:
                u = trial
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return u


def _adaptive_tol(prob: Problem, m_abs: float, opts: SolveOptions) -> float:
    """Level-set gradient tolerance that compensates the rescale by
    m^{-1/(p-q)}: the solution residual is amplified by m^{-(p-1)/(p-q)}."""
    amp = m_abs ** ((prob.p - 1.0) / (prob.p - prob.q))
    return float(np.clip(0.3 * opts.residual_target * amp, 1e-13, opts.grad_tol))


def ground_state(prob: Problem, opts: SolveOptions | None = None,
                 starts=None, lam_star: float | None = None) -> SolveReport:
    """Ground state via the +1 level set: U = m_plus^{-1/(p-q)} V_plus.

    Raises RegimeError when m_plus <= 0 (lam at or beyond lambda*), where
    the constrained infimum no longer yields a ground state.
    """
    opts = opts or SolveOptions()
    if lam_star is not None and prob.lam >= lam_star:
        raise RegimeError(
            f"ground state requires lam < lambda* (got lam={prob.lam}, "
            f"lambda*={lam_star})"
        )
    rep = minimize_on_S(prob, +1, opts, starts=starts)
    if rep.out_of_regime or rep.m_value <= 0.0:
        raise RegimeError(
            f"m_plus = {rep.m_value:.3e} <= 0: lam >= lambda* for this weight, "
            "no constrained ground state in this regime"
        )
    # second pass at a tolerance matched to the rescale amplification
    tol = _adaptive_tol(prob, rep.m_value, opts)
    if tol < rep.diagnostics.get("grad_tol_used", opts.grad_tol):
        rep2 = minimize_on_S(prob, +1, opts, starts=[rep.field], grad_tol=tol)
        if rep2.m_value <= rep.m_value + 1e-12 and not rep2.out_of_regime:
            rep2.starts = rep.starts
            rep = rep2
            if rep.m_value <= 0.0:
                raise RegimeError(
                    f"m_plus = {rep.m_value:.3e} <= 0: lam >= lambda*"
                )
    m = rep.m_value
    scale = m ** (-1.0 / (prob.p - prob.q))
    u = scale * rep.field.values
    if opts.polish:
        u = newton_polish(prob, u, target=0.3 * opts.residual_target)
    uf = Field(prob.grid, u)
    eb = energy(prob, uf)
    rn = residual_norm(prob, uf)
    gap_weak = abs(eb.E - eb.weighted)
    identity = (1.0 / prob.p - 1.0 / prob.q) * eb.weighted
    return SolveReport(
        field=uf,
        m_value=m,
        M_value=eb.I,
        energies=eb,
        residual=rn,
        multiplier=rep.multiplier,
        iterations=rep.iterations,
        converged=rep.converged,
        out_of_regime=False,
        starts=rep.starts,
        constrained_field=rep.field,
        diagnostics={
            "weak_identity_gap": gap_weak,
            "I_identity_gap": abs(eb.I - identity),
            "rescale": scale,
            "grad_tol_used": rep.diagnostics.get("grad_tol_used", opts.grad_tol),
        },
        trace=rep.trace,
    )


def second_solution(prob: Problem, opts: SolveOptions | None = None,
                    starts=None, lam1: float | None = None,
                    lam_star: float | None = None,
                    phi1_q_mass: float | None = None) -> SolveReport:
    """Second solution via the -1 level set: U = (-m_minus)^{-1/(p-q)} V_minus.

    Regime gates (when the caller provides the spectrum data): the weighted
    q-mass of the principal eigenfunction must be negative and lam must lie
    in (lambda_1, lambda*). Raises RegimeError if m_minus >= 0.
    """
    opts = opts or SolveOptions()
    if phi1_q_mass is not None and phi1_q_mass >= 0.0:
        raise RegimeError(
            "second solution requires int a*phi1^q < 0 "
            f"(got {phi1_q_mass:.3e} >= 0)"
        )
    if lam1 is not None and prob.lam <= lam1:
        raise RegimeError(
            f"second solution requires lam > lambda_1 (got lam={prob.lam}, "
            f"lambda_1={lam1})"
        )
    if lam_star is not None and prob.lam >= lam_star:
        raise RegimeError(
            f"second solution requires lam < lambda* (got lam={prob.lam}, "
            f"lambda*={lam_star})"
        )
    rep = minimize_on_S(prob, -1, opts, starts=starts)
    if rep.m_value >= 0.0:
        raise RegimeError(
            f"m_minus = {rep.m_value:.3e} >= 0: no negative-energy minimizer "
            "on the -1 level set in this regime"
        )
    tol = _adaptive_tol(prob, -rep.m_value, opts)
    if tol < rep.diagnostics.get("grad_tol_used", opts.grad_tol):
        rep2 = minimize_on_S(prob, -1, opts, starts=[rep.field], grad_tol=tol)
        if rep2.m_value <= rep.m_value + 1e-12:
            rep2.starts = rep.starts
            rep = rep2
    m = rep.m_value
    scale = (-m) ** (-1.0 / (prob.p - prob.q))
    u = scale * rep.field.values
    if opts.polish:
        u = newton_polish(prob, u, target=0.3 * opts.residual_target)
    uf = Field(prob.grid, u)
    eb = energy(prob, uf)
    rn = residual_norm(prob, uf)
    p, q = prob.p, prob.q
    mp_identity = (1.0 / q - 1.0 / p) * (-m) ** (-q / (p - q))
    from .functionals import ray_max_value  # local import avoids cycle surprise

    try:
        ray_val = ray_max_value(prob, uf)
        ray_gap = abs(ray_val - eb.I)
    except RegimeError:
        ray_val, ray_gap = np.nan, np.nan
    minus_max = float(np.max(uf.values[prob.weight.minus_nodes]))
    return SolveReport(
        field=uf,
        m_value=m,
        M_value=eb.I,
        energies=eb,
        residual=rn,
        multiplier=rep.multiplier,
        iterations=rep.iterations,
        converged=rep.converged,
        out_of_regime=False,
        starts=rep.starts,
        constrained_field=rep.field,
        diagnostics={
            "weak_identity_gap": abs(eb.E - eb.weighted),
            "mp_identity_gap": abs(eb.I - mp_identity),
            "mp_identity_value": mp_identity,
            "ray_max_value": ray_val,
            "ray_identity_gap": ray_gap,
            "max_on_minus_nodes": minus_max,
            "grad_tol_used": rep.diagnostics.get("grad_tol_used", opts.grad_tol),
        },
        trace=rep.trace,
    )


@dataclass(frozen=True)
class PositivityReport:
    positive_on_plus: bool
    positive_everywhere: bool
    dead_core_fraction: float
    trivial: bool
    threshold: float
    min_on_plus: float
    min_free: float
    max_value: float


def positivity_report(u: Field, w: Weight, eps_pos: float) -> PositivityReport:
    """Positivity flags relative to eps_pos * max(u); free nodes only."""
    if eps_pos <= 0.0:
        raise ValueError("eps_pos must be > 0")
    grid = u.grid
    vals = u.values
    vmax = float(np.max(vals))
    if vmax <= 0.0:
        return PositivityReport(
            positive_on_plus=False, positive_everywhere=False,
            dead_core_fraction=1.0, trivial=True, threshold=0.0,
            min_on_plus=0.0, min_free=0.0, max_value=vmax,
        )
    thr = eps_pos * vmax
    plus_free = w.plus_mask & grid.dof_mask
    free = grid.dof_mask
    min_plus = float(np.min(vals[plus_free])) if plus_free.any() else 0.0
    min_free = float(np.min(vals[free]))
    frac = float(np.mean(vals[free] <= thr))
    return PositivityReport(
        positive_on_plus=bool(min_plus > thr),
        positive_everywhere=bool(min_free > thr),
        dead_core_fraction=frac,
        trivial=False,
        threshold=thr,
        min_on_plus=min_plus,
        min_free=min_free,
        max_value=vmax,
    )


def minimize_I_in_cone(prob: Problem, x0: np.ndarray,
                       opts: SolveOptions | None = None) -> DescentResult:
    """Descent on I_lam itself over the nonnegative cone (no level set).

    Used for polishing studies and as a cheap feasibility probe; the
    level-set route above is the primary path to ground states.
    """
    opts = opts or SolveOptions()
    grid = prob.grid
    dof = grid.dof_mask
    hvol = grid.h_volume

    def project(v):
        v = np.where(dof, np.abs(v), 0.0)
        mx = v.max()
        if mx > 0.0:
            v[v < SNAP_TOL * mx] = 0.0
        return v

    def residual(v, g):
        gt = np.where((v > 0.0) | (g < 0.0), g, 0.0)
        gt[~dof] = 0.0
        return float(np.linalg.norm(gt) / hvol)

    from .functionals import I_raw

    direction = TangentialMetricDirection(
        grid, dof, None, reaction_fn=_reaction_fn(prob, 1.0)
    )
    return minimize_projected(
        x0,
        lambda v: I_raw(prob, v),
        lambda v: grad_I_raw(prob, v),
        project,
        residual,
        max_iters=opts.max_iters,
        grad_tol=opts.grad_tol,
        value_window_tol=opts.energy_window_tol,
        window=opts.window,
        direction_fn=direction,
        keep_trace=opts.keep_trace,
    )

"""Discrete energies, analytic gradients, ray formulas, pointwise inequalities.

The two functionals of the model problem -div(|grad u|^{p-2} grad u)
= lam*u^{p-1} + a(x)*u^{q-1} are discretized as

    E_lam(u) = sum_cells hvol*((|Du|^2 + eps^2)^{p/2} - eps^p)
               - lam * sum_nodes w*hvol*|u|^p
    I_lam(u) = E_lam(u)/p - (1/q) * sum_nodes w*hvol*a*|u|^q

with forward-difference cell gradients Du, trapezoidal node weights w, and
an optional smoothing eps for the gradient norm (needed when p < 2, where
|Du|^{p-2} blows up at Du = 0). Subtracting eps^p keeps the zero field at
zero energy. Gradients below are the exact partial derivatives of these
sums with respect to free nodal values, so finite differences of the
energies reproduce them to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteError, RegimeError
from .fields import Field
from .grids import Grid
from .weights import Weight

#: default gradient-norm smoothing for p < 2 (eps = 0 is exact for p >= 2)
DEFAULT_EPS_SUBQUADRATIC = 1e-8


@dataclass(frozen=True)
class Problem:
    """One instance of the model problem: exponents, weight, lam, smoothing."""

    p: float
    q: float
    lam: float
    grid: Grid
    weight: Weight
    eps: float = 0.0

    def __post_init__(self):
        if not self.p > 1.0:
            raise ConfigError(f"need p > 1, got p={self.p}")
        if not 1.0 < self.q < self.p:
            raise ConfigError(
                f"need 1 < q < p (subhomogeneous exponents), got q={self.q}, p={self.p}"
            )
        if self.eps < 0.0:
            raise ConfigError(f"gradient smoothing eps must be >= 0, got {self.eps}")
        if self.eps == 0.0 and self.p < 2.0:
            raise ConfigError("eps = 0 is only allowed for p >= 2 (|Du|^{p-2} degenerates)")
        if self.weight.grid is not self.grid:
            raise ConfigError("problem grid and weight grid must be the same object")

    @classmethod
    def build(cls, p: float, q: float, lam: float, weight: Weight, eps: float | None = None):
        if eps is None:
            eps = 0.0 if p >= 2.0 else DEFAULT_EPS_SUBQUADRATIC
        return cls(p=float(p), q=float(q), lam=float(lam), grid=weight.grid,
                   weight=weight, eps=float(eps))


@dataclass(frozen=True)
class EnergyBreakdown:
    """The three integrals plus the assembled E_lam and I_lam values."""

    dirichlet: float
    mass: float
    weighted: float
    E: float
    I: float


def _check_same_grid(grid: Grid, u: Field, name: str = "field"):
    if u.grid is not grid:
        raise ConfigError(f"{name} lives on a different grid than the problem")


# -- raw array kernels (shared by the solvers) ---------------------------

def _cell_grads(grid: Grid, v: np.ndarray):
    if grid.dim == 1:
        return (np.diff(v) / grid.h[0],)
    nx, ny = grid.nodes
    V = v.reshape(nx, ny)
    gx = (V[1:, :-1] - V[:-1, :-1]) / grid.h[0]
    gy = (V[:-1, 1:] - V[:-1, :-1]) / grid.h[1]
    return gx, gy


def dirichlet_raw(grid: Grid, v: np.ndarray, p: float, eps: float) -> float:
    e2 = eps * eps
    shift = eps**p
    if grid.dim == 1:
        g = np.diff(v) / grid.h[0]
        return float(grid.h[0] * np.sum((g * g + e2) ** (p / 2.0) - shift))
    gx, gy = _cell_grads(grid, v)
    s = gx * gx + gy * gy + e2
    return float(grid.h_volume * np.sum(s ** (p / 2.0) - shift))


def grad_dirichlet_raw(grid: Grid, v: np.ndarray, p: float, eps: float) -> np.ndarray:
    e2 = eps * eps
    if grid.dim == 1:
        g = np.diff(v) / grid.h[0]
        dphi = p * g * (g * g + e2) ** ((p - 2.0) / 2.0)
        out = np.zeros_like(v)
        out[1:] += dphi
        out[:-1] -= dphi
        return out
    nx, ny = grid.nodes
    h0, h1 = grid.h
    gx, gy = _cell_grads(grid, v)
    s = (gx * gx + gy * gy + e2) ** ((p - 2.0) / 2.0)
    px = p * gx * s
    py = p * gy * s
    G = np.zeros((nx, ny))
    G[:-1, :-1] -= px * h1 + py * h0
    G[1:, :-1] += px * h1
    G[:-1, 1:] += py * h0
    return G.ravel()


def p_mass_raw(grid: Grid, v: np.ndarray, p: float) -> float:
    return float(grid.h_volume * np.sum(grid.quad_weights * np.abs(v) ** p))


def grad_p_mass_raw(grid: Grid, v: np.ndarray, p: float) -> np.ndarray:
    return grid.h_volume * grid.quad_weights * p * np.abs(v) ** (p - 1.0) * np.sign(v)


def weighted_q_mass_raw(grid: Grid, v: np.ndarray, a: np.ndarray, q: float) -> float:
    return float(grid.h_volume * np.sum(grid.quad_weights * a * np.abs(v) ** q))


def grad_weighted_q_mass_raw(grid: Grid, v: np.ndarray, a: np.ndarray, q: float) -> np.ndarray:
    return grid.h_volume * grid.quad_weights * a * q * np.abs(v) ** (q - 1.0) * np.sign(v)


def grad_E_raw(prob: Problem, v: np.ndarray) -> np.ndarray:
    g = grad_dirichlet_raw(prob.grid, v, prob.p, prob.eps)
    g -= prob.lam * grad_p_mass_raw(prob.grid, v, prob.p)
    g[~prob.grid.dof_mask] = 0.0
    return g


def grad_I_raw(prob: Problem, v: np.ndarray) -> np.ndarray:
    g = grad_dirichlet_raw(prob.grid, v, prob.p, prob.eps) / prob.p
    g -= (prob.lam / prob.p) * grad_p_mass_raw(prob.grid, v, prob.p)
    g -= grad_weighted_q_mass_raw(prob.grid, v, prob.weight.values.values, prob.q) / prob.q
    g[~prob.grid.dof_mask] = 0.0
    return g


def E_raw(prob: Problem, v: np.ndarray) -> float:
    return dirichlet_raw(prob.grid, v, prob.p, prob.eps) - prob.lam * p_mass_raw(
        prob.grid, v, prob.p
    )


def I_raw(prob: Problem, v: np.ndarray) -> float:
    return E_raw(prob, v) / prob.p - weighted_q_mass_raw(
        prob.grid, v, prob.weight.values.values, prob.q
    ) / prob.q


# -- public operations ----------------------------------------------------

def dirichlet_energy(prob: Problem, u: Field) -> float:
    """Smoothed p-gradient integral; exact sum of |Du|^p when eps = 0."""
    _check_same_grid(prob.grid, u)
    return dirichlet_raw(prob.grid, u.values, prob.p, prob.eps)


def p_mass(u: Field, p: float) -> float:
    """Trapezoidal integral of |u|^p."""
    return p_mass_raw(u.grid, u.values, p)


def weighted_q_mass(u: Field, a: Weight, q: float) -> float:
    """Trapezoidal integral of a(x)|u|^q (sign-indefinite)."""
    _check_same_grid(a.grid, u)
    return weighted_q_mass_raw(u.grid, u.values, a.values.values, q)


def energy(prob: Problem, u: Field) -> EnergyBreakdown:
    """All three integrals plus E_lam and I_lam."""
    _check_same_grid(prob.grid, u)
    d = dirichlet_raw(prob.grid, u.values, prob.p, prob.eps)
    m = p_mass_raw(prob.grid, u.values, prob.p)
    w = weighted_q_mass_raw(prob.grid, u.values, prob.weight.values.values, prob.q)
    e = d - prob.lam * m
    return EnergyBreakdown(dirichlet=d, mass=m, weighted=w, E=e, I=e / prob.p - w / prob.q)


def _checked_grad(prob: Problem, u: Field, raw) -> Field:
    _check_same_grid(prob.grid, u)
    g = raw(prob, u.values)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("gradient overflowed to non-finite values")
    return Field(prob.grid, g)


def grad_E(prob: Problem, u: Field) -> Field:
    """Exact gradient of the discrete E_lam, zero on constrained nodes."""
    return _checked_grad(prob, u, grad_E_raw)


def grad_I(prob: Problem, u: Field) -> Field:
    """Exact gradient of the discrete I_lam, zero on constrained nodes."""
    return _checked_grad(prob, u, grad_I_raw)


def residual_norm(prob: Problem, u: Field) -> float:
    """Norm of grad I_lam over free nodes, scaled by the cell volume.

    Zero exactly iff u is a discrete critical point.
    """
    _check_same_grid(prob.grid, u)
    g = grad_I_raw(prob, u.values)
    return float(np.linalg.norm(g[prob.grid.dof_mask]) / prob.grid.h_volume)


def ray_max_point(prob: Problem, u: Field) -> float:
    """Maximizer t0 of t -> I_lam(t*u) for u with E_lam(u) < 0 > int a|u|^q."""
    e, w = _ray_preconditions(prob, u)
    return float((w / e) ** (1.0 / (prob.p - prob.q)))


def ray_max_value(prob: Problem, u: Field) -> float:
    """Value of the ray maximum max_{t>0} I_lam(t*u); strictly positive."""
    e, w = _ray_preconditions(prob, u)
    p, q = prob.p, prob.q
    return float((1.0 / q - 1.0 / p) * (-w) ** (p / (p - q)) / (-e) ** (q / (p - q)))


def _ray_preconditions(prob: Problem, u: Field):
    _check_same_grid(prob.grid, u)
    b = energy(prob, u)
    if b.E >= 0.0 or b.weighted >= 0.0:
        raise RegimeError(
            "ray maximum requires E_lam(u) < 0 and int a|u|^q < 0 "
            f"(got E={b.E:.3e}, weighted q-mass={b.weighted:.3e}); "
            "otherwise sup_t I_lam(t u) is infinite or the formula is undefined"
        )
    return b.E, b.weighted


def picone_gap(u: Field, v: Field, p: float, q: float) -> float:
    """Min over cells of RHS - LHS in the generalized Picone inequality.

    LHS = |Du|^{p-2} Du . D(v^q / u^{q-1}), RHS = |Du|^{p-q} |Dv|^q, with
    discrete cell gradients. Nonnegative up to quadrature noise; clear
    violations indicate a bug, not a failure of the inequality.
    """
    if u.grid is not v.grid:
        raise ConfigError("picone_gap requires fields on the same grid")
    if not 1.0 < q <= p:
        raise ConfigError(f"picone_gap requires 1 < q <= p, got q={q}, p={p}")
    uv = u.values
    vv = v.values
    if np.min(uv) <= 0.0:
        raise ConfigError("picone_gap requires u strictly positive at every node")
    if np.min(vv) < 0.0:
        raise ConfigError("picone_gap requires v nonnegative")
    grid = u.grid
    wv = vv**q / uv ** (q - 1.0)
    if grid.dim == 1:
        du = _cell_grads(grid, uv)[0]
        dv = _cell_grads(grid, vv)[0]
        dw = _cell_grads(grid, wv)[0]
        mag = np.abs(du)
        lhs = np.where(mag > 0.0, mag ** (p - 2.0) * du * dw, 0.0)
        rhs = mag ** (p - q) * np.abs(dv) ** q
    else:
        gux, guy = _cell_grads(grid, uv)
        gvx, gvy = _cell_grads(grid, vv)
        gwx, gwy = _cell_grads(grid, wv)
        mag = np.hypot(gux, guy)
        lhs = np.where(mag > 0.0, mag ** (p - 2.0) * (gux * gwx + guy * gwy), 0.0)
        rhs = mag ** (p - q) * np.hypot(gvx, gvy) ** q
    return float(np.min(rhs - lhs))


def power_mean_gap(b, c, d, e, t):
    """RHS - LHS of b^{1-t} c^t + d^{1-t} e^t <= (b+d)^{1-t} (c+e)^t.

    Accepts scalars or broadcastable arrays; all of b, c, d, e must be
    positive and t must lie in [0, 1].
    """
    b, c, d, e, t = (np.asarray(x, dtype=float) for x in (b, c, d, e, t))
    if not (np.all(b > 0) and np.all(c > 0) and np.all(d > 0) and np.all(e > 0)):
        raise ConfigError("power_mean_gap requires b, c, d, e > 0")
    if not (np.all(t >= 0.0) and np.all(t <= 1.0)):
        raise ConfigError("power_mean_gap requires t in [0, 1]")
    gap = (b + d) ** (1.0 - t) * (c + e) ** t - b ** (1.0 - t) * c**t - d ** (1.0 - t) * e**t
    return gap if gap.ndim else float(gap)


def hidden_convex_midpoint(v1: Field, v2: Field, q: float) -> Field:
    """Nodewise q-power midpoint W = ((v1^q + v2^q)/2)^{1/q}."""
    if v1.grid is not v2.grid:
        raise ConfigError("hidden_convex_midpoint requires fields on the same grid")
    a, b = v1.values, v2.values
    if np.min(a) < 0.0 or np.min(b) < 0.0:
        raise ConfigError("hidden_convex_midpoint requires nonnegative fields")
    return Field(v1.grid, ((a**q + b**q) / 2.0) ** (1.0 / q))

"""Barrier construction, dead-core extraction, and the negative-part sweep.

A ground state must vanish on interior regions where the weight is very
negative. The quantitative witness is a radial barrier w = k(r^2 - t^2)^beta
on an annulus inside the negativity set, extended by zero across the inner
ball: for the amplitude k below, w is a supersolution of the local problem,
so any solution dominated by w on the annulus boundary vanishes on the
inner ball. The sweep scales the negative part by n and records when the
dead core swallows a prescribed interior window.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, RegimeError
from .fields import Field
from .functionals import Problem, residual_norm
from .grids import Grid
from .solver import SolveOptions, SolveReport, ground_state
from .weights import Weight, scale_negative_part

REGIME_GENERAL = "general"          # lam <= 0, any p > 1
REGIME_P2_POSITIVE = "p2-positive"  # p = 2, lam > 0


@dataclass(frozen=True)
class BarrierSpec:
    """Radial barrier k(r^2-t^2)^beta on t <= r <= R, zero on r < t."""

    center: tuple[float, ...]
    t: float
    R: float
    beta: float
    k: float
    regime: str

    def __post_init__(self):
        if not 0.0 <= self.t < self.R:
            raise ConfigError(f"need 0 <= t < R, got t={self.t}, R={self.R}")
        if self.beta <= 1.0:
            raise ConfigError(f"barrier exponent must exceed 1, got {self.beta}")
        if self.k <= 0.0:
            raise ConfigError(f"barrier amplitude must be positive, got {self.k}")
        if self.regime not in (REGIME_GENERAL, REGIME_P2_POSITIVE):
            raise ConfigError(f"unknown barrier regime {self.regime!r}")


def barrier_amplitude(p: float, q: float, dim: int, R: float, t: float,
                      n: float, a_under: float, lam: float, regime: str) -> float:
    """Amplitude k making the barrier a supersolution against n*a_under.

    regime 'general' covers lam <= 0 for any p; 'p2-positive' covers p = 2
    with lam > 0, where the comparison argument needs the extra lam term.
    For p != 2 with lam > 0 no certified amplitude is available.
    """
    if a_under <= 0.0:
        raise ConfigError(
            f"need min of the negative part over the ball > 0, got {a_under}"
        )
    if n <= 0.0:
        raise ConfigError(f"negative-part scale must be positive, got {n}")
    if not 0.0 <= t < R:
        raise ConfigError(f"need 0 <= t < R, got t={t}, R={R}")
    beta = p / (p - q)
    if regime == REGIME_GENERAL:
        if lam > 0.0:
            raise RegimeError(
                "the general barrier requires lam <= 0 "
                "(comparison fails for lam > 0 unless p = 2)"
            )
        denom = (2.0 * beta) ** (p - 1.0) * R ** (p - 2.0) * (
            2.0 * (beta - 1.0) * (p - 1.0) * R**2
            + (p - 2.0 + dim) * (R**2 - t**2)
        )
        return float((n * a_under / denom) ** (1.0 / (p - q)))
    if regime == REGIME_P2_POSITIVE:
        if p != 2.0:
            raise RegimeError(
                "the positive-lam barrier is only available for p = 2"
            )
        if lam <= 0.0:
            raise RegimeError(
                "regime 'p2-positive' expects lam > 0; use 'general' otherwise"
            )
        denom = 2.0 * beta * (
            (beta - 1.0) * 2.0 * R**2 + dim * (R**2 - t**2)
        ) + lam * (R**2 - t**2) ** 2
        return float((n * a_under / denom) ** (1.0 / (2.0 - q)))
    raise ConfigError(f"unknown barrier regime {regime!r}")


def make_barrier_spec(prob: Problem, center, t: float, R: float, n: float,
                      regime: str | None = None) -> BarrierSpec:
    """BarrierSpec for a ball inside the negativity set of prob's weight.

    a_under is the minimum of the base weight's negative part over the
    covered nodes; n is the negative-part scale of the swept problem.
    """
    grid = prob.grid
    center = tuple(float(c) for c in np.atleast_1d(center))
    if len(center) != grid.dim:
        raise ConfigError("barrier center dimension does not match the grid")
    r = np.linalg.norm(grid.node_coords - np.asarray(center)[None, :], axis=1)
    ball = r <= R * (1.0 + 1e-12)
    if not ball.any():
        raise ConfigError("barrier ball covers no grid node")
    if not prob.weight.minus_mask[ball].all():
        raise ConfigError(
            "barrier ball exits the negativity set of the weight"
        )
    a_under = float(np.min(prob.weight.a_minus[ball]))
    if regime is None:
        regime = REGIME_GENERAL if prob.lam <= 0.0 else REGIME_P2_POSITIVE
    k = barrier_amplitude(prob.p, prob.q, grid.dim, R, t, n, a_under,
                          prob.lam, regime)
    return BarrierSpec(center=center, t=float(t), R=float(R),
                       beta=prob.p / (prob.p - prob.q), k=k, regime=regime)


@dataclass(frozen=True)
class Barrier:
    """Nodal barrier values with the ball/inner/ring node masks."""

    grid: Grid
    spec: BarrierSpec
    values: np.ndarray
    ball_mask: np.ndarray
    inner_mask: np.ndarray
    ring_mask: np.ndarray


def build_barrier(grid: Grid, spec: BarrierSpec, weight: Weight | None = None) -> Barrier:
    """Sample the barrier on the grid; nodes outside the ball are absent.

    values are zero on the inner ball (the prescribed dead zone) and
    k(r^2-t^2)^beta on the annulus. With a weight given, the ball is
    checked to lie inside its negativity set.
    """
    center = np.asarray(spec.center)
    r = np.linalg.norm(grid.node_coords - center[None, :], axis=1)
    ball = r <= spec.R * (1.0 + 1e-12)
    if not ball.any():
        raise ConfigError("barrier ball covers no grid node")
    if weight is not None and not weight.minus_mask[ball].all():
        raise ConfigError("barrier ball exits the negativity set of the weight")
    inner = ball & (r <= spec.t * (1.0 + 1e-12))
    vals = np.zeros(grid.n_nodes)
    annulus = ball & ~inner
    vals[annulus] = spec.k * (r[annulus] ** 2 - spec.t**2) ** spec.beta
    ring = grid.mask_ring(ball)
    return Barrier(grid=grid, spec=spec, values=vals, ball_mask=ball,
                   inner_mask=inner, ring_mask=ring)


@dataclass(frozen=True)
class ComparisonReport:
    boundary_dominates: bool
    interior_dominates: bool
    dead_core_confirmed: bool
    margin: float
    ring_gap: float
    inner_max: float


def comparison_check(u: Field, barrier: Barrier, margin: float | None = None) -> ComparisonReport:
    """Compare a solution against the barrier on its ball.

    boundary_dominates: w > u on the outermost node ring of the ball;
    interior_dominates: w >= u - margin everywhere on the ball;
    dead_core_confirmed: u <= margin on the inner ball.
    """
    if u.grid is not barrier.grid:
        raise ConfigError("field and barrier live on different grids")
    if margin is None:
        margin = 1e-8 * float(np.max(barrier.values))
    vals = u.values
    w = barrier.values
    ring = barrier.ring_mask
    ball = barrier.ball_mask
    inner = barrier.inner_mask
    ring_gap = float(np.min(w[ring] - vals[ring])) if ring.any() else np.inf
    inner_max = float(np.max(vals[inner])) if inner.any() else 0.0
    return ComparisonReport(
        boundary_dominates=bool(ring_gap > 0.0),
        interior_dominates=bool(np.all(w[ball] >= vals[ball] - margin)),
        dead_core_confirmed=bool(inner_max <= margin),
        margin=float(margin),
        ring_gap=ring_gap,
        inner_max=inner_max,
    )


@dataclass(frozen=True)
class DeadCoreRegion:
    nodes: np.ndarray
    component_count: int
    labels: np.ndarray
    fraction: float
    minus_fraction: float | None
    threshold: float
    trivial: bool


def dead_core_region(u: Field, eps_dc: float, weight: Weight | None = None) -> DeadCoreRegion:
    """Free nodes with u below eps_dc * max(u), with connected components."""
    if eps_dc <= 0.0:
        raise ConfigError("eps_dc must be > 0")
    grid = u.grid
    vmax = float(np.max(u.values))
    trivial = vmax <= 0.0
    thr = eps_dc * vmax if not trivial else 0.0
    dead = grid.dof_mask & (u.values <= thr)
    labels, count = grid.component_labels(dead)
    free_count = int(grid.dof_mask.sum())
    frac = float(dead.sum()) / free_count if free_count else 0.0
    minus_frac = None
    if weight is not None:
        mm = weight.minus_mask & grid.dof_mask
        minus_frac = float((dead & mm).sum()) / max(int(mm.sum()), 1)
    return DeadCoreRegion(
        nodes=np.flatnonzero(dead),
        component_count=count,
        labels=labels,
        fraction=frac,
        minus_fraction=minus_frac,
        threshold=thr,
        trivial=trivial,
    )


@dataclass
class SweepPoint:
    n: float
    m_plus: float
    M: float
    min_on_window: float
    coverage: float
    converged: bool
    comparison: ComparisonReport | None = None


@dataclass
class SweepNResult:
    points: list[SweepPoint]
    n_zero: float | None
    window_nodes: np.ndarray
    reports: list[SolveReport] = field(default_factory=list)


def _window_clearance(grid: Grid, window: np.ndarray, weight: Weight) -> float:
    """Euclidean distance from the window nodes to the nearest node where
    the weight is not negative."""
    outside = ~weight.minus_mask
    coords = grid.node_coords
    d = np.inf
    out_pts = coords[outside]
    for i in window:
        d = min(d, float(np.min(np.linalg.norm(out_pts - coords[i][None, :], axis=1))))
    return d


def sweep_n(base: Problem, n_schedule, omega_prime: np.ndarray,
            opts: SolveOptions | None = None, eps_dc: float = 1e-6,
            barrier_ball: tuple | None = None, lam1: float | None = None,
            allow_exploratory: bool = False) -> SweepNResult:
    """Solve the ground state for each negative-part scale n and record how
    much of the interior window omega_prime the dead core covers.

    Hypotheses: lam <= 0, or p = 2 with lam <= lambda_1 (pass lam1). Other
    regimes are rejected unless allow_exploratory, in which case results
    are produced but carry no guarantee. barrier_ball = (center, t, R)
    additionally runs the barrier comparison at each n.
    """
    opts = opts or SolveOptions()
    grid = base.grid
    w = base.weight
    window = np.asarray(omega_prime, dtype=int)
    if window.size == 0:
        raise ConfigError("omega_prime is empty")
    if not w.minus_mask[window].all():
        raise ConfigError("omega_prime must lie inside the negativity set")
    clearance = _window_clearance(grid, window, w)
    if clearance < 1.5 * max(grid.h):
        raise ConfigError(
            "omega_prime needs positive clearance from the sign-change "
            f"interface (got {clearance:.3g}, need >= 1.5 max spacing)"
        )
    if base.lam > 0.0 and not allow_exploratory:
        if base.p != 2.0:
            raise RegimeError(
                "dead-core sweep requires lam <= 0, or p = 2 with "
                "lam <= lambda_1; for p != 2 with lam > 0 no comparison "
                "principle is available (exploratory override possible)"
            )
        if lam1 is None or base.lam > lam1:
            raise RegimeError(
                "dead-core sweep with p = 2 and lam > 0 requires "
                "lam <= lambda_1 (pass lam1 from the spectrum module)"
            )

    schedule = [float(n) for n in n_schedule]
    points: list[SweepPoint] = []
    reports: list[SolveReport] = []
    for n in schedule:
        wn = scale_negative_part(w, n)
        prob_n = replace(base, weight=wn)
        rep = ground_state(prob_n, opts)
        region = dead_core_region(rep.field, eps_dc, wn)
        dead_mask = np.zeros(grid.n_nodes, dtype=bool)
        dead_mask[region.nodes] = True
        coverage = float(dead_mask[window].mean())
        comparison = None
        if barrier_ball is not None:
            center, t, R = barrier_ball
            spec = make_barrier_spec(prob_n, center, t, R, n)
            comparison = comparison_check(rep.field, build_barrier(grid, spec, wn))
        points.append(SweepPoint(
            n=n,
            m_plus=rep.m_value,
            M=rep.M_value,
            min_on_window=float(np.min(rep.field.values[window])),
            coverage=coverage,
            converged=rep.converged,
            comparison=comparison,
        ))
        reports.append(rep)

    n_zero = None
    for i, pt in enumerate(points):
        if all(p.coverage >= 1.0 for p in points[i:]):
            n_zero = pt.n
            break
    return SweepNResult(points=points, n_zero=n_zero, window_nodes=window,
                        reports=reports)


def split_bumps(u: Field, eps_dc: float, prob: Problem) -> list[tuple[Field, float]]:
    """Split a nonnegative 1D field into its above-threshold bumps.

    Bumps are the connected components of {u > eps_dc * max(u)}. Each bump
    keeps u's values on its whole basin (every node goes with its nearest
    bump) and is zero elsewhere, so the bumps sum to u exactly and the
    cuts land deep inside the separating dead zones. Each bump is paired
    with its first-order residual under prob; bumps of a dead-core ground
    state solve the problem separately, so those residuals stay near the
    full-field one.
    """
    grid = u.grid
    if grid.dim != 1:
        raise ConfigError("bump splitting is a 1D operation (pointwise argument)")
    if float(np.min(u.values)) < 0.0:
        raise ConfigError("bump splitting expects a nonnegative field")
    if eps_dc <= 0.0:
        raise ConfigError("eps_dc must be > 0")
    vmax = float(np.max(u.values))
    if vmax <= 0.0:
        raise ConfigError("field is identically zero: nothing to split")
    support = u.values > eps_dc * vmax
    labels, count = grid.component_labels(support)
    if count == 0:
        raise ConfigError("no component above the threshold")
    # nearest-bump basin of every node (1D: split gaps at their midpoints)
    basin = labels.copy()
    comp_nodes = [np.flatnonzero(labels == c) for c in range(count)]
    for i in np.flatnonzero(labels < 0):
        dists = [np.min(np.abs(nodes - i)) for nodes in comp_nodes]
        basin[i] = int(np.argmin(dists))
    out = []
    for c in range(count):
        vals = np.where(basin == c, u.values, 0.0)
        f = Field(grid, vals)
        out.append((f, residual_norm(prob, f)))
    return out

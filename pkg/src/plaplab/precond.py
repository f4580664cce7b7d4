"""Discrete-Laplacian metrics for the descent engine.

Builds the p=2 stiffness matrix of the cell-based gradient energy on the
free nodes, optionally augmented by a nonnegative reaction diagonal, and
returns a solver mapping a gradient to its Riesz representative in that
inner product. Descending along this representative removes the O(1/h^2)
mesh stiffness from the iteration; the reaction diagonal additionally
absorbs the |u|^{q-2} curvature spikes that appear next to dead cores
when q < 2. The factorization is infrastructure and is delegated to
scipy's sparse LU.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from .grids import NEUMANN, Grid

#: cap for reaction diagonals, keeps the metric matrix well conditioned
REACTION_CAP = 1e12


def stiffness_entries(grid: Grid):
    """COO entries of the Hessian of half the p=2 cell-gradient energy."""
    if grid.dim == 1:
        n = grid.nodes[0]
        idx = np.arange(n - 1)
        pairs = [(idx, idx + 1, np.full(n - 1, 1.0 / grid.h[0]))]
    else:
        nx, ny = grid.nodes
        h0, h1 = grid.h
        flat = np.arange(nx * ny).reshape(nx, ny)
        a = flat[:-1, :-1].ravel()
        pairs = [
            (a, flat[1:, :-1].ravel(), np.full(a.size, h1 / h0)),
            (a, flat[:-1, 1:].ravel(), np.full(a.size, h0 / h1)),
        ]
    rows, cols, vals = [], [], []
    for i, j, c in pairs:
        rows.extend((i, j, i, j))
        cols.extend((i, j, j, i))
        vals.extend((c, c, -c, -c))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def build_metric_solver(grid: Grid, free_mask: np.ndarray, reaction: np.ndarray | None = None):
    """LU-factorized solve d = (K + diag(reaction))^{-1} g on the free nodes.

    Returns a callable mapping a full-length gradient to a full-length
    direction that vanishes on constrained nodes. When the stiffness alone
    is singular (pure Neumann, no extra mask, no reaction) the lumped mass
    is added as a shift.
    """
    free_mask = np.asarray(free_mask, dtype=bool)
    n = grid.n_nodes
    rows, cols, vals = stiffness_entries(grid)
    keep = free_mask[rows] & free_mask[cols]
    rows, cols, vals = rows[keep], cols[keep], vals[keep]

    free_idx = np.flatnonzero(free_mask)
    diag = np.zeros(free_idx.size)
    if reaction is not None:
        diag += np.minimum(np.maximum(reaction[free_idx], 0.0), REACTION_CAP)
    if grid.bc == NEUMANN and free_mask.all() and (reaction is None or not diag.any()):
        diag += grid.h_volume * grid.quad_weights[free_idx]

    if diag.any():
        rows = np.concatenate([rows, free_idx])
        cols = np.concatenate([cols, free_idx])
        vals = np.concatenate([vals, diag])

    remap = -np.ones(n, dtype=int)
    remap[free_idx] = np.arange(free_idx.size)
    K = coo_matrix(
        (vals, (remap[rows], remap[cols])), shape=(free_idx.size, free_idx.size)
    ).tocsc()
    lu = splu(K)

    def solve(g: np.ndarray) -> np.ndarray:
        d = np.zeros(n)
        d[free_idx] = lu.solve(g[free_idx])
        return d

    return solve


class TangentialMetricDirection:
    """Descent direction: metric solve of the gradient, made tangent to one
    constraint normal in the metric inner product.

    The resulting d satisfies <g, d> >= 0 (Cauchy-Schwarz), with equality
    exactly at constrained stationary points. An optional reaction_fn(x)
    triggers periodic refactorization with an iterate-dependent diagonal.
    """

    def __init__(self, grid: Grid, free_mask: np.ndarray, normal_fn,
                 reaction_fn=None, rebuild_every: int = 40,
                 drift_tol: float = 0.5):
        self.grid = grid
        self.free_mask = np.asarray(free_mask, dtype=bool)
        self.normal_fn = normal_fn
        self.reaction_fn = reaction_fn
        self.rebuild_every = rebuild_every
        self.drift_tol = drift_tol
        self._solve = None
        self._count = 0
        self._x_ref = None

    def _drifted(self, x: np.ndarray) -> bool:
        # reaction curvatures scale like powers of |x|: refresh the metric
        # whenever any node moved by a large relative amount
        if self._x_ref is None:
            return True
        scale = 1e-9 * float(np.max(np.abs(self._x_ref))) + 1e-300
        rel = np.abs(x - self._x_ref) / (np.abs(self._x_ref) + scale)
        return float(np.max(rel)) > self.drift_tol

    def _ensure_metric(self, x: np.ndarray):
        needs = self._solve is None or (
            self.reaction_fn is not None
            and (self._count % self.rebuild_every == 0 or self._drifted(x))
        )
        if needs:
            reaction = self.reaction_fn(x) if self.reaction_fn is not None else None
            self._solve = build_metric_solver(self.grid, self.free_mask, reaction)
            if self.reaction_fn is not None:
                self._x_ref = x.copy()
        self._count += 1

    def __call__(self, g: np.ndarray, x: np.ndarray) -> np.ndarray:
        self._ensure_metric(x)
        d = self._solve(g)
        if self.normal_fn is None:
            return d
        n = self.normal_fn(x)
        kn = self._solve(n)
        nkn = float(np.dot(n, kn))
        if nkn <= 0.0:
            return d
        return d - (float(np.dot(n, d)) / nkn) * kn

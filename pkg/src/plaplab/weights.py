"""Sign-changing weight functions a(x) sampled on grid nodes.

Weights are nodal samples of piecewise formulas; jump locations snap to
the nearest node, so the positivity set and negativity set are exact node
sets. Every constructed weight is checked against the standing hypothesis
that a takes both signs. Nodal data only distinguishes sets down to one
cell: measure-zero structure of the continuum positivity sets is not
representable here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, SignChangeError
from .fields import Field
from .grids import Grid


@dataclass(frozen=True)
class Weight:
    """Nodal a(x) with verified sign change and its sign node sets."""

    values: Field
    plus_nodes: np.ndarray
    minus_nodes: np.ndarray

    def __post_init__(self):
        self.plus_nodes.setflags(write=False)
        self.minus_nodes.setflags(write=False)

    @property
    def grid(self) -> Grid:
        return self.values.grid

    @cached_property
    def a_plus(self) -> np.ndarray:
        out = np.maximum(self.values.values, 0.0)
        out.setflags(write=False)
        return out

    @cached_property
    def a_minus(self) -> np.ndarray:
        out = np.maximum(-self.values.values, 0.0)
        out.setflags(write=False)
        return out

    @cached_property
    def plus_mask(self) -> np.ndarray:
        m = np.zeros(self.grid.n_nodes, dtype=bool)
        m[self.plus_nodes] = True
        m.setflags(write=False)
        return m

    @cached_property
    def minus_mask(self) -> np.ndarray:
        m = np.zeros(self.grid.n_nodes, dtype=bool)
        m[self.minus_nodes] = True
        m.setflags(write=False)
        return m


@dataclass(frozen=True)
class TwoBump1D:
    """a = +a_plus on [b, b+delta/2] u [c-delta/2, c], -a_minus between."""

    a_plus: float
    a_minus: float
    delta: float


@dataclass(frozen=True)
class DiskBump2D:
    """a = +a_plus inside the disk, -a_minus outside."""

    center: tuple[float, float]
    radius: float
    a_plus: float
    a_minus: float


@dataclass(frozen=True)
class NodalFile:
    """Nodal values from a CSV file, one value per node in grid ordering."""

    path: str


WeightSpec = TwoBump1D | DiskBump2D | NodalFile


def weight_from_values(grid: Grid, values) -> Weight:
    """Wrap nodal values as a Weight, enforcing the sign-change hypothesis."""
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size != grid.n_nodes:
        raise ConfigError(
            f"weight length {vals.size} does not match node count {grid.n_nodes}"
        )
    plus = np.flatnonzero(vals > 0.0)
    minus = np.flatnonzero(vals < 0.0)
    if plus.size == 0 or minus.size == 0:
        raise SignChangeError(
            "weight must change sign: a > 0 somewhere and a < 0 somewhere "
            f"(got {plus.size} positive and {minus.size} negative nodes)"
        )
    return Weight(values=Field(grid, vals), plus_nodes=plus, minus_nodes=minus)


def build_weight(grid: Grid, spec: WeightSpec) -> Weight:
    """Sample a weight family on the grid; jump locations snap to nodes."""
    if isinstance(spec, TwoBump1D):
        return _build_two_bump(grid, spec)
    if isinstance(spec, DiskBump2D):
        return _build_disk_bump(grid, spec)
    if isinstance(spec, NodalFile):
        vals = np.loadtxt(spec.path, dtype=float, ndmin=1)
        return weight_from_values(grid, vals)
    raise ConfigError(f"unknown weight spec {spec!r}")


def _build_two_bump(grid: Grid, spec: TwoBump1D) -> Weight:
    if grid.dim != 1:
        raise ConfigError("two_bump_1d weight requires a 1D grid")
    if spec.a_plus <= 0 or spec.a_minus <= 0:
        raise ConfigError("two_bump_1d amplitudes must be positive")
    L = grid.extent[0]
    if not 0.0 < spec.delta < L:
        raise ConfigError(f"two_bump_1d delta must lie in (0, {L}), got {spec.delta}")
    n = grid.nodes[0]
    i_left = grid.axis_index(0, spec.delta / 2.0)
    i_right = (n - 1) - i_left
    if i_right - i_left < 2:
        raise SignChangeError(
            "two_bump_1d: negative middle region is empty after node snapping; "
            "increase the node count or shrink delta"
        )
    vals = np.full(n, -float(spec.a_minus))
    vals[: i_left + 1] = float(spec.a_plus)
    vals[i_right:] = float(spec.a_plus)
    return weight_from_values(grid, vals)


def _build_disk_bump(grid: Grid, spec: DiskBump2D) -> Weight:
    if grid.dim != 2:
        raise ConfigError("disk_bump_2d weight requires a 2D grid")
    if spec.a_plus <= 0 or spec.a_minus <= 0:
        raise ConfigError("disk_bump_2d amplitudes must be positive")
    if spec.radius <= 0:
        raise ConfigError("disk_bump_2d radius must be positive")
    center = np.asarray(spec.center, dtype=float)
    r = np.linalg.norm(grid.node_coords - center[None, :], axis=1)
    inside = r <= spec.radius * (1.0 + 1e-12)
    vals = np.where(inside, float(spec.a_plus), -float(spec.a_minus))
    return weight_from_values(grid, vals)


def scale_negative_part(w: Weight, n: float) -> Weight:
    """New weight a_plus - n * a_minus (nodewise); n >= 0.

    n = 0 erases the negative part and is rejected, since the resulting
    one-signed weight leaves the problem class.
    """
    if n < 0:
        raise ConfigError(f"negative-part scale must be >= 0, got {n}")
    vals = w.a_plus - float(n) * w.a_minus
    return weight_from_values(w.grid, vals)

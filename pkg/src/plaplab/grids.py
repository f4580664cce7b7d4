"""Uniform finite-difference grids on intervals and rectangles.

A Grid is an immutable description of the discrete domain: node counts,
spacings, the boundary-condition mode, and the mask of free unknowns.
Node ordering is row-major in 2D (flat index = ix * ny + iy), so every
serialized field is reproducible bit-for-bit from the grid description.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


def _as_axis_tuple(value, dim: int, name: str, cast) -> tuple:
    if np.isscalar(value):
        return tuple(cast(value) for _ in range(dim))
    seq = tuple(cast(v) for v in value)
    if len(seq) != dim:
        raise ConfigError(f"{name} must have one entry per axis, got {seq} for dim={dim}")
    return seq


@dataclass(frozen=True)
class Grid:
    """Discrete domain: spacing, boundary-condition mode, free-node mask.

    dof_mask is True on free unknowns: everywhere for Neumann, interior
    nodes only for Dirichlet (essential boundary values are pinned to 0).
    """

    dim: int
    extent: tuple[float, ...]
    nodes: tuple[int, ...]
    h: tuple[float, ...]
    bc: str
    dof_mask: np.ndarray

    def __post_init__(self):
        self.dof_mask.setflags(write=False)

    # -- basic geometry -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def h_volume(self) -> float:
        """Volume of one cell: h (1D) or hx*hy (2D)."""
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.arange(self.nodes[axis]) * self.h[axis]

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(n_nodes, dim) array of node coordinates in flat ordering."""
        axes = [self.axis_coords(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.stack([m.ravel() for m in mesh], axis=1)
        out.setflags(write=False)
        return out

    def axis_index(self, axis: int, x: float) -> int:
        """Nearest node index along an axis (jump locations snap here)."""
        i = int(round(x / self.h[axis]))
        return min(max(i, 0), self.nodes[axis] - 1)

    # -- masks and quadrature -------------------------------------------

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        flat = np.zeros(self.nodes, dtype=bool)
        for axis in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[axis] = 0
            flat[tuple(sl)] = True
            sl[axis] = -1
            flat[tuple(sl)] = True
        out = flat.ravel()
        out.setflags(write=False)
        return out

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Trapezoidal node weights (1/2 on faces), tensor product in 2D."""
        axis_w = []
        for n in self.nodes:
            w = np.ones(n)
            w[0] = w[-1] = 0.5
            axis_w.append(w)
        if self.dim == 1:
            out = axis_w[0].copy()
        else:
            out = np.outer(axis_w[0], axis_w[1]).ravel()
        out.setflags(write=False)
        return out

    @property
    def free_count(self) -> int:
        return int(self.dof_mask.sum())

    # -- adjacency -------------------------------------------------------

    def neighbors(self, idx: int) -> list[int]:
        """Flat indices of the 2*dim lattice neighbors of a node."""
        out = []
        if self.dim == 1:
            n = self.nodes[0]
            if idx > 0:
                out.append(idx - 1)
            if idx < n - 1:
                out.append(idx + 1)
            return out
        nx, ny = self.nodes
        ix, iy = divmod(idx, ny)
        if ix > 0:
            out.append(idx - ny)
        if ix < nx - 1:
            out.append(idx + ny)
        if iy > 0:
            out.append(idx - 1)
        if iy < ny - 1:
            out.append(idx + 1)
        return out

    def component_labels(self, mask: np.ndarray) -> tuple[np.ndarray, int]:
        """Label connected components of a node mask under lattice adjacency.

        Returns (labels, count) with labels[i] = -1 outside the mask.
        """
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_nodes,):
            raise ConfigError("mask length must equal the node count")
        labels = np.full(self.n_nodes, -1, dtype=int)
        count = 0
        for seed in np.flatnonzero(mask):
            if labels[seed] >= 0:
                continue
            stack = [int(seed)]
            labels[seed] = count
            while stack:
                i = stack.pop()
                for j in self.neighbors(i):
                    if mask[j] and labels[j] < 0:
                        labels[j] = count
                        stack.append(j)
            count += 1
        return labels, count

    def mask_ring(self, mask: np.ndarray) -> np.ndarray:
        """Nodes inside a mask having at least one lattice neighbor outside."""
        mask = np.asarray(mask, dtype=bool)
        ring = np.zeros_like(mask)
        for i in np.flatnonzero(mask):
            if any(not mask[j] for j in self.neighbors(int(i))):
                ring[i] = True
        return ring

    def graph_distance_to(self, sources: np.ndarray) -> np.ndarray:
        """Lattice-hop distance from each node to the nearest source node.

        Returns n_nodes where no source exists (all-infinite case).
        """
        sources = np.asarray(sources, dtype=bool)
        dist = np.full(self.n_nodes, self.n_nodes, dtype=int)
        frontier = list(np.flatnonzero(sources))
        for i in frontier:
            dist[i] = 0
        while frontier:
            nxt = []
            for i in frontier:
                for j in self.neighbors(int(i)):
                    if dist[j] > dist[i] + 1:
                        dist[j] = dist[i] + 1
                        nxt.append(j)
            frontier = nxt
        return dist


def build_grid(dim: int, extent, nodes, bc: str) -> Grid:
    """Build a uniform grid on (0, L) or (0, Lx) x (0, Ly).

    Spacing is extent / (nodes - 1) per axis; nodes >= 3 per axis.
    """
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    bc_norm = str(bc).strip().lower()
    if bc_norm not in (DIRICHLET, NEUMANN):
        raise ConfigError(f"bc must be 'dirichlet' or 'neumann', got {bc!r}")
    ext = _as_axis_tuple(extent, dim, "extent", float)
    nds = _as_axis_tuple(nodes, dim, "nodes", int)
    for L in ext:
        if not np.isfinite(L) or L <= 0.0:
            raise ConfigError(f"extent must be positive and finite, got {ext}")
    for n in nds:
        if n < 3:
            raise ConfigError(f"need at least 3 nodes per axis, got {nds}")
    h = tuple(L / (n - 1) for L, n in zip(ext, nds))

    if bc_norm == NEUMANN:
        dof = np.ones(int(np.prod(nds)), dtype=bool)
    else:
        flat = np.ones(nds, dtype=bool)
        for axis in range(dim):
            sl = [slice(None)] * dim
            sl[axis] = 0
            flat[tuple(sl)] = False
            sl[axis] = -1
            flat[tuple(sl)] = False
        dof = flat.ravel()
    return Grid(dim=dim, extent=ext, nodes=nds, h=h, bc=bc_norm, dof_mask=dof)

"""Nodal fields: real values attached to a grid, plus CSV/JSON serialization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grids import Grid


@dataclass(frozen=True)
class Field:
    """Immutable nodal values on a grid (flat, grid ordering)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True).ravel()
        if vals.size != self.grid.n_nodes:
            raise ConfigError(
                f"field length {vals.size} does not match node count {self.grid.n_nodes}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(grid, np.full(grid.n_nodes, float(c)))

    def values_nd(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def with_bc(self) -> "Field":
        """Copy with constrained (non-dof) nodes zeroed."""
        return Field(self.grid, np.where(self.grid.dof_mask, self.values, 0.0))

    def free_values(self) -> np.ndarray:
        return self.values[self.grid.dof_mask]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def field_to_csv(field: Field, path) -> None:
    """One value per row in grid ordering; shortest round-trip float text."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value\n")
        for v in field.values:
            fh.write(f"{float(v)!r}\n")


def field_from_csv(grid: Grid, path) -> Field:
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if rows and rows[0] == "value":
        rows = rows[1:]
    try:
        vals = np.array([float(r) for r in rows])
    except ValueError as exc:
        raise ConfigError(f"non-numeric entry in field file {path}: {exc}") from exc
    return Field(grid, vals)


def field_to_json_obj(field: Field) -> dict:
    g = field.grid
    return {
        "grid": {
            "dim": g.dim,
            "extent": list(g.extent),
            "nodes": list(g.nodes),
            "bc": g.bc,
        },
        "values": [float(v) for v in field.values],
    }

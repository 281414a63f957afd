"""Discrete domain and field containers.

The domain is a doubly periodic horizontal box crossed with an oblique
coordinate zeta that runs along the rotation axis, zeta in [-1/s, 0].  The
map to Cartesian coordinates is

    (x, y, z) = (x, y + c*zeta mod ly, s*zeta),

so level k=nz is the surface z=0 and level k=0 the bottom z=-1.  All 3D
fields are node-centered samples of (field composed with this map) on the
(nx, ny, nz+1) lattice, stored x-major: values[i, j, k].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rotation import TiltParams


@dataclass(frozen=True)
class ObliqueGrid:
    """Structured grid in oblique coordinates.

    nx, ny are even and at least 4 (spectral transforms); nz is the number of
    vertical intervals, so there are nz+1 node levels including both lids.
    """

    nx: int
    ny: int
    nz: int
    lx: float
    ly: float
    tilt: TiltParams
    dzeta: float = field(init=False)
    zeta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 4 or n % 2 != 0:
                raise ValueError(f"{name} must be even and >= 4, got {n}")
        if self.nz < 2:
            raise ValueError(f"nz must be >= 2, got {self.nz}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("box lengths must be positive")
        s = self.tilt.s
        zeta = np.linspace(-1.0 / s, 0.0, self.nz + 1)
        zeta.setflags(write=False)
        object.__setattr__(self, "dzeta", (1.0 / s) / self.nz)
        object.__setattr__(self, "zeta", zeta)

    @property
    def s(self) -> float:
        return self.tilt.s

    @property
    def c(self) -> float:
        return self.tilt.c

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.lx / self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (self.ly / self.ny)

    @property
    def shape3(self) -> tuple:
        return (self.nx, self.ny, self.nz + 1)

    @property
    def shape2(self) -> tuple:
        return (self.nx, self.ny)

    def zeros3(self) -> np.ndarray:
        return np.zeros(self.shape3)

    def zeros2(self) -> np.ndarray:
        return np.zeros(self.shape2)

    def map_to_cartesian(self, i: int, j: int, k: int):
        """Cartesian position of node (i, j, k); y is wrapped into [0, ly)."""
        if not (0 <= i < self.nx and 0 <= j < self.ny and 0 <= k <= self.nz):
            raise IndexError(f"node index ({i}, {j}, {k}) out of range")
        zeta = self.zeta[k]
        return (
            i * (self.lx / self.nx),
            (j * (self.ly / self.ny) + self.c * zeta) % self.ly,
            self.s * zeta,
        )

    def cartesian_nodes(self):
        """Broadcastable (X, Y, Z) arrays for all nodes; shapes (nx,1,1), (1,ny,nz+1), (1,1,nz+1)."""
        X = self.x[:, None, None]
        Y = (self.y[None, :, None] + self.c * self.zeta[None, None, :]) % self.ly
        Z = (self.s * self.zeta)[None, None, :]
        return X, Y, Z


def _check_field(grid: ObliqueGrid, values: np.ndarray, shape: tuple, what: str):
    if values.shape != shape:
        raise ValueError(f"{what} has shape {values.shape}, expected {shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass
class ScalarField3:
    """Node-centered 3D scalar samples on an oblique grid."""

    grid: ObliqueGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_field(self.grid, self.values, self.grid.shape3, "ScalarField3")


@dataclass
class ScalarField2:
    """Field constant along the rotation axis; one value per characteristic."""

    grid: ObliqueGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_field(self.grid, self.values, self.grid.shape2, "ScalarField2")


@dataclass
class VectorField3:
    """Cartesian vector components sampled on the oblique grid."""

    u1: ScalarField3
    u2: ScalarField3
    u3: ScalarField3

    def __post_init__(self):
        if not (self.u1.grid is self.u2.grid is self.u3.grid):
            raise ValueError("vector components live on different grids")

    @property
    def grid(self) -> ObliqueGrid:
        return self.u1.grid


def sample_function(grid: ObliqueGrid, fn: Callable) -> ScalarField3:
    """Sample fn(x, y, z) at every node.

    fn must accept broadcastable arrays.  A non-finite sample raises with the
    offending node index.
    """
    X, Y, Z = grid.cartesian_nodes()
    values = np.asarray(fn(X, Y, Z), dtype=float)
    values = np.broadcast_to(values, grid.shape3).copy()
    if not np.all(np.isfinite(values)):
        i, j, k = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(f"non-finite sample at node ({i}, {j}, {k})")
    return ScalarField3(grid, values)


def sample_surface_function(grid: ObliqueGrid, fn: Callable) -> ScalarField2:
    """Sample fn(x, y) at the characteristic foot points."""
    values = np.asarray(fn(grid.x[:, None], grid.y[None, :]), dtype=float)
    values = np.broadcast_to(values, grid.shape2).copy()
    if not np.all(np.isfinite(values)):
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(f"non-finite sample at node ({i}, {j})")
    return ScalarField2(grid, values)

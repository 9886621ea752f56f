"""Uniform Cartesian grid, field containers and shared finite-difference stencils.

Layout conventions (arrays are indexed ``[i, j]`` with ``i`` along x):

* node  values at ``(x0 + i h, y0 + j h)``
* cell  values at ``(x0 + (i + 1/2) h, y0 + (j + 1/2) h)``
* uface values at ``(x0 + i h, y0 + (j + 1/2) h)``  (x-velocity)
* vface values at ``(x0 + (i + 1/2) h, y0 + j h)``  (y-velocity)

On a periodic axis the node count equals the cell count; on a closed axis
the last node (and face) sits on the far boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CENTERINGS = ("node", "cell", "uface", "vface")


class GridError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    origin: tuple[float, float] = (0.0, 0.0)
    extent: tuple[float, float] = (1.0, 1.0)
    nx: int = 64
    ny: int = 64
    periodic: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise GridError(f"need nx, ny >= 8, got {self.nx}x{self.ny}")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise GridError("extent must be positive")
        if self.extent[0] / self.nx != self.extent[1] / self.ny:
            raise GridError(
                "cells must be square: "
                f"{self.extent[0]}/{self.nx} != {self.extent[1]}/{self.ny}"
            )
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))

    @classmethod
    def unit(cls, n: int, periodic: bool | tuple[bool, bool] = True, extent: float = 1.0):
        if isinstance(periodic, bool):
            periodic = (periodic, periodic)
        return cls((0.0, 0.0), (extent, extent), n, n, periodic)

    @property
    def h(self) -> float:
        return self.extent[0] / self.nx

    @property
    def fully_periodic(self) -> bool:
        return all(self.periodic)

    def shape(self, centering: str) -> tuple[int, int]:
        px, py = self.periodic
        if centering == "node":
            return (self.nx + (not px), self.ny + (not py))
        if centering == "cell":
            return (self.nx, self.ny)
        if centering == "uface":
            return (self.nx + (not px), self.ny)
        if centering == "vface":
            return (self.nx, self.ny + (not py))
        raise GridError(f"unknown centering {centering!r}")

    def offset(self, centering: str) -> tuple[float, float]:
        return {
            "node": (0.0, 0.0),
            "cell": (0.5, 0.5),
            "uface": (0.0, 0.5),
            "vface": (0.5, 0.0),
        }[centering]

    def coords(self, centering: str = "node") -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (``indexing='ij'``) of sample positions."""
        sx, sy = self.shape(centering)
        ox, oy = self.offset(centering)
        x = self.origin[0] + (np.arange(sx) + ox) * self.h
        y = self.origin[1] + (np.arange(sy) + oy) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def sample(self, func, centering: str = "node") -> np.ndarray:
        X, Y = self.coords(centering)
        return np.asarray(func(X, Y), dtype=float) * np.ones_like(X)

    def wrap(self, x: np.ndarray, y: np.ndarray):
        """Map points into the fundamental domain along periodic axes."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.periodic[0]:
            x = self.origin[0] + np.mod(x - self.origin[0], self.extent[0])
        if self.periodic[1]:
            y = self.origin[1] + np.mod(y - self.origin[1], self.extent[1])
        return x, y

    def inside(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.ones(np.broadcast(x, y).shape, dtype=bool)
        tol = 1e-12 * self.h
        if not self.periodic[0]:
            ok &= (x >= self.origin[0] - tol) & (x <= self.origin[0] + self.extent[0] + tol)
        if not self.periodic[1]:
            ok &= (y >= self.origin[1] - tol) & (y <= self.origin[1] + self.extent[1] + tol)
        return ok


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    centering: str = "node"
    name: str = "field"
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.shape(self.centering)
        if self.values.shape != expected:
            raise GridError(
                f"{self.name}: shape {self.values.shape} does not match "
                f"{self.centering} layout {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.name}: non-finite values")


@dataclass
class MACField:
    """Staggered vector field: ``u`` on x-faces, ``v`` on y-faces."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.grid.shape("uface") or self.v.shape != self.grid.shape("vface"):
            raise GridError("MAC component shapes do not match grid")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("MAC field has non-finite values")

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros(grid.shape("uface")), np.zeros(grid.shape("vface")))

    @classmethod
    def from_function(cls, grid: Grid, func):
        """Sample ``func(x, y) -> (u, v)`` at the face positions."""
        Xu, Yu = grid.coords("uface")
        Xv, Yv = grid.coords("vface")
        u = np.asarray(func(Xu, Yu)[0], dtype=float) * np.ones_like(Xu)
        v = np.asarray(func(Xv, Yv)[1], dtype=float) * np.ones_like(Xv)
        return cls(grid, u, v)

    @classmethod
    def from_streamfunction(cls, grid: Grid, psi_nodes: np.ndarray):
        """Discretely divergence-free field from node samples of a stream function.

        Requires a fully periodic grid.
        """
        if not grid.fully_periodic:
            raise GridError("stream-function construction needs a periodic grid")
        h = grid.h
        # u = d(psi)/dy on x-faces, v = -d(psi)/dx on y-faces
        u = (np.roll(psi_nodes, -1, axis=1) - psi_nodes) / h
        v = -(np.roll(psi_nodes, -1, axis=0) - psi_nodes) / h
        return cls(grid, u, v)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.v))))

    def copy(self):
        return MACField(self.grid, self.u.copy(), self.v.copy(), self.t)


# --------------------------------------------------------------------------
# padding


def _extrapolate(a: np.ndarray, width: int, axis: int) -> np.ndarray:
    """Append ``width`` ghost layers on both ends by quadratic extrapolation."""
    a = np.moveaxis(a, axis, 0)
    lo = [a[0]]
    hi = [a[-1]]
    f0, f1, f2 = a[0], a[1], a[2]
    g0, g1, g2 = a[-1], a[-2], a[-3]
    for k in range(1, width + 1):
        # quadratic through samples 0,1,2 evaluated at -k
        lo.append(f0 * (1 + k) * (2 + k) / 2 - f1 * k * (2 + k) + f2 * k * (1 + k) / 2)
        hi.append(g0 * (1 + k) * (2 + k) / 2 - g1 * k * (2 + k) + g2 * k * (1 + k) / 2)
    out = np.concatenate([np.stack(lo[:0:-1]), a, np.stack(hi[1:])], axis=0)
    return np.moveaxis(out, 0, axis)


def pad(grid: Grid, a: np.ndarray, width: int) -> np.ndarray:
    """Add ghost layers: wrap on periodic axes, quadratic extrapolation otherwise."""
    for axis in (0, 1):
        if grid.periodic[axis]:
            a = np.concatenate(
                [np.take(a, range(-width, 0), axis=axis), a, np.take(a, range(width), axis=axis)],
                axis=axis,
            )
        else:
            a = _extrapolate(a, width, axis)
    return a


def _core(a: np.ndarray, w: int) -> np.ndarray:
    return a[w:-w, w:-w]


# --------------------------------------------------------------------------
# stencils on collocated (node or cell) arrays


def gradient_central(grid: Grid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second-order central gradient of a collocated array.

    Closed axes use the second-order one-sided formula at the boundary.
    """
    p = pad(grid, f, 1)
    h = grid.h
    fx = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * h)
    fy = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * h)
    return fx, fy


def hessian_central(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Array of shape (2, 2, nx, ny) with ``H[i, j] = d_i d_j f``."""
    p = pad(grid, f, 1)
    h = grid.h
    c = p[1:-1, 1:-1]
    fxx = (p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]) / h**2
    fyy = (p[1:-1, 2:] - 2 * c + p[1:-1, :-2]) / h**2
    fxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * h**2)
    return np.array([[fxx, fxy], [fxy, fyy]])


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Standard 5-point Laplacian."""
    p = pad(grid, f, 1)
    c = p[1:-1, 1:-1]
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4 * c) / grid.h**2


def divergence_central(grid: Grid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    return gradient_central(grid, vx)[0] + gradient_central(grid, vy)[1]


# --------------------------------------------------------------------------
# MAC operators


def divergence_mac(v: MACField) -> np.ndarray:
    """Conservative face-difference divergence at cell centres."""
    g = v.grid
    h = g.h
    if g.periodic[0]:
        dx = np.roll(v.u, -1, axis=0) - v.u
    else:
        dx = v.u[1:, :] - v.u[:-1, :]
    if g.periodic[1]:
        dy = np.roll(v.v, -1, axis=1) - v.v
    else:
        dy = v.v[:, 1:] - v.v[:, :-1]
    return (dx + dy) / h


def gradient_mac(grid: Grid, p: np.ndarray) -> MACField:
    """Face gradient of a cell-centred field (periodic grids only)."""
    if not grid.fully_periodic:
        raise GridError("MAC gradient implemented for periodic grids")
    h = grid.h
    return MACField(grid, (p - np.roll(p, 1, axis=0)) / h, (p - np.roll(p, 1, axis=1)) / h)


def mac_to_nodes(v: MACField) -> tuple[np.ndarray, np.ndarray]:
    """Average face components to node positions."""
    g = v.grid
    # u-face (i, j+1/2): node (i, j) sits between u[i, j-1] and u[i, j]
    if g.periodic[1]:
        un = 0.5 * (v.u + np.roll(v.u, 1, axis=1))
    else:
        uu = v.u
        un = np.empty((uu.shape[0], uu.shape[1] + 1))
        un[:, 1:-1] = 0.5 * (uu[:, 1:] + uu[:, :-1])
        un[:, 0] = 1.5 * uu[:, 0] - 0.5 * uu[:, 1]
        un[:, -1] = 1.5 * uu[:, -1] - 0.5 * uu[:, -2]
    if g.periodic[0]:
        vn = 0.5 * (v.v + np.roll(v.v, 1, axis=0))
    else:
        vv = v.v
        vn = np.empty((vv.shape[0] + 1, vv.shape[1]))
        vn[1:-1, :] = 0.5 * (vv[1:, :] + vv[:-1, :])
        vn[0, :] = 1.5 * vv[0, :] - 0.5 * vv[1, :]
        vn[-1, :] = 1.5 * vv[-1, :] - 0.5 * vv[-2, :]
    return un, vn


def nodes_to_mac(grid: Grid, un: np.ndarray, vn: np.ndarray) -> MACField:
    """Average node components back to faces."""
    if grid.periodic[1]:
        u = 0.5 * (un + np.roll(un, -1, axis=1))
    else:
        u = 0.5 * (un[:, 1:] + un[:, :-1])
    if grid.periodic[0]:
        v = 0.5 * (vn + np.roll(vn, -1, axis=0))
    else:
        v = 0.5 * (vn[1:, :] + vn[:-1, :])
    return MACField(grid, u, v)


def cells_to_nodes(grid: Grid, c: np.ndarray) -> np.ndarray:
    if not grid.fully_periodic:
        raise GridError("cell-to-node averaging implemented for periodic grids")
    return 0.25 * (c + np.roll(c, 1, 0) + np.roll(c, 1, 1) + np.roll(np.roll(c, 1, 0), 1, 1))


# --------------------------------------------------------------------------
# interpolation


def _frac_index(grid: Grid, x, y, centering: str):
    x, y = grid.wrap(x, y)
    if not np.all(grid.inside(x, y)):
        raise DomainError("interpolation point outside the domain on a closed axis")
    ox, oy = grid.offset(centering)
    fx = (x - grid.origin[0]) / grid.h - ox
    fy = (y - grid.origin[1]) / grid.h - oy
    return fx, fy


def interp_bilinear(grid: Grid, a: np.ndarray, x, y, centering: str = "node") -> np.ndarray:
    """Bilinear interpolation of a sampled array at points ``(x, y)``."""
    fx, fy = _frac_index(grid, x, y, centering)
    sx, sy = a.shape
    i0 = np.floor(fx).astype(int)
    j0 = np.floor(fy).astype(int)
    if not grid.periodic[0]:
        i0 = np.clip(i0, 0, sx - 2)
    if not grid.periodic[1]:
        j0 = np.clip(j0, 0, sy - 2)
    tx = fx - i0
    ty = fy - j0
    i1 = i0 + 1
    j1 = j0 + 1
    i0 %= sx
    i1 %= sx
    j0 %= sy
    j1 %= sy
    return (
        a[i0, j0] * (1 - tx) * (1 - ty)
        + a[i1, j0] * tx * (1 - ty)
        + a[i0, j1] * (1 - tx) * ty
        + a[i1, j1] * tx * ty
    )


def interp_cubic(grid: Grid, a: np.ndarray, x, y, centering: str = "node") -> np.ndarray:
    """Local 4x4 tensor-product Lagrange interpolation (exact on bicubics)."""
    fx, fy = _frac_index(grid, x, y, centering)
    sx, sy = a.shape
    i0 = np.floor(fx).astype(int)
    j0 = np.floor(fy).astype(int)
    if not grid.periodic[0]:
        i0 = np.clip(i0, 1, sx - 3)
    if not grid.periodic[1]:
        j0 = np.clip(j0, 1, sy - 3)
    tx = fx - i0
    ty = fy - j0

    def weights(t):
        return (
            -t * (t - 1) * (t - 2) / 6,
            (t + 1) * (t - 1) * (t - 2) / 2,
            -(t + 1) * t * (t - 2) / 2,
            (t + 1) * t * (t - 1) / 6,
        )

    wx = weights(tx)
    wy = weights(ty)
    out = np.zeros(np.shape(fx))
    for a_ in range(4):
        ii = (i0 + a_ - 1) % sx
        for b_ in range(4):
            jj = (j0 + b_ - 1) % sy
            out = out + wx[a_] * wy[b_] * a[ii, jj]
    return out


def interp_mac(v: MACField, x, y) -> tuple[np.ndarray, np.ndarray]:
    g = v.grid
    return interp_bilinear(g, v.u, x, y, "uface"), interp_bilinear(g, v.v, x, y, "vface")


def interp_field(f: ScalarField | MACField, x, y):
    """Bilinear interpolation of a scalar or staggered vector field."""
    if isinstance(f, MACField):
        return interp_mac(f, x, y)
    return interp_bilinear(f.grid, f.values, x, y, f.centering)


def gradient_field(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    return gradient_central(f.grid, f.values)


def laplacian_field(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, laplacian(f.grid, f.values), f.centering, f"lap_{f.name}", f.t)

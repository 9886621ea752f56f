"""Interface geometry from the level set: normals, curvature, projectors and
tangential operators, plus numerical checks of the tensor identities used by
the jump conditions."""

from __future__ import annotations

import logging

import numpy as np

from .grid import Grid, divergence_central, gradient_central, interp_bilinear
from .levelset import LevelSet

logger = logging.getLogger(__name__)

MIN_GRAD = 0.5


class DegenerateNormalError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class StencilError(ValueError):
    pass


def _check_gradient(ls: LevelSet, mag: np.ndarray):
    bad = ls.band_mask & (mag < MIN_GRAD)
    if np.any(bad):
        idx = np.argwhere(bad)[:5].tolist()
        raise DegenerateNormalError(f"|grad phi| < {MIN_GRAD} at band nodes {idx}")


def normal(ls: LevelSet, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Unit normal ``grad(phi)/|grad(phi)|`` (points inward for inside-positive phi)."""
    gx, gy = gradient_central(ls.grid, ls.phi)
    mag = np.hypot(gx, gy)
    if check:
        _check_gradient(ls, mag)
    mag = np.maximum(mag, 1e-14)
    return gx / mag, gy / mag


def curvature(ls: LevelSet, clamp: bool = True) -> np.ndarray:
    """``kappa = -div(n)``; positive for convex shapes."""
    nx, ny = normal(ls)
    kappa = -divergence_central(ls.grid, nx, ny)
    if clamp:
        cap = 2.0 / ls.grid.h
        hit = ls.band_mask & (np.abs(kappa) > cap)
        if np.any(hit):
            logger.warning("curvature clamped to |kappa| <= 2/h at %d band nodes", int(hit.sum()))
        kappa = np.clip(kappa, -cap, cap)
    return kappa


def project(nx, ny, vx, vy):
    """``(I - nn) . v``."""
    dot = nx * vx + ny * vy
    return vx - dot * nx, vy - dot * ny


def tangential_gradient(ls: LevelSet, q: np.ndarray, n=None) -> tuple[np.ndarray, np.ndarray]:
    nx, ny = normal(ls) if n is None else n
    qx, qy = gradient_central(ls.grid, q)
    return project(nx, ny, qx, qy)


def tensor_gradient(grid: Grid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    """``G[i, j] = d_i v_j`` with shape (2, 2, ...)."""
    dxvx, dyvx = gradient_central(grid, vx)
    dxvy, dyvy = gradient_central(grid, vy)
    return np.array([[dxvx, dxvy], [dyvx, dyvy]])


def surface_divergence(ls: LevelSet, vx, vy, n=None) -> np.ndarray:
    """``((I - nn) . grad) . v = div v - n . grad v . n``."""
    nx, ny = normal(ls) if n is None else n
    G = tensor_gradient(ls.grid, vx, vy)
    nn = nx * nx * G[0, 0] + nx * ny * (G[0, 1] + G[1, 0]) + ny * ny * G[1, 1]
    return G[0, 0] + G[1, 1] - nn


def tangential_laplacian(ls: LevelSet, q: np.ndarray, n=None) -> np.ndarray:
    """Nested ``(P grad) . (P grad q)`` with ``P = I - nn``."""
    if ls.band_halfwidth < 8 * ls.grid.h - 1e-12:
        raise StencilError("band must be at least 8h wide for nested tangential stencils")
    n = normal(ls) if n is None else n
    wx, wy = tangential_gradient(ls, q, n)
    return surface_divergence(ls, wx, wy, n)


def grad_normal(ls: LevelSet, n=None) -> np.ndarray:
    """``(grad n)[i, j] = d_i n_j``, shape (2, 2, nx, ny)."""
    nx, ny = normal(ls) if n is None else n
    return tensor_gradient(ls.grid, nx, ny)


def projected_grad_normal(gn: np.ndarray, nx, ny) -> np.ndarray:
    """``(I - nn) . grad n``."""
    P = np.array([[1 - nx * nx, -nx * ny], [-nx * ny, 1 - ny * ny]])
    return np.einsum("ik...,kj...->ij...", P, gn)


def normal_contraction(gn: np.ndarray, nx, ny) -> np.ndarray:
    """``|(grad n) . n|`` per node."""
    cx = gn[0, 0] * nx + gn[0, 1] * ny
    cy = gn[1, 0] * nx + gn[1, 1] * ny
    return np.hypot(cx, cy)


def curvature_identity_residual(ls: LevelSet) -> np.ndarray:
    """Pointwise ``||(I-nn).grad n + kappa (I-nn)||`` (Frobenius) on nodes."""
    nx, ny = normal(ls)
    gn = grad_normal(ls, (nx, ny))
    kappa = curvature(ls, clamp=False)
    Pg = projected_grad_normal(gn, nx, ny)
    P = np.array([[1 - nx * nx, -nx * ny], [-nx * ny, 1 - ny * ny]])
    R = Pg + kappa * P
    return np.sqrt(np.sum(R**2, axis=(0, 1)))


def double_contraction_projected(gn: np.ndarray, nx, ny) -> np.ndarray:
    """``((I-nn).grad n) : ((I-nn).grad n)^T``."""
    Pg = projected_grad_normal(gn, nx, ny)
    return np.einsum("ij...,ji...->...", Pg, Pg)


# --------------------------------------------------------------------------
# identity checks


def check_cross_identity(G: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    """Residual of ``(v.G) x w + v x (w.G) + G.(v x w)`` for trace-free ``G``.

    ``(v.G)_j = v_i G_ij`` and ``(G.a)_i = G_ij a_j``.
    """
    G = np.asarray(G, dtype=float)
    if G.shape != (3, 3):
        raise PreconditionError("G must be 3x3")
    if abs(np.trace(G)) > 1e-13 * max(1.0, np.linalg.norm(G)):
        raise PreconditionError(f"G must be trace-free, trace = {np.trace(G):.3e}")
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    lhs = np.cross(v @ G, w) + np.cross(v, w @ G)
    rhs = -G @ np.cross(v, w)
    return float(np.linalg.norm(lhs - rhs))


def check_normal_symmetry(ls: LevelSet, points: np.ndarray) -> float:
    """Max over ``points`` of ``|t . (grad n - grad n^T) . n|`` (planar curl of n)."""
    nx, ny = normal(ls)
    gn = grad_normal(ls, (nx, ny))
    skew = gn[0, 1] - gn[1, 0]  # d_x n_y - d_y n_x
    x, y = points[:, 0], points[:, 1]
    # t.(A - A^T).n with t = (-n_y, n_x) equals (t_x n_y - t_y n_x) * skew = -skew
    return float(np.max(np.abs(interp_bilinear(ls.grid, skew, x, y))))


def surface_divergence_identity(ls: LevelSet, vx: np.ndarray, vy: np.ndarray, points: np.ndarray):
    """Both sides of ``int_G (P grad).v ds = int_G (v.n) div(n) ds``.

    ``vx, vy`` are node samples of a smooth field; integrands are evaluated on
    the grid and integrated over the closed polyline ``points`` with the
    midpoint rule.
    """
    grid = ls.grid
    n = normal(ls)
    sdiv = surface_divergence(ls, vx, vy, n)
    divn = divergence_central(grid, *n)
    vn = vx * n[0] + vy * n[1]
    mid = 0.5 * (points + np.roll(points, -1, axis=0))
    ds = np.hypot(*(np.roll(points, -1, axis=0) - points).T)
    lhs = np.sum(interp_bilinear(grid, sdiv, mid[:, 0], mid[:, 1]) * ds)
    rhs = np.sum(interp_bilinear(grid, vn * divn, mid[:, 0], mid[:, 1]) * ds)
    return float(lhs), float(rhs)

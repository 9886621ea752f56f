"""Tangential stretch field: transport with the normal-strain reaction term,
and normal extension of band quantities."""

from __future__ import annotations

import logging
import warnings

import numba
import numpy as np

from .geometry import normal
from .grid import Grid, MACField, gradient_central, interp_cubic, mac_to_nodes, nodes_to_mac, pad
from .levelset import LevelSet, check_cfl, interface_adjacent, transport_rk3

logger = logging.getLogger(__name__)

CHI_MIN = 1e-8


class ConvergenceWarning(UserWarning):
    pass


def reaction_rate(grid: Grid, n, un: np.ndarray, vn: np.ndarray) -> np.ndarray:
    """``(I - nn) : grad w`` at nodes from node velocities."""
    nx, ny = n
    ux, uy = gradient_central(grid, un)
    vx, vy = gradient_central(grid, vn)
    # (grad w)_ij = d_i w_j
    nn = nx * nx * ux + nx * ny * (vx + uy) + ny * ny * vy
    return ux + vy - nn


def normal_strain(grid: Grid, n, un, vn) -> np.ndarray:
    """``-(n . grad w . n)``; equals the reaction rate when ``div w = 0``."""
    nx, ny = n
    ux, uy = gradient_central(grid, un)
    vx, vy = gradient_central(grid, vn)
    return -(nx * nx * ux + nx * ny * (vx + uy) + ny * ny * vy)


def evolve_stretch_nodes(chi: np.ndarray, ls: LevelSet, un: np.ndarray, vn: np.ndarray, dt: float) -> np.ndarray:
    """Strang-split step of ``chi_t + w.grad chi = ((I-nn):grad w) chi``.

    ``ls`` supplies the normal for the reaction; pass the level set at the
    middle of the step for second-order accuracy in time.
    """
    grid = ls.grid
    speed = float(max(np.max(np.abs(un)), np.max(np.abs(vn))))
    check_cfl(grid, speed, dt)
    if speed == 0.0:
        return chi.copy()
    n = normal(ls)
    rate = reaction_rate(grid, n, un, vn)
    half = transport_rk3(grid, chi, un, vn, 0.5 * dt)
    half = half * np.exp(rate * dt)
    out = transport_rk3(grid, half, un, vn, 0.5 * dt)
    band = ls.band_mask
    low = band & (out < CHI_MIN)
    if np.any(low):
        logger.warning("stretch clamped at %g on %d band nodes", CHI_MIN, int(low.sum()))
        out = np.where(low, CHI_MIN, out)
    return out


def evolve_stretch(chi: np.ndarray, ls: LevelSet, w: MACField, dt: float) -> np.ndarray:
    un, vn = mac_to_nodes(w)
    return evolve_stretch_nodes(chi, ls, un, vn, dt)


def step_interface(ls: LevelSet, chi: np.ndarray, un, vn, dt: float,
                   wn: tuple[np.ndarray, np.ndarray] | None = None):
    """Advance ``(phi, chi)`` together by ``dt``.

    ``phi`` is moved in two half steps so the stretch reaction sees the
    mid-step normal. ``wn`` optionally gives a separate velocity for ``chi``.
    """
    from .levelset import advect_phi_nodes

    mid = advect_phi_nodes(ls, un, vn, 0.5 * dt)
    wu, wv = (un, vn) if wn is None else wn
    chi_new = evolve_stretch_nodes(chi, mid, wu, wv, dt)
    return advect_phi_nodes(mid, un, vn, 0.5 * dt), chi_new


# --------------------------------------------------------------------------
# extension


def foot_points(ls: LevelSet, n=None):
    """Closest-point estimate ``x - phi grad(phi)/|grad(phi)|^2`` per node."""
    grid = ls.grid
    gx, gy = gradient_central(grid, ls.phi)
    g2 = np.maximum(gx * gx + gy * gy, 1e-14)
    X, Y = grid.coords("node")
    return X - ls.phi * gx / g2, Y - ls.phi * gy / g2


@numba.njit(cache=True)
def _upwind2_periodic(q, cx, cy, h):
    nx, ny = q.shape
    out = np.empty_like(q)
    for i in range(nx):
        im1, im2 = (i - 1) % nx, (i - 2) % nx
        ip1, ip2 = (i + 1) % nx, (i + 2) % nx
        for j in range(ny):
            jm1, jm2 = (j - 1) % ny, (j - 2) % ny
            jp1, jp2 = (j + 1) % ny, (j + 2) % ny
            c = q[i, j]
            if cx[i, j] > 0:
                dx = 3 * c - 4 * q[im1, j] + q[im2, j]
            else:
                dx = -3 * c + 4 * q[ip1, j] - q[ip2, j]
            if cy[i, j] > 0:
                dy = 3 * c - 4 * q[i, jm1] + q[i, jm2]
            else:
                dy = -3 * c + 4 * q[i, jp1] - q[i, jp2]
            out[i, j] = (cx[i, j] * dx + cy[i, j] * dy) / (2 * h)
    return out


def _upwind2(grid: Grid, q: np.ndarray, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    """Second-order purely upwind ``c . grad q`` (reads only upstream samples)."""
    h = grid.h
    if grid.fully_periodic:
        return _upwind2_periodic(q, cx, cy, h)
    p = pad(grid, q, 2)
    c = p[2:-2, 2:-2]
    bx = (3 * c - 4 * p[1:-3, 2:-2] + p[:-4, 2:-2]) / (2 * h)
    fx = (-3 * c + 4 * p[3:-1, 2:-2] - p[4:, 2:-2]) / (2 * h)
    by = (3 * c - 4 * p[2:-2, 1:-3] + p[2:-2, :-4]) / (2 * h)
    fy = (-3 * c + 4 * p[2:-2, 3:-1] - p[2:-2, 4:]) / (2 * h)
    return cx * np.where(cx > 0, bx, fx) + cy * np.where(cy > 0, by, fy)


def extend_scalar(ls: LevelSet, q: np.ndarray, n_pseudo_steps: int = 200, tol: float = 1e-11,
                  cfl: float = 0.4, return_residual: bool = False, width: float | None = None):
    """Make ``q`` constant along normal rays off the interface.

    Interface-adjacent nodes take the value of ``q`` at their foot point
    (local bicubic interpolation); the rest of the band relaxes
    ``q_tau + sgn(phi) n . grad q = 0`` with a purely upwind scheme, so band
    values depend only on data closer to the interface.  ``width`` (in units
    of h) limits the relaxed tube to ``|phi| < width h`` when only
    near-interface values are needed.
    """
    grid = ls.grid
    h = grid.h
    n = normal(ls)
    adj = interface_adjacent(grid, ls.phi)
    fx, fy = foot_points(ls)
    fx, fy = grid.wrap(fx[adj], fy[adj])
    q = np.array(q, dtype=float, copy=True)
    q[adj] = interp_cubic(grid, q, fx, fy)
    s = np.sign(ls.phi)
    cx, cy = s * n[0], s * n[1]
    update = ls.band_mask & ~adj
    if width is not None:
        update &= np.abs(ls.phi) < width * h
    dtau = cfl * h
    residual = np.inf
    for _ in range(n_pseudo_steps):
        r1 = _upwind2(grid, q, cx, cy)
        q1 = np.where(update, q - dtau * r1, q)
        q2 = np.where(update, 0.75 * q + 0.25 * (q1 - dtau * _upwind2(grid, q1, cx, cy)), q)
        qn = np.where(update, q / 3 + 2 / 3 * (q2 - dtau * _upwind2(grid, q2, cx, cy)), q)
        residual = float(np.max(np.abs(qn - q))) if np.any(update) else 0.0
        q = qn
        if residual < tol:
            break
    else:
        warnings.warn(f"extension not converged, residual {residual:.3e}", ConvergenceWarning, stacklevel=2)
    if return_residual:
        return q, residual
    return q


def extend_velocity_nodes(ls: LevelSet, u: MACField, **kw):
    un, vn = mac_to_nodes(u)
    return extend_scalar(ls, un, **kw), extend_scalar(ls, vn, **kw)


def extend_velocity(ls: LevelSet, u: MACField, **kw) -> MACField:
    """Normal extension of each velocity component, returned on faces."""
    eu, ev = extend_velocity_nodes(ls, u, **kw)
    return nodes_to_mac(ls.grid, eu, ev)


def directional_derivative(ls: LevelSet, q: np.ndarray) -> np.ndarray:
    """``n . grad q`` on nodes."""
    n = normal(ls)
    qx, qy = gradient_central(ls.grid, q)
    return n[0] * qx + n[1] * qy

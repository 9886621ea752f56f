"""Level-set construction, transport and reinitialization.

The interface is the zero contour of a node-centred ``phi`` that is positive
inside the membrane.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .grid import Grid, MACField, gradient_central, interp_bilinear, mac_to_nodes, pad

logger = logging.getLogger(__name__)

DEFAULT_BAND = 8.0  # band half-width in units of h


class ConfigurationError(ValueError):
    pass


class StepError(RuntimeError):
    pass


class TopologyError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigurationError("radius must be positive")

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def signed_distance(self, x, y):
        return self.radius - np.hypot(x - self.center[0], y - self.center[1])

    def points(self, n: int = 2048):
        s = 2 * np.pi * np.arange(n) / n
        return np.column_stack(
            [self.center[0] + self.radius * np.cos(s), self.center[1] + self.radius * np.sin(s)]
        )


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigurationError("semi-axes must be positive")

    def bbox(self):
        cx, cy = self.center
        return cx - self.a, cx + self.a, cy - self.b, cy + self.b

    def signed_distance(self, x, y):
        """Exact signed distance.

        Folds to the first quadrant and finds the foot point by bisection on
        the monotone function ``(r z0 / (s + r))^2 + (z1 / (s + 1))^2 - 1``
        (the robust bracketed form; Newton on the angle can lock onto the
        wrong critical point near the medial axis).
        """
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        swap = self.b > self.a
        e0, e1 = (self.b, self.a) if swap else (self.a, self.b)
        px = np.abs(x - self.center[0])
        py = np.abs(y - self.center[1])
        y0, y1 = (py, px) if swap else (px, py)
        y0, y1 = np.broadcast_arrays(y0, y1)
        z0, z1 = y0 / e0, y1 / e1
        g = z0 * z0 + z1 * z1 - 1
        r0 = (e0 / e1) ** 2
        n0 = r0 * z0
        lo = z1 - 1
        hi = np.where(g < 0, 0.0, np.hypot(n0, z1) - 1)
        with np.errstate(divide="ignore", invalid="ignore"):  # y0 = 0 or y1 = 0 handled below
            for _ in range(80):
                s = 0.5 * (lo + hi)
                val = (n0 / (s + r0)) ** 2 + (z1 / (s + 1)) ** 2 - 1
                lo = np.where(val > 0, s, lo)
                hi = np.where(val > 0, hi, s)
            s = 0.5 * (lo + hi)
            d_gen = np.hypot(r0 * y0 / (s + r0) - y0, y1 / (s + 1) - y1)
        # y1 == 0: foot on the major axis or at the tip
        xde = np.clip(e0 * y0 / (e0 * e0 - e1 * e1), -1, 1) if e0 > e1 else np.ones_like(y0)
        d_axis = np.where(e0 * y0 < e0 * e0 - e1 * e1, np.hypot(e0 * xde - y0, e1 * np.sqrt(1 - xde**2)),
                          np.abs(y0 - e0))
        d = np.where(y1 > 0, np.where(y0 > 0, d_gen, np.abs(y1 - e1)), d_axis)
        d = np.where(g == 0, 0.0, d)
        return np.where(g < 0, d, -d)

    def points(self, n: int = 2048):
        s = 2 * np.pi * np.arange(n) / n
        return np.column_stack(
            [self.center[0] + self.a * np.cos(s), self.center[1] + self.b * np.sin(s)]
        )

    def perimeter(self) -> float:
        from scipy.integrate import quad

        a, b = self.a, self.b
        val, _ = quad(lambda s: np.hypot(a * np.sin(s), b * np.cos(s)), 0, 2 * np.pi, limit=200)
        return val


@dataclass(frozen=True)
class PolygonCurve:
    """Closed curve given by ordered samples (first vertex not repeated)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ConfigurationError("need at least three (x, y) vertices")
        if _self_intersects(v):
            raise ConfigurationError("curve self-intersects")
        object.__setattr__(self, "vertices", v)

    def bbox(self):
        v = self.vertices
        return v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()

    def signed_distance(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d = polyline_distance(self.vertices, x.ravel(), y.ravel()).reshape(x.shape)
        inside = points_in_polygon(self.vertices, x.ravel(), y.ravel()).reshape(x.shape)
        return np.where(inside, d, -d)

    def points(self, n: int = 0):
        return self.vertices


def _self_intersects(v: np.ndarray) -> bool:
    n = len(v)
    a = v
    b = np.roll(v, -1, axis=0)
    for k in range(n):
        p, q = a[k], b[k]
        idx = np.array([m for m in range(n) if m not in (k, (k - 1) % n, (k + 1) % n)])
        if idx.size == 0:
            continue
        r, s = a[idx], b[idx]

        def orient(p1, p2, p3):
            return np.sign((p2[..., 0] - p1[..., 0]) * (p3[..., 1] - p1[..., 1])
                           - (p2[..., 1] - p1[..., 1]) * (p3[..., 0] - p1[..., 0]))

        o1 = orient(p, q, r)
        o2 = orient(p, q, s)
        o3 = orient(r, s, p)
        o4 = orient(r, s, q)
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
            return True
    return False


def polyline_distance(vertices: np.ndarray, x: np.ndarray, y: np.ndarray, chunk: int = 4096):
    """Unsigned distance from points to a closed polyline."""
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    ab = b - a
    ab2 = np.maximum(np.sum(ab**2, axis=1), 1e-300)
    out = np.empty(x.shape)
    for s in range(0, x.size, chunk):
        px = x[s:s + chunk, None]
        py = y[s:s + chunk, None]
        t = ((px - a[:, 0]) * ab[:, 0] + (py - a[:, 1]) * ab[:, 1]) / ab2
        t = np.clip(t, 0, 1)
        dx = a[:, 0] + t * ab[:, 0] - px
        dy = a[:, 1] + t * ab[:, 1] - py
        out[s:s + chunk] = np.sqrt(np.min(dx * dx + dy * dy, axis=1))
    return out


def points_in_polygon(vertices: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Even-odd ray casting."""
    inside = np.zeros(x.shape, dtype=bool)
    xa, ya = vertices[:, 0], vertices[:, 1]
    xb, yb = np.roll(xa, -1), np.roll(ya, -1)
    for k in range(len(vertices)):
        cond = (ya[k] > y) != (yb[k] > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = xa[k] + (y - ya[k]) * (xb[k] - xa[k]) / (yb[k] - ya[k])
        inside ^= cond & (x < xc)
    return inside


# --------------------------------------------------------------------------
# LevelSet container


@dataclass
class LevelSet:
    grid: Grid
    phi: np.ndarray
    band_halfwidth: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.band_halfwidth is None:
            self.band_halfwidth = DEFAULT_BAND * self.grid.h
        if self.phi.shape != self.grid.shape("node"):
            raise ConfigurationError("phi must be node-centred")

    @property
    def band_mask(self) -> np.ndarray:
        return np.abs(self.phi) < self.band_halfwidth

    def with_phi(self, phi: np.ndarray) -> "LevelSet":
        return replace(self, phi=phi)

    def interface_adjacent(self) -> np.ndarray:
        return interface_adjacent(self.grid, self.phi)


def interface_adjacent(grid: Grid, phi: np.ndarray) -> np.ndarray:
    """Nodes with a sign change to at least one axis neighbour."""
    p = pad(grid, phi, 1)
    c = p[1:-1, 1:-1]
    s = np.sign(c)
    adj = np.zeros(phi.shape, dtype=bool)
    for nb in (p[2:, 1:-1], p[:-2, 1:-1], p[1:-1, 2:], p[1:-1, :-2]):
        adj |= s * np.sign(nb) <= 0
    return adj


# --------------------------------------------------------------------------
# initialisation


@njit(cache=True)
def _fast_sweep(d, fx, fy, valid, fixed, x0, y0, h, n_iter):
    """Closest-point fast sweeping.

    Every reached node stores the interface foot point of its nearest seed;
    a Gauss-Seidel pass in the four sweep orders offers each node the feet of
    its eight neighbours.  Distances stay Euclidean instead of picking up the
    O(h) error of the first-order Godunov update.
    """
    nx, ny = d.shape
    for _ in range(n_iter):
        changed = False
        for sweep in range(4):
            for ii in range(nx):
                i = ii if sweep < 2 else nx - 1 - ii
                for jj in range(ny):
                    j = jj if sweep % 2 == 0 else ny - 1 - jj
                    if fixed[i, j]:
                        continue
                    x = x0 + i * h
                    y = y0 + j * h
                    for di in range(-1, 2):
                        k = i + di
                        if k < 0 or k >= nx:
                            continue
                        for dj in range(-1, 2):
                            m = j + dj
                            if m < 0 or m >= ny or not valid[k, m]:
                                continue
                            c = np.sqrt((x - fx[k, m]) ** 2 + (y - fy[k, m]) ** 2)
                            if c < d[i, j] - 1e-15:
                                d[i, j] = c
                                fx[i, j] = fx[k, m]
                                fy[i, j] = fy[k, m]
                                valid[i, j] = True
                                changed = True
        if not changed:
            break
    return d


def _foot_points(shape, x, y, d):
    """``x - d grad d`` from the exact distance; invalid where the distance
    is not differentiable (medial axis) or the foot misses the curve."""
    eps = 1e-7
    gx = (shape.signed_distance(x + eps, y) - shape.signed_distance(x - eps, y)) / (2 * eps)
    gy = (shape.signed_distance(x, y + eps) - shape.signed_distance(x, y - eps)) / (2 * eps)
    m = np.hypot(gx, gy)
    m_safe = np.maximum(m, 1e-12)
    fx = x - d * gx / m_safe
    fy = y - d * gy / m_safe
    ok = (np.abs(m - 1) < 1e-4) & (np.abs(shape.signed_distance(fx, fy)) < 1e-8)
    return fx, fy, ok


def init_signed_distance(shape, grid: Grid, band_halfwidth: float | None = None) -> LevelSet:
    """Signed distance to ``shape`` (positive inside).

    Nodes within the band plus a margin receive exact distances; the remaining
    nodes are filled by closest-point fast sweeping from those seeds.
    """
    h = grid.h
    xmin, xmax, ymin, ymax = shape.bbox()
    clear = 5 * h
    ox, oy = grid.origin
    ex, ey = grid.extent
    if (xmin - ox < clear or ox + ex - xmax < clear or ymin - oy < clear or oy + ey - ymax < clear):
        raise ConfigurationError("shape must keep at least 5h clearance from the domain boundary")
    ls = LevelSet(grid, np.zeros(grid.shape("node")), band_halfwidth)
    X, Y = grid.coords("node")
    # cheap bound to select the seeding region: distance to the sample cloud
    pts = shape.points(512)
    rough = polyline_distance(pts, X.ravel(), Y.ravel()).reshape(X.shape)
    seg = np.max(np.hypot(*np.diff(np.vstack([pts, pts[:1]]), axis=0).T))
    seed = rough < ls.band_halfwidth + 3 * h + seg
    exact = shape.signed_distance(X[seed], Y[seed])
    d = np.full(X.shape, 1e10)
    d[seed] = np.abs(exact)
    fx, fy = np.zeros(X.shape), np.zeros(X.shape)
    valid = np.zeros(X.shape, dtype=bool)
    fx[seed], fy[seed], valid[seed] = _foot_points(shape, X[seed], Y[seed], exact)
    d = _fast_sweep(d, fx, fy, valid, seed.copy(), grid.origin[0], grid.origin[1], h, 50)
    sign = np.sign(shape.signed_distance(X, Y)) if not isinstance(shape, PolygonCurve) else None
    if sign is None:
        sign = np.where(points_in_polygon(shape.vertices, X.ravel(), Y.ravel()).reshape(X.shape), 1.0, -1.0)
    phi = np.where(sign >= 0, d, -d)
    phi[seed] = exact
    ls.phi = phi
    return ls


# --------------------------------------------------------------------------
# WENO5 Hamilton-Jacobi derivatives


def _weno5(v1, v2, v3, v4, v5):
    eps = 1e-6
    s1 = 13 / 12 * (v1 - 2 * v2 + v3) ** 2 + 0.25 * (v1 - 4 * v2 + 3 * v3) ** 2
    s2 = 13 / 12 * (v2 - 2 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    s3 = 13 / 12 * (v3 - 2 * v4 + v5) ** 2 + 0.25 * (3 * v3 - 4 * v4 + v5) ** 2
    a1 = 0.1 / (eps + s1) ** 2
    a2 = 0.6 / (eps + s2) ** 2
    a3 = 0.3 / (eps + s3) ** 2
    tot = a1 + a2 + a3
    return (
        a1 / tot * (v1 / 3 - 7 * v2 / 6 + 11 * v3 / 6)
        + a2 / tot * (-v2 / 6 + 5 * v3 / 6 + v4 / 3)
        + a3 / tot * (v3 / 3 + 5 * v4 / 6 - v5 / 6)
    )


def weno_derivatives(grid: Grid, f: np.ndarray):
    """One-sided WENO5 derivatives ``(dx-, dx+, dy-, dy+)`` at every sample."""
    h = grid.h
    p = pad(grid, f, 3)
    out = []
    for axis in (0, 1):
        d = np.diff(p, axis=axis) / h  # d[k] = (p[k+1]-p[k])/h
        if axis == 0:
            d = d[:, 3:-3]
            n = f.shape[0]

            def sl(k):
                return d[k:k + n, :]
        else:
            d = d[3:-3, :]
            n = f.shape[1]

            def sl(k):
                return d[:, k:k + n]
        # sample i has padded index i+3; backward difference at i is d[i+2]
        minus = _weno5(sl(0), sl(1), sl(2), sl(3), sl(4))
        plus = _weno5(sl(5), sl(4), sl(3), sl(2), sl(1))
        out.extend([minus, plus])
    return tuple(out)


def _upwind_advection(grid: Grid, f: np.ndarray, un: np.ndarray, vn: np.ndarray) -> np.ndarray:
    """Upwinded ``u . grad f``."""
    dxm, dxp, dym, dyp = weno_derivatives(grid, f)
    fx = np.where(un > 0, dxm, dxp)
    fy = np.where(vn > 0, dym, dyp)
    return un * fx + vn * fy


def transport_rk3(grid: Grid, f: np.ndarray, un: np.ndarray, vn: np.ndarray, dt: float) -> np.ndarray:
    """One TVD-RK3 step of ``f_t + u . grad f = 0`` with node velocities."""
    f1 = f - dt * _upwind_advection(grid, f, un, vn)
    f2 = 0.75 * f + 0.25 * (f1 - dt * _upwind_advection(grid, f1, un, vn))
    return f / 3 + 2 / 3 * (f2 - dt * _upwind_advection(grid, f2, un, vn))


def check_cfl(grid: Grid, speed: float, dt: float, limit: float = 0.5):
    if dt * speed / grid.h > limit + 1e-12:
        raise StepError(f"CFL violation: dt*max|v|/h = {dt * speed / grid.h:.3f} > {limit}")


def advect_phi(ls: LevelSet, v: MACField, dt: float) -> LevelSet:
    """Advance ``phi_t + v . grad phi = 0`` by one step."""
    check_cfl(ls.grid, v.max_abs(), dt)
    if v.max_abs() == 0.0:
        return ls.with_phi(ls.phi.copy())
    un, vn = mac_to_nodes(v)
    return ls.with_phi(transport_rk3(ls.grid, ls.phi, un, vn, dt))


def advect_phi_nodes(ls: LevelSet, un: np.ndarray, vn: np.ndarray, dt: float) -> LevelSet:
    speed = float(max(np.max(np.abs(un)), np.max(np.abs(vn))))
    check_cfl(ls.grid, speed, dt)
    if speed == 0.0:
        return ls.with_phi(ls.phi.copy())
    return ls.with_phi(transport_rk3(ls.grid, ls.phi, un, vn, dt))


# --------------------------------------------------------------------------
# reinitialisation


def _godunov_norm(grid: Grid, f: np.ndarray, sgn: np.ndarray) -> np.ndarray:
    dxm, dxp, dym, dyp = weno_derivatives(grid, f)
    pos = sgn > 0
    ax = np.where(
        pos,
        np.maximum(np.maximum(dxm, 0) ** 2, np.minimum(dxp, 0) ** 2),
        np.maximum(np.minimum(dxm, 0) ** 2, np.maximum(dxp, 0) ** 2),
    )
    ay = np.where(
        pos,
        np.maximum(np.maximum(dym, 0) ** 2, np.minimum(dyp, 0) ** 2),
        np.maximum(np.minimum(dym, 0) ** 2, np.maximum(dyp, 0) ** 2),
    )
    return np.sqrt(ax + ay)


def _subcell_distance(grid: Grid, phi0: np.ndarray) -> np.ndarray:
    """Distance estimate at interface-adjacent nodes from the crossing geometry."""
    p = pad(grid, phi0, 1)
    c = p[1:-1, 1:-1]
    xp, xm = p[2:, 1:-1], p[:-2, 1:-1]
    yp, ym = p[1:-1, 2:], p[1:-1, :-2]
    gx = np.maximum.reduce([np.abs(xp - xm) / 2, np.abs(xp - c), np.abs(c - xm)])
    gy = np.maximum.reduce([np.abs(yp - ym) / 2, np.abs(yp - c), np.abs(c - ym)])
    robust = np.hypot(gx, gy)
    # the central estimate is second order; keep the robust one where it degenerates
    central = np.hypot((xp - xm) / 2, (yp - ym) / 2)
    norm = np.maximum(np.where(central > 0.5 * robust, central, robust), 1e-12)
    return c / norm * grid.h


def reinitialize(ls: LevelSet, n_pseudo_steps: int = 40, cfl: float = 0.45) -> LevelSet:
    """Relax ``phi`` toward signed distance with a subcell interface fix."""
    grid = ls.grid
    h = grid.h
    phi0 = ls.phi
    sgn = phi0 / np.sqrt(phi0**2 + h**2)
    sgn_sharp = np.sign(phi0)
    adj = interface_adjacent(grid, phi0)
    dist = _subcell_distance(grid, phi0)
    dtau = cfl * h

    def rhs(f):
        r = -sgn * (_godunov_norm(grid, f, sgn) - 1.0)
        r_adj = -(sgn_sharp * np.abs(f) - dist) / h
        return np.where(adj, r_adj, r)

    f = phi0.copy()
    for _ in range(n_pseudo_steps):
        f1 = f + dtau * rhs(f)
        f2 = 0.75 * f + 0.25 * (f1 + dtau * rhs(f1))
        f = f / 3 + 2 / 3 * (f2 + dtau * rhs(f2))
    return ls.with_phi(f)


# --------------------------------------------------------------------------
# zero-set extraction and polyline utilities


def extract_interface(ls: LevelSet) -> np.ndarray:
    """Ordered, counter-clockwise closed polyline of the zero set.

    Returns an ``(N, 2)`` array without repeating the first vertex.
    """
    from skimage.measure import find_contours

    grid = ls.grid
    phi = ls.phi
    h = grid.h
    if grid.fully_periodic:
        # close the periodic seam so contours never break at the array edge
        phi = np.pad(phi, ((0, 1), (0, 1)), mode="wrap")
    zero_nodes = int(np.count_nonzero(phi == 0.0))
    contours = find_contours(phi, 0.0)
    contours = [c for c in contours if len(c) > 2]
    if len(contours) != 1:
        raise TopologyError(f"expected one closed zero contour, found {len(contours)}")
    c = contours[0]
    if not np.allclose(c[0], c[-1]):
        raise TopologyError("zero contour is open (touches the domain edge)")
    pts = c[:-1] * h + np.asarray(grid.origin)
    # drop repeated vertices produced by exact zeros at nodes
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > 1e-14 * h, axis=1)
    if np.allclose(pts[0], pts[-1]) and len(pts) > 1:
        keep[-1] = False
    pts = pts[keep]
    if zero_nodes > max(4, len(pts) // 4):
        raise TopologyError(
            "zero set runs along grid lines (too many exact zeros); "
            "grid-aligned non-smooth level sets are not supported"
        )
    if polygon_area(pts) < 0:
        pts = pts[::-1]
    return pts


def polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_perimeter(pts: np.ndarray) -> float:
    return float(np.sum(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two closed polylines (point-to-segment)."""
    d_ab = polyline_distance(b, a[:, 0], a[:, 1]).max()
    d_ba = polyline_distance(a, b[:, 0], b[:, 1]).max()
    return float(max(d_ab, d_ba))


def write_polyline_csv(path, pts: np.ndarray):
    """CSV with columns x,y; the first vertex is repeated to close the curve."""
    closed = np.vstack([pts, pts[:1]])
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in closed:
            fh.write(f"{x:.17g},{y:.17g}\n")

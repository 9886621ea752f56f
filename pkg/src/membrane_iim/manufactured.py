"""Manufactured piecewise-smooth flow around a circle with prescribed jumps.

Polar coordinates about the centre with ``s = R - r`` (the signed distance,
positive inside).  A smooth background ``(u_bg, p_bg)`` with ``u_bg . n = 0``
on the circle fills both sides; inside, a stream function

    psi = s^2 A(theta) / 2 + s^3 B(theta) / 6

and a pressure offset ``f2 + s P1 + s^2 P2 / 2`` are added.  ``B``, ``P1`` and
``P2`` are solved so that the steady body force ``u.grad u + grad p -
lap u / Re`` and its divergence are continuous across the circle.  The
resulting jumps are those produced by interface forces

    f1 = -(A / Re) t,   f2 = f2(theta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .jumps import GeoData, JumpSet, evaluate

_x, _y = sp.symbols("x y", real=True)
_th = sp.symbols("theta", real=True)


@dataclass
class ManufacturedCircle:
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.3
    Re: float = 5.0
    A: sp.Expr = None  # functions of theta
    f2: sp.Expr = None
    psi_bg: sp.Expr = None  # functions of x, y
    p_bg: sp.Expr = None

    def __post_init__(self):
        cx, cy, R = self.center[0], self.center[1], self.radius
        if self.A is None:
            self.A = sp.Rational(3, 2) + sp.cos(_th) / 2 + sp.sin(2 * _th) / 3
        if self.f2 is None:
            self.f2 = 1 / sp.Float(R) + sp.cos(2 * _th) / 4 + sp.sin(_th) / 5
        r2 = (_x - cx) ** 2 + (_y - cy) ** 2
        if self.psi_bg is None:
            self.psi_bg = sp.Rational(3, 10) * r2 + sp.Rational(1, 2) * (r2 - R**2) * sp.sin(2 * sp.pi * _x)
        if self.p_bg is None:
            self.p_bg = sp.cos(2 * sp.pi * _x) * sp.sin(2 * sp.pi * _y) / 3
        self._build()

    # ------------------------------------------------------------------
    def _build(self):
        cx, cy, R, Re = self.center[0], self.center[1], sp.Float(self.radius), sp.Float(self.Re)
        A, f2 = self.A, self.f2
        dA = sp.diff(A, _th)
        B = A / R + Re * sp.diff(f2, _th) / R
        P1 = -dA / (R * Re)

        r = sp.sqrt((_x - cx) ** 2 + (_y - cy) ** 2)
        theta = sp.atan2(_y - cy, _x - cx)
        s = R - r
        nx, ny = -(_x - cx) / r, -(_y - cy) / r
        tx, ty = ny, -nx

        # background velocity gradient on the circle, G[i][j] = d_i u_j
        ubg = (sp.diff(self.psi_bg, _y), -sp.diff(self.psi_bg, _x))
        Gbg = [[sp.diff(ubg[j], v) for j in range(2)] for v in (_x, _y)]
        tGn = sum(t_ * Gbg[i][j] * n_ for i, t_ in enumerate((tx, ty)) for j, n_ in enumerate((nx, ny)))
        on_circle = {_x: cx + R * sp.cos(_th), _y: cy + R * sp.sin(_th)}
        tGn_theta = sp.simplify(tGn.subs(on_circle))
        P2 = P1 / R - sp.diff(f2, _th, 2) / R**2 - 2 * A * tGn_theta

        sub = {_th: theta}
        psi_in = s**2 * A.subs(sub) / 2 + s**3 * B.subs(sub) / 6
        p_in = f2.subs(sub) + s * P1.subs(sub) + s**2 * P2.subs(sub) / 2

        self.exprs = {
            "minus": (ubg[0], ubg[1], self.p_bg),
            "plus": (ubg[0] + sp.diff(psi_in, _y), ubg[1] - sp.diff(psi_in, _x), self.p_bg + p_in),
        }
        self.phi_expr = s
        # interface data extended constant along normals (functions of theta)
        self._f1 = tuple(sp.simplify(-(A.subs(sub) / Re) * tc) for tc in (tx, ty))
        self._f2 = f2.subs(sub)
        self._g = (-dA / (R * Re)).subs(sub)
        self._n = (nx, ny)
        self._funcs = {}

    def _fn(self, key, expr):
        if key not in self._funcs:
            self._funcs[key] = sp.lambdify((_x, _y), expr, "numpy")
        return self._funcs[key]

    def _eval(self, key, expr, x, y):
        with np.errstate(divide="ignore", invalid="ignore"):  # polar terms are singular at the centre only
            out = self._fn(key, expr)(x, y)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(x)).copy()

    # ------------------------------------------------------------------
    def phi(self, x, y):
        return self._eval("phi", self.phi_expr, x, y)

    def fields(self, x, y):
        """``(u, v, p)`` sampled with the side chosen by the sign of phi."""
        inside = self.phi(x, y) > 0
        out = []
        for k in range(3):
            a = self._eval(("minus", k), self.exprs["minus"][k], x, y)
            b = self._eval(("plus", k), self.exprs["plus"][k], x, y)
            out.append(np.where(inside, b, a))
        return tuple(out)

    def side_derivatives(self, side, x, y):
        """Value, gradient and Hessian of ``(u, v, p)`` on one side at points."""
        res = []
        for k, e in enumerate(self.exprs[side]):
            val = self._eval((side, k), e, x, y)
            grad = [self._eval((side, k, v), sp.diff(e, v), x, y) for v in (_x, _y)]
            hess = [[self._eval((side, k, a, b), sp.diff(e, a, b), x, y) for b in (_x, _y)] for a in (_x, _y)]
            res.append((val, np.stack(grad, -1), np.stack([np.stack(h, -1) for h in hess], -2)))
        return res

    def interface_points(self, n: int) -> np.ndarray:
        t = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([self.center[0] + self.radius * np.cos(t), self.center[1] + self.radius * np.sin(t)])

    # ------------------------------------------------------------------
    def geodata(self, points: np.ndarray) -> GeoData:
        """Analytic GeoData with f1, f2, g extended constant along normals."""
        x, y = points[:, 0], points[:, 1]

        def vec(key, comps):
            return np.stack([self._eval((key, i), c, x, y) for i, c in enumerate(comps)], -1)

        def grad(key, e):
            return vec(("grad", key), [sp.diff(e, v) for v in (_x, _y)])

        def hess(key, e):
            return np.stack([vec(("hess", key, a), [sp.diff(e, a, b) for b in (_x, _y)]) for a in (_x, _y)], -2)

        n = vec("n", self._n)
        gn = np.stack([vec(("gn", a), [sp.diff(nc, a) for nc in self._n]) for a in (_x, _y)], -2)
        gf1 = np.stack([vec(("gf1", a), [sp.diff(fc, a) for fc in self._f1]) for a in (_x, _y)], -2)
        kappa = np.full(len(x), 1.0 / self.radius)
        gd = GeoData(points=points, n=n, kappa=kappa, grad_n=gn, f1=vec("f1", self._f1), grad_f1=gf1,
                     f2=self._eval("f2", self._f2, x, y), grad_f2=grad("f2", self._f2),
                     hess_f2=hess("f2", self._f2), grad_g=grad("g", self._g))
        return gd

    def predicted(self, points: np.ndarray) -> JumpSet:
        """Jumps from the interface formulas (analytic GeoData)."""
        gd = self.geodata(points)
        minus = self.side_derivatives("minus", points[:, 0], points[:, 1])
        gm = np.stack([minus[0][1], minus[1][1]], axis=-1)  # gm[i, j] = d_i u_j
        u = np.stack([minus[0][0], minus[1][0]], axis=-1)
        return evaluate(gd, self.Re, gm, u)

    def exact(self, points: np.ndarray) -> JumpSet:
        """Jumps computed directly from the two sides of the manufactured fields."""
        x, y = points[:, 0], points[:, 1]
        return _jumps_from_sides(self.side_derivatives("plus", x, y), self.side_derivatives("minus", x, y),
                                 points, self.geodata(points).n)


def _jumps_from_sides(plus, minus, points, n) -> JumpSet:
    """Assemble a JumpSet from one-sided (value, grad, hessian) triples of u, v, p."""
    d = [(plus[k][0] - minus[k][0], plus[k][1] - minus[k][1], plus[k][2] - minus[k][2]) for k in range(3)]
    grad_u = np.stack([d[0][1], d[1][1]], axis=-1)
    hess_u = np.stack([d[0][2], d[1][2]], axis=-1)
    u = np.stack([0.5 * (plus[0][0] + minus[0][0]), 0.5 * (plus[1][0] + minus[1][0])], axis=-1)
    from .jumps import jump_u_t, tangent_of

    return JumpSet(points.copy(), n, tangent_of(n), d[2][0], grad_u, d[2][1], hess_u, d[2][2],
                   jump_u_t(u, grad_u))


def one_sided_fit(X: np.ndarray, Y: np.ndarray, F: np.ndarray, x0: float, y0: float, h: float,
                  degree: int = 4):
    """Least-squares polynomial fit around ``(x0, y0)``; returns value, gradient, Hessian.

    A quartic keeps the Hessian error at O(h^3), so its measured order is not
    at the mercy of which nodes happen to fall inside the one-sided stencil.
    """
    dx = (X - x0) / h
    dy = (Y - y0) / h
    # columns: 1 | dx, dy | dx^2, dx dy, dy^2 | ...
    V = np.stack([dx**i * dy ** (d - i) for d in range(degree + 1) for i in range(d, -1, -1)], axis=-1)
    c, *_ = np.linalg.lstsq(V, F, rcond=None)
    val = c[0]
    grad = np.array([c[1], c[2]]) / h
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]]) / h**2
    return val, grad, hess


def recovered_jumps(mc: ManufacturedCircle, grid, points: np.ndarray, radius: float = 5.0) -> JumpSet:
    """Jumps measured from node samples by one-sided cubic extrapolation."""
    X, Y = grid.coords("node")
    U, V, P = mc.fields(X, Y)
    phi = mc.phi(X, Y)
    h = grid.h
    n_pts = len(points)
    sides = {}
    for side, sel in (("plus", phi > 0), ("minus", phi <= 0)):
        res = [[np.zeros(n_pts), np.zeros((n_pts, 2)), np.zeros((n_pts, 2, 2))] for _ in range(3)]
        for a, (x0, y0) in enumerate(points):
            near = sel & ((X - x0) ** 2 + (Y - y0) ** 2 <= (radius * h) ** 2)
            for k, F in enumerate((U, V, P)):
                val, gr, he = one_sided_fit(X[near], Y[near], F[near], x0, y0, h)
                res[k][0][a], res[k][1][a], res[k][2][a] = val, gr, he
        sides[side] = res
    n = mc.geodata(points).n
    return _jumps_from_sides(sides["plus"], sides["minus"], points, n)


JUMP_ENTRIES = ("jump_p", "jump_grad_u", "jump_grad_p", "jump_hess_u", "jump_hess_p", "jump_u_t")


def jump_errors(a: JumpSet, b: JumpSet) -> dict:
    """Max absolute difference per JumpSet entry."""
    return {k: float(np.max(np.abs(getattr(a, k) - getattr(b, k)))) for k in JUMP_ENTRIES}

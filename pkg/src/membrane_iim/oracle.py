"""Lagrangian marker reference for interface position, stretch and energy.

Markers sit at uniform parameter values ``xi_k = 2 pi k / N`` and are moved
with classical RK4.  Derivatives in ``xi`` are spectral, so the oracle is far
more accurate than the Eulerian quantities it is used to judge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .forces import EnergyModel
from .grid import DomainError, MACField, interp_cubic, interp_mac
from .levelset import LevelSet, extract_interface, hausdorff

logger = logging.getLogger(__name__)

MIN_MARKERS = 64
MAX_SPACING_RATIO = 4.0


class MarkerError(ValueError):
    pass


def spectral_derivative(X: np.ndarray) -> np.ndarray:
    """``dX/dxi`` for periodic samples on ``[0, 2 pi)`` (shape (N, d))."""
    N = X.shape[0]
    k = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0.0  # drop the unpaired Nyquist mode
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(X, axis=0), axis=0))


@dataclass
class MarkerCurve:
    X: np.ndarray  # (N, 2)
    ref_stretch: np.ndarray  # |X_xi| at t = 0
    t: float = 0.0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] != 2:
            raise MarkerError("marker array must have shape (N, 2)")
        if self.X.shape[0] < MIN_MARKERS:
            raise MarkerError(f"need at least {MIN_MARKERS} markers, got {self.X.shape[0]}")
        self.ref_stretch = np.broadcast_to(np.asarray(self.ref_stretch, dtype=float), (len(self),)).copy()

    @classmethod
    def from_points(cls, X):
        X = np.asarray(X, dtype=float)
        return cls(X, np.linalg.norm(spectral_derivative(X), axis=1))

    @classmethod
    def from_shape(cls, shape, n: int = 256):
        """Markers at uniform parameter values of an analytic shape."""
        return cls.from_points(shape.points(n))

    def __len__(self):
        return self.X.shape[0]

    @property
    def xi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(len(self)) / len(self)

    def spacing_ratio(self) -> float:
        d = np.linalg.norm(np.roll(self.X, -1, axis=0) - self.X, axis=1)
        return float(d.max() / max(d.min(), 1e-300))

    def needs_resample(self) -> bool:
        return self.spacing_ratio() > MAX_SPACING_RATIO


def _velocity_at(v, X: np.ndarray, t: float) -> np.ndarray:
    if isinstance(v, MACField):
        g = v.grid
        x, y = X[:, 0], X[:, 1]
        if not g.fully_periodic and not np.all(g.inside(x, y)):
            raise DomainError("marker left the domain along a closed axis")
        x, y = g.wrap(x, y)
        u, w = interp_mac(v, x, y)
        return np.stack([u, w], axis=-1)
    u, w = v(X[:, 0], X[:, 1], t)
    return np.stack([np.broadcast_to(u, X[:, 0].shape), np.broadcast_to(w, X[:, 1].shape)], axis=-1)


def advect_markers(mc: MarkerCurve, v, dt: float) -> MarkerCurve:
    """One RK4 step.

    ``v`` is either a MACField (bilinear sampling, frozen in time) or a
    callable ``v(x, y, t) -> (u, w)``.
    """
    t = mc.t
    X = mc.X
    k1 = _velocity_at(v, X, t)
    k2 = _velocity_at(v, X + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = _velocity_at(v, X + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = _velocity_at(v, X + dt * k3, t + dt)
    out = MarkerCurve(X + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), mc.ref_stretch, t + dt)
    if out.needs_resample():
        logger.warning("marker spacing ratio %.2f exceeds %.1f", out.spacing_ratio(), MAX_SPACING_RATIO)
    return out


def advect_markers_to(mc: MarkerCurve, v, t_end: float, n_steps: int) -> MarkerCurve:
    dt = (t_end - mc.t) / n_steps
    for _ in range(n_steps):
        mc = advect_markers(mc, v, dt)
    return mc


def marker_stretch(mc: MarkerCurve) -> np.ndarray:
    """``|X_xi|`` per marker (spectral derivative)."""
    return np.linalg.norm(spectral_derivative(mc.X), axis=1)


def relative_stretch(mc: MarkerCurve) -> np.ndarray:
    """Stretch relative to the initial parametrisation; matches an Eulerian
    ``chi`` initialised to one."""
    return marker_stretch(mc) / mc.ref_stretch


def marker_energy(mc: MarkerCurve, model: EnergyModel, chi_ref: np.ndarray | float | None = None) -> float:
    """Trapezoid rule for ``int Es(chi) chi_ref dxi`` with ``chi = |X_xi| / chi_ref``.

    ``chi_ref`` defaults to the t = 0 stretch, so the reference state carries
    zero Hookean energy and ``Es = sigma chi`` integrates to ``sigma * length``.
    """
    ref = mc.ref_stretch if chi_ref is None else np.broadcast_to(np.asarray(chi_ref, float), (len(mc),))
    chi = marker_stretch(mc) / ref
    dxi = 2 * np.pi / len(mc)
    return float(np.sum(model.Es(chi) * ref) * dxi)


@dataclass
class Comparison:
    hausdorff: float
    max_rel_stretch_err: float


def compare_eulerian(mc: MarkerCurve, ls: LevelSet, chi: np.ndarray) -> Comparison:
    """Hausdorff distance between the marker polygon and the zero contour,
    and stretch compared at each marker's nearest contour point."""
    grid = ls.grid
    contour = extract_interface(ls)
    hd = hausdorff(mc.X, contour)
    # nearest point on the contour for each marker
    p = contour
    d = np.roll(p, -1, axis=0) - p
    L2 = np.maximum(np.sum(d * d, axis=1), 1e-300)
    rel = mc.X[:, None, :] - p[None]
    s = np.clip(np.einsum("mkd,kd->mk", rel, d) / L2, 0, 1)
    foot = p[None] + s[..., None] * d[None]
    k = np.argmin(np.sum((mc.X[:, None, :] - foot) ** 2, axis=-1), axis=1)
    near = foot[np.arange(len(mc)), k]
    x, y = grid.wrap(near[:, 0], near[:, 1])
    chi_e = interp_cubic(grid, chi, x, y)
    chi_l = relative_stretch(mc)
    err = float(np.max(np.abs(chi_e - chi_l) / np.abs(chi_l)))
    return Comparison(hd, err)


def write_marker_csv(path, mc: MarkerCurve):
    """Columns ``xi,x,y,stretch`` with stretch = ``|X_xi|``."""
    s = marker_stretch(mc)
    with open(path, "w") as fh:
        fh.write("xi,x,y,stretch\n")
        for xi, (x, y), c in zip(mc.xi, mc.X, s):
            fh.write(f"{xi:.17g},{x:.17g},{y:.17g},{c:.17g}\n")

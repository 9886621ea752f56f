import numpy as np
import pytest

from membrane_iim.forces import EnergyModel
from membrane_iim.grid import Grid, MACField
from membrane_iim.levelset import Circle, init_signed_distance
from membrane_iim.oracle import (
    MarkerCurve, MarkerError, advect_markers, advect_markers_to, compare_eulerian, marker_energy, marker_stretch,
    spectral_derivative, write_marker_csv,
)

R = 0.25
C = (0.5, 0.5)


def rotation(x, y, t):
    return -(y - 0.5), x - 0.5


@pytest.fixture
def circle():
    return MarkerCurve.from_shape(Circle(C, R), 256)


def test_zero_velocity(circle):
    out = advect_markers(circle, lambda x, y, t: (0.0, 0.0), 0.1)
    assert np.array_equal(out.X, circle.X)
    out = advect_markers(circle, MACField.zeros(Grid.unit(32)), 0.1)
    assert np.array_equal(out.X, circle.X)


def test_rotation_closes_orbit(circle):
    out = advect_markers_to(circle, rotation, 2 * np.pi, 1000)
    assert np.max(np.linalg.norm(out.X - circle.X, axis=1)) <= 1e-6
    assert np.max(np.abs(marker_stretch(out) - R)) <= 1e-10


def test_constant_translation(circle):
    out = advect_markers_to(circle, lambda x, y, t: (1.0, 0.0), 0.3, 7)
    assert np.allclose(out.X - circle.X, [0.3, 0.0], atol=1e-14)


def test_circle_stretch():
    assert np.max(np.abs(marker_stretch(MarkerCurve.from_shape(Circle(C, R), 256)) - R)) <= 1e-10


def test_strain_flow_stretch_closed_form(circle):
    a, t = 1.0, 0.2
    out = advect_markers_to(circle, lambda x, y, s: (a * (x - 0.5), -a * (y - 0.5)), t, 200)
    xi = circle.xi
    want = R * np.sqrt(np.exp(2 * a * t) * np.sin(xi) ** 2 + np.exp(-2 * a * t) * np.cos(xi) ** 2)
    assert np.max(np.abs(marker_stretch(out) - want)) <= 1e-8


def test_marker_energy(circle):
    assert abs(marker_energy(circle, EnergyModel.tension(1.7)) - 1.7 * 2 * np.pi * R) <= 1e-8
    assert marker_energy(circle, EnergyModel.zero()) == 0.0
    assert abs(marker_energy(circle, EnergyModel.hookean(3.0))) <= 1e-14


def test_spectral_derivative_is_exact_for_trig():
    xi = 2 * np.pi * np.arange(64) / 64
    X = np.stack([np.cos(3 * xi), np.sin(xi) + 0.2 * np.cos(5 * xi)], -1)
    dX = np.stack([-3 * np.sin(3 * xi), np.cos(xi) - np.sin(5 * xi)], -1)
    assert np.max(np.abs(spectral_derivative(X) - dX)) <= 1e-12


def test_marker_validation():
    with pytest.raises(MarkerError):
        MarkerCurve.from_points(np.zeros((10, 2)))
    with pytest.raises(MarkerError):
        MarkerCurve.from_points(np.zeros((100, 3)))


def test_compare_at_t0():
    g = Grid.unit(128)
    ls = init_signed_distance(Circle(C, R), g)
    mc = MarkerCurve.from_shape(Circle(C, R), 1024)
    cmp = compare_eulerian(mc, ls, np.ones_like(ls.phi))
    assert cmp.hausdorff <= g.h**2
    assert cmp.max_rel_stretch_err <= 1e-3


def test_marker_csv(tmp_path, circle):
    p = tmp_path / "m.csv"
    write_marker_csv(p, circle)
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert p.read_text().splitlines()[0] == "xi,x,y,stretch"
    assert np.array_equal(data[:, 1:3], circle.X)
    assert np.allclose(data[:, 3], R, atol=1e-10)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from membrane_iim.grid import (
    DomainError, Grid, GridError, MACField, ScalarField, divergence_mac, gradient_central, gradient_mac,
    interp_bilinear, interp_cubic, interp_mac, laplacian, mac_to_nodes, nodes_to_mac,
)

from membrane_iim.verify import convergence_order as order


def test_rejects_non_square_cells():
    with pytest.raises(GridError):
        Grid((0, 0), (1.0, 1.0), 16, 32)


def test_rejects_tiny_grid():
    with pytest.raises(GridError):
        Grid.unit(4)


def test_scalar_field_rejects_nan_and_bad_shape():
    g = Grid.unit(16)
    with pytest.raises(ValueError):
        ScalarField(g, np.full((16, 16), np.nan))
    with pytest.raises(GridError):
        ScalarField(g, np.zeros((17, 16)))


@pytest.mark.parametrize("periodic", [True, False])
def test_gradient_affine_exact(periodic):
    g = Grid.unit(16, periodic)
    X, Y = g.coords()
    f = 3 * X - 2 * Y
    gx, gy = gradient_central(g, f)
    sl = (slice(1, -1), slice(1, -1))  # periodic wrap breaks affinity at the seam
    assert np.allclose(gx[sl], 3, atol=1e-12) and np.allclose(gy[sl], -2, atol=1e-12)
    if not periodic:  # one-sided closure is exact on affine data too
        assert np.allclose(gx, 3, atol=1e-11) and np.allclose(gy, -2, atol=1e-11)


def test_gradient_constant_is_zero():
    g = Grid.unit(16)
    gx, gy = gradient_central(g, np.full(g.shape("node"), 2.5))
    assert np.all(gx == 0) and np.all(gy == 0)


def test_gradient_second_order():
    hs, errs = [], []
    for n in (64, 128):
        g = Grid.unit(n)
        X, _ = g.coords()
        gx, _ = gradient_central(g, np.sin(2 * np.pi * X))
        hs.append(g.h)
        errs.append(np.max(np.abs(gx - 2 * np.pi * np.cos(2 * np.pi * X))))
    assert order(hs, errs) >= 1.9
    assert errs[-1] <= (2 * np.pi * hs[-1]) ** 2 * 2 * np.pi


def test_laplacian_quadratic_and_affine():
    g = Grid.unit(16, periodic=False)
    X, Y = g.coords()
    assert np.allclose(laplacian(g, X**2 + Y**2), 4, atol=1e-9)
    assert np.allclose(laplacian(g, 2 * X - Y + 1), 0, atol=1e-9)


def test_laplacian_second_order():
    hs, errs = [], []
    for n in (32, 64, 128):
        g = Grid.unit(n)
        X, Y = g.coords()
        f = np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)
        hs.append(g.h)
        errs.append(np.max(np.abs(laplacian(g, f) + 8 * np.pi**2 * f)))
    assert order(hs, errs) >= 1.9


def test_divergence_linear_and_constant():
    g = Grid.unit(16, periodic=False)
    v = MACField.from_function(g, lambda x, y: (x, -y))
    assert np.max(np.abs(divergence_mac(v))) < 1e-12
    c = MACField.from_function(g, lambda x, y: (0.3 + 0 * x, -1.2 + 0 * y))
    assert np.max(np.abs(divergence_mac(c))) < 1e-12


def test_divergence_taylor_green_vanishes():
    g = Grid.unit(32, extent=2.0)
    v = MACField.from_function(g, lambda x, y: (np.sin(np.pi * x) * np.cos(np.pi * y),
                                                -np.cos(np.pi * x) * np.sin(np.pi * y)))
    # on the MAC grid this field is discretely divergence-free up to round-off
    assert np.max(np.abs(divergence_mac(v))) < 1e-12


def test_interp_bilinear_affine_and_samples():
    g = Grid.unit(16, periodic=False)
    X, Y = g.coords()
    f = 1.5 * X - 0.25 * Y + 2
    x = np.array([0.123, 0.77, 1.0])
    y = np.array([0.456, 0.05, 0.0])
    assert np.allclose(interp_bilinear(g, f, x, y), 1.5 * x - 0.25 * y + 2, atol=1e-13)
    assert interp_bilinear(g, f, X[3, 5], Y[3, 5]) == pytest.approx(f[3, 5], abs=1e-14)


def test_interp_out_of_domain():
    g = Grid.unit(16, periodic=False)
    with pytest.raises(DomainError):
        interp_bilinear(g, np.zeros(g.shape("node")), 1.2, 0.5)


def test_interp_second_order_and_cubic():
    errs = []
    for n in (128, 256):
        g = Grid.unit(n)
        X, _ = g.coords()
        f = np.sin(2 * np.pi * X)
        errs.append(abs(interp_bilinear(g, f, 0.37 + 0.3 * g.h, 0.5) - np.sin(2 * np.pi * (0.37 + 0.3 * g.h))))
    assert errs[1] < errs[0] / 3.5
    g = Grid.unit(16)
    X, Y = g.coords()
    assert interp_cubic(g, X**3 * Y**2, 0.41, 0.29) == pytest.approx(0.41**3 * 0.29**2, rel=1e-12)


def test_interp_mac_linear_field():
    g = Grid.unit(16, periodic=False)
    v = MACField.from_function(g, lambda x, y: (x + y, 2 * x - y))
    u, w = interp_mac(v, np.array([0.31]), np.array([0.62]))
    assert u[0] == pytest.approx(0.93) and w[0] == pytest.approx(0.0)


def test_gradient_divergence_adjoint(rng):
    g = Grid.unit(16)
    p = rng.normal(size=g.shape("cell"))
    v = MACField(g, rng.normal(size=g.shape("uface")), rng.normal(size=g.shape("vface")))
    G = gradient_mac(g, p)
    lhs = np.sum(G.u * v.u) + np.sum(G.v * v.v)
    assert abs(lhs + np.sum(p * divergence_mac(v))) < 1e-10 * np.sqrt(np.sum(p * p))


def test_node_face_round_trip_smooth():
    g = Grid.unit(64)
    v = MACField.from_function(g, lambda x, y: (np.sin(2 * np.pi * y), np.cos(2 * np.pi * x)))
    w = nodes_to_mac(g, *mac_to_nodes(v))
    assert np.max(np.abs(w.u - v.u)) < 5 * (2 * np.pi * g.h) ** 2


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_stencils_are_linear(a, b, seed):
    g = Grid.unit(12)
    r = np.random.default_rng(seed)
    f, h = r.normal(size=(2, 12, 12))
    for op in (lambda q: laplacian(g, q), lambda q: gradient_central(g, q)[0]):
        assert np.allclose(op(a * f + b * h), a * op(f) + b * op(h), atol=1e-9 * (1 + abs(a) + abs(b)) * 144)

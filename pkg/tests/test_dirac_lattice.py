import math

import numpy as np
import pytest

from spectral_length.dirac_lattice import (
    LatticeError, circle_geometry, circle_triple, conformal_sine_metric, constant_metric,
    dirac_laplacian, torus_triple, two_point_triple, vielbein_from_metric_1d,
)
from spectral_length.distance import edge_lipschitz_norm, lipschitz_norm


def laplacian_stencil(n, a):
    lap = 2 * np.eye(n) - np.roll(np.eye(n), 1, axis=1) - np.roll(np.eye(n), -1, axis=1)
    return lap / a ** 2


@pytest.mark.parametrize("n,length", [(4, 4.0), (8, 2 * math.pi), (16, 3.0)])
def test_flat_circle_laplacian(n, length):
    t = circle_triple(n, length)
    d2 = dirac_laplacian(t).toarray()
    expected = np.kron(laplacian_stencil(n, length / n), np.eye(2))
    assert np.max(np.abs(d2 - expected)) <= 1e-12


def test_circle_layout():
    t = circle_triple(6, 6.0)
    assert t.n_points == 6 and t.spinor_dim == 2
    np.testing.assert_allclose(t.points[:, 0], np.arange(6.0))
    np.testing.assert_allclose(t.weights, 1.0)
    assert t.edges == tuple((i, (i + 1) % 6, 1.0) for i in range(6))


def test_curved_circle_edges_agree_with_operator():
    g = conformal_sine_metric(0.5, 1, 2 * math.pi)
    t = circle_triple(16, 2 * math.pi, g)
    rng = np.random.default_rng(0)
    for _ in range(5):
        f = rng.standard_normal(16)
        assert lipschitz_norm(t, f) == pytest.approx(edge_lipschitz_norm(t, f), rel=1e-12)


def test_vielbein_and_metrics():
    np.testing.assert_allclose(vielbein_from_metric_1d([4.0, 0.25]), [0.5, 2.0])
    with pytest.raises(LatticeError):
        vielbein_from_metric_1d([1.0, 0.0])
    assert np.all(constant_metric(2.0)(np.arange(3.0)) == 2.0)
    with pytest.raises(LatticeError):
        constant_metric(-1.0)
    with pytest.raises(LatticeError):
        conformal_sine_metric(1.0, 1, 1.0)
    g = conformal_sine_metric(0.5, 1, 2 * math.pi)
    assert g(math.pi / 2) == pytest.approx(2.25)


def test_circle_geometry_sample_forms():
    geo = circle_geometry(4, 4.0, [1.0, 4.0, 1.0, 4.0])
    np.testing.assert_allclose(geo.vielbein_samples.reshape(4), [1, 0.5, 1, 0.5])
    assert geo.metric is None
    with pytest.raises(LatticeError):
        circle_geometry(4, 4.0, [1.0, 2.0])
    with pytest.raises(LatticeError):
        circle_geometry(1, 1.0)
    assert np.all(geo.spin_connection == 0)


@pytest.mark.parametrize("scheme", ["block", "central"])
def test_torus_self_adjoint_and_layout(scheme):
    t = torus_triple(4, 3, 4.0, 6.0, scheme=scheme)
    d = t.dense_dirac()
    np.testing.assert_allclose(d, d.conj().T, atol=1e-14)
    assert t.n_points == 12
    # Site i * Ny + j sits at (i ax, j ay).
    np.testing.assert_allclose(t.points[1 * 3 + 2], [1.0, 4.0])
    np.testing.assert_allclose(t.weights, 2.0)


def test_torus_block_spectrum_matches_symbol():
    # A = dx - i dy is circulant, so D^2 has eigenvalues |A(k)|^2, each twice,
    # with A(k) = (e^{i kx a} - 1 - i (e^{i ky a} - 1)) / a.
    n, a = 6, 0.5
    t = torus_triple(n, n, n * a, n * a)
    eig = np.sort(np.linalg.eigvalsh(dirac_laplacian(t).toarray()))
    k = 2 * np.pi * np.arange(n) / n
    kx, ky = np.meshgrid(k, k, indexing="ij")
    symbol = np.abs(np.exp(1j * kx) - 1 - 1j * (np.exp(1j * ky) - 1)) ** 2 / a ** 2
    np.testing.assert_allclose(eig, np.sort(np.repeat(symbol.ravel(), 2)), atol=1e-10)


def test_torus_block_spectral_radius():
    # The cross term makes ||D||^2 = (2 + sqrt 2)^2 / a^2 when N is a multiple of 8,
    # larger than the 8 / a^2 of the 5-point Laplacian.
    t = torus_triple(8, 8, 8.0, 8.0)
    top = np.max(np.linalg.eigvalsh(dirac_laplacian(t).toarray()))
    assert top == pytest.approx((2 + math.sqrt(2)) ** 2, rel=1e-12)


def test_torus_rejects_bad_input():
    with pytest.raises(LatticeError):
        torus_triple(1, 4, 1.0, 4.0)
    with pytest.raises(LatticeError):
        torus_triple(4, 4, 4.0, 4.0, scheme="wilson")


def test_two_point():
    t = two_point_triple(2.0)
    np.testing.assert_allclose(t.dense_dirac(), [[0, 2], [2, 0]])
    assert t.edges == ((0, 1, 0.5),)
    with pytest.raises(LatticeError):
        two_point_triple(0.0)

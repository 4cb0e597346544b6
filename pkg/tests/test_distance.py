import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_length import distance as dist
from spectral_length.dirac_lattice import (
    circle_triple, conformal_sine_metric, torus_triple, two_point_triple,
)
from spectral_length.distance import (
    DistanceError, character, distance, distance_exact, distance_subgradient,
    distance_table, distance_via_characters, edge_lipschitz_norm, geodesic_warm_start,
    lipschitz_norm, verify_certificate,
)
from spectral_length.spectral_triple import new_triple

# Exact optima on the 4x4 block torus (L = 4), p = site 0, from the SDP oracle.
TORUS4_SDP = {(1, 1): math.sqrt(2), (2, 2): 2.0}


def assert_certified(res, t, p, q, tol=1e-9):
    chk = verify_certificate(t, res.certificate, p, q)
    assert chk.feasible
    assert res.constraint_norm <= 1 + tol
    f = res.certificate
    assert res.value == pytest.approx((f[p] - f[q]) / max(res.constraint_norm, 1.0), abs=1e-12)
    assert chk.objective >= res.value - 1e-12


def test_lipschitz_examples():
    t = circle_triple(8, 8.0)
    assert lipschitz_norm(t, np.full(8, 3.0)) == 0.0
    path = np.minimum(np.arange(8.0), 8 - np.arange(8.0))
    assert lipschitz_norm(t, path) == pytest.approx(1.0, abs=1e-12)
    assert edge_lipschitz_norm(t, path) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3))
def test_lipschitz_homogeneous(seed, lam):
    t = torus_triple(3, 3, 3.0, 3.0)
    f = np.random.default_rng(seed).standard_normal(9)
    assert lipschitz_norm(t, lam * f) == pytest.approx(abs(lam) * lipschitz_norm(t, f), rel=1e-9)


def test_edge_norm_needs_edges():
    with pytest.raises(DistanceError):
        edge_lipschitz_norm(torus_triple(3, 3, 3.0, 3.0), np.zeros(9))


def test_exact_examples():
    t = circle_triple(6, 6.0)
    res = distance_exact(t, 0, 3)
    assert res.value == 3.0 and res.solver == "edge_local_exact" and not res.lower_bound_only
    assert_certified(res, t, 0, 3)
    assert distance_exact(t, 2, 2).value == 0.0
    assert distance_exact(two_point_triple(2.0), 0, 1).value == 0.5


def test_exact_rejects():
    with pytest.raises(DistanceError):
        distance_exact(torus_triple(3, 3, 3.0, 3.0), 0, 1)
    with pytest.raises(DistanceError):
        distance_exact(circle_triple(4, 4.0), 0, 4)


def test_exact_detects_wrong_edges():
    t = circle_triple(4, 4.0)
    bad = new_triple(t.points, 2, t.dirac, t.weights, edges=[(i, (i + 1) % 4, 2.0) for i in range(4)])
    with pytest.raises(DistanceError):
        distance_exact(bad, 0, 2)


def curved_circle(n):
    return circle_triple(n, 2 * math.pi, conformal_sine_metric(0.5, 1, 2 * math.pi))


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 24), st.data())
def test_exact_symmetry_and_triangle(n, data):
    t = curved_circle(n)
    p, q, r = (data.draw(st.integers(0, n - 1)) for _ in range(3))
    dpq = distance_exact(t, p, q).value
    assert dpq == distance_exact(t, q, p).value
    assert dpq <= distance_exact(t, p, r).value + distance_exact(t, r, q).value + 1e-12


def test_remark_one_saturation():
    t = circle_triple(12, 12.0)
    for q in (0, 5):
        warm = geodesic_warm_start(t, q)
        assert lipschitz_norm(t, warm) == pytest.approx(1.0, abs=1e-12)
        for p in range(12):
            assert abs(warm[p] - warm[q]) == distance_exact(t, p, q).value


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 10.0])
def test_two_point_both_solvers(m):
    t = two_point_triple(m)
    for solver in ("exact", "subgradient"):
        res = distance(t, 0, 1, solver=solver)
        assert res.value == pytest.approx(1 / m, rel=1e-6)
        assert_certified(res, t, 0, 1)


def test_subgradient_flat_circle_n8():
    t = circle_triple(8, 8.0)
    for p, q in itertools.combinations(range(8), 2):
        res = distance_subgradient(t, p, q)
        assert res.lower_bound_only and res.solver == "subgradient"
        assert res.value == pytest.approx(distance_exact(t, p, q).value, rel=5e-3)
        assert_certified(res, t, p, q)


def test_subgradient_trivial_pair():
    res = distance_subgradient(torus_triple(3, 3, 3.0, 3.0), 4, 4)
    assert res.value == 0.0 and res.iterations == 0


def test_subgradient_sound_on_curved_circle():
    t = curved_circle(12)
    for p, q in [(0, 3), (2, 9), (5, 6)]:
        res = distance_subgradient(t, p, q, restarts=2)
        assert res.value <= distance_exact(t, p, q).value + 1e-9
        assert_certified(res, t, p, q)


@pytest.mark.parametrize("q", sorted(TORUS4_SDP))
def test_subgradient_torus_against_frozen_sdp(q):
    t = torus_triple(4, 4, 4.0, 4.0)
    qi = q[0] * 4 + q[1]
    res = distance_subgradient(t, 0, qi)
    assert_certified(res, t, 0, qi)
    exact = TORUS4_SDP[q]
    assert res.value <= exact + 1e-9
    assert res.value >= 0.98 * exact


def test_sdp_oracle_reproduces_frozen_values():
    pytest.importorskip("cvxpy")
    from sdp_oracle import sdp_distance
    t = torus_triple(4, 4, 4.0, 4.0)
    for (x, y), value in TORUS4_SDP.items():
        assert sdp_distance(t, 0, x * 4 + y) == pytest.approx(value, rel=1e-6)


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
def test_subgradient_below_sdp_on_6x6_torus():
    pytest.importorskip("cvxpy")
    from sdp_oracle import sdp_distance
    t = torus_triple(6, 6, 6.0, 6.0)
    for qi in (2, 8, 15):
        exact = sdp_distance(t, 0, qi)
        res = distance_subgradient(t, 0, qi, restarts=1)
        assert res.value <= exact * (1 + 1e-6)
        assert res.value >= 0.97 * exact


def test_subgradient_reports_nonconvergence():
    t = torus_triple(4, 4, 4.0, 4.0)
    res = distance_subgradient(t, 0, 10, max_iter=5, restarts=1)
    assert not res.converged
    assert_certified(res, t, 0, 10)


def test_subgradient_symmetric_on_circle():
    t = circle_triple(10, 10.0)
    for p, q in [(1, 4), (0, 5)]:
        a = distance_subgradient(t, p, q).value
        b = distance_subgradient(t, q, p).value
        assert a == pytest.approx(b, rel=1e-6)


def test_subgradient_scaling():
    t = circle_triple(10, 10.0)
    a = distance_subgradient(t, 0, 4).value
    b = distance_subgradient(t.scaled(4.0), 0, 4).value
    assert b == pytest.approx(a / 4, rel=1e-4)


def test_subgradient_deterministic():
    t = torus_triple(4, 4, 4.0, 4.0)
    a = distance_subgradient(t, 0, 10, seed=7)
    b = distance_subgradient(t, 0, 10, seed=7)
    assert a.value == b.value
    np.testing.assert_array_equal(a.certificate, b.certificate)


def test_subgradient_argument_checks():
    t = circle_triple(4, 4.0)
    with pytest.raises(DistanceError):
        distance_subgradient(t, 0, 1, restarts=0)
    with pytest.raises(DistanceError):
        distance_subgradient(t, 0, 9)
    with pytest.raises(DistanceError):
        distance(t, 0, 1, solver="simplex")


def test_characters():
    t = circle_triple(6, 6.0)
    f = np.zeros(6)
    f[2] = 1.0
    assert character(2)(f) == 1.0 and character(3)(f) == 0.0
    for p, q in itertools.combinations(range(6), 2):
        via = distance_via_characters(t, character(p), character(q), method="exact")
        assert via.value == distance_exact(t, p, q).value
    tp = two_point_triple(4.0)
    assert distance_via_characters(tp, character(0), character(1)).value == 0.25


def test_verify_certificate_examples():
    t = circle_triple(6, 6.0)
    f = distance_exact(t, 1, 4).certificate
    chk = verify_certificate(t, f, 1, 4)
    assert chk.feasible and chk.objective == 3.0
    assert not verify_certificate(t, 2 * f, 1, 4).feasible
    zero = verify_certificate(t, np.zeros(6), 1, 4)
    assert zero.feasible and zero.objective == 0.0 and zero.constraint_norm == 0.0


def test_distance_table_sorted_and_thread_independent(monkeypatch):
    t = torus_triple(3, 3, 3.0, 3.0)
    pairs = [(4, 0), (0, 2), (1, 5), (0, 2)]
    one = distance_table(t, pairs, threads=1)
    assert [(p, q) for p, q, _ in one] == [(0, 2), (1, 5), (4, 0)]
    monkeypatch.setenv("SPECTRAL_LENGTH_THREADS", "3")
    many = distance_table(t, pairs)
    assert [r.value for *_, r in one] == [r.value for *_, r in many]
    monkeypatch.setenv("SPECTRAL_LENGTH_THREADS", "x")
    with pytest.raises(DistanceError):
        distance_table(t, pairs)


def test_lanczos_matches_dense_svd():
    rng = np.random.default_rng(3)
    t = torus_triple(10, 10, 10.0, 10.0)
    fam = dist._CommutatorFamily(t)
    assert fam.chiral and fam.shape == (100, 100)
    for _ in range(5):
        f = rng.standard_normal(100)
        c = fam.matrix(f)
        sigma, u, v = dist._lanczos_top(c, rng.standard_normal(100) + 0j)
        exact = np.linalg.norm(c.toarray(), 2)
        assert sigma == pytest.approx(exact, rel=1e-10)
        assert sigma <= exact * (1 + 1e-14)
        # Reduced block norm equals the full commutator norm.
        assert exact == pytest.approx(lipschitz_norm(t, f, method="svd"), rel=1e-12)

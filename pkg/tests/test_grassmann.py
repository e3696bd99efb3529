import numpy as np
import pytest
import scipy.linalg

from conftest import random_point, random_tangent, random_unitary
from grassmean.exceptions import CutLocusError, InvalidInputError
from grassmean.grassmann import (
    GrassmannPoint,
    StiefelBasis,
    TangentVector,
    basis_from_projector,
    commutator,
    complete_frame,
    dist,
    exp,
    geodesic,
    log,
    metric,
    parallel_transport,
    principal_angles,
    projector_from_basis,
    tangent_project,
    zero_tangent,
)


def test_point_validation():
    with pytest.raises(InvalidInputError):
        GrassmannPoint(np.array([[0.5, 0.0], [0.0, 0.5]]))  # not idempotent
    with pytest.raises(InvalidInputError):
        GrassmannPoint(np.array([[1.0, 1.0], [0.0, 0.0]]))  # not Hermitian
    p = GrassmannPoint(np.diag([1.0, 0.0, 0.0]))
    assert p.rank == 1 and p.dim == 3
    with pytest.raises(ValueError):
        p.matrix[0, 0] = 2.0  # stored copy is read-only


def test_stiefel_basis_validation():
    with pytest.raises(InvalidInputError):
        StiefelBasis(np.array([[1.0], [1.0]]))
    basis = StiefelBasis(np.eye(3)[:, :2])
    assert basis.dim == 3 and basis.rank == 2


def test_projector_basis_roundtrip():
    rng = np.random.default_rng(10)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n + 1))
        p = random_point(n, m, rng)
        basis = basis_from_projector(p)
        again = projector_from_basis(basis)
        assert np.linalg.norm(again.matrix - p.matrix) < 1e-12


def test_complete_frame_is_unitary_and_keeps_basis():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n + 1))
        x = random_unitary(n, rng)[:, :m]
        frame = complete_frame(x)
        assert np.linalg.norm(frame[:, :m] - x) == 0.0
        assert np.linalg.norm(frame.conj().T @ frame - np.eye(n)) < 1e-12


def test_tangent_projection_is_idempotent_involution():
    rng = np.random.default_rng(12)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n))
        p = random_point(n, m, rng)
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        herm = z + z.conj().T
        xi = tangent_project(p, herm)
        # projecting a tangent changes nothing: [P,[P,H]] = H on the range
        again = tangent_project(p, xi.matrix)
        assert np.linalg.norm(again.matrix - xi.matrix) < 1e-12 * max(1, xi.norm())
        # ad_P^3 = ad_P as an operator identity on Hermitian matrices
        ad = commutator(p.matrix, herm)
        ad3 = commutator(p.matrix, commutator(p.matrix, ad))
        assert np.linalg.norm(ad3 - ad) < 1e-12 * max(1.0, np.linalg.norm(ad))


def test_tangent_vector_validation_and_arithmetic():
    rng = np.random.default_rng(13)
    p = random_point(5, 2, rng)
    with pytest.raises(InvalidInputError):
        TangentVector(p, np.eye(5))  # Hermitian but not tangent
    xi = random_tangent(p, rng, 1.0)
    eta = random_tangent(p, rng, 2.0)
    assert abs((xi + eta - xi).norm() - eta.norm()) < 1e-12
    assert abs((3.0 * xi).norm() - 3.0) < 1e-12
    assert abs(metric(xi, xi) - 1.0) < 1e-12
    q = random_point(5, 2, rng)
    with pytest.raises(InvalidInputError):
        metric(xi, random_tangent(q, rng, 1.0))


def test_geodesic_stays_on_manifold_and_is_additive():
    rng = np.random.default_rng(14)
    p = random_point(6, 2, rng)
    xi = random_tangent(p, rng, 0.7)
    q = geodesic(p, xi, 0.4)
    assert np.linalg.norm(q.matrix @ q.matrix - q.matrix) < 1e-12
    assert abs(np.trace(q.matrix).real - 2) < 1e-12
    # flowing 0.4 then 0.3 equals flowing 0.7 (same generator)
    xi_moved = parallel_transport(xi, xi, 0.4)
    q2 = geodesic(xi_moved.base, xi_moved, 0.3)
    q_direct = geodesic(p, xi, 0.7)
    assert np.linalg.norm(q2.matrix - q_direct.matrix) < 1e-12


def test_exp_zero_is_identity():
    rng = np.random.default_rng(15)
    p = random_point(4, 2, rng)
    q = exp(p, zero_tangent(p))
    assert np.linalg.norm(q.matrix - p.matrix) < 1e-14


def test_log_of_self_is_zero():
    rng = np.random.default_rng(16)
    p = random_point(5, 3, rng)
    assert log(p, p).norm() < 1e-7


def test_exp_log_roundtrip():
    rng = np.random.default_rng(17)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, n))
        p = random_point(n, m, rng)
        xi = random_tangent(p, rng, rng.uniform(0.05, 1.0))
        back = log(p, exp(p, xi))
        assert (back - xi).norm() < 1e-10 * max(1.0, xi.norm())


def test_log_exp_hits_target():
    rng = np.random.default_rng(18)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, n))
        p = random_point(n, m, rng)
        q = random_point(n, m, rng)
        try:
            xi = log(p, q)
        except CutLocusError:
            continue
        assert np.linalg.norm(exp(p, xi).matrix - q.matrix) < 1e-10
        # the log's norm is the geodesic distance
        assert abs(xi.norm() - dist(p, q)) < 1e-9


def test_log_at_cut_locus_raises():
    p = GrassmannPoint(np.diag([1.0, 0.0]))
    q = GrassmannPoint(np.diag([0.0, 1.0]))
    with pytest.raises(CutLocusError):
        log(p, q)


def test_full_grassmannian_is_a_single_point():
    p = GrassmannPoint(np.eye(3))
    assert log(p, p).norm() == 0.0
    assert dist(p, p) == 0.0


def test_principal_angles_against_scipy():
    rng = np.random.default_rng(19)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n))
        p = random_point(n, m, rng)
        q = random_point(n, m, rng)
        ours = np.sort(principal_angles(p, q))
        x = basis_from_projector(p).matrix
        y = basis_from_projector(q).matrix
        ref = np.sort(scipy.linalg.subspace_angles(x, y))
        # the arccos route cannot resolve angles below sqrt(eps); scipy's
        # sine-based small-angle path can, so allow that floor
        np.testing.assert_allclose(ours, ref, atol=2e-7)


def test_distance_cp1_closed_form():
    # one-parameter family of real lines in C^2 at angle t from the first axis
    for t in np.linspace(0.01, 1.5, 25):
        x = np.array([[np.cos(t)], [np.sin(t)]], dtype=complex)
        p0 = GrassmannPoint(np.diag([1.0, 0.0]))
        pt = projector_from_basis(x)
        angle = min(t, np.pi - t)
        assert abs(dist(p0, pt) - np.sqrt(2.0) * angle) < 1e-10


def test_distance_symmetry_and_unitary_invariance():
    rng = np.random.default_rng(20)
    p = random_point(6, 3, rng)
    q = random_point(6, 3, rng)
    assert abs(dist(p, q) - dist(q, p)) < 1e-10
    u = random_unitary(6, rng)
    pu = GrassmannPoint(u @ p.matrix @ u.conj().T, 3)
    qu = GrassmannPoint(u @ q.matrix @ u.conj().T, 3)
    assert abs(dist(pu, qu) - dist(p, q)) < 1e-10


def test_log_unitary_equivariance():
    rng = np.random.default_rng(21)
    p = random_point(5, 2, rng)
    q = exp(p, random_tangent(p, rng, 0.8))
    u = random_unitary(5, rng)
    pu = GrassmannPoint(u @ p.matrix @ u.conj().T, 2)
    qu = GrassmannPoint(u @ q.matrix @ u.conj().T, 2)
    moved = u @ log(p, q).matrix @ u.conj().T
    assert np.linalg.norm(log(pu, qu).matrix - moved) < 1e-9


def test_parallel_transport_isometry():
    rng = np.random.default_rng(22)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n))
        p = random_point(n, m, rng)
        vel = random_tangent(p, rng, rng.uniform(0.1, 1.0))
        a = random_tangent(p, rng, rng.uniform(0.1, 2.0))
        b = random_tangent(p, rng, rng.uniform(0.1, 2.0))
        t = rng.uniform(-1.5, 1.5)
        at = parallel_transport(a, vel, t)
        bt = parallel_transport(b, vel, t)
        # transported vectors live at the geodesic point and keep the metric
        target = geodesic(p, vel, t)
        assert np.linalg.norm(at.base.matrix - target.matrix) < 1e-12
        assert abs(metric(at, bt) - metric(a, b)) < 1e-10
        assert abs(at.norm() - a.norm()) < 1e-10


def test_transport_of_velocity_matches_geodesic_derivative():
    rng = np.random.default_rng(23)
    p = random_point(5, 2, rng)
    vel = random_tangent(p, rng, 0.6)
    t, h = 0.7, 1e-6
    moved = parallel_transport(vel, vel, t)
    fd = (geodesic(p, vel, t + h).matrix - geodesic(p, vel, t - h).matrix) / (2 * h)
    assert np.linalg.norm(moved.matrix - fd) < 1e-8


def test_log_rejects_mismatched_spaces():
    p = GrassmannPoint(np.diag([1.0, 0.0, 0.0]))
    q = GrassmannPoint(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(InvalidInputError):
        log(p, q)
    with pytest.raises(InvalidInputError):
        dist(p, q)

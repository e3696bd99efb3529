"""Shared random-geometry helpers for the test suite.

All tests draw from explicitly seeded generators so failures replay exactly.
"""

import numpy as np

from grassmean.grassmann import GrassmannPoint, exp, tangent_project


def random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    # fix the QR phase ambiguity so the result is Haar distributed
    return q * (d / np.abs(d)).conj()


def random_point(n, m, rng):
    u = random_unitary(n, rng)
    x = u[:, :m]
    return GrassmannPoint(x @ x.conj().T, m)


def random_tangent(point, rng, norm=None):
    n = point.dim
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    xi = tangent_project(point, z + z.conj().T)
    if norm is not None:
        xi = xi * (norm / xi.norm())
    return xi


def random_cloud(n, m, count, radius, rng):
    """A center plus ``count`` points inside its geodesic ball."""
    center = random_point(n, m, rng)
    points = tuple(
        exp(center, random_tangent(center, rng, rng.uniform(0.2, 1.0) * radius))
        for _ in range(count))
    return center, points

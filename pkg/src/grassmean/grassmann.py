"""The complex Grassmannian realized as rank-m Hermitian projectors.

A point is an n-by-n Hermitian projector P with trace m; a tangent vector at P
is a Hermitian H with [P, [P, H]] = H. In this picture geodesics, parallel
transport and the exponential map are all unitary conjugation flows
e^{t[H,P]} (.) e^{-t[H,P]}, and the logarithm and geodesic distance come from
principal angles between the two subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Real

import numpy as np
import scipy.linalg

from . import linalg
from .exceptions import CutLocusError, InvalidInputError

PROJECTOR_TOL = 1e-10
TRACE_TOL = 1e-8
TANGENT_TOL = 1e-10
STIEFEL_TOL = 1e-10
BASE_MATCH_TOL = 1e-8
CUT_LOCUS_TOL = 1e-8


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True, eq=False, repr=False)
class GrassmannPoint:
    """An m-dimensional subspace of C^n stored as its orthogonal projector.

    The matrix is validated on construction: Hermitian, idempotent to
    PROJECTOR_TOL in Frobenius norm, trace within TRACE_TOL of the rank.
    The stored array is a read-only copy.
    """

    matrix: np.ndarray
    rank: int = None  # inferred from the trace when omitted

    def __post_init__(self):
        proj = linalg.require_hermitian(self.matrix, "projector")
        defect = np.linalg.norm(proj @ proj - proj)
        if defect >= PROJECTOR_TOL:
            raise InvalidInputError(f"matrix is not idempotent (|P^2 - P| = {defect:.3e})")
        trace = float(np.trace(proj).real)
        rank = int(round(trace)) if self.rank is None else int(self.rank)
        if abs(trace - rank) >= TRACE_TOL:
            raise InvalidInputError(f"trace {trace:.12f} is not the integer rank {rank}")
        if not 1 <= rank <= proj.shape[0]:
            raise InvalidInputError(f"rank {rank} out of range for dimension {proj.shape[0]}")
        proj.setflags(write=False)
        object.__setattr__(self, "matrix", proj)
        object.__setattr__(self, "rank", rank)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self):
        return f"GrassmannPoint(n={self.dim}, m={self.rank})"


@dataclass(frozen=True, eq=False, repr=False)
class StiefelBasis:
    """n-by-m matrix with orthonormal columns spanning a subspace."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = linalg.as_matrix(self.matrix, "basis")
        n, m = mat.shape
        if not 1 <= m <= n:
            raise InvalidInputError(f"basis shape {mat.shape} is not tall")
        defect = np.linalg.norm(mat.conj().T @ mat - np.eye(m))
        if defect >= STIEFEL_TOL:
            raise InvalidInputError(f"columns are not orthonormal (defect {defect:.3e})")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]

    def __repr__(self):
        return f"StiefelBasis(n={self.dim}, m={self.rank})"


@dataclass(frozen=True, eq=False, repr=False)
class TangentVector:
    """Tangent vector at a point: Hermitian H with [P, [P, H]] = H.

    Supports the vector-space operations (+, -, real scalar *) among vectors
    anchored at the same base point.
    """

    base: GrassmannPoint
    matrix: np.ndarray

    def __post_init__(self):
        mat = linalg.require_hermitian(self.matrix, "tangent vector")
        if mat.shape[0] != self.base.dim:
            raise InvalidInputError(
                f"tangent shape {mat.shape} does not match base dimension {self.base.dim}")
        proj = self.base.matrix
        defect = np.linalg.norm(commutator(proj, commutator(proj, mat)) - mat)
        if defect >= TANGENT_TOL * max(1.0, np.linalg.norm(mat)):
            raise InvalidInputError(f"matrix is not tangent at the base point (defect {defect:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def norm(self) -> float:
        """Metric norm; equals the Frobenius norm for Hermitian matrices."""
        return float(np.linalg.norm(self.matrix))

    def __neg__(self):
        return TangentVector(self.base, -self.matrix)

    def __add__(self, other):
        require_same_base(self, other)
        return TangentVector(self.base, self.matrix + other.matrix)

    def __sub__(self, other):
        require_same_base(self, other)
        return TangentVector(self.base, self.matrix - other.matrix)

    def __mul__(self, scalar):
        if not isinstance(scalar, Real):
            return NotImplemented
        return TangentVector(self.base, float(scalar) * self.matrix)

    __rmul__ = __mul__

    def __repr__(self):
        return f"TangentVector(n={self.base.dim}, m={self.base.rank}, norm={self.norm():.3e})"


def require_same_base(first: TangentVector, second: TangentVector,
                      tol: float = BASE_MATCH_TOL) -> None:
    if first.base is second.base:
        return
    if first.base.dim != second.base.dim or first.base.rank != second.base.rank:
        raise InvalidInputError("tangent vectors live on different Grassmannians")
    gap = np.linalg.norm(first.base.matrix - second.base.matrix)
    if gap > tol:
        raise InvalidInputError(f"tangent vectors anchored at different points (gap {gap:.3e})")


def require_anchored(vector: TangentVector, point: GrassmannPoint,
                     tol: float = BASE_MATCH_TOL) -> None:
    if vector.base is point:
        return
    if vector.base.dim != point.dim or vector.base.rank != point.rank:
        raise InvalidInputError("tangent vector lives on a different Grassmannian")
    gap = np.linalg.norm(vector.base.matrix - point.matrix)
    if gap > tol:
        raise InvalidInputError(f"tangent vector is not anchored at the point (gap {gap:.3e})")


def _require_same_space(first: GrassmannPoint, second: GrassmannPoint) -> None:
    if first.dim != second.dim or first.rank != second.rank:
        raise InvalidInputError(
            f"points live on different Grassmannians: (n={first.dim}, m={first.rank}) "
            f"vs (n={second.dim}, m={second.rank})")


def projector_from_basis(basis) -> GrassmannPoint:
    """Orthogonal projector onto the column span of an orthonormal basis."""
    if not isinstance(basis, StiefelBasis):
        basis = StiefelBasis(basis)
    mat = basis.matrix @ basis.matrix.conj().T
    return GrassmannPoint(mat, basis.rank)


def basis_from_projector(point: GrassmannPoint) -> StiefelBasis:
    """Orthonormal basis of the projector's range (top eigenvectors)."""
    vals, vecs = linalg.hermitian_eig(point.matrix)
    if vals[point.rank - 1] < 0.5:
        raise InvalidInputError("projector is rank deficient")
    return StiefelBasis(vecs[:, :point.rank])


def complete_frame(basis) -> np.ndarray:
    """Extend an orthonormal basis to a full n-by-n unitary.

    The complement columns come from a pivoted QR of the complement projector,
    so the first m columns of the result are the input basis unchanged.
    """
    mat = linalg.as_matrix(basis, "basis")
    n, m = mat.shape
    if m == n:
        return mat.copy()
    comp = np.eye(n) - mat @ mat.conj().T
    q, _, _ = scipy.linalg.qr(comp, pivoting=True)
    return np.hstack([mat, q[:, : n - m]])


def tangent_project(point: GrassmannPoint, value) -> TangentVector:
    """Project a Hermitian matrix onto the tangent space: [P, [P, X]]."""
    mat = linalg.require_hermitian(value, "matrix")
    if mat.shape[0] != point.dim:
        raise InvalidInputError(
            f"matrix shape {mat.shape} does not match dimension {point.dim}")
    proj = point.matrix
    return TangentVector(point, commutator(proj, commutator(proj, mat)))


def metric(first: TangentVector, second: TangentVector) -> float:
    """Riemannian inner product tr(H1 H2); real for Hermitian arguments."""
    require_same_base(first, second)
    return float(np.einsum("ij,ji->", first.matrix, second.matrix).real)


def zero_tangent(point: GrassmannPoint) -> TangentVector:
    return TangentVector(point, np.zeros((point.dim, point.dim), dtype=complex))


def _flow(point: GrassmannPoint, velocity: TangentVector, t: float) -> np.ndarray:
    """Unitary e^{t[H,P]} driving the geodesic with initial velocity H."""
    if not np.isfinite(t):
        raise InvalidInputError("geodesic parameter must be finite")
    return linalg.expm_skew(float(t) * commutator(velocity.matrix, point.matrix))


def geodesic(point: GrassmannPoint, velocity: TangentVector, t: float) -> GrassmannPoint:
    """Point at parameter t of the geodesic through ``point`` with ``velocity``."""
    require_anchored(velocity, point)
    mover = _flow(point, velocity, t)
    return GrassmannPoint(mover @ point.matrix @ mover.conj().T, point.rank)


def exp(point: GrassmannPoint, velocity: TangentVector) -> GrassmannPoint:
    """Riemannian exponential: the geodesic evaluated at t = 1."""
    return geodesic(point, velocity, 1.0)


def parallel_transport(vector: TangentVector, velocity: TangentVector,
                       t: float) -> TangentVector:
    """Transport ``vector`` along the geodesic driven by ``velocity``.

    Both inputs must be anchored at the same point; the result is anchored at
    the geodesic point at parameter t. Transport is a metric isometry.
    """
    require_same_base(vector, velocity)
    point = vector.base
    mover = _flow(point, velocity, t)
    new_base = GrassmannPoint(mover @ point.matrix @ mover.conj().T, point.rank)
    return TangentVector(new_base, mover @ vector.matrix @ mover.conj().T)


def _cos2_spectrum(point: GrassmannPoint, other: GrassmannPoint) -> np.ndarray:
    """Squared principal-angle cosines, descending: eigenvalues of Yh P Y."""
    basis = basis_from_projector(other).matrix
    block = basis.conj().T @ point.matrix @ basis
    vals = np.linalg.eigvalsh(block)[::-1]
    return linalg.clamp_spectrum(vals, (0.0, 1.0))


def principal_angles(point: GrassmannPoint, other: GrassmannPoint) -> np.ndarray:
    """The m principal angles between the two subspaces, ascending, in radians."""
    _require_same_space(point, other)
    return np.arccos(np.sqrt(_cos2_spectrum(point, other)))


def dist(point: GrassmannPoint, other: GrassmannPoint) -> float:
    """Geodesic distance: sqrt(2 * sum of squared principal angles)."""
    _require_same_space(point, other)
    angles = np.arccos(np.sqrt(_cos2_spectrum(point, other)))
    return float(np.sqrt(2.0 * np.sum(angles * angles)))


def log_block(conjugated: np.ndarray, rank: int, cut_tol: float = CUT_LOCUS_TOL,
              index=None) -> np.ndarray:
    """Z-block of the geodesic generator reaching ``conjugated`` from the
    standard projector diag(I_m, 0).

    ``conjugated`` is the target projector expressed in a frame of the start
    point. The SVD of its top-right block pairs each left singular vector with
    a squared cosine on the diagonal of the rotated top-left block; the angles
    are arccos of the square roots. Returns the (n-m)-by-m block Z.
    """
    m = rank
    top_left = conjugated[:m, :m]
    top_right = conjugated[:m, m:]
    u, _, vh = np.linalg.svd(top_right)
    lam = np.clip(np.real(np.diag(u.conj().T @ top_left @ u)), 0.0, 1.0)
    if lam.min() <= cut_tol:
        raise CutLocusError(
            "subspaces share a principal angle at pi/2; the geodesic is not unique",
            index=index)
    sigma = np.arccos(np.sqrt(lam))
    k = min(m, conjugated.shape[0] - m)
    rect = np.zeros((m, conjugated.shape[0] - m))
    rect[:k, :k] = np.diag(sigma[:k])
    return (u @ rect @ vh).conj().T


def log(point: GrassmannPoint, target: GrassmannPoint,
        cut_tol: float = CUT_LOCUS_TOL) -> TangentVector:
    """Inverse exponential: the tangent at ``point`` whose exp is ``target``.

    Requires all principal angles strictly below pi/2 (smallest squared cosine
    above ``cut_tol``), otherwise CutLocusError.
    """
    _require_same_space(point, target)
    n, m = point.dim, point.rank
    if m == n:
        return zero_tangent(point)
    frame = complete_frame(basis_from_projector(point).matrix)
    conjugated = frame.conj().T @ target.matrix @ frame
    z = log_block(conjugated, m, cut_tol)
    lifted = np.zeros((n, n), dtype=complex)
    lifted[:m, m:] = z.conj().T
    lifted[m:, :m] = z
    return TangentVector(point, frame @ lifted @ frame.conj().T)

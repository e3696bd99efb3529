"""Blind identification of noisy complex mixtures, used as a benchmark for
subspace averaging.

Noncircular complex sources are mixed through a randomly perturbed matrix;
each batch of observations yields one estimate of the mixing matrix through
the strong uncorrelating transform (whitening followed by a Takagi
factorization of the whitened pseudo-covariance). Estimated columns, viewed
as lines in C^n, are then combined across batches either by Karcher averaging
on projective space or by phase-aligned Euclidean averaging, and judged by
the normalized Amari error against the true mixing matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .exceptions import (
    AmbiguousModelWarning,
    CutLocusError,
    DegenerateAverageError,
    DegenerateCurvatureError,
    DomainError,
    IllConditionedError,
    InvalidInputError,
    LineSearchFailedError,
)
from .grassmann import GrassmannPoint, basis_from_projector
from .karcher import CGConfig, KarcherProblem, karcher_mean
from . import linalg

COND_LIMIT = 1e10
AMARI_COND_LIMIT = 1e12
CIRCULARITY_GAP_TOL = 1e-3
MIN_SAMPLES_PER_SOURCE = 10


@dataclass(frozen=True)
class MixingExperiment:
    """Configuration of one benchmark sweep."""

    n: int = 5
    n_estimations: int = 10
    noise_level: float = 0.5
    trials: int = 100
    samples_per_trial: int = 10000
    rng_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("need at least two sources")
        if self.n_estimations < 1:
            raise InvalidInputError("need at least one estimation per trial")
        if self.noise_level < 0:
            raise InvalidInputError("noise level must be nonnegative")
        if self.trials < 1:
            raise InvalidInputError("need at least one trial")
        if self.samples_per_trial < MIN_SAMPLES_PER_SOURCE * self.n:
            raise InvalidInputError(
                f"need at least {MIN_SAMPLES_PER_SOURCE * self.n} samples for n={self.n}")


@dataclass(frozen=True, eq=False, repr=False)
class EstimateSet:
    """A stack of mixing-matrix estimates with unit-norm columns.

    ``matrices`` has shape (count, n, n); column j of ``matrices[i]`` is the
    representative unit vector of estimate i for source j.
    """

    matrices: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InvalidInputError(f"expected a (count, n, n) stack, got shape {mats.shape}")
        if not np.all(np.isfinite(mats)):
            raise InvalidInputError("estimates contain non-finite entries")
        norms = np.linalg.norm(mats, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-8:
            raise InvalidInputError("estimate columns must have unit norm")
        mats = mats.copy()
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def count(self) -> int:
        return self.matrices.shape[0]

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    def column_projector(self, i: int, j: int) -> GrassmannPoint:
        vec = self.matrices[i][:, j]
        return GrassmannPoint(np.outer(vec, vec.conj()), 1)

    def __repr__(self):
        return f"EstimateSet(count={self.count}, n={self.n})"


def generate_sources(n: int, num_samples: int, rng) -> np.ndarray:
    """Unit-variance noncircular Gaussian sources, one per row.

    Source k mixes independent real Gaussian streams as
    cos(theta_k) x + 1j sin(theta_k) y with theta_k = k pi / (4 (n+1)),
    k = 1..n, so the circularity coefficients |cos 2 theta_k| are distinct.
    """
    if num_samples < MIN_SAMPLES_PER_SOURCE * n:
        raise InvalidInputError(f"need at least {MIN_SAMPLES_PER_SOURCE * n} samples")
    theta = (np.arange(1, n + 1) / (n + 1)) * (np.pi / 4)
    x = rng.standard_normal((n, num_samples))
    y = rng.standard_normal((n, num_samples))
    return np.cos(theta)[:, None] * x + 1j * np.sin(theta)[:, None] * y


def mix(mixing: np.ndarray, perturbation: np.ndarray, noise_level: float,
        sources: np.ndarray) -> np.ndarray:
    """Observations (A + eps Z) s for one estimation batch."""
    mixing = linalg.as_matrix(mixing, "mixing")
    perturbation = linalg.as_matrix(perturbation, "perturbation")
    sources = linalg.as_matrix(sources, "sources")
    if mixing.shape != perturbation.shape:
        raise InvalidInputError("mixing and perturbation shapes differ")
    if mixing.shape[1] != sources.shape[0]:
        raise InvalidInputError("mixing and sources shapes are incompatible")
    return (mixing + noise_level * perturbation) @ sources


def takagi(matrix: np.ndarray, group_tol: float = 1e-8):
    """Takagi factorization M = U diag(s) U^T of a complex symmetric matrix.

    Built on the SVD: the unitary linking the left and right singular bases
    is block diagonal over groups of equal singular values and symmetric
    there, so its principal square root merges the two bases. Returns
    (s, U) with s descending and U unitary.
    """
    mat = linalg.as_matrix(matrix, "matrix")
    if mat.shape[0] != mat.shape[1]:
        raise InvalidInputError("matrix must be square")
    mat = 0.5 * (mat + mat.T)
    left, vals, right_h = np.linalg.svd(mat)
    link = left.conj().T @ right_h.T
    scale = max(vals[0], 1.0)
    merger = np.zeros_like(link)
    start = 0
    for stop in range(1, len(vals) + 1):
        if stop < len(vals) and vals[start] - vals[stop] <= group_tol * scale:
            continue
        idx = np.arange(start, stop)
        if vals[start] <= group_tol * scale:
            merger[np.ix_(idx, idx)] = np.eye(len(idx))
        else:
            block = link[np.ix_(idx, idx)]
            block = 0.5 * (block + block.T)
            merger[np.ix_(idx, idx)] = scipy.linalg.sqrtm(block)
        start = stop
    factor = left @ merger
    return vals, factor


def sut_from_covariances(cov: np.ndarray, pseudo_cov: np.ndarray,
                         cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Mixing-matrix estimate from a covariance / pseudo-covariance pair.

    The strong uncorrelating transform whitens with the inverse Hermitian
    square root of the covariance, then rotates by the Takagi unitary of the
    whitened pseudo-covariance. Columns of the returned estimate are
    normalized to unit length. Warns (AmbiguousModelWarning) when the
    estimated circularity spectrum has a gap below CIRCULARITY_GAP_TOL, which
    makes the corresponding sources nearly unidentifiable.
    """
    cov = linalg.require_hermitian(cov, "covariance", tol=1e-10)
    pseudo = linalg.as_matrix(pseudo_cov, "pseudo-covariance")
    vals, vecs = linalg.hermitian_eig(cov)
    if vals[-1] <= 0 or vals[0] / vals[-1] > cond_limit:
        raise IllConditionedError("covariance is numerically singular")
    whiten = (vecs * vals ** -0.5) @ vecs.conj().T
    color = (vecs * vals ** 0.5) @ vecs.conj().T
    sym = whiten @ pseudo @ whiten.T
    spectrum, rotor = takagi(0.5 * (sym + sym.T))
    if len(spectrum) > 1 and np.min(np.abs(np.diff(spectrum))) < CIRCULARITY_GAP_TOL:
        warnings.warn("estimated circularity coefficients nearly coincide; "
                      "column identification is unreliable", AmbiguousModelWarning,
                      stacklevel=2)
    estimate = color @ rotor
    return estimate / np.linalg.norm(estimate, axis=0)


def sut_estimate(observations: np.ndarray) -> np.ndarray:
    """Strong-uncorrelating-transform estimate from raw observations."""
    obs = linalg.as_matrix(observations, "observations")
    n, count = obs.shape
    if count < MIN_SAMPLES_PER_SOURCE * n:
        raise InvalidInputError(f"need at least {MIN_SAMPLES_PER_SOURCE * n} samples")
    cov = obs @ obs.conj().T / count
    pseudo = obs @ obs.T / count
    return sut_from_covariances(cov, pseudo)


def _resolve_reference(estimates: EstimateSet, reference) -> np.ndarray:
    if reference is None:
        return estimates.matrices[0]
    if isinstance(reference, EstimateSet):
        return reference.matrices[0]
    ref = np.asarray(reference, dtype=complex)
    if ref.shape != estimates.matrices[0].shape:
        raise InvalidInputError("reference shape does not match the estimates")
    return ref


def align_columns(estimates: EstimateSet, reference=None) -> EstimateSet:
    """Permute each estimate's columns to match the reference columns.

    The permutation greedily maximizes the summed squared overlaps
    |<column, reference column>|^2, breaking ties toward the lowest index.
    ``reference`` defaults to the first estimation.
    """
    ref = _resolve_reference(estimates, reference)
    n = estimates.n
    aligned = np.empty_like(estimates.matrices)
    for i in range(estimates.count):
        est = estimates.matrices[i]
        overlap = np.abs(ref.conj().T @ est) ** 2  # overlap[k, j] = |<ref_k, est_j>|^2
        assignment = np.full(n, -1)
        free = overlap.copy()
        for _ in range(n):
            k, j = np.unravel_index(np.argmax(free), free.shape)
            assignment[k] = j
            free[k, :] = -1.0
            free[:, j] = -1.0
        aligned[i] = est[:, assignment]
    return EstimateSet(aligned)


def average_karcher(aligned: EstimateSet, config: CGConfig = None) -> list:
    """Column-wise Karcher means of the aligned estimates on projective space.

    Returns one rank-one GrassmannPoint per column. A cut-locus failure is
    re-raised with the offending column index attached.
    """
    if config is None:
        config = CGConfig(step_rule="newton_cp")
    means = []
    for j in range(aligned.n):
        points = tuple(aligned.column_projector(i, j) for i in range(aligned.count))
        problem = KarcherProblem(points)
        try:
            point, _ = karcher_mean(problem, config=config)
        except CutLocusError as err:
            raise CutLocusError(f"column {j}: {err}", index=err.index, column=j) from err
        means.append(point)
    return means


def average_euclid(aligned: EstimateSet) -> np.ndarray:
    """Euclidean average of the aligned estimate columns.

    Sums each column across estimations exactly as the estimator returned
    them and normalizes the result to unit norm. The estimator's per-column
    phases are left untouched, so antiparallel estimates partially cancel;
    this is the naive baseline that subspace averaging is measured against,
    which by construction cannot be hurt by the phase ambiguity.
    """
    out = np.empty_like(aligned.matrices[0])
    for j in range(aligned.n):
        total = aligned.matrices[:, :, j].sum(axis=0)
        scale = np.linalg.norm(total)
        if scale < 1e-12:
            raise DegenerateAverageError(f"column {j} averaged to zero")
        out[:, j] = total / scale
    return out


def amari_error(estimate: np.ndarray, mixing: np.ndarray,
                cond_limit: float = AMARI_COND_LIMIT) -> float:
    """Normalized Amari error of an estimate against the true mixing matrix.

    Zero exactly on scaled column permutations of the truth; grows with
    cross-talk. The estimate must be invertible (condition number below
    ``cond_limit``).
    """
    est = linalg.as_matrix(estimate, "estimate")
    mixing = linalg.as_matrix(mixing, "mixing")
    if est.shape != mixing.shape or est.shape[0] != est.shape[1]:
        raise InvalidInputError("estimate and mixing must be square and equal-shaped")
    if np.linalg.cond(est) > cond_limit:
        raise IllConditionedError("estimate is numerically singular")
    ratios = np.abs(np.linalg.solve(est, mixing))
    rows = ratios.sum(axis=1) / ratios.max(axis=1)
    cols = ratios.sum(axis=0) / ratios.max(axis=0)
    return float((rows.sum() + cols.sum()) / est.shape[0] - 2.0)


@dataclass
class TrialResult:
    """One row of the benchmark table."""

    trial: int
    sweep_param: str
    sweep_value: float
    amari_karcher: float
    amari_euclid: float
    status: str


_SKIP_REASON = {
    CutLocusError: "cut_locus",
    IllConditionedError: "ill_conditioned",
    LineSearchFailedError: "line_search_failed",
    DegenerateCurvatureError: "degenerate_curvature",
    DomainError: "domain_error",
    DegenerateAverageError: "degenerate_average",
}

SWEEP_PARAMS = ("noise_level", "n_estimations")


def _run_trial(cfg: MixingExperiment, rng, cg_config: CGConfig):
    n = cfg.n
    mixing = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    estimates = []
    for _ in range(cfg.n_estimations):
        perturbation = (rng.uniform(-0.5, 0.5, (n, n))
                        + 1j * rng.uniform(-0.5, 0.5, (n, n)))
        sources = generate_sources(n, cfg.samples_per_trial, rng)
        observations = mix(mixing, perturbation, cfg.noise_level, sources)
        estimates.append(sut_estimate(observations))
    aligned = align_columns(EstimateSet(np.stack(estimates)))
    means = average_karcher(aligned, cg_config)
    karcher_est = np.column_stack(
        [basis_from_projector(p).matrix[:, 0] for p in means])
    euclid_est = average_euclid(aligned)
    return amari_error(karcher_est, mixing), amari_error(euclid_est, mixing)


def run_experiment(cfg: MixingExperiment, sweep_param: str, sweep_values,
                   cg_config: CGConfig = None) -> list:
    """Run the benchmark over a sweep of one configuration parameter.

    ``sweep_param`` is "noise_level" or "n_estimations". Each (value, trial)
    pair draws its randomness from a stream keyed by (rng_seed, trial), so
    results are deterministic and trials are paired across sweep values.
    Failed trials become rows with empty scores and the failure reason in
    ``status``; they never abort the sweep.
    """
    if sweep_param not in SWEEP_PARAMS:
        raise InvalidInputError(f"unknown sweep parameter {sweep_param!r}")
    values = list(sweep_values)
    if not values:
        raise InvalidInputError("sweep needs at least one value")
    if cg_config is None:
        cg_config = CGConfig(step_rule="newton_cp")
    rows = []
    for value in values:
        trial_cfg = replace(cfg, **{sweep_param: value})
        for trial in range(cfg.trials):
            rng = np.random.default_rng([cfg.rng_seed, trial])
            try:
                score_k, score_e = _run_trial(trial_cfg, rng, cg_config)
                status = "ok"
            except tuple(_SKIP_REASON) as err:
                score_k = score_e = None
                status = next(reason for klass, reason in _SKIP_REASON.items()
                              if isinstance(err, klass))
            rows.append(TrialResult(trial, sweep_param, float(value),
                                    score_k, score_e, status))
    return rows

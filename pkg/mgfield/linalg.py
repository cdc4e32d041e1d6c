"""Dense symmetric positive-definite kernel.

Factorization, inversion, Gaussian conditioning, partial correlations and
seeded sampling over matrices labeled by graph point sets. Matrices here are
desk-scale (a few hundred rows at most), so everything is dense.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from . import config
from .errors import BadIndex, BadParams, NotPositiveDefinite, NumericalError
from .graph import PointSet

logger = logging.getLogger(__name__)

KINDS = ("covariance", "precision", "distance")
_INVERSE_KIND = {"covariance": "precision", "precision": "covariance"}
# Relative asymmetry above plain floating-point roundoff.
_NOTICEABLE_ASYMMETRY = 1e-12


@dataclass(frozen=True, eq=False)
class LabeledMatrix:
    """Symmetric matrix whose rows and columns follow `labels`.

    Entries are symmetrized by averaging with the transpose on construction;
    asymmetry above `config.SYMMETRY_TOL` (relative to the largest entry) is
    rejected. The stored array is read-only.
    """

    labels: PointSet
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParams(f"Unknown matrix kind {self.kind!r}")
        M = np.array(self.entries, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise BadParams(f"Matrix must be square, got shape {M.shape}")
        if M.shape[0] != len(self.labels):
            raise BadIndex(f"{len(self.labels)} labels for a {M.shape[0]}x{M.shape[0]} matrix")
        if not np.all(np.isfinite(M)):
            raise BadParams("Matrix has non-finite entries")
        if M.size:
            asymmetry = np.abs(M - M.T).max()
            scale = np.abs(M).max()
            if asymmetry > config.SYMMETRY_TOL * scale:
                raise BadParams(f"Matrix is not symmetric (max asymmetry {asymmetry:.3g})")
            if asymmetry > _NOTICEABLE_ASYMMETRY * scale:
                logger.warning(f"Symmetrizing {self.kind} matrix with max asymmetry {asymmetry:.3g}")
            elif asymmetry > 0.0:
                logger.debug(f"Symmetrizing {self.kind} matrix (roundoff asymmetry {asymmetry:.3g})")
            if asymmetry > 0.0:
                M = 0.5 * (M + M.T)
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def max_abs(self) -> float:
        return float(np.abs(self.entries).max()) if self.size else 0.0

    def submatrix(self, indices: Sequence[int]) -> "LabeledMatrix":
        """Principal submatrix; rows stay in canonical (ascending) order."""
        idx = sorted(set(int(i) for i in indices))
        return LabeledMatrix(self.labels.subset(idx), self.entries[np.ix_(idx, idx)], self.kind)


@dataclass(frozen=True, eq=False)
class SpdFactor:
    """Lower Cholesky factor L with L @ L.T equal to the factored matrix."""

    labels: PointSet
    lower: np.ndarray
    kind: str


def cholesky_lower(M: np.ndarray, pivot_tol: float | None = None) -> np.ndarray:
    """LAPACK Cholesky with a relative pivot floor.

    Raises:
        NotPositiveDefinite: with the index of the first failing pivot
    """
    pivot_tol = config.resolve(pivot_tol, config.PIVOT_TOL)
    if M.size == 0:
        return np.zeros_like(M)
    lower, info = lapack.dpotrf(M, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(f"Matrix is not positive definite (pivot {info - 1} failed)", index=info - 1)
    if info < 0:
        raise NumericalError(f"Cholesky received an invalid argument (info={info})")

    pivots = np.diag(lower) ** 2
    floor = pivot_tol * max(float(np.diag(M).max()), 0.0)
    small = np.flatnonzero(pivots <= floor)
    if small.size:
        index = int(small[0])
        raise NotPositiveDefinite(
            f"Matrix is not positive definite (pivot {index} = {pivots[index]:.3g} below {floor:.3g})",
            index=index,
        )
    return lower


def factorize_spd(M: LabeledMatrix, pivot_tol: float | None = None) -> SpdFactor:
    """Cholesky factor of M, certifying positive-definiteness on its point set."""
    return SpdFactor(M.labels, cholesky_lower(M.entries, pivot_tol), M.kind)


def invert_spd(M: LabeledMatrix, pivot_tol: float | None = None) -> LabeledMatrix:
    """Inverse of a covariance (→ precision) or precision (→ covariance)."""
    if M.kind not in _INVERSE_KIND:
        raise BadParams(f"Cannot invert a {M.kind} matrix as SPD")
    lower = cholesky_lower(M.entries, pivot_tol)
    inverse = cho_solve((lower, True), np.eye(M.size))
    return LabeledMatrix(M.labels, 0.5 * (inverse + inverse.T), _INVERSE_KIND[M.kind])


def _check_indices(n: int, *groups: Sequence[int]) -> list[list[int]]:
    checked = []
    seen = set()
    for group in groups:
        group = [int(i) for i in group]
        for i in group:
            if not 0 <= i < n:
                raise BadIndex(f"Index {i} out of range for dimension {n}")
            if i in seen:
                raise BadIndex(f"Index {i} appears more than once")
            seen.add(i)
        checked.append(group)
    return checked


def schur_complement(S: np.ndarray, free: Sequence[int], given: Sequence[int]) -> np.ndarray:
    """S_FF - S_FG S_GG^-1 S_GF for plain arrays (no validation)."""
    S_FF = S[np.ix_(free, free)]
    if len(given) == 0:
        return S_FF.copy()
    lower = cholesky_lower(S[np.ix_(given, given)])
    S_FG = S[np.ix_(free, given)]
    cov = S_FF - S_FG @ cho_solve((lower, True), S_FG.T)
    return 0.5 * (cov + cov.T)


def conditional_gaussian(
    sigma: LabeledMatrix,
    targets: Sequence[int],
    given: Sequence[int],
    values: Sequence[float],
) -> tuple[np.ndarray, LabeledMatrix]:
    """Conditional law of the `targets` coordinates given values on `given`.

    Targets are returned in ascending index order; `values[k]` belongs to
    `given[k]`.

    Returns:
        (mean over targets, conditional covariance over targets)

    Raises:
        BadIndex: Overlapping or out-of-range index sets
        NotPositiveDefinite: Sigma restricted to `given` is not PD
    """
    A, B = _check_indices(sigma.size, targets, given)
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != len(B):
        raise BadParams(f"{values.shape[0]} values for {len(B)} conditioning indices")
    A = sorted(A)
    order = np.argsort(B, kind="stable")
    B = [B[k] for k in order]
    values = values[order]

    S = sigma.entries
    if B:
        lower = cholesky_lower(S[np.ix_(B, B)])
        S_AB = S[np.ix_(A, B)]
        weights = cho_solve((lower, True), S_AB.T)
        mean = weights.T @ values
        cov = S[np.ix_(A, A)] - S_AB @ weights
    else:
        mean = np.zeros(len(A))
        cov = S[np.ix_(A, A)]
    cov = 0.5 * (cov + cov.T)
    return mean, LabeledMatrix(sigma.labels.subset(A), cov, "covariance")


def partial_correlation(sigma: LabeledMatrix, i: int, j: int, S: Sequence[int]) -> float:
    """Correlation of coordinates i and j given the coordinates in S."""
    if i == j:
        raise BadIndex("partial_correlation needs two distinct indices")
    _check_indices(sigma.size, [i, j], S)
    cov = schur_complement(sigma.entries, [i, j], sorted(int(k) for k in S))
    if cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0:
        raise NotPositiveDefinite("Conditional variance is not positive")
    rho = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
    return float(np.clip(rho, -1.0, 1.0))


def sample_gaussian(M: LabeledMatrix, seed: int, n: int) -> np.ndarray:
    """Draw n centered Gaussian vectors with covariance M or precision M.

    Uses numpy's PCG64 generator (`np.random.default_rng(seed)`). With
    M = L L^T the covariance path returns L z and the precision path solves
    L^T x = z.

    Returns:
        Array of shape (n, M.size)
    """
    if n < 0:
        raise BadParams(f"Sample count must be non-negative, got {n}")
    if M.kind not in _INVERSE_KIND:
        raise BadParams(f"Cannot sample from a {M.kind} matrix")
    lower = cholesky_lower(M.entries)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((M.size, n))
    if M.kind == "covariance":
        x = lower @ z
    else:
        x = solve_triangular(lower, z, lower=True, trans="T")
    logger.debug(f"Drew {n} samples of dimension {M.size} from {M.kind} (seed {seed})")
    return x.T

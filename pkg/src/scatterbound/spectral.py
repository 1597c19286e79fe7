"""Dense eigensolvers and the damped Picard series.

Eigenvectors are normalized in the weighted norm ||v||_w^2 = (2 pi / n)
sum |v_i|^2 so that expansion coefficients of right-hand sides approximate
L^2 Fourier coefficients on the unit circle.  The damped Picard sum

    W = sum_j |<rhs, psi_j>_w|^2 / (|lambda_j|^e + alpha)

is the single regularized series behind both inversion algorithms: exponent
1 over the eigensystem of the weighted far field matrix tests membership in
the range of (F^* F)^(1/4); exponent 1/2 over the Hermitian eigensystem of
M_sharp tests membership in the range of its square root.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError

__all__ = [
    "OperatorSpectrum",
    "eig_general",
    "eig_hermitian",
    "damped_picard_sum",
    "weighted_inner",
]


def weighted_inner(a: np.ndarray, b: np.ndarray, weight: float) -> complex:
    """<a, b>_w = weight * sum_i a_i conj(b_i)."""
    return weight * complex(np.vdot(b, a))


@dataclass(frozen=True)
class OperatorSpectrum:
    """All eigenpairs of a matrix, weighted-normalized, with residual certificates.

    eigenvalues are sorted by decreasing modulus; eigenvectors[:, j] belongs
    to eigenvalues[j] and has unit weighted norm; residuals[j] is the backward
    error ||A v - lambda v||_2 / ||A||_2 of the pair.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    weight: float


def _sort_order(vals: np.ndarray) -> np.ndarray:
    # Deterministic total order: decreasing modulus, ties by real then imag part.
    return np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))


def eig_general(A: np.ndarray, weight: float | None = None) -> OperatorSpectrum:
    """Full eigendecomposition of a general complex matrix (n <= 512).

    weight defaults to 2 pi / n, the circle quadrature weight matching the
    far field operator convention.  Raises on eigensolver breakdown rather
    than returning a partial spectrum.  For nearly normal input the computed
    eigenvectors are close to weighted-orthonormal; non-orthogonality beyond
    1e-6 triggers a warning.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError("matrix must be square")
    n = A.shape[0]
    if n > 512:
        raise PreconditionError(f"dense eigensolver limited to n <= 512, got {n}")
    if weight is None:
        weight = 2.0 * math.pi / n
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}") from exc
    order = _sort_order(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    norm_a = np.linalg.norm(A, 2)
    _orthonormalize_degenerate_clusters(vals, vecs, norm_a)
    vecs = vecs / (math.sqrt(weight) * np.linalg.norm(vecs, axis=0))
    if norm_a == 0.0:
        res = np.zeros(n)
    else:
        res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) / (
            np.linalg.norm(vecs, axis=0) * norm_a
        )
    # Warn when a nearly normal matrix yields visibly skew eigenvectors.
    # Pairs inside a numerically degenerate cluster (eigenvalue gap at rounding
    # level) are exempt: their eigenvectors are arbitrary mixtures by nature.
    if n > 1 and norm_a > 0 and _normality_defect(A, norm_a) < 1e-6:
        gram = np.abs(weight * (vecs.conj().T @ vecs))
        np.fill_diagonal(gram, 0.0)
        gaps = np.abs(vals[:, None] - vals[None, :])
        separated = gaps > 1e-8 * norm_a
        off = gram[separated].max() if np.any(separated) else 0.0
        if off > 1e-6:
            warnings.warn(
                f"eigenvectors of a near-normal matrix deviate from orthogonality by {off:.2e}",
                stacklevel=2,
            )
    return OperatorSpectrum(eigenvalues=vals, eigenvectors=vecs, residuals=res, weight=weight)


def _orthonormalize_degenerate_clusters(vals, vecs, norm_a, rel_gap: float = 1e-10):
    """Replace eigenvector groups of (numerically) repeated eigenvalues by an
    orthonormal basis of their span, in place.

    LAPACK returns an arbitrary, often badly skewed basis inside a degenerate
    eigenspace (symmetric scatterers produce exactly repeated pairs, and the
    trailing rounding-level eigenvalues form one big cluster).  Any
    orthonormal basis of the cluster span is an equally good set of
    eigenvectors, and expansion coefficients become basis-independent.
    Well-separated eigenpairs are never touched.
    """
    tol = max(1e-12, rel_gap * norm_a)
    n = len(vals)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(vals[j] - vals[j - 1]) <= tol:
            j += 1
        if j - i > 1:
            q, _ = np.linalg.qr(vecs[:, i:j])
            vecs[:, i:j] = q
        i = j


def _normality_defect(A: np.ndarray, norm_a: float) -> float:
    if norm_a == 0.0:
        return 0.0
    ah = A.conj().T
    return float(np.linalg.norm(ah @ A - A @ ah, 2) / norm_a**2)


def eig_hermitian(H: np.ndarray):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, V) with real eigenvalues in ascending order and V
    unitary (columns are 2-norm orthonormal eigenvectors).  Input must be
    Hermitian to 1e-12 relative.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise PreconditionError("matrix must be square")
    norm_h = np.linalg.norm(H, 2)
    if np.linalg.norm(H - H.conj().T, 2) > 1e-12 * max(norm_h, np.finfo(float).tiny):
        raise PreconditionError("matrix is not Hermitian within 1e-12 relative")
    try:
        vals, vecs = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc
    return vals, vecs


def damped_picard_sum(spectrum, rhs: np.ndarray, alpha: float, exponent: float) -> float:
    """Regularized Picard series W = sum_j |<rhs, psi_j>_w|^2 / (|l_j|^e + alpha).

    spectrum is either an OperatorSpectrum or a tuple
    (eigenvalues, eigenvectors, weight) of Hermitian pairs; eigenvectors are
    re-normalized in the weighted norm before expanding rhs.  exponent must
    be 1 (far field eigensystem test) or 0.5 (M_sharp square-root test).
    alpha = 0 is only allowed when no eigenvalue vanishes.
    """
    if isinstance(spectrum, OperatorSpectrum):
        vals, vecs, weight = spectrum.eigenvalues, spectrum.eigenvectors, spectrum.weight
    else:
        vals, vecs, weight = spectrum
    vals = np.asarray(vals)
    vecs = np.asarray(vecs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if exponent not in (1, 1.0, 0.5):
        raise PreconditionError(f"exponent must be 1 or 1/2, got {exponent}")
    if alpha < 0:
        raise PreconditionError("alpha must be nonnegative")
    mods = np.abs(vals) ** float(exponent)
    if alpha == 0.0 and np.any(mods == 0.0):
        raise PreconditionError("zero eigenvalue requires alpha > 0")
    vecs = vecs / (math.sqrt(weight) * np.linalg.norm(vecs, axis=0))
    coeffs = weight * (vecs.conj().T @ rhs)
    return float(np.sum(np.abs(coeffs) ** 2 / (mods + alpha)))

"""Discrete operator algebra on far field matrices.

The far field kernel U[i][j] = u_inf(x_i, theta_j) is stored unweighted; all
operator-level algebra acts on the weighted matrix F_w = (2 pi / n) U so that
matrix eigenvalues approximate eigenvalues of the integral operator on
L^2 of the unit circle.  From F_w we form

* the scattering matrix  S = I + 2 i k |gamma|^2 F_w  (unitary for real
  contrasts up to discretization error),
* the comparison matrix  A = S_2^H (F_1w - F_2w)  of two data sets, a
  discretely normal matrix whose small eigenvalues carry the sign of the
  contrast difference on the support boundary,
* M_sharp = |Re M| + Im M, the Hermitian nonnegative combination whose
  square root's range tests perturbation supports against a known background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError
from .model import DirectionSet, WaveContext

__all__ = [
    "FarFieldMatrix",
    "ScatteringMatrix",
    "DiagnosticsReport",
    "scattering_matrix",
    "comparison_matrix",
    "msharp_matrix",
    "operator_diagnostics",
]


@dataclass(frozen=True)
class FarFieldMatrix:
    """Discrete far field data: kernel, direction set, and wave context.

    kernel[i, j] holds the far field in observation direction i for the
    incident plane wave j.  contrast_tag optionally records the generating
    contrast descriptor (a JSON-ready dict).
    """

    ctx: WaveContext
    dirs: DirectionSet
    kernel: np.ndarray
    contrast_tag: dict | None = None

    def __post_init__(self):
        kern = np.ascontiguousarray(np.asarray(self.kernel, dtype=complex))
        n = self.dirs.n
        if kern.shape != (n, n):
            raise PreconditionError(f"kernel shape {kern.shape} does not match n={n}")
        if not np.all(np.isfinite(kern)):
            raise PreconditionError("kernel entries must be finite")
        kern.setflags(write=False)
        object.__setattr__(self, "kernel", kern)

    def weighted(self) -> np.ndarray:
        """The operator matrix F_w = (2 pi / n) * kernel used by all algebra."""
        return self.dirs.weight * self.kernel


@dataclass(frozen=True)
class ScatteringMatrix:
    """Discrete scattering matrix S = I + 2 i k |gamma|^2 F_w."""

    s: np.ndarray


@dataclass(frozen=True)
class DiagnosticsReport:
    """Residuals of the three structural identities of real-contrast data."""

    unitarity: float
    normality: float
    reciprocity: float


def scattering_matrix(F: FarFieldMatrix) -> ScatteringMatrix:
    """Scattering matrix of a far field data set."""
    fw = F.weighted()
    s = np.eye(F.dirs.n, dtype=complex) + (2j * F.ctx.k * F.ctx.gamma_sq) * fw
    return ScatteringMatrix(s=s)


def comparison_matrix(F1: FarFieldMatrix, F2: FarFieldMatrix) -> np.ndarray:
    """S_2^H (F_1w - F_2w), the normal comparison matrix of two data sets.

    F2 plays the role of the known (test) contrast whose scattering matrix
    is conjugated.  Identical kernels give the exact zero matrix.
    """
    if F1.ctx.k != F2.ctx.k:
        raise PreconditionError(
            f"wave number mismatch: {F1.ctx.k} vs {F2.ctx.k}"
        )
    if F1.dirs.n != F2.dirs.n:
        raise PreconditionError(f"direction count mismatch: {F1.dirs.n} vs {F2.dirs.n}")
    diff = F1.weighted() - F2.weighted()
    if not diff.any():
        return np.zeros_like(diff)
    s2 = scattering_matrix(F2).s
    return s2.conj().T @ diff


def msharp_matrix(M: np.ndarray, clip_tol: float = 1e-12) -> np.ndarray:
    """Hermitian nonnegative matrix |Re M| + Im M.

    Re M = (M + M^H)/2 and Im M = (M - M^H)/(2i); |Re M| replaces the
    eigenvalues of Re M by their absolute values.  The sum is symmetrized and
    eigenvalues in (-clip_tol * ||M||, 0) are clipped to zero; anything more
    negative means the data cannot come from a real contrast and raises.
    clip_tol is relative to the spectral norm of M.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PreconditionError("M must be square")
    norm_m = np.linalg.norm(M, 2)
    if norm_m == 0.0:
        raise NumericalError("no scattering data")
    re_m = 0.5 * (M + M.conj().T)
    im_m = (M - M.conj().T) / 2j
    vals, vecs = np.linalg.eigh(re_m)
    abs_re = (vecs * np.abs(vals)) @ vecs.conj().T
    msharp = abs_re + im_m
    msharp = 0.5 * (msharp + msharp.conj().T)
    vals, vecs = np.linalg.eigh(msharp)
    if vals.min() < -clip_tol * norm_m:
        raise NumericalError(
            "M_sharp not PSD: data inconsistent with real contrasts "
            f"(min eigenvalue {vals.min():.3e}, norm {norm_m:.3e})"
        )
    vals = np.maximum(vals, 0.0)
    out = (vecs * vals) @ vecs.conj().T
    return 0.5 * (out + out.conj().T)


def operator_diagnostics(F: FarFieldMatrix) -> DiagnosticsReport:
    """Unitarity, normality, and reciprocity residuals of one data set.

    unitarity   = ||S^H S - I||_2
    normality   = ||F_w^H F_w - F_w F_w^H||_2 / ||F_w||_2^2
    reciprocity = max_ij |U[i,j] - U[antipode(j), antipode(i)]| / max |U|

    All three vanish for exact far field data of a real contrast.
    """
    fw = F.weighted()
    s = scattering_matrix(F).s
    unit = float(np.linalg.norm(s.conj().T @ s - np.eye(F.dirs.n), 2))
    norm_fw = np.linalg.norm(fw, 2)
    if norm_fw == 0.0:
        return DiagnosticsReport(unitarity=unit, normality=0.0, reciprocity=0.0)
    norm_res = float(
        np.linalg.norm(fw.conj().T @ fw - fw @ fw.conj().T, 2) / norm_fw**2
    )
    u = F.kernel
    sigma = F.dirs.antipode(np.arange(F.dirs.n))
    recip = float(np.max(np.abs(u - u[np.ix_(sigma, sigma)].T)) / np.max(np.abs(u)))
    return DiagnosticsReport(unitarity=unit, normality=norm_res, reciprocity=recip)

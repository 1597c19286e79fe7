"""Support reconstruction by regularized Picard range tests.

Two indicator maps over a sampling grid of points z:

* fm_indicator_map: the classical test against the far field data itself.
  z lies in the support exactly when the phase vector
  phi_z = exp(-i k x . z) lies in the range of (F^* F)^(1/4); the damped
  Picard series over the eigensystem of the weighted far field matrix
  (exponent 1) realizes the test, and the indicator is the reciprocal of the
  series, scaled to maximum one.

* msharp_indicator_map: the background-perturbation variant.  Given data F1
  and a known background contrast q2, the comparison matrix
  M = S_2^H (F_1w - F_2w) is condensed to M_sharp = |Re M| + Im M, and z is
  tested against the range of its square root (exponent 1/2) with right-hand
  side S_2^H g_z, where g_z is the far field of the background Green's
  function with pole z.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError
from .forward import DEFAULT_TOL, far_field_matrix, green_far_field
from .model import ComputationalGrid, ContrastField, DirectionSet, WaveContext, contrast_from_dict
from .operators import FarFieldMatrix, comparison_matrix, msharp_matrix, scattering_matrix
from .spectral import damped_picard_sum, eig_general, eig_hermitian

__all__ = [
    "SamplingGrid",
    "IndicatorMap",
    "test_vectors",
    "fm_indicator_map",
    "msharp_indicator_map",
    "DEFAULT_ALPHA",
    "MSHARP_CLIP_TOL",
]

DEFAULT_ALPHA = 1e-8
# Relative floor for clipping noise-negative eigenvalues of M_sharp built
# from synthesized data; solver tolerance perturbs the imaginary part to
# about 1e-10 of the norm at desk scale, far above the exact-arithmetic
# default of msharp_matrix.
MSHARP_CLIP_TOL = 1e-6


@dataclass(frozen=True)
class SamplingGrid:
    """Rectangular grid of sampling points, row-major with y descending.

    Point (row r, column c) is (x_min + c dx, y_max - r dy), which makes the
    row-major value list render upright as an image.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: int

    def __post_init__(self):
        if self.resolution < 2:
            raise PreconditionError("sampling resolution must be at least 2")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise PreconditionError("sampling box must be nondegenerate")

    @classmethod
    def square(cls, half_width: float, resolution: int) -> "SamplingGrid":
        return cls(-half_width, half_width, -half_width, half_width, resolution)

    @property
    def shape(self):
        return (self.resolution, self.resolution)

    def points(self) -> np.ndarray:
        """All sampling points, row-major, shape (resolution^2, 2)."""
        xs = np.linspace(self.x_min, self.x_max, self.resolution)
        ys = np.linspace(self.y_max, self.y_min, self.resolution)
        yy, xx = np.meshgrid(ys, xs, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])


@dataclass(frozen=True)
class IndicatorMap:
    """Indicator values on a sampling grid, normalized to maximum one."""

    grid: SamplingGrid
    values: np.ndarray
    alpha: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.resolution**2,):
            raise PreconditionError("values must be the row-major list of grid points")
        if not np.all(np.isfinite(vals)) or vals.min() < 0 or abs(vals.max() - 1.0) > 1e-14:
            raise PreconditionError("indicator values must be finite, nonnegative, max 1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def as_image(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


def test_vectors(dirs: DirectionSet, k: float, points: np.ndarray) -> np.ndarray:
    """phi_z[i] = exp(-i k x_i . z) for every sampling point, shape (N, n)."""
    return np.exp(-1j * k * (points @ dirs.directions.T))


def _normalize(grid: SamplingGrid, raw: np.ndarray, alpha: float) -> IndicatorMap:
    peak = raw.max()
    if not np.isfinite(peak) or peak <= 0:
        raise NumericalError("indicator map degenerate: no positive values")
    return IndicatorMap(grid=grid, values=raw / peak, alpha=alpha)


def fm_indicator_map(
    F: FarFieldMatrix, grid: SamplingGrid, alpha: float = DEFAULT_ALPHA
) -> IndicatorMap:
    """Support indicator from the far field data alone.

    value(z) = 1 / sum_j |<phi_z, psi_j>_w|^2 / (|lambda_j| + alpha) over the
    eigensystem of the weighted far field matrix, normalized to max one.
    """
    if alpha <= 0:
        raise PreconditionError("alpha must be positive")
    if not F.kernel.any():
        raise NumericalError("no scattering data")
    spectrum = eig_general(F.weighted())
    pts = grid.points()
    phis = test_vectors(F.dirs, F.ctx.k, pts)
    raw = np.empty(len(pts))
    for i in range(len(pts)):
        raw[i] = 1.0 / damped_picard_sum(spectrum, phis[i], alpha=alpha, exponent=1)
    return _normalize(grid, raw, alpha)


def msharp_indicator_map(
    F1: FarFieldMatrix,
    q2: ContrastField,
    grid: SamplingGrid,
    alpha: float = DEFAULT_ALPHA,
    solver_grid: ComputationalGrid | None = None,
    tol: float = DEFAULT_TOL,
    clip_tol: float = MSHARP_CLIP_TOL,
    workers: int = 1,
    f2: FarFieldMatrix | None = None,
    greens: np.ndarray | None = None,
) -> IndicatorMap:
    """Indicator for the support of a perturbation of the known background q2.

    Synthesizes the background data F2 (unless supplied), forms
    M_sharp = |Re S_2^H (F_1w - F_2w)| + Im(...), and tests
    S_2^H g_z against the range of its square root (Picard exponent 1/2).
    g_z rows may be precomputed and passed via greens (shape (N, n)); with
    workers > 1 the per-z Green's far fields are solved in parallel.
    """
    if alpha <= 0:
        raise PreconditionError("alpha must be positive")
    if solver_grid is None:
        from .forward import default_grid

        solver_grid = default_grid()
    if f2 is None:
        f2 = far_field_matrix(F1.ctx, q2, F1.dirs, solver_grid, tol=tol)
    if f2.ctx.k != F1.ctx.k or f2.dirs.n != F1.dirs.n:
        raise PreconditionError("background data must share wave number and directions")
    M = comparison_matrix(F1, f2)
    if not M.any():
        raise NumericalError("no scattering data")
    msharp = msharp_matrix(M, clip_tol=clip_tol)
    vals, vecs = eig_hermitian(msharp)
    s2h = scattering_matrix(f2).s.conj().T

    pts = grid.points()
    if greens is None:
        greens = green_far_field_bank(F1.ctx, q2, pts, F1.dirs, solver_grid, tol=tol, workers=workers)
    greens = np.asarray(greens, dtype=complex)
    if greens.shape != (len(pts), F1.dirs.n):
        raise PreconditionError(f"greens must have shape ({len(pts)}, {F1.dirs.n})")

    weight = F1.dirs.weight
    raw = np.empty(len(pts))
    for i in range(len(pts)):
        rhs = s2h @ greens[i]
        raw[i] = 1.0 / damped_picard_sum((vals, vecs, weight), rhs, alpha=alpha, exponent=0.5)
    return _normalize(grid, raw, alpha)


def green_far_field_bank(
    ctx: WaveContext,
    q2: ContrastField,
    points: np.ndarray,
    dirs: DirectionSet,
    solver_grid: ComputationalGrid,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> np.ndarray:
    """G_inf(., z) for every sampling point z, shape (N, n).

    Each row is an independent point-source solve against q2; rows are
    assembled by index, so the result is scheduling-independent.
    """
    points = np.asarray(points, dtype=float)
    out = np.empty((len(points), dirs.n), dtype=complex)
    if workers > 1:
        payload = (ctx.k, q2.to_dict(), solver_grid.box_radius, solver_grid.m, tol, dirs.n)
        jobs = [(payload, i, (float(z[0]), float(z[1]))) for i, z in enumerate(points)]
        mp = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp) as pool:
            for i, row in pool.map(_green_row_task, jobs, chunksize=16):
                out[i] = row
    else:
        for i, z in enumerate(points):
            out[i] = green_far_field(ctx, q2, z, dirs, solver_grid, tol=tol)
    return out


def _green_row_task(job):
    (k, q_doc, box_radius, m, tol, n), i, z = job
    ctx = WaveContext(k)
    q2 = contrast_from_dict(q_doc)
    dirs = DirectionSet.uniform(n)
    grid = ComputationalGrid(box_radius=box_radius, m=m)
    return i, green_far_field(ctx, q2, z, dirs, grid, tol=tol)

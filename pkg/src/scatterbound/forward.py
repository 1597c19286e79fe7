"""Forward scattering: total fields, far field patterns, far field matrices.

The total field for an incident field u_i and contrast q solves the volume
integral equation

    u = u_i + k^2 V (q u),

where V is convolution with the radiating 2D fundamental solution
Phi(x) = (i/4) H_0^(1)(k |x|).  On the periodic box [-R, R]^2 the kernel is
truncated at radius R; because supports are confined to [-R/2, R/2]^2 the
truncation clips no physical interaction and the periodic images never
overlap, so the periodized problem agrees with the free-space one on the
support.  The truncated kernel acts diagonally on Fourier modes with the
closed-form symbol

    sigma(xi) = [1 + (i pi R / 2) (|xi| J_1(|xi| R) H_0^(1)(kR)
                                   - k J_0(|xi| R) H_1^(1)(kR))] / (|xi|^2 - k^2),

with the removable point |xi| = k filled by its limit
(i pi R^2 / 4)[J_0 H_0^(1) + J_1 H_1^(1)](kR).  One application of the
operator costs two FFTs; the linear system is restricted to the support
nodes (unknown v = q u) and solved with restarted GMRES.

Far fields use the volume representation u_inf(x) = k^2 int e^{-i k x.y}
q(y) u(y) dy with plain cell-area quadrature.  A dense collocation solver on
a coarse grid over the support provides an independent cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import multiprocessing
import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConvergenceError, NumericalError, PreconditionError, ScatterboundError
from .model import (
    ComplexField2D,
    ComputationalGrid,
    ContrastField,
    DirectionSet,
    WaveContext,
    contrast_from_dict,
)
from .operators import FarFieldMatrix
from .specfun import cyl_bessel, hankel1

__all__ = [
    "IncidentField",
    "SolveReport",
    "plane_wave",
    "point_source",
    "truncated_kernel_symbol",
    "solve_total_field",
    "far_field_vector",
    "far_field_matrix",
    "green_far_field",
    "dense_oracle_far_field",
    "default_grid",
]

DEFAULT_TOL = 1e-8
GMRES_RESTART = 50
GMRES_MAX_ITERATIONS = 1000


def default_grid(m: int = 256, box_radius: float = 2.0) -> ComputationalGrid:
    """The desk-scale computational box [-2, 2]^2."""
    return ComputationalGrid(box_radius=box_radius, m=m)


@dataclass(frozen=True)
class IncidentField:
    """An incident field: a descriptor plus its trace on the grid."""

    kind: dict
    trace: ComplexField2D


@dataclass(frozen=True)
class SolveReport:
    """Iteration count and verified relative residual of a total-field solve."""

    iterations: int
    relative_residual: float
    grid: ComputationalGrid


def plane_wave(ctx: WaveContext, grid: ComputationalGrid, theta) -> IncidentField:
    """Incident plane wave exp(i k x . theta) for a unit direction theta."""
    theta = np.asarray(theta, dtype=float)
    if abs(np.hypot(theta[0], theta[1]) - 1.0) > 1e-12:
        raise PreconditionError("plane wave direction must be a unit vector")
    x1, x2 = grid.meshgrid()
    vals = np.exp(1j * ctx.k * (x1 * theta[0] + x2 * theta[1]))
    return IncidentField(
        kind={"kind": "plane_wave", "theta": (float(theta[0]), float(theta[1]))},
        trace=ComplexField2D(grid, vals),
    )


def _disk_average(ctx: WaveContext, cell_area: float) -> complex:
    """Mean of Phi over the disk of the same area as one grid cell."""
    rho = math.sqrt(cell_area / math.pi)
    integral = (1j * math.pi * rho / (2.0 * ctx.k)) * hankel1(1, ctx.k * rho) - 1.0 / ctx.k**2
    return integral / cell_area


def point_source(ctx: WaveContext, grid: ComputationalGrid, z) -> IncidentField:
    """Point source Phi(. - z); the node nearest z gets the equal-area disk mean.

    The replacement keeps the trace bounded when z lies inside a contrast
    support, matching the cell quadrature used for the volume potential.
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > grid.box_radius):
        raise PreconditionError("point source must lie inside the computational box")
    x1, x2 = grid.meshgrid()
    r = np.hypot(x1 - z[0], x2 - z[1])
    near = np.unravel_index(np.argmin(r), r.shape)
    r[near] = 1.0  # placeholder, overwritten below
    vals = 0.25j * hankel1(0, ctx.k * r)
    vals[near] = _disk_average(ctx, grid.h**2)
    return IncidentField(
        kind={"kind": "point_source", "location": (float(z[0]), float(z[1]))},
        trace=ComplexField2D(grid, vals),
    )


# ---------------------------------------------------------------------------
# Truncated-kernel symbol
# ---------------------------------------------------------------------------

_SYMBOL_CACHE: dict = {}


def truncated_kernel_symbol(ctx: WaveContext, grid: ComputationalGrid) -> np.ndarray:
    """Fourier symbol of Phi truncated at radius R = box_radius, on the DFT modes.

    Computed once per (k, box) and cached; the cached array is read-only and
    safe to share across threads.
    """
    key = (ctx.k, grid.box_radius, grid.m)
    cached = _SYMBOL_CACHE.get(key)
    if cached is not None:
        return cached
    k, R = ctx.k, grid.box_radius
    xi = 2.0 * math.pi * np.fft.fftfreq(grid.m, d=grid.h)
    mu = np.hypot(xi[:, None], xi[None, :])
    h0 = hankel1(0, k * R)
    h1 = hankel1(1, k * R)
    denom = mu**2 - k**2
    on_shell = np.abs(denom) <= 1e-9 * k**2
    denom_safe = np.where(on_shell, 1.0, denom)
    num = 1.0 + (0.5j * math.pi * R) * (
        mu * cyl_bessel("J", 1, mu * R) * h0 - k * cyl_bessel("J", 0, mu * R) * h1
    )
    sym = num / denom_safe
    limit = (0.25j * math.pi * R**2) * (
        cyl_bessel("J", 0, k * R) * h0 + cyl_bessel("J", 1, k * R) * h1
    )
    sym = np.where(on_shell, limit, sym)
    sym.setflags(write=False)
    _SYMBOL_CACHE[key] = sym
    return sym


def apply_volume_potential(symbol: np.ndarray, values: np.ndarray) -> np.ndarray:
    """V f on the grid: inverse FFT of the symbol times the FFT of f."""
    return np.fft.ifft2(symbol * np.fft.fft2(values))


# ---------------------------------------------------------------------------
# Total-field solve
# ---------------------------------------------------------------------------


def _support_mask(q: ContrastField, grid: ComputationalGrid) -> np.ndarray:
    x = grid.axis_nodes()
    a = q.support_half_width
    ix = np.abs(x) <= a
    return np.logical_and.outer(ix, ix)


def solve_total_field(
    ctx: WaveContext,
    q: ContrastField,
    inc: IncidentField,
    grid: ComputationalGrid,
    tol: float = DEFAULT_TOL,
    restart: int = GMRES_RESTART,
    max_iterations: int = GMRES_MAX_ITERATIONS,
):
    """Total field u with u = u_i + k^2 V (q u) on the grid.

    The unknown is v = q u restricted to the support nodes; GMRES (restarted)
    drives the relative residual below tol, verified explicitly afterwards.
    Returns (ComplexField2D, SolveReport).
    """
    if not (1e-12 <= tol <= 1e-4):
        raise PreconditionError(f"tol must lie in [1e-12, 1e-4], got {tol}")
    if not grid.admits_support(q.support_half_width):
        raise PreconditionError(
            f"support half width {q.support_half_width} exceeds the wrap-around-free "
            f"zone [-{grid.box_radius / 2}, {grid.box_radius / 2}]^2"
        )
    if inc.trace.grid != grid:
        raise PreconditionError("incident field was sampled on a different grid")
    symbol = truncated_kernel_symbol(ctx, grid)
    mask = _support_mask(q, grid)
    q_grid = q.sample(grid)
    q_s = q_grid[mask]
    ui = inc.trace.values
    b = q_s * ui[mask]
    k2 = ctx.k**2

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return (
            ComplexField2D(grid, ui.copy()),
            SolveReport(iterations=0, relative_residual=0.0, grid=grid),
        )

    full = np.zeros((grid.m, grid.m), dtype=complex)

    def matvec(v):
        full[mask] = v
        w = apply_volume_potential(symbol, full)
        return v - k2 * q_s * w[mask]

    nun = int(mask.sum())
    op = LinearOperator((nun, nun), matvec=matvec, dtype=complex)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    cycles = max(1, -(-max_iterations // restart))
    v, info = gmres(
        op,
        b,
        x0=b.copy(),
        rtol=tol,
        atol=0.0,
        restart=restart,
        maxiter=cycles,
        callback=count,
        callback_type="pr_norm",
    )
    residual = float(np.linalg.norm(matvec(v) - b) / b_norm)
    if info != 0 or residual > tol:
        raise ConvergenceError(
            f"total-field solve stalled at relative residual {residual:.3e} "
            f"after {iterations} iterations (tol {tol:.1e})",
            residual=residual,
            iterations=iterations,
        )
    full[mask] = v
    u = ui + k2 * apply_volume_potential(symbol, full)
    return (
        ComplexField2D(grid, u),
        SolveReport(iterations=iterations, relative_residual=residual, grid=grid),
    )


# ---------------------------------------------------------------------------
# Far fields
# ---------------------------------------------------------------------------


def far_field_vector(
    ctx: WaveContext, q: ContrastField, u: ComplexField2D, dirs: DirectionSet
) -> np.ndarray:
    """u_inf at all observation directions via the volume formula.

    u_inf(x) = k^2 sum_nodes exp(-i k x . y) q(y) u(y) h^2, summed over the
    support nodes only (the integrand vanishes elsewhere).
    """
    grid = u.grid
    mask = _support_mask(q, grid)
    qu = (q.sample(grid) * u.values)[mask]
    x1, x2 = grid.meshgrid()
    pts = np.column_stack([x1[mask], x2[mask]])
    phases = np.exp(-1j * ctx.k * (dirs.directions @ pts.T))
    return ctx.k**2 * grid.h**2 * (phases @ qu)


def far_field_matrix(
    ctx: WaveContext,
    q: ContrastField,
    dirs: DirectionSet,
    grid: ComputationalGrid,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> FarFieldMatrix:
    """Far field kernel U[i, j] = u_inf(x_i; theta_j) from n plane-wave solves.

    Columns are independent solves; with workers > 1 they run in separate
    processes and are assembled by index, so the result does not depend on
    scheduling.  Solver failures are re-raised naming the failing column.
    """
    n = dirs.n
    kernel = np.empty((n, n), dtype=complex)
    if workers > 1:
        payload = (ctx.k, q.to_dict(), grid.box_radius, grid.m, tol, dirs.n)
        jobs = [(payload, j) for j in range(n)]
        mp = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp) as pool:
            for j, col in pool.map(_far_field_column_task, jobs):
                kernel[:, j] = col
    else:
        for j in range(n):
            kernel[:, j] = _solve_column(ctx, q, dirs, grid, tol, j)
    return FarFieldMatrix(ctx=ctx, dirs=dirs, kernel=kernel, contrast_tag=q.to_dict())


def _solve_column(ctx, q, dirs, grid, tol, j):
    try:
        inc = plane_wave(ctx, grid, dirs.directions[j])
        u, _ = solve_total_field(ctx, q, inc, grid, tol=tol)
        return far_field_vector(ctx, q, u, dirs)
    except ScatterboundError as exc:
        raise ConvergenceError(f"far field column {j} failed: {exc}") from exc


def _far_field_column_task(job):
    (k, q_doc, box_radius, m, tol, n), j = job
    ctx = WaveContext(k)
    q = contrast_from_dict(q_doc)
    dirs = DirectionSet.uniform(n)
    grid = ComputationalGrid(box_radius=box_radius, m=m)
    return j, _solve_column(ctx, q, dirs, grid, tol, j)


def green_far_field(
    ctx: WaveContext,
    q2: ContrastField,
    z,
    dirs: DirectionSet,
    grid: ComputationalGrid,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Far field of the background Green's function for medium 1 + q2.

    G_inf(x, z) = exp(-i k x . z) plus the far field of the scattered part of
    a point source at z against q2.  With q2 identically zero this reduces to
    the free-space phase vector.
    """
    z = np.asarray(z, dtype=float)
    free = np.exp(-1j * ctx.k * (dirs.directions @ z))
    inc = point_source(ctx, grid, z)
    u, _ = solve_total_field(ctx, q2, inc, grid, tol=tol)
    return free + far_field_vector(ctx, q2, u, dirs)


# ---------------------------------------------------------------------------
# Dense collocation oracle
# ---------------------------------------------------------------------------


def dense_oracle_far_field(
    ctx: WaveContext, q: ContrastField, dirs: DirectionSet, coarse_m: int = 48
) -> FarFieldMatrix:
    """Independent far field synthesis by dense collocation over the support.

    Midpoint collocation on a coarse_m x coarse_m grid covering only the
    support square; the singular diagonal cell uses the analytic integral of
    Phi over the equal-area disk; the resulting dense system is solved
    directly for all incident directions at once.
    """
    if not (2 <= coarse_m <= 64):
        raise PreconditionError(f"coarse_m must lie in [2, 64], got {coarse_m}")
    a = q.support_half_width
    hc = 2.0 * a / coarse_m
    centers_1d = -a + hc * (np.arange(coarse_m) + 0.5)
    y1, y2 = np.meshgrid(centers_1d, centers_1d, indexing="ij")
    pts = np.column_stack([y1.ravel(), y2.ravel()])
    qv = q.evaluate(pts)

    diff = pts[:, None, :] - pts[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(r, 1.0)
    kern = 0.25j * hankel1(0, ctx.k * r) * hc**2
    np.fill_diagonal(kern, _disk_average(ctx, hc**2) * hc**2)

    n_nodes = len(pts)
    system = np.eye(n_nodes, dtype=complex) - ctx.k**2 * kern * qv[None, :]
    u_inc = np.exp(1j * ctx.k * (pts @ dirs.directions.T))
    try:
        u_tot = np.linalg.solve(system, u_inc)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"dense collocation system is singular: {exc}") from exc

    phases = np.exp(-1j * ctx.k * (dirs.directions @ pts.T))
    kernel = ctx.k**2 * hc**2 * (phases @ (qv[:, None] * u_tot))
    return FarFieldMatrix(ctx=ctx, dirs=dirs, kernel=kernel, contrast_tag=q.to_dict())

"""Picard indicator maps: invariances, degenerate cases, qualitative behavior."""

import numpy as np
import pytest

from scatterbound import (
    ConstantOnSquare,
    DirectionSet,
    FarFieldMatrix,
    NumericalError,
    PreconditionError,
    SamplingGrid,
    WaveContext,
    fm_indicator_map,
    msharp_indicator_map,
    scattering_matrix,
)
from scatterbound.forward import default_grid
from scatterbound.inversion_fm import test_vectors as phase_vectors


class TestSamplingGrid:
    def test_points_row_major_y_descending(self):
        grid = SamplingGrid(-1.0, 1.0, -2.0, 2.0, 3)
        pts = grid.points()
        assert pts.shape == (9, 2)
        assert np.allclose(pts[0], (-1.0, 2.0))
        assert np.allclose(pts[2], (1.0, 2.0))
        assert np.allclose(pts[-1], (1.0, -2.0))

    def test_resolution_floor(self):
        with pytest.raises(PreconditionError):
            SamplingGrid(-1, 1, -1, 1, 1)

    def test_square_helper(self):
        grid = SamplingGrid.square(1.2, 5)
        assert (grid.x_min, grid.x_max, grid.y_min, grid.y_max) == (-1.2, 1.2, -1.2, 1.2)


class TestFmIndicator:
    def test_rejects_zero_data(self):
        F = FarFieldMatrix(
            ctx=WaveContext(1.0),
            dirs=DirectionSet.uniform(8),
            kernel=np.zeros((8, 8), dtype=complex),
        )
        with pytest.raises(NumericalError, match="no scattering data"):
            fm_indicator_map(F, SamplingGrid.square(1.0, 5))

    def test_rejects_nonpositive_alpha(self, f_qc):
        with pytest.raises(PreconditionError):
            fm_indicator_map(f_qc, SamplingGrid.square(1.0, 5), alpha=0.0)

    def test_values_normalized_unit_interval(self, f_qc):
        ind = fm_indicator_map(f_qc, SamplingGrid.square(1.2, 21))
        assert ind.values.min() >= 0.0
        assert ind.values.max() == pytest.approx(1.0, abs=1e-15)

    def test_inside_beats_far_outside(self, f_qc):
        grid = SamplingGrid(-1.6, 1.6, -1.6, 1.6, 33)
        ind = fm_indicator_map(f_qc, grid)
        pts = grid.points()

        def value_at(x, y):
            return ind.values[np.argmin(np.hypot(pts[:, 0] - x, pts[:, 1] - y))]

        assert value_at(0.0, 0.0) > value_at(1.5, 1.5)

    def test_global_phase_invariance(self, f_qc):
        grid = SamplingGrid.square(1.0, 9)
        base = fm_indicator_map(f_qc, grid)
        rotated = FarFieldMatrix(
            ctx=f_qc.ctx, dirs=f_qc.dirs, kernel=np.exp(0.7j) * f_qc.kernel
        )
        other = fm_indicator_map(rotated, grid)
        assert np.allclose(base.values, other.values, rtol=1e-6, atol=1e-10)

    def test_cyclic_relabeling_invariance(self, f_qc):
        # shifting direction labels consistently in rows, columns, and the
        # direction array leaves the map unchanged
        n = f_qc.dirs.n
        shift = 5
        perm = (np.arange(n) + shift) % n
        rolled = FarFieldMatrix(
            ctx=f_qc.ctx,
            dirs=DirectionSet(n=n, directions=f_qc.dirs.directions[perm]),
            kernel=f_qc.kernel[np.ix_(perm, perm)],
        )
        grid = SamplingGrid.square(1.0, 9)
        a = fm_indicator_map(f_qc, grid)
        b = fm_indicator_map(rolled, grid)
        assert np.allclose(a.values, b.values, rtol=1e-6, atol=1e-10)

    def test_alpha_stability_of_separation(self, f_qc):
        grid = SamplingGrid.square(1.2, 17)
        pts = grid.points()
        inside = (np.abs(pts[:, 0]) <= 0.7) & (np.abs(pts[:, 1]) <= 0.7)
        for alpha in (1e-8, 1e-7):
            ind = fm_indicator_map(f_qc, grid, alpha=alpha)
            assert np.median(ind.values[inside]) > np.median(ind.values[~inside])

    def test_normalization_idempotent(self, f_qc):
        grid = SamplingGrid.square(1.0, 9)
        ind = fm_indicator_map(f_qc, grid)
        renorm = ind.values / ind.values.max()
        assert np.array_equal(renorm, ind.values)


class TestPhaseVectors:
    def test_matches_formula(self):
        dirs = DirectionSet.uniform(8)
        pts = np.array([[0.3, -0.2], [0.0, 0.0]])
        phis = phase_vectors(dirs, 2.0, pts)
        assert phis.shape == (2, 8)
        assert np.allclose(phis[1], 1.0)
        assert np.allclose(
            phis[0], np.exp(-2.0j * (dirs.directions @ np.array([0.3, -0.2])))
        )


class TestMsharpIndicator:
    def test_identical_contrasts_report_no_data(self, f_qc, qc, grid256):
        with pytest.raises(NumericalError, match="no scattering data"):
            msharp_indicator_map(
                f_qc, qc, SamplingGrid.square(1.0, 3), solver_grid=grid256, f2=f_qc
            )

    def test_zero_background_reduces_to_identity_scattering(self, f_qc, grid256):
        # with q2 = 0 the background scattering matrix is the identity and the
        # right-hand sides are the plain phase vectors
        q0 = ConstantOnSquare(0.0, 0.7)
        zero_kernel = FarFieldMatrix(
            ctx=f_qc.ctx, dirs=f_qc.dirs, kernel=np.zeros_like(f_qc.kernel)
        )
        assert np.array_equal(scattering_matrix(zero_kernel).s, np.eye(f_qc.dirs.n))
        grid = SamplingGrid.square(1.0, 5)
        pts = grid.points()
        greens = phase_vectors(f_qc.dirs, f_qc.ctx.k, pts)  # free-space Green far fields
        ind = msharp_indicator_map(
            f_qc, q0, grid, solver_grid=grid256, f2=zero_kernel, greens=greens
        )
        assert ind.values.max() == pytest.approx(1.0, abs=1e-15)
        assert np.all(ind.values >= 0)

    def test_greens_shape_validated(self, f_qc, grid256):
        q0 = ConstantOnSquare(0.0, 0.7)
        zero_kernel = FarFieldMatrix(
            ctx=f_qc.ctx, dirs=f_qc.dirs, kernel=np.zeros_like(f_qc.kernel)
        )
        with pytest.raises(PreconditionError, match="greens"):
            msharp_indicator_map(
                f_qc,
                q0,
                SamplingGrid.square(1.0, 3),
                solver_grid=grid256,
                f2=zero_kernel,
                greens=np.zeros((2, 2)),
            )

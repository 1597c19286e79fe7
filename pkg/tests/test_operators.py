"""Operator algebra: scattering matrix, comparison matrix, M_sharp, diagnostics."""

import numpy as np
import pytest

from scatterbound import (
    ConstantOnSquare,
    DirectionSet,
    FarFieldMatrix,
    NumericalError,
    PreconditionError,
    WaveContext,
    comparison_matrix,
    msharp_matrix,
    operator_diagnostics,
    scattering_matrix,
)


def random_far_field(n=16, k=2 * np.pi, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    kern = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return FarFieldMatrix(ctx=WaveContext(k), dirs=DirectionSet.uniform(n), kernel=kern)


class TestScatteringMatrix:
    def test_zero_data_gives_identity(self):
        F = random_far_field(scale=0.0)
        assert np.array_equal(scattering_matrix(F).s, np.eye(16))

    def test_matches_formula(self):
        F = random_far_field(seed=3)
        s = scattering_matrix(F).s
        expected = np.eye(16) + (1j / (4 * np.pi)) * F.weighted()
        assert np.allclose(s, expected, atol=1e-15)

    def test_unitary_for_qc_data(self, f_qc):
        s = scattering_matrix(f_qc).s
        assert np.linalg.norm(s.conj().T @ s - np.eye(f_qc.dirs.n), 2) <= 1e-3

    def test_singular_values_near_one_pyramid(self, synth, builtins):
        F = synth(builtins["pyramid"])
        sv = np.linalg.svd(scattering_matrix(F).s, compute_uv=False)
        assert np.all(sv >= 1 - 1e-3)
        assert np.all(sv <= 1 + 1e-3)


class TestComparisonMatrix:
    def test_identical_inputs_give_exact_zero(self):
        F = random_far_field(seed=5)
        A = comparison_matrix(F, F)
        assert np.all(A == 0.0)

    def test_mismatched_wavenumber_rejected(self):
        F1 = random_far_field(k=1.0)
        F2 = random_far_field(k=2.0)
        with pytest.raises(PreconditionError, match="wave number"):
            comparison_matrix(F1, F2)

    def test_mismatched_directions_rejected(self):
        F1 = random_far_field(n=16)
        F2 = random_far_field(n=32)
        with pytest.raises(PreconditionError, match="direction count"):
            comparison_matrix(F1, F2)

    def test_normality_residual_real_contrast_pair(self, f_qc, const_bank):
        A = comparison_matrix(f_qc, const_bank[0.2])
        norm_a = np.linalg.norm(A, 2)
        defect = np.linalg.norm(A.conj().T @ A - A @ A.conj().T, 2)
        assert defect <= 1e-3 * norm_a**2

    def test_eigenvalues_in_upper_half_plane(self, f_qc, const_bank):
        A = comparison_matrix(f_qc, const_bank[0.2])
        lam = np.linalg.eigvals(A)
        assert lam.imag.min() >= -1e-3 * np.linalg.norm(A, 2)

    def test_both_orderings_upper_half_plane(self, f_qc, const_bank):
        F2 = const_bank[0.1]
        for A in (comparison_matrix(f_qc, F2), comparison_matrix(F2, f_qc)):
            lam = np.linalg.eigvals(A)
            assert lam.imag.min() >= -1e-3 * np.linalg.norm(A, 2)


class TestMsharp:
    def test_hermitian_psd_fixed_point(self):
        rng = np.random.default_rng(1)
        b = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        M = b @ b.conj().T  # Hermitian PSD
        assert np.allclose(msharp_matrix(M), M, atol=1e-12 * np.linalg.norm(M, 2))

    def test_i_times_identity(self):
        M = 1j * np.eye(6)
        assert np.allclose(msharp_matrix(M), np.eye(6), atol=1e-14)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        n = 20
        re = rng.standard_normal((n, n))
        re = re + re.T
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        im = b @ b.conj().T  # PSD imaginary part
        M = re + 1j * im

        # independent reconstruction at full accuracy
        w, v = np.linalg.eigh(0.5 * (M + M.conj().T))
        abs_re = v @ np.diag(np.abs(w)) @ v.conj().T
        oracle = abs_re + (M - M.conj().T) / 2j
        got = msharp_matrix(M)
        assert np.linalg.norm(got - oracle, 2) <= 1e-10 * np.linalg.norm(M, 2)

    def test_indefinite_imaginary_part_rejected(self):
        M = np.diag([1.0 + 0j, -2j])  # Im part has eigenvalue -2
        with pytest.raises(NumericalError, match="not PSD"):
            msharp_matrix(M)

    def test_zero_matrix_reports_no_data(self):
        with pytest.raises(NumericalError, match="no scattering data"):
            msharp_matrix(np.zeros((4, 4), dtype=complex))

    def test_output_is_hermitian_psd(self, f_qc, const_bank):
        M = comparison_matrix(f_qc, const_bank[0.1])
        out = msharp_matrix(M, clip_tol=1e-6)
        assert np.linalg.norm(out - out.conj().T, 2) <= 1e-12 * np.linalg.norm(out, 2)
        assert np.linalg.eigvalsh(out).min() >= -1e-14 * np.linalg.norm(out, 2)


class TestDiagnostics:
    def test_zero_data_all_zero(self):
        F = random_far_field(scale=0.0)
        d = operator_diagnostics(F)
        assert (d.unitarity, d.normality, d.reciprocity) == (0.0, 0.0, 0.0)

    def test_qc_within_tolerance(self, f_qc):
        d = operator_diagnostics(f_qc)
        assert d.unitarity <= 1e-3
        assert d.normality <= 1e-3
        assert d.reciprocity <= 1e-3

    def test_corruption_detected(self, f_qc):
        kern = f_qc.kernel.copy()
        kern[3, 5] += 0.1
        corrupted = FarFieldMatrix(ctx=f_qc.ctx, dirs=f_qc.dirs, kernel=kern)
        assert operator_diagnostics(corrupted).reciprocity > 1e-2

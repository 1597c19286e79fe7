"""2D time-harmonic inverse medium scattering toolkit.

Synthesizes far field operators for compactly supported real contrasts with
an FFT-accelerated volume-integral solver, and inverts them two ways: a
regularized Picard support indicator, and eigenvalue-sign monotonicity
bounds for the contrast's boundary values on a known support square.
"""

from .errors import (
    ConvergenceError,
    DataFormatError,
    NumericalError,
    PreconditionError,
    ScatterboundError,
)
from .model import (
    ComplexField2D,
    ComputationalGrid,
    ConstantOnSquare,
    ContrastField,
    DirectionSet,
    LinearOnSquare,
    PyramidOnSquare,
    SignChangingDemo,
    Tabulated,
    VeeOnSquare,
    WaveContext,
    builtin_contrasts,
    contrast_from_dict,
    evaluate_contrast,
    sign_changing_demo,
)
from .specfun import cyl_bessel, hankel1
from .forward import (
    IncidentField,
    SolveReport,
    default_grid,
    dense_oracle_far_field,
    far_field_matrix,
    far_field_vector,
    green_far_field,
    plane_wave,
    point_source,
    solve_total_field,
    truncated_kernel_symbol,
)
from .operators import (
    DiagnosticsReport,
    FarFieldMatrix,
    ScatteringMatrix,
    comparison_matrix,
    msharp_matrix,
    operator_diagnostics,
    scattering_matrix,
)
from .spectral import OperatorSpectrum, damped_picard_sum, eig_general, eig_hermitian
from .inversion_fm import (
    IndicatorMap,
    SamplingGrid,
    fm_indicator_map,
    green_far_field_bank,
    msharp_indicator_map,
)
from .inversion_bounds import (
    AnnulusCounts,
    BoundsResult,
    Orientation,
    TraceBounds,
    Verdict,
    annulus_counts,
    bound_verdict,
    boundary_samples,
    boundary_trace,
    calibrate_orientation,
    constant_bound_search,
    linear_refinement,
    linear_test_family,
)
from .fileio import FarFieldBank, ffo_read, ffo_write, resolve_workers

__version__ = "0.1.0"

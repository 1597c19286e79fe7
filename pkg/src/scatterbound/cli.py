"""Command-line front end.

Subcommands::

    forward       synthesize a far field operator and write an ffo file
    spectrum      eigenvalues of the weighted operator matrix, as CSV
    shape-fm      support indicator map from far field data (CSV/PGM)
    shape-msharp  perturbation indicator map against a known background
    bounds        constant lower/upper bounds for the boundary values
    bounds-linear piecewise-linear trace bounds from a linear test family
    calibrate     determine the vanishing-side convention from a reference
    selftest      run the zero-contrast pipeline and print its diagnostics

Exit codes: 0 success, 2 precondition/data errors, 3 numerical failures,
64 usage errors.  Worker processes for bank synthesis come from --threads or
the SCATTERBOUND_THREADS environment variable (default: all cores).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DataFormatError, NumericalError, PreconditionError
from .fileio import (
    FarFieldBank,
    ffo_read,
    ffo_write,
    resolve_workers,
    write_bounds_csv,
    write_indicator_csv,
    write_indicator_pgm,
    write_trace_csv,
)
from .forward import dense_oracle_far_field, far_field_matrix
from .inversion_bounds import (
    DEFAULT_R_MAX,
    DEFAULT_R_MIN,
    Orientation,
    calibrate_orientation,
    constant_bound_search,
    linear_refinement,
    linear_test_family,
)
from .inversion_fm import DEFAULT_ALPHA, SamplingGrid, fm_indicator_map, msharp_indicator_map
from .model import (
    ComputationalGrid,
    ConstantOnSquare,
    DirectionSet,
    WaveContext,
    builtin_contrasts,
    contrast_from_dict,
)
from .operators import operator_diagnostics
from .spectral import eig_general

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _load_contrast(spec: str):
    """A contrast from a JSON descriptor file or a built-in slug."""
    builtins = builtin_contrasts()
    if spec in builtins:
        return builtins[spec]
    path = Path(spec)
    if not path.exists():
        raise PreconditionError(
            f"contrast {spec!r} is neither a file nor one of {sorted(builtins)}"
        )
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return contrast_from_dict(doc)


def _grid_args(parser):
    parser.add_argument("--grid", type=int, default=256, help="grid points per dimension")
    parser.add_argument("--box-radius", type=float, default=2.0, help="computational box radius")
    parser.add_argument("--tol", type=float, default=1e-8, help="solver relative residual")


def _threads_arg(parser):
    parser.add_argument("--threads", type=int, default=None, help="worker processes")


def _sampling_args(parser):
    parser.add_argument(
        "--box",
        type=float,
        nargs=4,
        metavar=("XMIN", "XMAX", "YMIN", "YMAX"),
        default=[-1.2, 1.2, -1.2, 1.2],
        help="sampling box",
    )
    parser.add_argument("--resolution", type=int, default=61, help="sampling points per dimension")
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="regularization")
    parser.add_argument("--out-csv", required=True, help="indicator CSV output path")
    parser.add_argument("--out-pgm", default=None, help="optional 8-bit PGM output path")


def _orientation_args(parser):
    parser.add_argument(
        "--orientation",
        default="auto",
        choices=["auto", Orientation.PLUS_VANISHES_BELOW.value, Orientation.MINUS_VANISHES_BELOW.value],
        help="vanishing-side convention, or auto to calibrate",
    )
    parser.add_argument("--reference-value", type=float, default=0.4,
                        help="boundary value of the calibration reference contrast")
    parser.add_argument("--probe", type=float, default=0.0, help="calibration probe level")
    parser.add_argument("--rmin", type=float, default=DEFAULT_R_MIN, help="annulus inner radius")
    parser.add_argument("--rmax", type=float, default=DEFAULT_R_MAX, help="annulus outer radius")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scatterbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="synthesize a far field operator")
    p.add_argument("--contrast", required=True, help="descriptor JSON file or built-in slug")
    p.add_argument("--k", type=float, required=True, help="wave number")
    p.add_argument("--n-dir", type=int, required=True, help="number of directions")
    _grid_args(p)
    _threads_arg(p)
    p.add_argument("--dense-oracle", type=int, default=None, metavar="COARSE_M",
                   help="use the dense collocation solver on a COARSE_M grid instead of FFT")
    p.add_argument("--out", required=True, help="output ffo file")
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("spectrum", help="eigenvalues of the weighted operator")
    p.add_argument("--data", required=True, help="input ffo file")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("shape-fm", help="support indicator from far field data")
    p.add_argument("--data", required=True, help="input ffo file")
    _sampling_args(p)
    p.set_defaults(func=cmd_shape_fm)

    p = sub.add_parser("shape-msharp", help="perturbation indicator against a background")
    p.add_argument("--data", required=True, help="perturbed-medium ffo file")
    p.add_argument("--background", required=True, help="background contrast (file or slug)")
    _sampling_args(p)
    _grid_args(p)
    _threads_arg(p)
    p.set_defaults(func=cmd_shape_msharp)

    p = sub.add_parser("bounds", help="constant bounds for boundary values")
    p.add_argument("--data", required=True, help="measured ffo file")
    p.add_argument("--bank", required=True, help="bank directory (synthesized on demand)")
    p.add_argument("--start-lo", type=float, default=-0.4, help="initial lower level")
    p.add_argument("--start-hi", type=float, default=1.5, help="initial upper level")
    p.add_argument("--step", type=float, default=0.1, help="level step t")
    p.add_argument("--half-width", type=float, default=None,
                   help="support half width (default: from the data's descriptor)")
    _orientation_args(p)
    _grid_args(p)
    _threads_arg(p)
    p.add_argument("--out", default=None, help="optional trail CSV")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bounds-linear", help="piecewise-linear trace bounds")
    p.add_argument("--data", required=True, help="measured ffo file")
    p.add_argument("--bank", required=True, help="bank directory (synthesized on demand)")
    p.add_argument("--family", choices=["reduced", "full"], default="reduced",
                   help="reduced 12x5x6 family or the full 12x11x11 one")
    p.add_argument("--half-width", type=float, default=None,
                   help="support half width (default: from the data's descriptor)")
    p.add_argument("--samples-per-edge", type=int, default=64)
    p.add_argument("--init-magnitude", type=float, default=1e3)
    _orientation_args(p)
    _grid_args(p)
    _threads_arg(p)
    p.add_argument("--out", required=True, help="trace bounds CSV")
    p.set_defaults(func=cmd_bounds_linear)

    p = sub.add_parser("calibrate", help="calibrate the vanishing-side convention")
    p.add_argument("--reference", required=True, help="reference contrast (file or slug)")
    p.add_argument("--boundary-value", type=float, required=True,
                   help="known boundary value of the reference")
    p.add_argument("--probe", type=float, required=True, help="constant probe level")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--n-dir", type=int, required=True)
    p.add_argument("--rmin", type=float, default=DEFAULT_R_MIN)
    p.add_argument("--rmax", type=float, default=DEFAULT_R_MAX)
    _grid_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("selftest", help="zero-contrast pipeline check")
    p.add_argument("--k", type=float, default=6.283185307179586)
    p.add_argument("--n-dir", type=int, default=8)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--box-radius", type=float, default=2.0)
    p.set_defaults(func=cmd_selftest)

    return parser


def cmd_forward(args) -> int:
    q = _load_contrast(args.contrast)
    ctx = WaveContext(args.k)
    dirs = DirectionSet.uniform(args.n_dir)
    if args.dense_oracle is not None:
        F = dense_oracle_far_field(ctx, q, dirs, coarse_m=args.dense_oracle)
    else:
        grid = ComputationalGrid(box_radius=args.box_radius, m=args.grid)
        F = far_field_matrix(ctx, q, dirs, grid, tol=args.tol, workers=resolve_workers(args.threads))
    ffo_write(args.out, F)
    d = operator_diagnostics(F)
    print(
        f"wrote {args.out}: n={dirs.n} k={ctx.k:g} "
        f"unitarity={d.unitarity:.2e} normality={d.normality:.2e} reciprocity={d.reciprocity:.2e}"
    )
    return 0


def cmd_spectrum(args) -> int:
    F = ffo_read(args.data)
    spectrum = eig_general(F.weighted())
    lines = [f"# k={F.ctx.k!r}\n# n={F.dirs.n}\n", "index,re,im,modulus,residual\n"]
    for j, (lam, res) in enumerate(zip(spectrum.eigenvalues, spectrum.residuals)):
        lines.append(
            f"{j},{float(lam.real)!r},{float(lam.imag)!r},{float(abs(lam))!r},{float(res)!r}\n"
        )
    Path(args.out).write_text("".join(lines), encoding="utf-8", newline="\n")
    print(f"wrote {args.out}: {F.dirs.n} eigenvalues, largest modulus {abs(spectrum.eigenvalues[0]):g}")
    return 0


def _sampling_grid(args) -> SamplingGrid:
    xmin, xmax, ymin, ymax = args.box
    return SamplingGrid(xmin, xmax, ymin, ymax, args.resolution)


def _emit_indicator(args, indicator, meta):
    write_indicator_csv(args.out_csv, indicator, meta)
    written = [args.out_csv]
    if args.out_pgm:
        write_indicator_pgm(args.out_pgm, indicator)
        written.append(args.out_pgm)
    print(f"wrote {' and '.join(written)}")


def cmd_shape_fm(args) -> int:
    F = ffo_read(args.data)
    indicator = fm_indicator_map(F, _sampling_grid(args), alpha=args.alpha)
    _emit_indicator(args, indicator, {"alpha": repr(args.alpha), "k": repr(F.ctx.k), "n": F.dirs.n})
    return 0


def cmd_shape_msharp(args) -> int:
    F1 = ffo_read(args.data)
    q2 = _load_contrast(args.background)
    grid = ComputationalGrid(box_radius=args.box_radius, m=args.grid)
    indicator = msharp_indicator_map(
        F1,
        q2,
        _sampling_grid(args),
        alpha=args.alpha,
        solver_grid=grid,
        tol=args.tol,
        workers=resolve_workers(args.threads),
    )
    _emit_indicator(args, indicator, {"alpha": repr(args.alpha), "k": repr(F1.ctx.k), "n": F1.dirs.n})
    return 0


def _bank_levels(lo: float, hi: float, step: float):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 9) for i in range(n + 1)]


def _data_half_width(F, override):
    if override is not None:
        return override
    if F.contrast_tag:
        return contrast_from_dict(F.contrast_tag).support_half_width
    return 0.7


def _resolve_orientation(args, ctx, dirs, grid, bank, half_width, workers):
    if args.orientation != "auto":
        return Orientation.from_string(args.orientation)
    ref = ConstantOnSquare(args.reference_value, half_width)
    probe = ConstantOnSquare(args.probe, half_width)
    f_ref, f_probe = bank.ensure([ref, probe], ctx, dirs, grid, args.tol, workers=workers)
    return calibrate_orientation(
        ctx, dirs, grid, ref, args.reference_value, args.probe,
        r_min=args.rmin, r_max=args.rmax, tol=args.tol, f_ref=f_ref, f_probe=f_probe,
    )


def cmd_bounds(args) -> int:
    F_q = ffo_read(args.data)
    ctx, dirs = F_q.ctx, F_q.dirs
    grid = ComputationalGrid(box_radius=args.box_radius, m=args.grid)
    workers = resolve_workers(args.threads)
    half_width = _data_half_width(F_q, args.half_width)
    bank_store = FarFieldBank(args.bank)
    levels = _bank_levels(args.start_lo, args.start_hi, args.step)
    descriptors = [ConstantOnSquare(c, half_width) for c in levels]
    mats = bank_store.ensure(descriptors, ctx, dirs, grid, args.tol, workers=workers)
    bank = dict(zip(levels, mats))
    orientation = _resolve_orientation(args, ctx, dirs, grid, bank_store, half_width, workers)
    result = constant_bound_search(
        F_q, bank, args.step, args.start_lo, args.start_hi, orientation,
        r_min=args.rmin, r_max=args.rmax,
    )
    if args.out:
        write_bounds_csv(args.out, result)
    print(f"c_lo={result.c_star:g} c_hi={result.c_upper:g}")
    return 0


REDUCED_SLOPES = (-2.0, -1.0, 0.0, 1.0, 2.0)
REDUCED_OFFSETS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def cmd_bounds_linear(args) -> int:
    F_q = ffo_read(args.data)
    ctx, dirs = F_q.ctx, F_q.dirs
    grid = ComputationalGrid(box_radius=args.box_radius, m=args.grid)
    workers = resolve_workers(args.threads)
    half_width = _data_half_width(F_q, args.half_width)
    if args.family == "reduced":
        family = linear_test_family(
            12, slopes=REDUCED_SLOPES, offsets=REDUCED_OFFSETS, half_width=half_width
        )
    else:
        family = linear_test_family(12, half_width=half_width)
    bank_store = FarFieldBank(args.bank)
    mats = bank_store.ensure(family, ctx, dirs, grid, args.tol, workers=workers)
    orientation = _resolve_orientation(args, ctx, dirs, grid, bank_store, half_width, workers)
    trace = linear_refinement(
        F_q,
        list(zip(family, mats)),
        orientation,
        init_magnitude=args.init_magnitude,
        samples_per_edge=args.samples_per_edge,
        r_min=args.rmin,
        r_max=args.rmax,
    )
    write_trace_csv(args.out, trace)
    print(
        f"wrote {args.out}: {len(family)} members, {len(trace.skipped)} skipped, "
        f"q_minus in [{trace.q_minus.min():g}, {trace.q_minus.max():g}], "
        f"q_plus in [{trace.q_plus.min():g}, {trace.q_plus.max():g}]"
    )
    return 0


def cmd_calibrate(args) -> int:
    ref = _load_contrast(args.reference)
    ctx = WaveContext(args.k)
    dirs = DirectionSet.uniform(args.n_dir)
    grid = ComputationalGrid(box_radius=args.box_radius, m=args.grid)
    orientation = calibrate_orientation(
        ctx, dirs, grid, ref, args.boundary_value, args.probe,
        r_min=args.rmin, r_max=args.rmax, tol=args.tol,
    )
    print(f"orientation={orientation.value}")
    return 0


def cmd_selftest(args) -> int:
    ctx = WaveContext(args.k)
    dirs = DirectionSet.uniform(args.n_dir)
    grid = ComputationalGrid(box_radius=args.box_radius, m=args.grid)
    q = ConstantOnSquare(0.0, 0.7)
    F = far_field_matrix(ctx, q, dirs, grid)
    d = operator_diagnostics(F)
    print(f"zero contrast: unitarity={d.unitarity:g} normality={d.normality:g} "
          f"reciprocity={d.reciprocity:g} max|kernel|={np.abs(F.kernel).max():g}")
    spectrum = eig_general(np.diag([1.0, 2.0j, -3.0]))
    expected = np.array([-3.0, 2.0j, 1.0])
    ok = np.allclose(spectrum.eigenvalues, expected)
    print(f"eigensolver order check: {'ok' if ok else 'FAILED'}")
    if not (ok and np.abs(F.kernel).max() == 0.0):
        raise NumericalError("selftest failed")
    print("selftest ok")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (PreconditionError, DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

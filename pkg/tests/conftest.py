"""Shared fixtures: cached far field synthesis at the paper's desk-scale setup.

Far field operators are expensive (about 2 s each at m=256, n=32), so every
synthesized operator is persisted in a FarFieldBank under .cache/ at the
repository root (override with SCATTERBOUND_TEST_CACHE).  The first full run
is dominated by bank synthesis; later runs load from disk in seconds.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pytest

from scatterbound import (
    ConstantOnSquare,
    DirectionSet,
    PyramidOnSquare,
    SignChangingDemo,
    Tabulated,
    VeeOnSquare,
    WaveContext,
    calibrate_orientation,
    linear_test_family,
)
from scatterbound.fileio import FarFieldBank
from scatterbound.forward import default_grid
from scatterbound.inversion_fm import green_far_field_bank

K_PAPER = 2.0 * np.pi
SOLVER_TOL = 1e-8

CACHE_ROOT = Path(
    os.environ.get(
        "SCATTERBOUND_TEST_CACHE",
        Path(__file__).resolve().parent.parent / ".cache" / "scatterbound-tests",
    )
)

CONST_LEVELS = tuple(round(-0.4 + 0.1 * i, 9) for i in range(20))

REDUCED_SLOPES = (-2.0, -1.0, 0.0, 1.0, 2.0)
REDUCED_OFFSETS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def _workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


@pytest.fixture(scope="session")
def bank_store():
    return FarFieldBank(CACHE_ROOT / "bank")


@pytest.fixture(scope="session")
def ctx():
    return WaveContext(K_PAPER)


@pytest.fixture(scope="session")
def grid256():
    return default_grid(256)


@pytest.fixture(scope="session")
def grid128():
    return default_grid(128)


@pytest.fixture(scope="session")
def dirs16():
    return DirectionSet.uniform(16)


@pytest.fixture(scope="session")
def dirs32():
    return DirectionSet.uniform(32)


@pytest.fixture(scope="session")
def synth(bank_store, ctx, dirs32, grid256):
    """Cached synthesis: synth(contrast) or synth(contrast, dirs=..., ...)."""

    def get(q, dirs=dirs32, grid=grid256, wave=ctx, tol=SOLVER_TOL):
        return bank_store.ensure([q], wave, dirs, grid, tol, workers=1)[0]

    return get


@pytest.fixture(scope="session")
def qc():
    return ConstantOnSquare(0.4, 0.7)


@pytest.fixture(scope="session")
def f_qc(synth, qc):
    return synth(qc)


@pytest.fixture(scope="session")
def const_bank(bank_store, ctx, dirs32, grid256):
    """Far field data for the constant test levels c = -0.4, -0.3, ..., 1.5."""
    descriptors = [ConstantOnSquare(c, 0.7) for c in CONST_LEVELS]
    mats = bank_store.ensure(descriptors, ctx, dirs32, grid256, SOLVER_TOL, workers=_workers())
    return dict(zip(CONST_LEVELS, mats))


@pytest.fixture(scope="session")
def orientation(ctx, dirs32, grid256, qc, f_qc, const_bank):
    """The calibrated vanishing-side convention of this pipeline."""
    return calibrate_orientation(
        ctx, dirs32, grid256, qc, 0.4, 0.0, f_ref=f_qc, f_probe=const_bank[0.0]
    )


@pytest.fixture(scope="session")
def reduced_family():
    return linear_test_family(12, slopes=REDUCED_SLOPES, offsets=REDUCED_OFFSETS, half_width=0.7)


@pytest.fixture(scope="session")
def reduced_family_bank(bank_store, ctx, dirs32, grid256, reduced_family):
    mats = bank_store.ensure(
        reduced_family, ctx, dirs32, grid256, SOLVER_TOL, workers=_workers()
    )
    return list(zip(reduced_family, mats))


@pytest.fixture(scope="session")
def bump_contrast():
    """The constant square with a 0.3 bump on [0.1, 0.5]^2, as a fine table.

    The table step 0.01 puts the bump edges on table nodes and is well below
    the solver grid spacing, so the sampled contrast is sharp at solver
    resolution.
    """
    p = 141
    nodes = np.linspace(-0.7, 0.7, p)
    x, y = np.meshgrid(nodes, nodes, indexing="ij")
    values = 0.4 + 0.3 * ((x >= 0.1) & (x <= 0.5) & (y >= 0.1) & (y <= 0.5))
    return Tabulated(0.7, values)


@pytest.fixture(scope="session")
def f_bump(synth, bump_contrast):
    return synth(bump_contrast)


@pytest.fixture(scope="session")
def demo_setup(bank_store):
    """Far field of the sign-changing demo contrast at k=5 with 64 directions."""
    wave = WaveContext(5.0)
    dirs = DirectionSet.uniform(64)
    grid = default_grid(256)
    q = SignChangingDemo()
    f = bank_store.ensure([q], wave, dirs, grid, SOLVER_TOL, workers=1)[0]
    return wave, dirs, grid, q, f


def cached_greens(tag: str, ctx, q2, points, dirs, grid, tol=SOLVER_TOL):
    """Green's-function far field rows for all sampling points, disk-cached."""
    key = hashlib.sha256(
        json.dumps(
            {
                "tag": tag,
                "contrast": q2.to_dict(),
                "k": ctx.k,
                "n": dirs.n,
                "m": grid.m,
                "box": grid.box_radius,
                "tol": tol,
                "points": np.asarray(points).round(12).tolist(),
            },
            sort_keys=True,
        ).encode()
    ).hexdigest()[:20]
    path = CACHE_ROOT / f"greens-{key}.npz"
    if path.exists():
        return np.load(path)["greens"]
    greens = green_far_field_bank(ctx, q2, points, dirs, grid, tol=tol, workers=_workers())
    CACHE_ROOT.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, greens=greens)
    return greens


@pytest.fixture(scope="session")
def builtins():
    return {
        "constant": ConstantOnSquare(0.4, 0.7),
        "vee": VeeOnSquare(),
        "pyramid": PyramidOnSquare(),
        "sign_changing": SignChangingDemo(),
    }

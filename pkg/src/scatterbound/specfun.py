"""Cylinder Bessel and Hankel functions of orders 0 and 1.

These back the 2D radiating fundamental solution (i/4) H0^(1)(k r) and the
closed-form Fourier symbol of the truncated volume-potential kernel.  The
evaluations delegate to scipy.special, which meets the absolute-error budget
of 1e-12 on (0, 1e3]; the test suite checks that budget against independent
series oracles.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp

from .errors import PreconditionError

__all__ = ["cyl_bessel", "hankel1"]

_J = {0: _sp.j0, 1: _sp.j1}
_Y = {0: _sp.y0, 1: _sp.y1}


def _check_order(order: int) -> int:
    if order not in (0, 1):
        raise PreconditionError(f"cylinder order must be 0 or 1, got {order}")
    return order


def cyl_bessel(kind: str, order: int, x):
    """Bessel function J_order or Y_order at x.

    kind is "J" (first kind, defined for x >= 0) or "Y" (second kind,
    defined for x > 0).  Scalar input returns a float, arrays return arrays.
    """
    _check_order(order)
    arr = np.asarray(x, dtype=float)
    if kind == "J":
        if np.any(arr < 0):
            raise PreconditionError("J requires x >= 0")
        out = _J[order](arr)
    elif kind == "Y":
        if np.any(arr <= 0):
            raise PreconditionError("Y requires x > 0")
        out = _Y[order](arr)
    else:
        raise PreconditionError(f"kind must be 'J' or 'Y', got {kind!r}")
    return out if isinstance(out, np.ndarray) and out.ndim else float(out)


def hankel1(order: int, x):
    """Hankel function of the first kind, H_order^(1)(x) = J(x) + i Y(x), x > 0."""
    _check_order(order)
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise PreconditionError("hankel1 requires x > 0")
    out = _J[order](arr) + 1j * _Y[order](arr)
    return out if isinstance(out, np.ndarray) and out.ndim else complex(out)

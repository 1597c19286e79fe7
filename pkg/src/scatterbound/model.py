"""Domain types shared by every stage of the toolkit.

Conventions fixed here and relied on everywhere else:

* wave number k > 0, far-field normalization constant |gamma|^2 = 1/(8 pi k)
  (2D radiating-wave branch),
* n equidistributed observation/incidence directions on the unit circle with
  quadrature weight 2 pi / n,
* contrasts are real, compactly supported on an axis-aligned square, and
  evaluate to exactly zero outside that square,
* computational grids are periodic boxes [-R, R]^2 with m points per
  dimension (m a power of two) and spacing h = 2R/m.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError

__all__ = [
    "WaveContext",
    "DirectionSet",
    "ComputationalGrid",
    "ComplexField2D",
    "ContrastField",
    "ConstantOnSquare",
    "VeeOnSquare",
    "PyramidOnSquare",
    "LinearOnSquare",
    "SignChangingDemo",
    "Tabulated",
    "evaluate_contrast",
    "sign_changing_demo",
    "builtin_contrasts",
    "contrast_from_dict",
]


def _as_points(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise PreconditionError(f"points must have shape (N, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise PreconditionError("points must be finite")
    return pts


@dataclass(frozen=True)
class WaveContext:
    """Wave number and the derived 2D far-field normalization constant.

    gamma_sq stores |gamma_2|^2 = 1/(8 pi k); if omitted it is derived from k.
    """

    k: float
    gamma_sq: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise PreconditionError(f"wave number must be positive, got {self.k}")
        derived = 1.0 / (8.0 * math.pi * self.k)
        if self.gamma_sq is None:
            object.__setattr__(self, "gamma_sq", derived)
        elif abs(self.gamma_sq * 8.0 * math.pi * self.k - 1.0) > 64 * np.finfo(float).eps:
            raise PreconditionError("gamma_sq must equal 1/(8*pi*k)")


@dataclass(frozen=True)
class DirectionSet:
    """Equidistributed unit directions on the circle with uniform weight.

    The canonical construction places direction j at angle 2 pi j / n.  Any
    direction array is accepted as long as it keeps the checked invariants:
    unit vectors, and the index map j -> (j + n/2) mod n sends each direction
    to its antipode.
    """

    n: int
    directions: np.ndarray

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise PreconditionError(f"direction count must be even and >= 8, got {self.n}")
        dirs = np.ascontiguousarray(np.asarray(self.directions, dtype=float))
        if dirs.shape != (self.n, 2):
            raise PreconditionError(f"directions must have shape ({self.n}, 2)")
        if not np.allclose(np.hypot(dirs[:, 0], dirs[:, 1]), 1.0, atol=1e-12):
            raise PreconditionError("directions must be unit vectors")
        anti = dirs[(np.arange(self.n) + self.n // 2) % self.n]
        if not np.allclose(anti, -dirs, atol=1e-12):
            raise PreconditionError("antipode index map must send each direction to its negative")
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @classmethod
    def uniform(cls, n: int) -> "DirectionSet":
        """Directions (cos 2 pi j/n, sin 2 pi j/n) for j = 0..n-1."""
        ang = 2.0 * np.pi * np.arange(n) / n
        return cls(n=n, directions=np.column_stack([np.cos(ang), np.sin(ang)]))

    @property
    def weight(self) -> float:
        """Quadrature weight 2 pi / n of the uniform rule on the circle."""
        return 2.0 * math.pi / self.n

    def antipode(self, j):
        """Index of the direction opposite to direction j."""
        return (np.asarray(j) + self.n // 2) % self.n


@dataclass(frozen=True)
class ComputationalGrid:
    """Periodic computational box [-R, R]^2 with m nodes per dimension.

    Nodes sit at -R + j*h, j = 0..m-1 (right edge excluded, period 2R).
    Contrast supports must stay inside [-R/2, R/2]^2 so the periodized
    kernel never wraps interactions around the box.
    """

    box_radius: float
    m: int

    def __post_init__(self):
        if not (self.box_radius > 0 and math.isfinite(self.box_radius)):
            raise PreconditionError("box_radius must be positive")
        if self.m < 8 or (self.m & (self.m - 1)) != 0:
            raise PreconditionError(f"m must be a power of two >= 8, got {self.m}")

    @property
    def h(self) -> float:
        return 2.0 * self.box_radius / self.m

    def axis_nodes(self) -> np.ndarray:
        return -self.box_radius + self.h * np.arange(self.m)

    def meshgrid(self):
        """Node coordinates as two (m, m) arrays; axis 0 is the x1 index."""
        x = self.axis_nodes()
        return np.meshgrid(x, x, indexing="ij")

    def admits_support(self, half_width: float) -> bool:
        """True if a centered square of the given half width avoids wrap-around."""
        return half_width <= 0.5 * self.box_radius + 1e-12


@dataclass(frozen=True)
class ComplexField2D:
    """A complex scalar field sampled on the nodes of a ComputationalGrid."""

    grid: ComputationalGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.m, self.grid.m):
            raise PreconditionError(
                f"field shape {vals.shape} does not match grid m={self.grid.m}"
            )
        if not np.all(np.isfinite(vals)):
            raise PreconditionError("field values must be finite")
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------------------
# Contrast descriptors
# ---------------------------------------------------------------------------


class ContrastField(ABC):
    """A real contrast with compact support on a centered square.

    Subclasses implement the pointwise formula inside the support square;
    evaluation outside returns exactly 0.  All descriptors are immutable and
    serialize to a JSON document {"type": ..., parameters...}.
    """

    @property
    @abstractmethod
    def support_half_width(self) -> float:
        """Half width a of the support square [-a, a]^2."""

    @abstractmethod
    def _evaluate_inside(self, pts: np.ndarray) -> np.ndarray:
        """Formula values at points known to lie in the closed support square."""

    @abstractmethod
    def to_dict(self) -> dict:
        """JSON-serializable descriptor."""

    def evaluate(self, points) -> np.ndarray:
        pts = _as_points(points)
        a = self.support_half_width
        inside = (np.abs(pts[:, 0]) <= a) & (np.abs(pts[:, 1]) <= a)
        out = np.zeros(len(pts))
        if np.any(inside):
            out[inside] = self._evaluate_inside(pts[inside])
        if not np.all(np.isfinite(out)):
            raise NumericalError(f"contrast {type(self).__name__} produced non-finite values")
        return out

    def sample(self, grid: ComputationalGrid) -> np.ndarray:
        """Contrast values on the grid nodes, zero outside the support square."""
        x = grid.axis_nodes()
        a = self.support_half_width
        ix = np.abs(x) <= a
        out = np.zeros((grid.m, grid.m))
        if np.any(ix):
            xs, ys = np.meshgrid(x[ix], x[ix], indexing="ij")
            pts = np.column_stack([xs.ravel(), ys.ravel()])
            out[np.ix_(ix, ix)] = self._evaluate_inside(pts).reshape(xs.shape)
        return out


@dataclass(frozen=True)
class ConstantOnSquare(ContrastField):
    """Constant value on a centered square, zero outside."""

    value: float
    half_width: float = 0.7

    @property
    def support_half_width(self) -> float:
        return self.half_width

    def _evaluate_inside(self, pts):
        return np.full(len(pts), float(self.value))

    def to_dict(self):
        return {"type": "constant_on_square", "value": self.value, "half_width": self.half_width}


@dataclass(frozen=True)
class VeeOnSquare(ContrastField):
    """Nonnegative valley-shaped contrast on [-0.7, 0.7]^2.

    The default formula is

        0.4 * | min( min(x1 - 0.7, -x1) - 0.7,  min(x2 - 0.7, -x2 - 0.7) ) |

    whose first component is not symmetric in x1 (its boundary trace ranges
    over [0.56, 0.84]).  With symmetric=True the first component becomes
    min(x1 - 0.7, -x1 - 0.7) and the trace is the constant 0.56.
    """

    symmetric: bool = False

    @property
    def support_half_width(self) -> float:
        return 0.7

    def _evaluate_inside(self, pts):
        x1, x2 = pts[:, 0], pts[:, 1]
        if self.symmetric:
            first = np.minimum(x1 - 0.7, -x1 - 0.7)
        else:
            first = np.minimum(x1 - 0.7, -x1) - 0.7
        second = np.minimum(x2 - 0.7, -x2 - 0.7)
        return 0.4 * np.abs(np.minimum(first, second))

    def to_dict(self):
        return {"type": "vee_on_square", "symmetric": self.symmetric}


@dataclass(frozen=True)
class PyramidOnSquare(ContrastField):
    """Pyramid contrast 0.4 * min(min(x1-0.7, -x1-0.7), min(x2-0.7, -x2-0.7)) + 1.

    Equals 0.72 - 0.4 * max(|x1|, |x2|) on [-0.7, 0.7]^2: value 0.72 at the
    center, boundary trace identically 0.44.
    """

    @property
    def support_half_width(self) -> float:
        return 0.7

    def _evaluate_inside(self, pts):
        x1, x2 = pts[:, 0], pts[:, 1]
        first = np.minimum(x1 - 0.7, -x1 - 0.7)
        second = np.minimum(x2 - 0.7, -x2 - 0.7)
        return 0.4 * np.minimum(first, second) + 1.0

    def to_dict(self):
        return {"type": "pyramid_on_square"}


@dataclass(frozen=True)
class LinearOnSquare(ContrastField):
    """Linear test contrast p(x) = slope * (d . (x - anchor)) + offset on a square.

    d = anchor/|anchor| is the unit direction through the anchor point, which
    must therefore be nonzero (it normally sits on the support boundary).
    """

    anchor: tuple
    slope: float
    offset: float
    half_width: float = 0.7

    def __post_init__(self):
        ax, ay = float(self.anchor[0]), float(self.anchor[1])
        if math.hypot(ax, ay) == 0.0:
            raise PreconditionError("linear contrast anchor must be nonzero")
        object.__setattr__(self, "anchor", (ax, ay))

    @property
    def support_half_width(self) -> float:
        return self.half_width

    @property
    def direction(self) -> np.ndarray:
        a = np.asarray(self.anchor)
        return a / np.hypot(a[0], a[1])

    def _evaluate_inside(self, pts):
        d = self.direction
        rel = pts - np.asarray(self.anchor)
        return self.slope * (rel @ d) + self.offset

    def to_dict(self):
        return {
            "type": "linear_on_square",
            "anchor": [self.anchor[0], self.anchor[1]],
            "slope": self.slope,
            "offset": self.offset,
            "half_width": self.half_width,
        }


@dataclass(frozen=True)
class SignChangingDemo(ContrastField):
    """Sign-changing demo contrast: 0.7 on [-0.7,0.7]^2 minus 1.2 on [-0.35,0.35]^2.

    Strictly positive (0.7) on the support boundary, negative (-0.5) in the
    inner square: the class of contrasts the support indicator is proved for.
    """

    @property
    def support_half_width(self) -> float:
        return 0.7

    def _evaluate_inside(self, pts):
        inner = (np.abs(pts[:, 0]) <= 0.35) & (np.abs(pts[:, 1]) <= 0.35)
        return np.where(inner, 0.7 - 1.2, 0.7)

    def to_dict(self):
        return {"type": "sign_changing_demo"}


@dataclass(frozen=True)
class Tabulated(ContrastField):
    """Contrast given by bilinear interpolation of a value table.

    values is a (p, p) array sampled on the uniform inclusive node grid of
    [-a, a]^2 (row index = x1).  Queries outside the table square raise
    "out of tabulation range" instead of returning zero.
    """

    half_width: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1] or vals.shape[0] < 2:
            raise PreconditionError("tabulated values must be a square array with p >= 2")
        if not np.all(np.isfinite(vals)):
            raise PreconditionError("tabulated values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def support_half_width(self) -> float:
        return self.half_width

    def evaluate(self, points):
        pts = _as_points(points)
        a = self.half_width
        if np.any((np.abs(pts[:, 0]) > a) | (np.abs(pts[:, 1]) > a)):
            raise PreconditionError("out of tabulation range")
        return self._evaluate_inside(pts)

    def _evaluate_inside(self, pts):
        p = self.values.shape[0]
        step = 2.0 * self.half_width / (p - 1)
        fx = np.clip((pts[:, 0] + self.half_width) / step, 0, p - 1 - 1e-12)
        fy = np.clip((pts[:, 1] + self.half_width) / step, 0, p - 1 - 1e-12)
        i0, j0 = fx.astype(int), fy.astype(int)
        tx, ty = fx - i0, fy - j0
        v = self.values
        return (
            v[i0, j0] * (1 - tx) * (1 - ty)
            + v[i0 + 1, j0] * tx * (1 - ty)
            + v[i0, j0 + 1] * (1 - tx) * ty
            + v[i0 + 1, j0 + 1] * tx * ty
        )

    def to_dict(self):
        return {
            "type": "tabulated",
            "half_width": self.half_width,
            "values": [[float(v) for v in row] for row in self.values],
        }


_DESCRIPTOR_TYPES = {
    "constant_on_square": lambda d: ConstantOnSquare(
        value=d["value"], half_width=d.get("half_width", 0.7)
    ),
    "vee_on_square": lambda d: VeeOnSquare(symmetric=d.get("symmetric", False)),
    "pyramid_on_square": lambda d: PyramidOnSquare(),
    "linear_on_square": lambda d: LinearOnSquare(
        anchor=tuple(d["anchor"]),
        slope=d["slope"],
        offset=d["offset"],
        half_width=d.get("half_width", 0.7),
    ),
    "sign_changing_demo": lambda d: SignChangingDemo(),
    "tabulated": lambda d: Tabulated(half_width=d["half_width"], values=np.asarray(d["values"])),
}


def contrast_from_dict(doc: dict) -> ContrastField:
    """Rebuild a contrast descriptor from its JSON document."""
    try:
        kind = doc["type"]
    except (TypeError, KeyError):
        raise PreconditionError("contrast document must carry a 'type' field") from None
    try:
        factory = _DESCRIPTOR_TYPES[kind]
    except KeyError:
        raise PreconditionError(f"unknown contrast type {kind!r}") from None
    return factory(doc)


def evaluate_contrast(spec: ContrastField, points) -> np.ndarray:
    """Pointwise evaluation of a contrast descriptor at a list of 2D points."""
    return spec.evaluate(points)


def sign_changing_demo() -> ContrastField:
    """The built-in sign-changing contrast used by the support-indicator demo."""
    return SignChangingDemo()


def builtin_contrasts() -> dict:
    """The four named benchmark contrasts keyed by a short slug."""
    return {
        "constant": ConstantOnSquare(0.4, 0.7),
        "vee": VeeOnSquare(),
        "pyramid": PyramidOnSquare(),
        "sign_changing": SignChangingDemo(),
    }

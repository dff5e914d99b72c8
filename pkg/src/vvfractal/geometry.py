"""Affine maps of the plane, optionally lifted to RGB colour coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

Matrix2 = tuple[tuple[float, float], tuple[float, float]]
Matrix3 = tuple[tuple[float, float, float], tuple[float, float, float], tuple[float, float, float]]


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    color: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        coords = (self.x, self.y) + (self.color or ())
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite point coordinates: {coords}")


@dataclass(frozen=True)
class ColorPart:
    """Affine action on RGB coordinates: c -> linear @ c + translation."""

    linear: Matrix3
    translation: tuple[float, float, float]

    @classmethod
    def identity(cls) -> "ColorPart":
        return cls(((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)), (0.0, 0.0, 0.0))

    @classmethod
    def toward(cls, target: Sequence[float], rate: float = 0.5) -> "ColorPart":
        """Contract colours by ``rate`` toward a fixed ``target`` colour."""
        keep = 1.0 - rate
        lin = tuple(tuple(keep if i == j else 0.0 for j in range(3)) for i in range(3))
        return cls(lin, tuple(rate * t for t in target))

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "ColorPart":
        if len(values) != 12:
            raise ValueError(f"colour part needs 12 numbers, got {len(values)}")
        v = [float(x) for x in values]
        return cls((tuple(v[0:3]), tuple(v[3:6]), tuple(v[6:9])), tuple(v[9:12]))

    def flat(self) -> tuple[float, ...]:
        return tuple(x for row in self.linear for x in row) + tuple(self.translation)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.linear, dtype=float), np.array(self.translation, dtype=float)


@dataclass(frozen=True)
class AffineMap:
    """``(x, y) -> (a x + b y + e, c x + d y + f)``.

    ``color`` is the optional RGB part of the 5-D lift; ``None`` means the
    colour coordinates pass through unchanged.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    color: Optional[ColorPart] = None

    @classmethod
    def homothety(cls, ratio: float, fixed: Sequence[float]) -> "AffineMap":
        """Scale by ``ratio`` about the fixed point ``fixed``."""
        fx, fy = fixed
        return cls(ratio, 0.0, 0.0, ratio, (1.0 - ratio) * fx, (1.0 - ratio) * fy)

    @property
    def linear(self) -> Matrix2:
        return ((self.a, self.b), (self.c, self.d))

    @property
    def translation(self) -> tuple[float, float]:
        return (self.e, self.f)

    def with_color(self, color: Optional[ColorPart]) -> "AffineMap":
        return AffineMap(self.a, self.b, self.c, self.d, self.e, self.f, color)

    def conjugate(self, scale: float, shift: Sequence[float]) -> "AffineMap":
        """Return ``T o self o T^-1`` for ``T(p) = scale * p + shift``.

        The linear part is unchanged; only the translation moves.
        """
        tx, ty = shift
        e = self.e * scale + tx - (self.a * tx + self.b * ty)
        f = self.f * scale + ty - (self.c * tx + self.d * ty)
        return AffineMap(self.a, self.b, self.c, self.d, e, f, self.color)

    def apply_xy(self, xy: np.ndarray) -> np.ndarray:
        """Vectorised spatial action on an ``(n, 2)`` array."""
        x = xy[:, 0]
        y = xy[:, 1]
        out = np.empty_like(xy, dtype=float)
        out[:, 0] = self.a * x + self.b * y + self.e
        out[:, 1] = self.c * x + self.d * y + self.f
        return out

    def apply_rgb(self, rgb: np.ndarray) -> np.ndarray:
        if self.color is None:
            return rgb.copy()
        lin, t = self.color.as_arrays()
        return rgb @ lin.T + t


def apply(m: AffineMap, p: Point) -> Point:
    x = m.a * p.x + m.b * p.y + m.e
    y = m.c * p.x + m.d * p.y + m.f
    color = p.color
    if color is not None and m.color is not None:
        lin, t = m.color.linear, m.color.translation
        color = tuple(
            lin[i][0] * color[0] + lin[i][1] * color[1] + lin[i][2] * color[2] + t[i]
            for i in range(3)
        )
    return Point(x, y, color)


def singular_values(m: AffineMap) -> tuple[float, float]:
    """Singular values (largest first) of the spatial linear part.

    Closed form from the eigenvalues of ``A^T A``; no iterative solver.
    """
    a, b, c, d = m.a, m.b, m.c, m.d
    # A^T A = [[p, q], [q, s]]
    p = a * a + c * c
    q = a * b + c * d
    s = b * b + d * d
    half_trace = 0.5 * (p + s)
    disc = math.hypot(0.5 * (p - s), q)
    lam_max = half_trace + disc
    # det(A^T A) = det(A)^2, which avoids cancellation in the small eigenvalue
    det = a * d - b * c
    lam_min = (det * det) / lam_max if lam_max > 0 else 0.0
    return math.sqrt(lam_max), math.sqrt(max(lam_min, 0.0))


def lipschitz(m: AffineMap) -> float:
    return singular_values(m)[0]


def similitude_ratio(m: AffineMap, tol: float = 1e-9) -> Optional[float]:
    """Common scaling ratio if ``m`` is a similitude, else ``None``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    hi, lo = singular_values(m)
    if hi - lo <= tol:
        return 0.5 * (hi + lo)
    return None

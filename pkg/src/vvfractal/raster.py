"""Pixel rasters over the unit square, the backward process, and the chaos game.

Pixel ``(row, col)`` covers ``[col/W, (col+1)/W) x [row/H, (row+1)/H)``, so
row 0 is the *bottom* of the domain; rendering flips it. Points that land
outside the unit square are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .geometry import AffineMap
from .ifs_model import Ifs
from .rng import DEFAULT_SEED, make_rng

DEFAULT_RES = 1024
DEFAULT_BURN_IN = 50
SET = "set"
MEASURE = "measure"


@dataclass(frozen=True, eq=False)
class Raster:
    cells: np.ndarray
    kind: str = SET

    def __post_init__(self):
        if self.kind not in (SET, MEASURE):
            raise ValueError(f"unknown raster kind {self.kind!r}")
        cells = np.array(self.cells, dtype=float)
        if cells.ndim != 2:
            raise ValueError("raster cells must be 2-D")
        if not np.all(np.isfinite(cells)) or np.any(cells < 0):
            raise ValueError("raster masses must be finite and non-negative")
        if self.kind == SET and not np.all((cells == 0) | (cells == 1)):
            raise ValueError("set raster cells must be 0 or 1")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    # construction ---------------------------------------------------------

    @classmethod
    def empty(cls, res: int | tuple[int, int] = DEFAULT_RES, kind: str = SET) -> "Raster":
        return cls(np.zeros(_shape(res)), kind)

    @classmethod
    def full(cls, res: int | tuple[int, int] = DEFAULT_RES, kind: str = SET) -> "Raster":
        h, w = _shape(res)
        cells = np.ones((h, w))
        if kind == MEASURE:
            cells /= h * w
        return cls(cells, kind)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "Raster":
        return cls(np.asarray(mask, dtype=bool).astype(float), SET)

    @classmethod
    def from_points(
        cls,
        xy: np.ndarray,
        res: int | tuple[int, int] = DEFAULT_RES,
        kind: str = MEASURE,
        weights: Optional[np.ndarray] = None,
    ) -> "Raster":
        shape = _shape(res)
        flat, keep = pixel_index(xy, shape)
        if kind == SET:
            cells = np.zeros(shape[0] * shape[1])
            cells[flat] = 1.0
        else:
            w = None if weights is None else np.asarray(weights, float)[keep]
            cells = np.bincount(flat, weights=w, minlength=shape[0] * shape[1]).astype(float)
        return cls(cells.reshape(shape), kind)

    # views ----------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def pixel(self) -> float:
        """Pixel side as a fraction of the domain side (wider axis)."""
        return 1.0 / max(self.shape)

    def occupied(self) -> np.ndarray:
        return self.cells > 0

    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    def mass(self) -> float:
        return float(self.cells.sum())

    def is_empty(self) -> bool:
        return not np.any(self.cells)

    def support(self) -> "Raster":
        return Raster.from_mask(self.occupied())

    def centers(self) -> np.ndarray:
        """``(n, 2)`` xy centres of occupied pixels, in row-major order."""
        rows, cols = np.nonzero(self.cells)
        h, w = self.shape
        return np.column_stack(((cols + 0.5) / w, (rows + 0.5) / h))

    def same_as(self, other: "Raster") -> bool:
        return self.kind == other.kind and np.array_equal(self.cells, other.cells)


def _shape(res: int | tuple[int, int]) -> tuple[int, int]:
    if isinstance(res, int):
        return (res, res)
    h, w = res
    return (int(h), int(w))


def pixel_index(xy: np.ndarray, shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Flat pixel index of each in-domain point, plus the in-domain mask."""
    h, w = shape
    cols = np.floor(xy[:, 0] * w)
    rows = np.floor(xy[:, 1] * h)
    keep = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    flat = rows[keep].astype(np.int64) * w + cols[keep].astype(np.int64)
    return flat, keep


def image_union(parts: Iterable[tuple[AffineMap, Raster, float]], shape, kind: str) -> Raster:
    """Union (set) or weighted sum (measure) of mapped rasters.

    Each occupied pixel centre is pushed through the map and deposited in
    the pixel covering it. ``parts`` are ``(map, source, weight)``; weights
    only matter for measures. Summation follows the order of ``parts``.
    """
    h, w = shape
    acc = np.zeros(h * w)
    for m, src, weight in parts:
        if src.shape != tuple(shape):
            raise ValueError(f"raster shape {src.shape} does not match {tuple(shape)}")
        centers = src.centers()
        if len(centers) == 0:
            continue
        flat, keep = pixel_index(m.apply_xy(centers), shape)
        if kind == SET:
            acc[flat] = 1.0
        else:
            mass = src.cells[src.cells > 0][keep] * weight
            acc += np.bincount(flat, weights=mass, minlength=h * w)
    return Raster(acc.reshape(shape), kind)


def hutchinson_step(ifs: Ifs, r: Raster) -> Raster:
    """Apply the IFS set map once (measure rasters use the IFS weights)."""
    return image_union(((m, r, p) for m, p in zip(ifs.maps, ifs.weights)), r.shape, r.kind)


def backward_process(ifs: Ifs, initial: Raster, k: int) -> Raster:
    if k < 0:
        raise ValueError("k must be >= 0")
    r = initial
    for _ in range(k):
        r = hutchinson_step(ifs, r)
    return r


def backward_iterates(ifs: Ifs, initial: Raster, k: int) -> list[Raster]:
    """``[T_0, T_1, ..., T_k]``."""
    out = [initial]
    for _ in range(k):
        out.append(hutchinson_step(ifs, out[-1]))
    return out


def decay_trace(iterates: Sequence[Raster]) -> list[float]:
    """Successive distances ``d_H(T_j, T_{j+1})``; NaN where a set is empty."""
    out = []
    for a, b in zip(iterates, iterates[1:]):
        if a.is_empty() or b.is_empty():
            out.append(float("nan"))
        else:
            out.append(hausdorff_distance(a, b))
    return out


def chaos_game(
    ifs: Ifs,
    n_points: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = DEFAULT_SEED,
    res: int | tuple[int, int] = DEFAULT_RES,
    walkers: int = 256,
    chunk: int = 4096,
) -> Raster:
    """Random-orbit measure raster with ``n_points`` unit masses.

    ``walkers`` independent orbits run in lockstep, each starting from a
    uniform random point and discarding its first ``burn_in`` points.
    Retained points are taken step-major until ``n_points`` are deposited.
    Draw order: ``2 * walkers`` doubles for the starting points, then one
    double per walker per step for the map choice.
    """
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    walkers = max(1, min(walkers, n_points))
    shape = _shape(res)
    rng = make_rng(seed)
    cum = np.cumsum(ifs.weights)
    cum[-1] = np.inf
    lin = np.array([[[m.a, m.b], [m.c, m.d]] for m in ifs.maps])
    trans = np.array([[m.e, m.f] for m in ifs.maps])

    x = rng.random((walkers, 2))
    counts = np.zeros(shape[0] * shape[1], dtype=np.int64)
    remaining = n_points
    steps_left = burn_in + -(-n_points // walkers)
    step = 0
    while steps_left > 0:
        block = min(chunk, steps_left)
        choices = np.searchsorted(cum, rng.random((block, walkers)), side="right")
        kept = []
        for j in range(block):
            idx = choices[j]
            x = np.einsum("nij,nj->ni", lin[idx], x) + trans[idx]
            step += 1
            if step > burn_in and remaining > 0:
                take = x if remaining >= walkers else x[:remaining]
                kept.append(take)
                remaining -= len(take)
        if kept:
            flat, _ = pixel_index(np.concatenate(kept), shape)
            counts += np.bincount(flat, minlength=counts.size)
        steps_left -= block
    return Raster(counts.reshape(shape).astype(float), MEASURE)


def merge(rasters: Sequence[Raster]) -> Raster:
    """Sum measure rasters in list order (the fixed merge order)."""
    if not rasters:
        raise ValueError("nothing to merge")
    acc = np.zeros(rasters[0].shape)
    for r in rasters:
        acc = acc + r.cells
    return Raster(acc, MEASURE)


def _distance_to(b: Raster) -> np.ndarray:
    h, w = b.shape
    return ndimage.distance_transform_edt(~b.occupied(), sampling=(1.0 / h, 1.0 / w))


def directed_hausdorff(a: Raster, b: Raster) -> float:
    """``max_{p in a} min_{q in b} |p - q|`` over occupied pixel centres."""
    if a.is_empty() or b.is_empty():
        raise ValueError("empty set has no Hausdorff distance")
    if a.shape != b.shape:
        raise ValueError("rasters must share a resolution")
    return float(_distance_to(b)[a.occupied()].max())


def hausdorff_distance(a: Raster, b: Raster) -> float:
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def dilate(r: Raster, pixels: float) -> Raster:
    """Pixels whose centre lies within ``pixels`` pixel widths of ``r``."""
    if r.is_empty():
        return Raster.empty(r.shape)
    return Raster.from_mask(_distance_to(r) <= pixels * r.pixel + 1e-12)


def within(a: Raster, b: Raster, pixels: float) -> bool:
    """True when ``a`` lies inside ``b`` dilated by ``pixels``."""
    if a.is_empty():
        return True
    if b.is_empty():
        return False
    return directed_hausdorff(a, b) <= pixels * b.pixel + 1e-12


def polygon_raster(vertices: Sequence[Sequence[float]], res: int | tuple[int, int] = DEFAULT_RES) -> Raster:
    """Set raster of pixels whose centre is inside the polygon (even-odd rule)."""
    h, w = _shape(res)
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    px, py = np.meshgrid(xs, ys)
    inside = np.zeros((h, w), dtype=bool)
    vs = [tuple(map(float, v)) for v in vertices]
    for (x0, y0), (x1, y1) in zip(vs, vs[1:] + vs[:1]):
        if y0 == y1:
            continue
        crosses = (y0 > py) != (y1 > py)
        xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (px < xint)
    return Raster.from_mask(inside)


def disk_raster(center: Sequence[float], radius: float, res: int | tuple[int, int] = DEFAULT_RES) -> Raster:
    h, w = _shape(res)
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    px, py = np.meshgrid(xs, ys)
    return Raster.from_mask((px - center[0]) ** 2 + (py - center[1]) ** 2 <= radius**2)

"""Rasters and point clouds to 8-bit images, and image file output.

Images are plain ``uint8`` arrays, ``(H, W)`` for grey and ``(H, W, 3)``
for RGB, with row 0 at the top (the raster's high-y edge).
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .ifs_model import SuperIfs
from .raster import DEFAULT_RES, SET, Raster, pixel_index, _shape
from .rng import DEFAULT_SEED
from .vvariable import BufferState, run_points

DEFAULT_GAMMA = 2.2
FORMATS = ("pgm", "ppm", "png")


def to_greyscale(measure: Raster, gamma_correction: float = DEFAULT_GAMMA) -> np.ndarray:
    """``round(255 * (mass / max) ** (1 / gamma_correction))``; empty -> black."""
    if gamma_correction <= 0:
        raise ValueError("gamma_correction must be positive")
    cells = measure.cells
    peak = cells.max() if cells.size else 0.0
    if peak <= 0:
        return np.zeros(cells.shape, dtype=np.uint8)[::-1].copy()
    level = np.power(cells / peak, 1.0 / gamma_correction)
    return np.rint(level * 255.0).astype(np.uint8)[::-1].copy()


def point_support(xy: np.ndarray, res: int | tuple[int, int] = DEFAULT_RES) -> Raster:
    return Raster.from_points(xy, res, kind=SET)


def color_chaos_game(
    s: SuperIfs,
    n_points: int,
    seed: int = DEFAULT_SEED,
    k_steps: int = 25,
    buffer: int = 0,
    res: int | tuple[int, int] = 512,
    initial_color: Sequence[float] = (1.0, 1.0, 1.0),
) -> np.ndarray:
    """RGB image of one buffer after the 5-D forward process.

    Each pixel shows the mean colour of the points that land in it.
    """
    missing = [
        f"{f.name} map {i + 1}"
        for f in s.ifss for i, m in enumerate(f.maps) if m.color is None
    ]
    if missing:
        raise ValueError("colour chaos game needs colour parts on every map; missing: " + ", ".join(missing))
    cloud = run_points(s, n_points, k_steps, seed, initial_color)
    return deposit_colors(cloud.xy[buffer], cloud.rgb[buffer], res)


def deposit_colors(xy: np.ndarray, rgb: np.ndarray, res: int | tuple[int, int] = 512) -> np.ndarray:
    shape = _shape(res)
    size = shape[0] * shape[1]
    flat, keep = pixel_index(xy, shape)
    counts = np.bincount(flat, minlength=size)
    out = np.zeros((size, 3))
    for ch in range(3):
        out[:, ch] = np.bincount(flat, weights=rgb[keep, ch], minlength=size)
    hit = counts > 0
    out[hit] /= counts[hit, None]
    img = np.rint(np.clip(out, 0.0, 1.0) * 255.0).astype(np.uint8)
    return img.reshape(shape + (3,))[::-1].copy()


def density(states: Sequence[BufferState]) -> Raster:
    """Sum of every buffer of every state, as a measure raster."""
    if not states:
        raise ValueError("superpose needs at least one state")
    shape = states[0].shape
    acc = np.zeros(shape)
    for st in states:
        if st.shape != shape:
            raise ValueError(f"resolution mismatch: {st.shape} vs {shape}")
        for b in st.buffers:
            acc += b.cells
    return Raster(acc, "measure")


def superpose(states: Sequence[BufferState], gamma_correction: float = DEFAULT_GAMMA) -> np.ndarray:
    return to_greyscale(density(states), gamma_correction)


# --------------------------------------------------------------------------
# files


def encode(img: np.ndarray, fmt: str) -> bytes:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if fmt == "pgm":
        if img.ndim != 2:
            raise ValueError("PGM needs a greyscale image")
        h, w = img.shape
        return b"P5\n%d %d\n255\n" % (w, h) + img.tobytes()
    if fmt == "ppm":
        if img.ndim == 2:
            img = np.repeat(img[:, :, None], 3, axis=2)
        h, w, _ = img.shape
        return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()
    if fmt == "png":
        import io

        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(img).save(buf, format="PNG", compress_level=6, optimize=False)
        return buf.getvalue()
    raise ValueError(f"unknown image format {fmt!r}; use one of {', '.join(FORMATS)}")


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_image(img: np.ndarray, path: str | os.PathLike, fmt: Optional[str] = None) -> None:
    fmt = (fmt or Path(path).suffix.lstrip(".")).lower()
    data = encode(img, fmt)
    try:
        atomic_write(path, data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write image {path}: {exc.strerror}") from exc


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Read a binary PGM/PPM with maxval 255."""
    data = Path(path).read_bytes()
    magic, rest = data[:2], data[2:]
    if magic not in (b"P5", b"P6"):
        if data[:8] == b"\x89PNG\r\n\x1a\n":
            from PIL import Image

            return np.asarray(Image.open(path))
        raise ValueError(f"{path}: not a binary PGM/PPM")
    fields = []
    pos = 0
    while len(fields) < 3:
        while rest[pos:pos + 1].isspace():
            pos += 1
        if rest[pos:pos + 1] == b"#":
            pos = rest.index(b"\n", pos) + 1
            continue
        end = pos
        while not rest[end:end + 1].isspace():
            end += 1
        fields.append(int(rest[pos:end]))
        pos = end
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: maxval {maxval} unsupported")
    pixels = np.frombuffer(rest[pos + 1:], dtype=np.uint8)
    return pixels.reshape((h, w) if magic == b"P5" else (h, w, 3)).copy()

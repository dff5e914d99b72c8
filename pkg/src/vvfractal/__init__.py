"""V-variable fractals: superIFS construction, rendering, and dimension estimation."""

from .geometry import AffineMap, ColorPart, Point, apply, lipschitz, similitude_ratio
from .ifs_model import Ifs, SuperIfs, parse_config, preset, serialize_config, validate

__all__ = [
    "AffineMap",
    "ColorPart",
    "Ifs",
    "Point",
    "SuperIfs",
    "apply",
    "lipschitz",
    "parse_config",
    "preset",
    "serialize_config",
    "similitude_ratio",
    "validate",
]

__version__ = "0.1.0"

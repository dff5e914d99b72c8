"""IFS and superIFS definitions, presets, and the text config format.

Config grammar (UTF-8, line oriented, ``#`` starts a comment)::

    superifs V=<int>
    ifs <name> [prob=<num>]
    map a=<num> b=<num> c=<num> d=<num> e=<num> f=<num> [weight=<num>] [color=<12 nums>]

``map`` lines belong to the most recent ``ifs``. A missing ``prob`` or
``weight`` means uniform over its siblings (all of them must then omit it).
``<num>`` is a decimal literal or a ``p/q`` fraction; ``color`` is twelve
comma-separated numbers, the 3x3 RGB matrix row-major then the translation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from .geometry import AffineMap, ColorPart, lipschitz

SUM_TOL = 1e-9
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


@dataclass(frozen=True)
class Ifs:
    name: str
    maps: tuple[AffineMap, ...]
    weights: tuple[float, ...]

    @classmethod
    def uniform(cls, name: str, maps: Sequence[AffineMap]) -> "Ifs":
        n = len(maps)
        return cls(name, tuple(maps), tuple(1.0 / n for _ in range(n)))

    def __len__(self) -> int:
        return len(self.maps)


@dataclass(frozen=True)
class SuperIfs:
    ifss: tuple[Ifs, ...]
    probabilities: tuple[float, ...]
    V: int

    @property
    def max_maps(self) -> int:
        return max(len(f) for f in self.ifss)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.ifss)

    def with_V(self, V: int) -> "SuperIfs":
        return replace(self, V=V)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no IFS named {name!r}; have {', '.join(self.names)}") from None

    def single(self, name: Optional[str] = None) -> Ifs:
        """The one IFS of this system, or the one called ``name``."""
        if name is not None:
            return self.ifss[self.index_of(name)]
        if len(self.ifss) != 1:
            raise ValueError(
                f"system holds {len(self.ifss)} IFSs ({', '.join(self.names)}); choose one by name"
            )
        return self.ifss[0]


def validate(s: SuperIfs) -> list[str]:
    """Return human-readable invariant violations; empty means valid."""
    out: list[str] = []
    if not isinstance(s.V, int) or s.V < 1:
        out.append(f"V must be ≥ 1 (got {s.V})")
    if len(s.ifss) == 0:
        out.append("superifs needs at least one ifs")
    if len(s.probabilities) != len(s.ifss):
        out.append(f"{len(s.probabilities)} probabilities for {len(s.ifss)} ifss")
    for n, p in enumerate(s.probabilities):
        if not (p > 0 and math.isfinite(p)):
            out.append(f"probability {n + 1} must be > 0 (got {p})")
    total = math.fsum(s.probabilities)
    if s.probabilities and abs(total - 1.0) > SUM_TOL:
        out.append(f"probabilities sum {total:.12g} ≠ 1")
    seen = set()
    for f in s.ifss:
        if not _NAME_RE.match(f.name):
            out.append(f"ifs name {f.name!r} is not an identifier")
        if f.name in seen:
            out.append(f"duplicate ifs name {f.name!r}")
        seen.add(f.name)
        out.extend(_validate_ifs(f))
    return out


def _validate_ifs(f: Ifs) -> list[str]:
    out = []
    where = f"ifs {f.name}"
    if len(f.maps) == 0:
        out.append(f"{where}: needs at least one map")
    if len(f.weights) != len(f.maps):
        out.append(f"{where}: {len(f.weights)} weights for {len(f.maps)} maps")
    for m, w in enumerate(f.weights):
        if not (w > 0 and math.isfinite(w)):
            out.append(f"{where}: weight {m + 1} must be > 0 (got {w})")
    total = math.fsum(f.weights)
    if f.weights and abs(total - 1.0) > SUM_TOL:
        out.append(f"{where}: weights sum {total:.12g} ≠ 1")
    for m, g in enumerate(f.maps):
        coeffs = (g.a, g.b, g.c, g.d, g.e, g.f) + (g.color.flat() if g.color else ())
        if not all(math.isfinite(x) for x in coeffs):
            out.append(f"{where} map {m + 1}: non-finite coefficient")
            continue
        lip = lipschitz(g)
        if not lip < 1.0:
            out.append(f"{where} map {m + 1}: map not contractive (lipschitz {lip:.6g})")
    return out


# --------------------------------------------------------------------------
# presets

TRIANGLE = ((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0))

# normalises the fern/lettuce pair into the unit square
_PLANT_SCALE = 1.0 / 10.5
_PLANT_SHIFT = (0.5, 0.25 / 10.5)

_FERN = (
    ((0.0, 0.0, 0.0, 0.16, 0.0, 0.0), 0.01, (0.45, 0.30, 0.10)),
    ((0.85, 0.04, -0.04, 0.85, 0.0, 1.6), 0.85, (0.15, 0.65, 0.15)),
    ((0.2, -0.26, 0.23, 0.22, 0.0, 1.6), 0.07, (0.30, 0.85, 0.20)),
    ((-0.15, 0.28, 0.26, 0.24, 0.0, 0.44), 0.07, (0.05, 0.45, 0.25)),
)
_LETTUCE = (
    ((0.0, 0.0, 0.0, 0.25, 0.0, 0.0), 0.02, (0.85, 0.90, 0.55)),
    ((0.7, 0.1, -0.1, 0.7, 0.0, 1.8), 0.70, (0.55, 0.85, 0.25)),
    ((0.45, -0.45, 0.4, 0.45, 0.0, 1.0), 0.14, (0.70, 0.95, 0.35)),
    ((-0.45, 0.45, 0.4, 0.45, 0.0, 1.0), 0.14, (0.40, 0.75, 0.15)),
)


def _sierpinski(name: str, ratio: float) -> Ifs:
    return Ifs.uniform(name, [AffineMap.homothety(ratio, v) for v in TRIANGLE])


def _plant(name: str, table) -> Ifs:
    maps = []
    weights = []
    for coeffs, w, rgb in table:
        m = AffineMap(*coeffs, color=ColorPart.toward(rgb, 0.5))
        maps.append(m.conjugate(_PLANT_SCALE, _PLANT_SHIFT))
        weights.append(w)
    return Ifs(name, tuple(maps), tuple(weights))


def _up_down() -> SuperIfs:
    u = Ifs.uniform("U", [
        AffineMap(1 / 2, 3 / 8, 1 / 2, -3 / 8, -1 / 16, 9 / 16),
        AffineMap(1 / 2, -3 / 8, -1 / 2, -3 / 8, 9 / 16, 17 / 16),
    ])
    d = Ifs.uniform("D", [
        AffineMap(1 / 2, 3 / 8, -1 / 2, 3 / 8, -1 / 16, 7 / 16),
        AffineMap(1 / 2, -3 / 8, 1 / 2, 3 / 8, 9 / 16, -1 / 16),
    ])
    return SuperIfs((u, d), (0.5, 0.5), 2)


PRESETS = {
    "sierpinski-half": lambda: SuperIfs((_sierpinski("F", 0.5),), (1.0,), 1),
    "sierpinski-pair": lambda: SuperIfs(
        (_sierpinski("F", 0.5), _sierpinski("G", 1.0 / 3.0)), (0.5, 0.5), 5
    ),
    "up-down": _up_down,
    "fern-lettuce": lambda: SuperIfs(
        (_plant("fern", _FERN), _plant("lettuce", _LETTUCE)), (0.5, 0.5), 2
    ),
}


def preset(name: str) -> SuperIfs:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


# --------------------------------------------------------------------------
# config text


class ConfigError(ValueError):
    """Base for config problems."""


class ConfigSyntaxError(ConfigError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ConfigSemanticError(ConfigError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def _num(text: str) -> float:
    if "/" in text:
        p, q = text.split("/", 1)
        return float(Fraction(int(p), int(q)))
    # float() is correctly rounded, so the decimal is read exactly as far as
    # a double allows
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class _IfsDraft:
    name: str
    prob: Optional[float]
    maps: list
    weights: list


def _tokens(line: str):
    """Yield (column, token) for whitespace-separated tokens (1-based columns)."""
    for m in re.finditer(r"\S+", line):
        yield m.start() + 1, m.group()


def _keyvals(tokens, lineno: int, allowed: set[str]) -> dict[str, tuple[int, str]]:
    out = {}
    for col, tok in tokens:
        if "=" not in tok:
            raise ConfigSyntaxError(f"expected key=value, got {tok!r}", lineno, col)
        key, val = tok.split("=", 1)
        if key not in allowed:
            raise ConfigSyntaxError(f"unknown key {key!r}", lineno, col)
        if key in out:
            raise ConfigSyntaxError(f"duplicate key {key!r}", lineno, col)
        out[key] = (col + len(key) + 1, val)
    return out


def _parse_num(kv, key, lineno):
    col, val = kv[key]
    try:
        return _num(val)
    except (ValueError, ZeroDivisionError):
        raise ConfigSyntaxError(f"bad number {val!r} for {key}", lineno, col) from None


def _uniform_or(values: list, what: str, where: str, lineno: int) -> tuple[float, ...]:
    if all(v is None for v in values):
        return tuple(1.0 / len(values) for _ in values)
    if any(v is None for v in values):
        raise ConfigSyntaxError(f"{where}: give {what} for all entries or none", lineno, 1)
    return tuple(values)


def parse_config(text: bytes | str) -> SuperIfs:
    """Parse config text into a validated :class:`SuperIfs`."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigSyntaxError(f"not UTF-8: {exc.reason}", 1, 1) from None
    V = None
    drafts: list[_IfsDraft] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        line = raw.split("#", 1)[0]
        toks = list(_tokens(line))
        if not toks:
            continue
        col, head = toks[0]
        if head == "superifs":
            if V is not None:
                raise ConfigSyntaxError("second superifs header", lineno, col)
            kv = _keyvals(toks[1:], lineno, {"V"})
            if "V" not in kv:
                raise ConfigSyntaxError("superifs needs V=<int>", lineno, col)
            vcol, vtext = kv["V"]
            try:
                V = int(vtext)
            except ValueError:
                raise ConfigSyntaxError(f"V must be an integer, got {vtext!r}", lineno, vcol) from None
        elif head == "ifs":
            if V is None:
                raise ConfigSyntaxError("ifs before superifs header", lineno, col)
            if len(toks) < 2 or "=" in toks[1][1]:
                raise ConfigSyntaxError("ifs needs a name", lineno, col)
            ncol, name = toks[1]
            if not _NAME_RE.match(name):
                raise ConfigSyntaxError(f"bad ifs name {name!r}", lineno, ncol)
            kv = _keyvals(toks[2:], lineno, {"prob"})
            prob = _parse_num(kv, "prob", lineno) if "prob" in kv else None
            drafts.append(_IfsDraft(name, prob, [], []))
        elif head == "map":
            if not drafts:
                raise ConfigSyntaxError("map outside an ifs block", lineno, col)
            kv = _keyvals(toks[1:], lineno, set("abcdef") | {"weight", "color"})
            for key in "abcdef":
                if key not in kv:
                    raise ConfigSyntaxError(f"map missing {key}=", lineno, col)
            coeffs = [_parse_num(kv, key, lineno) for key in "abcdef"]
            color = None
            if "color" in kv:
                ccol, ctext = kv["color"]
                parts = ctext.split(",")
                if len(parts) != 12:
                    raise ConfigSyntaxError(f"color needs 12 numbers, got {len(parts)}", lineno, ccol)
                try:
                    color = ColorPart.from_flat([_num(p) for p in parts])
                except (ValueError, ZeroDivisionError):
                    raise ConfigSyntaxError("bad number in color", lineno, ccol) from None
            weight = _parse_num(kv, "weight", lineno) if "weight" in kv else None
            drafts[-1].maps.append(AffineMap(*coeffs, color=color))
            drafts[-1].weights.append(weight)
        else:
            raise ConfigSyntaxError(f"unknown directive {head!r}", lineno, col)
    if V is None:
        raise ConfigSyntaxError("missing superifs header", max(last_line, 1), 1)
    ifss = []
    for dr in drafts:
        if not dr.maps:
            raise ConfigSemanticError([f"ifs {dr.name}: needs at least one map"])
        weights = _uniform_or(dr.weights, "weight", f"ifs {dr.name}", last_line)
        ifss.append(Ifs(dr.name, tuple(dr.maps), weights))
    probs = _uniform_or([d.prob for d in drafts], "prob", "superifs", last_line) if drafts else ()
    s = SuperIfs(tuple(ifss), probs, V)
    problems = validate(s)
    if problems:
        raise ConfigSemanticError(problems)
    return s


def serialize_config(s: SuperIfs) -> str:
    """Canonical text form; ``parse_config`` inverts it exactly."""
    lines = [f"superifs V={s.V}"]
    for f, p in zip(s.ifss, s.probabilities):
        lines.append(f"ifs {f.name} prob={_fmt(p)}")
        for m, w in zip(f.maps, f.weights):
            parts = [f"{k}={_fmt(getattr(m, k))}" for k in "abcdef"]
            parts.append(f"weight={_fmt(w)}")
            if m.color is not None:
                parts.append("color=" + ",".join(_fmt(x) for x in m.color.flat()))
            lines.append("map " + " ".join(parts))
    return "\n".join(lines) + "\n"

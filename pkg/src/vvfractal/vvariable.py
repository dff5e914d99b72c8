"""Forward construction of V-variable fractals by a superIFS.

One construction step samples a :class:`TransitionRecord` (an IFS per output
buffer plus an input buffer per map slot, uniform with replacement) and then
builds each output buffer from the previous level's buffers.

Random draw rule, per step: ``V * (1 + M)`` doubles in buffer-major order,
where ``M`` is the largest map count in the system. For buffer ``v`` the
first double picks the IFS (inverse CDF over the IFS probabilities) and the
next ``M`` pick input buffers ``floor(u * V)`` for map slots in ascending
order; doubles for slots beyond the chosen IFS's map count are drawn and
discarded. The count per step is therefore fixed, and sampling ``k`` steps at
once yields the same records as ``k`` single steps.

Buffers are 0-based in the Python API and 1-based (or ``L``/``R`` when
``V == 2``) in the text dump.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .ifs_model import SuperIfs
from .raster import DEFAULT_RES, MEASURE, SET, Raster, image_union
from .rng import DEFAULT_SEED, make_rng


@dataclass(frozen=True)
class TransitionRecord:
    ifs_indices: tuple[int, ...]
    inputs: tuple[tuple[int, ...], ...]

    @property
    def V(self) -> int:
        return len(self.ifs_indices)

    def problems(self, s: SuperIfs) -> list[str]:
        out = []
        if self.V != s.V or len(self.inputs) != s.V:
            out.append(f"record covers {self.V} buffers, system has V={s.V}")
            return out
        for v, (n, ws) in enumerate(zip(self.ifs_indices, self.inputs)):
            if not 0 <= n < len(s.ifss):
                out.append(f"buffer {v}: ifs index {n} out of range")
                continue
            if len(ws) != len(s.ifss[n]):
                out.append(f"buffer {v}: {len(ws)} inputs for {len(s.ifss[n])} maps")
            if any(not 0 <= w < s.V for w in ws):
                out.append(f"buffer {v}: input buffer out of range in {ws}")
        return out


@dataclass(frozen=True)
class BufferState:
    buffers: tuple[Raster, ...]
    level: int = 1

    def __post_init__(self):
        if not self.buffers:
            raise ValueError("a buffer state needs at least one buffer")
        first = self.buffers[0]
        for b in self.buffers[1:]:
            if b.shape != first.shape or b.kind != first.kind:
                raise ValueError("buffers must share resolution and kind")

    @property
    def V(self) -> int:
        return len(self.buffers)

    @property
    def kind(self) -> str:
        return self.buffers[0].kind

    @property
    def shape(self) -> tuple[int, int]:
        return self.buffers[0].shape


def initial_state(V: int, res: int | tuple[int, int] = DEFAULT_RES, kind: str = SET) -> BufferState:
    """All ``V`` buffers hold the full unit square (uniform mass for measures)."""
    full = Raster.full(res, kind)
    return BufferState(tuple(full for _ in range(V)), 1)


# --------------------------------------------------------------------------
# sampling


def _cumulative(probs: Sequence[float]) -> np.ndarray:
    cum = np.cumsum(probs)
    cum[-1] = np.inf
    return cum


def sample_block(s: SuperIfs, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``count`` consecutive records as arrays.

    Returns ``ifs`` of shape ``(count, V)`` and ``inputs`` of shape
    ``(count, V, M)``; unused slots hold ``-1``.
    """
    V, M = s.V, s.max_maps
    u = rng.random((count, V, 1 + M))
    ifs = np.searchsorted(_cumulative(s.probabilities), u[..., 0], side="right")
    inputs = np.minimum((u[..., 1:] * V).astype(np.int64), V - 1)
    nmaps = np.array([len(f) for f in s.ifss])
    used = np.arange(M) < nmaps[ifs][..., None]
    return ifs, np.where(used, inputs, -1)


def records_from_block(ifs: np.ndarray, inputs: np.ndarray) -> list[TransitionRecord]:
    out = []
    for row_n, row_w in zip(ifs.tolist(), inputs.tolist()):
        out.append(TransitionRecord(
            tuple(row_n),
            tuple(tuple(w for w in ws if w >= 0) for ws in row_w),
        ))
    return out


def sample_transition(s: SuperIfs, rng: np.random.Generator) -> TransitionRecord:
    return records_from_block(*sample_block(s, rng, 1))[0]


def sample_records(s: SuperIfs, k_steps: int, seed: int) -> list[TransitionRecord]:
    """The records :func:`run` would draw for ``seed``, without the rasters."""
    return records_from_block(*sample_block(s, make_rng(seed), k_steps))


def is_neck(rec: TransitionRecord) -> bool:
    if len(set(rec.ifs_indices)) > 1:
        return False
    return len({w for ws in rec.inputs for w in ws}) <= 1


# --------------------------------------------------------------------------
# stepping


def step(state: BufferState, rec: TransitionRecord, s: SuperIfs) -> BufferState:
    if rec.V != state.V:
        raise ValueError(f"record for {rec.V} buffers applied to {state.V}")
    new = []
    for n, ws in zip(rec.ifs_indices, rec.inputs):
        f = s.ifss[n]
        parts = [(f.maps[i], state.buffers[w], f.weights[i]) for i, w in enumerate(ws)]
        new.append(image_union(parts, state.shape, state.kind))
    return BufferState(tuple(new), state.level + 1)


@dataclass(frozen=True, eq=False)
class CodeTree:
    """Construction history of one buffer.

    Nodes are hash-consed: two trees are structurally equal exactly when
    their ``key`` matches. Leaves (height 0) stand for the initial buffers
    and carry the buffer index in ``leaf``.
    """

    label: Optional[int]
    children: tuple["CodeTree", ...]
    height: int
    key: int
    leaf: Optional[int] = None


@dataclass
class TreeBuilder:
    _table: dict = field(default_factory=dict)

    def _intern(self, signature, make) -> CodeTree:
        node = self._table.get(signature)
        if node is None:
            node = make(len(self._table))
            self._table[signature] = node
        return node

    def leaf(self, v: int) -> CodeTree:
        return self._intern(("leaf", v), lambda key: CodeTree(None, (), 0, key, v))

    def node(self, label: int, children: Sequence[CodeTree]) -> CodeTree:
        children = tuple(children)
        sig = ("node", label, tuple(c.key for c in children))
        height = children[0].height + 1 if children else 1
        return self._intern(sig, lambda key: CodeTree(label, children, height, key))

    def grow(self, trees: Sequence[CodeTree], rec: TransitionRecord) -> list[CodeTree]:
        return [self.node(n, [trees[w] for w in ws]) for n, ws in zip(rec.ifs_indices, rec.inputs)]


def distinct_forms_at_depth(tree: CodeTree, depth: int) -> int:
    if not 0 <= depth <= tree.height:
        raise ValueError(f"depth {depth} outside 0..{tree.height}")
    frontier = {tree.key: tree}
    for _ in range(depth):
        frontier = {c.key: c for t in frontier.values() for c in t.children}
    return len(frontier)


@dataclass(frozen=True)
class RunResult:
    final: BufferState
    records: list[TransitionRecord]
    trees: list[CodeTree]


def iterate(
    s: SuperIfs,
    initial: Optional[BufferState] = None,
    k_steps: int = 20,
    seed: int = DEFAULT_SEED,
    res: int | tuple[int, int] = DEFAULT_RES,
    kind: str = SET,
) -> Iterator[tuple[TransitionRecord, BufferState, list[CodeTree]]]:
    """Yield ``(record, new_state, trees)`` after each of ``k_steps`` steps."""
    if k_steps < 0:
        raise ValueError("k_steps must be >= 0")
    state = initial if initial is not None else initial_state(s.V, res, kind)
    if state.V != s.V:
        raise ValueError(f"initial state has {state.V} buffers, system has V={s.V}")
    rng = make_rng(seed)
    builder = TreeBuilder()
    trees = [builder.leaf(v) for v in range(s.V)]
    for _ in range(k_steps):
        rec = sample_transition(s, rng)
        state = step(state, rec, s)
        trees = builder.grow(trees, rec)
        yield rec, state, trees


def run(
    s: SuperIfs,
    initial: Optional[BufferState] = None,
    k_steps: int = 20,
    seed: int = DEFAULT_SEED,
    res: int | tuple[int, int] = DEFAULT_RES,
    kind: str = SET,
) -> RunResult:
    state = initial if initial is not None else initial_state(s.V, res, kind)
    records: list[TransitionRecord] = []
    trees = [CodeTree(None, (), 0, v, v) for v in range(s.V)]
    for rec, state, trees in iterate(s, state, k_steps, seed):
        records.append(rec)
    return RunResult(state, records, trees)


# --------------------------------------------------------------------------
# point clouds (Monte Carlo analogue of measure buffers, carries colour)


@dataclass(frozen=True)
class PointCloudState:
    xy: np.ndarray
    rgb: Optional[np.ndarray]
    records: list[TransitionRecord]


def run_points(
    s: SuperIfs,
    n_points: int,
    k_steps: int = 25,
    seed: int = DEFAULT_SEED,
    initial_color: Optional[Sequence[float]] = (1.0, 1.0, 1.0),
) -> PointCloudState:
    """Evolve ``V`` clouds of ``n_points`` points each.

    Each output point picks a map slot of its buffer's IFS by weight and a
    uniform source point from that slot's input buffer. Colours, when
    ``initial_color`` is given, ride along through the colour parts; the
    random draws do not depend on colour, so spatial output is identical
    with or without it.
    """
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    V = s.V
    rng = make_rng(seed)
    xy = rng.random((V, n_points, 2))
    rgb = None
    if initial_color is not None:
        rgb = np.broadcast_to(np.asarray(initial_color, float), (V, n_points, 3)).copy()
    records = []
    for _ in range(k_steps):
        rec = sample_transition(s, rng)
        records.append(rec)
        new_xy = np.empty_like(xy)
        new_rgb = None if rgb is None else np.empty_like(rgb)
        for v, (n, ws) in enumerate(zip(rec.ifs_indices, rec.inputs)):
            f = s.ifss[n]
            slot = np.searchsorted(_cumulative(f.weights), rng.random(n_points), side="right")
            src = np.minimum((rng.random(n_points) * n_points).astype(np.int64), n_points - 1)
            for i, w in enumerate(ws):
                sel = slot == i
                new_xy[v, sel] = f.maps[i].apply_xy(xy[w, src[sel]])
                if rgb is not None:
                    new_rgb[v, sel] = f.maps[i].apply_rgb(rgb[w, src[sel]])
        xy, rgb = new_xy, new_rgb
    return PointCloudState(xy, rgb, records)


# --------------------------------------------------------------------------
# record dump: ``k=1 | 1:U(L,R) | 2:U(R,R)``


def _buffer_label(w: int, V: int) -> str:
    return "LR"[w] if V == 2 else str(w + 1)


def format_record(k: int, rec: TransitionRecord, s: SuperIfs) -> str:
    parts = [f"k={k}"]
    for v, (n, ws) in enumerate(zip(rec.ifs_indices, rec.inputs), start=1):
        args = ",".join(_buffer_label(w, s.V) for w in ws)
        parts.append(f"{v}:{s.ifss[n].name}({args})")
    return " | ".join(parts)


def format_records(records: Sequence[TransitionRecord], s: SuperIfs) -> str:
    return "".join(format_record(k, r, s) + "\n" for k, r in enumerate(records, start=1))


_ENTRY_RE = re.compile(r"^(\d+):([A-Za-z_][A-Za-z0-9_\-]*)\(([^)]*)\)$")


def parse_records(text: str, s: SuperIfs) -> list[TransitionRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        head, *entries = [p.strip() for p in line.split("|")]
        if head != f"k={len(out) + 1}":
            raise ValueError(f"line {lineno}: expected k={len(out) + 1}, got {head!r}")
        ns, wss = [], []
        for entry in entries:
            m = _ENTRY_RE.match(entry)
            if not m:
                raise ValueError(f"line {lineno}: bad entry {entry!r}")
            ns.append(s.index_of(m.group(2)))
            labels = [x for x in m.group(3).split(",") if x]
            wss.append(tuple("LR".index(x) if s.V == 2 else int(x) - 1 for x in labels))
        out.append(TransitionRecord(tuple(ns), tuple(wss)))
    return out

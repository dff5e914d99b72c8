"""Pressure function and dimension of V-variable fractals built from similitudes.

Each construction step gives a non-negative ``V x V`` matrix whose ``(v, w)``
entry sums ``r**alpha`` over the map slots of buffer ``v`` fed by input
buffer ``w``. The pressure is the growth rate of
``log(||M_1 ... M_k|| / V) / k`` with ``||.||`` the entry sum; its zero in
``alpha`` is the dimension.

Products are renormalised every step (the running log-scale is kept), so
nothing under- or overflows however long the run.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import similitude_ratio
from .ifs_model import SuperIfs
from .rng import DEFAULT_SEED, chain_rng
from .vvariable import TransitionRecord, sample_block

log = logging.getLogger(__name__)

SIMILITUDE_MESSAGE = "dimension machinery requires similitudes"
DEFAULT_K = 5000
DEFAULT_CHAINS = 64
Z95 = 1.959963984540054


class DimensionError(ValueError):
    pass


def similitude_ratios(s: SuperIfs, tol: float = 1e-9) -> np.ndarray:
    """``(N, M)`` table of contraction ratios, NaN in unused slots."""
    table = np.full((len(s.ifss), s.max_maps), np.nan)
    for n, f in enumerate(s.ifss):
        for i, m in enumerate(f.maps):
            r = similitude_ratio(m, tol)
            if r is None:
                raise DimensionError(
                    f"{SIMILITUDE_MESSAGE}: ifs {f.name} map {i + 1} is not a similitude"
                )
            table[n, i] = r
    return table


def _weights(ratios: np.ndarray, alpha: float) -> np.ndarray:
    valid = ~np.isnan(ratios)
    out = np.zeros_like(ratios)
    out[valid] = ratios[valid] ** alpha
    return out


@dataclass(frozen=True, eq=False)
class AlphaMatrix:
    entries: np.ndarray
    alpha: float

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)


def build_matrix(rec: TransitionRecord, s: SuperIfs, alpha: float) -> AlphaMatrix:
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    w = _weights(similitude_ratios(s), alpha)
    entries = np.zeros((s.V, s.V))
    for v, (n, inputs) in enumerate(zip(rec.ifs_indices, rec.inputs)):
        for i, src in enumerate(inputs):
            entries[v, src] += w[n, i]
    return AlphaMatrix(entries, float(alpha))


def matrix_norm(m: AlphaMatrix | np.ndarray) -> float:
    entries = m.entries if isinstance(m, AlphaMatrix) else np.asarray(m)
    return float(np.abs(entries).sum())


@dataclass(frozen=True, eq=False)
class PressureEstimate:
    alpha: float
    k_steps: int
    chains: int
    gamma_hat: float
    ci95_halfwidth: Optional[float]
    log_norm_trace: np.ndarray
    per_chain: np.ndarray


class RecordEnsemble:
    """Transition records of independent chains, reused for every alpha.

    Holding the records fixed while alpha varies gives common random
    numbers: each chain's estimate is then a deterministic, non-increasing
    function of alpha.
    """

    def __init__(self, s: SuperIfs, ifs: np.ndarray, inputs: np.ndarray, seed: Optional[int] = None):
        self.s = s
        self.ratios = similitude_ratios(s)
        self.ifs = ifs
        self.inputs = inputs
        self.seed = seed

    @classmethod
    def sample(cls, s: SuperIfs, k_steps: int = DEFAULT_K, chains: int = DEFAULT_CHAINS,
               seed: int = DEFAULT_SEED) -> "RecordEnsemble":
        if k_steps < 1 or chains < 1:
            raise ValueError("k_steps and chains must be >= 1")
        similitude_ratios(s)
        blocks = [sample_block(s, chain_rng(seed, c), k_steps) for c in range(chains)]
        ifs = np.stack([b[0] for b in blocks])
        inputs = np.stack([b[1] for b in blocks])
        return cls(s, ifs, inputs, seed)

    @classmethod
    def from_records(cls, records: Sequence[TransitionRecord], s: SuperIfs) -> "RecordEnsemble":
        if not records:
            raise ValueError("need at least one record")
        M = s.max_maps
        ifs = np.array([[r.ifs_indices for r in records]], dtype=np.int64)
        inputs = np.full((1, len(records), s.V, M), -1, dtype=np.int64)
        for t, r in enumerate(records):
            for v, ws in enumerate(r.inputs):
                inputs[0, t, v, : len(ws)] = ws
        return cls(s, ifs, inputs)

    @property
    def chains(self) -> int:
        return self.ifs.shape[0]

    @property
    def k_steps(self) -> int:
        return self.ifs.shape[1]

    def _matrix_blocks(self, alpha: float):
        """Yield ``(C, B, V, V)`` matrix blocks in step order."""
        C, K, V = self.ifs.shape
        M = self.inputs.shape[-1]
        w = _weights(self.ratios, alpha)
        block = max(1, 2_000_000 // max(1, C * V * V))
        for start in range(0, K, block):
            n = self.ifs[:, start:start + block]
            src = self.inputs[:, start:start + block]
            B = n.shape[1]
            weight = w[n[..., None], np.arange(M)]
            used = src >= 0
            base = np.arange(C * B * V).reshape(C, B, V, 1) * V
            flat = (base + np.where(used, src, 0))[used]
            mats = np.bincount(flat, weights=weight[used], minlength=C * B * V * V)
            yield mats.reshape(C, B, V, V)

    def _run(self, alpha: float, full: bool):
        C, K, V = self.ifs.shape
        logs = np.zeros(C)
        trace = np.empty(K)
        x = np.ones((C, 1, V)) if not full else np.broadcast_to(np.eye(V), (C, V, V)).copy()
        t = 0
        for mats in self._matrix_blocks(alpha):
            for j in range(mats.shape[1]):
                x = x @ mats[:, j]
                scale = x.sum(axis=(1, 2))
                logs += np.log(scale)
                x /= scale[:, None, None]
                trace[t] = logs.mean()
                t += 1
        return logs, trace, x

    def gammas(self, alpha: float) -> np.ndarray:
        """Per-chain ``(1/k) log(||product|| / V)``."""
        logs, _, _ = self._run(alpha, full=False)
        return (logs - math.log(self.s.V)) / self.k_steps

    def estimate(self, alpha: float) -> PressureEstimate:
        logs, trace, _ = self._run(alpha, full=False)
        per_chain = (logs - math.log(self.s.V)) / self.k_steps
        ci = None
        if self.chains > 1:
            ci = float(Z95 * per_chain.std(ddof=1) / math.sqrt(self.chains))
        return PressureEstimate(
            alpha=float(alpha),
            k_steps=self.k_steps,
            chains=self.chains,
            gamma_hat=float(per_chain.mean()),
            ci95_halfwidth=ci,
            log_norm_trace=trace,
            per_chain=per_chain,
        )

    def row_sum_pressures(self, alpha: float) -> np.ndarray:
        """``(C, V)`` array of ``(1/k) log`` row sums of the full product."""
        logs, _, prod = self._run(alpha, full=True)
        return (logs[:, None] + np.log(prod.sum(axis=2))) / self.k_steps


def pressure_estimate(s: SuperIfs, alpha: float, k_steps: int = DEFAULT_K,
                      chains: int = DEFAULT_CHAINS, seed: int = DEFAULT_SEED) -> PressureEstimate:
    return RecordEnsemble.sample(s, k_steps, chains, seed).estimate(alpha)


def pressure_curve(s: SuperIfs, alphas: Sequence[float], k_steps: int = DEFAULT_K,
                   chains: int = DEFAULT_CHAINS, seed: int = DEFAULT_SEED) -> list[PressureEstimate]:
    ens = RecordEnsemble.sample(s, k_steps, chains, seed)
    return [ens.estimate(a) for a in alphas]


def row_sum_pressure(records: Sequence[TransitionRecord], s: SuperIfs, alpha: float, v: int) -> float:
    """``(1/k) log`` of row ``v`` (0-based) of the product over ``records``."""
    if not 0 <= v < s.V:
        raise ValueError(f"buffer {v} outside 0..{s.V - 1}")
    return float(RecordEnsemble.from_records(records, s).row_sum_pressures(alpha)[0, v])


def gamma1_analytic(alpha: float, pF: float = 0.5, rF: float = 0.5, rG: float = 1.0 / 3.0, M: int = 3) -> float:
    """V = 1 pressure for two M-map IFSs with single ratios ``rF``, ``rG``."""
    return math.log(M) + alpha * (pF * math.log(rF) + (1.0 - pF) * math.log(rG))


def gamma1_exact(s: SuperIfs, alpha: float) -> float:
    """V = 1 pressure of any similitude system: ``sum_n P_n log sum_i r_ni**alpha``."""
    w = _weights(similitude_ratios(s), alpha)
    return float(sum(p * math.log(row.sum()) for p, row in zip(s.probabilities, w)))


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    ci95: Optional[float]
    gamma_at_root: float
    gamma_ci95: Optional[float]
    bracket: tuple[float, float]
    V: int
    k_steps: int
    chains: int


def solve_dimension_estimate(s: SuperIfs, tol: float = 1e-4, k_steps: int = DEFAULT_K,
                             chains: int = DEFAULT_CHAINS, seed: int = DEFAULT_SEED,
                             bracket: tuple[float, float] = (0.0, 2.0)) -> DimensionEstimate:
    if tol <= 0:
        raise ValueError("tol must be positive")
    ens = RecordEnsemble.sample(s, k_steps, chains, seed)

    def g(a):
        return float(ens.gammas(a).mean())

    lo, hi = bracket
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0 > g_hi):
        raise DimensionError(
            f"pressure does not change sign on [{lo}, {hi}]: gamma = {g_lo:.6g}, {g_hi:.6g}"
        )
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    d = 0.5 * (lo + hi)
    at_root = ens.estimate(d)
    h = 0.01
    slope = (g(d + h) - g(max(d - h, 0.0))) / (d + h - max(d - h, 0.0))
    ci = None
    if at_root.ci95_halfwidth is not None:
        ci = at_root.ci95_halfwidth / abs(slope)
        resolution = max(at_root.ci95_halfwidth, abs(slope) * tol)
        if abs(at_root.gamma_hat) > resolution:
            log.warning("pressure at root %.3g exceeds resolution %.3g", at_root.gamma_hat, resolution)
    return DimensionEstimate(d, ci, at_root.gamma_hat, at_root.ci95_halfwidth, (lo, hi),
                             s.V, k_steps, chains)


def solve_dimension(s: SuperIfs, tol: float = 1e-4, k_steps: int = DEFAULT_K,
                    chains: int = DEFAULT_CHAINS, seed: int = DEFAULT_SEED) -> float:
    return solve_dimension_estimate(s, tol, k_steps, chains, seed).value


def moran_dimension(s: SuperIfs, tol: float = 1e-12) -> float:
    """Root of ``sum_n P_n sum_m r_nm**d = 1`` (the V -> infinity dimension)."""
    ratios = similitude_ratios(s)
    probs = np.asarray(s.probabilities)

    def excess(d):
        return float(probs @ _weights(ratios, d).sum(axis=1)) - 1.0

    if excess(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while excess(hi) > 0:
        lo, hi = hi, hi * 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


CSV_HEADER = "alpha,gamma_hat,ci95,k,chains,V,seed"


def curve_csv(estimates: Sequence[PressureEstimate], V: int, seed: int) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for e in estimates:
        ci = "NA" if e.ci95_halfwidth is None else f"{e.ci95_halfwidth:.10g}"
        buf.write(f"{e.alpha:.10g},{e.gamma_hat:.10g},{ci},{e.k_steps},{e.chains},{V},{seed}\n")
    return buf.getvalue()

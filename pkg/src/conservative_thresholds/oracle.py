"""Brute-force worst-case regret by enumerating adversarial predictor pairs.

This is an independent check on :mod:`.threshold`: it never evaluates a closed
form. For a threshold ``j`` it searches predictor/truth pairs inside the
miscalibration budget and reports the largest regret found, together with the
witness pair that attains it.

Search space
------------
* Prediction values live on a refined grid with ``M = lcm(m, resolution)``
  intervals, so the adversary can sit exactly on, or one refined step beside,
  any grid threshold.
* Conditional outcome means live on the ``resolution`` grid; masses are
  multiples of ``1/resolution``.
* A prediction lying exactly on the threshold may be classified either way
  (the adversary picks). Both choices are ordinary strict-inequality
  classifiers on the refined grid, so every witness replays exactly through
  :func:`.benefit.regret`.
* For ECE, the outcome mean of the last level set is only tried at the two
  ends of its feasible interval. Regret is convex in that coordinate once the
  others are fixed, so this loses nothing on the grid.

All feasibility tests run in exact integer arithmetic. Enumeration order is
lexicographic and the first maximum wins, so certificates do not depend on
``jobs``.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from . import benefit
from .calibration import Relation
from .core import BinnedPair, Grid, make_context_from_jstar
from .errors import DegenerateCostError, OracleBudgetError, RangeError

GENERAL_MAX_M = 12
GENERAL_MAX_ADVERSARIES = 50_000_000
CACHE_MAX_ENTRIES = 20_000_000
TIE_TOL = 1e-12
_EPS = 1e-9


@dataclass(frozen=True)
class OracleConfig:
    """Discretisation of the adversary search.

    ``threshold_steps`` defaults to ``m + 1`` (every grid threshold) when left
    as ``None``.
    """

    resolution: int = 40
    threshold_steps: Optional[int] = None
    support_cap: int = 2

    def __post_init__(self):
        if self.resolution < 4:
            raise RangeError(f"resolution must be >= 4, got {self.resolution}")
        if self.support_cap < 1:
            raise RangeError(f"support_cap must be >= 1, got {self.support_cap}")

    def steps_for(self, grid: Grid) -> int:
        steps = grid.m + 1 if self.threshold_steps is None else self.threshold_steps
        if steps < grid.m + 1:
            raise RangeError(f"threshold_steps must be >= m+1={grid.m + 1}, got {steps}")
        return steps


@dataclass(frozen=True)
class OracleCertificate:
    """Largest regret found for threshold ``j`` and the pair that attains it.

    The witness lives on the refined grid ``witness.grid`` (``scale`` refined
    steps per original step); ``threshold`` and ``comparator`` are indices on
    that grid.
    """

    j: float
    jstar: float
    alpha: float
    relation: Relation
    approx_cost: float
    discretization_bound: float
    witness: BinnedPair
    threshold: int
    comparator: int
    scale: int
    search_value: float = field(repr=False)

    @property
    def witness_jstar(self) -> float:
        return self.jstar * self.scale

    @property
    def j_R(self) -> float:
        """Comparator threshold in original grid units (``-1/scale`` means treat everyone)."""
        return self.comparator / self.scale

    def replay(self) -> float:
        """Regret of the witness at ``(threshold, comparator)`` via :mod:`.benefit`."""
        ctx = make_context_from_jstar(self.witness_jstar, self.witness.grid)
        return benefit.net_benefit(self.witness, self.comparator, ctx) - benefit.net_benefit(
            self.witness, self.threshold, ctx
        )

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "jstar": self.jstar,
            "alpha": self.alpha,
            "relation": str(self.relation),
            "cost": self.approx_cost,
            "bound": self.discretization_bound,
            "witness": {
                "m": self.witness.m,
                "mu": [float(x) for x in self.witness.mu],
                "ytilde": [None if np.isnan(y) else float(y) for y in self.witness.ytilde],
                "threshold": self.threshold,
                "j_R": self.comparator,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# shared helpers


class _Setup(NamedTuple):
    m: int
    K: int
    M: int
    step: int  # refined indices per outcome-mean step
    scale: int  # refined indices per original index
    js: float  # jstar on the refined grid
    denom: float  # min(M - js, js)
    t_strict: float
    t_closed: float


def _setup(j: float, jstar: float, alpha: float, grid: Grid, cfg: OracleConfig) -> _Setup:
    m = grid.m
    if not (math.isfinite(alpha) and 0 <= alpha <= 1):
        raise RangeError(f"alpha must lie in [0, 1], got {alpha!r}")
    if not (math.isfinite(jstar) and 0 <= jstar <= m):
        raise RangeError(f"jstar must lie in [0, {m}], got {jstar!r}")
    if jstar in (0, m):
        raise DegenerateCostError(f"jstar={jstar!r} is at the edge of [0, {m}]")
    if not (math.isfinite(j) and 0 <= j <= m):
        raise RangeError(f"threshold j must lie in [0, {m}], got {j!r}")
    K = cfg.resolution
    M = math.lcm(m, K)
    scale = M // m
    js = jstar * scale
    t = j * scale
    # prediction exactly at the threshold counts as treated under t_closed
    t_closed = math.ceil(t - _EPS) - 1 if abs(t - round(t)) <= _EPS else math.floor(t)
    t_strict = round(t) if abs(t - round(t)) <= _EPS else t
    return _Setup(m, K, M, M // K, scale, js, min(M - js, js), t_strict, t_closed)


def _budget_units(alpha: float, units: int) -> int:
    return int(math.floor(alpha * units + _EPS))


def _bound(relation: Relation, jstar: float, m: int, K: int, M: int) -> float:
    d = min(m - jstar, jstar)
    pitch = 2 * m / M + m / K
    if relation is Relation.ECE:
        # masses are rounded to 1/K too
        pitch += max(jstar, m - jstar) / K
    return pitch / d


def _witness(st: _Setup, levels) -> BinnedPair:
    """Pair on the refined grid from ``[(index, mass_units, mean_index), ...]``."""
    grid = Grid(st.M)
    mass = {}
    weighted = {}
    for i, a, s in levels:
        if a == 0:
            continue
        mass[i] = mass.get(i, 0) + a
        weighted[i] = weighted.get(i, 0) + a * s
    total = sum(mass.values())
    bins = {i: (mass[i] / total, weighted[i] / (mass[i] * st.M)) for i in mass}
    return BinnedPair.from_bins(grid, bins)


def _certificate(st, relation, j, jstar, alpha, levels, use_closed, search_value) -> OracleCertificate:
    pair = _witness(st, levels)
    threshold = st.t_closed if use_closed else st.t_strict
    ctx = make_context_from_jstar(st.js, pair.grid)
    res = benefit.regret(pair, threshold, ctx)
    cost = benefit.net_benefit(pair, res.comparator, ctx) - benefit.net_benefit(pair, threshold, ctx)
    return OracleCertificate(
        j=float(j),
        jstar=float(jstar),
        alpha=float(alpha),
        relation=relation,
        approx_cost=cost,
        discretization_bound=_bound(relation, jstar, st.m, st.K, st.M),
        witness=pair,
        threshold=threshold,
        comparator=res.comparator,
        scale=st.scale,
        search_value=search_value,
    )


def _reduce(parts):
    """Combine per-chunk results, value first, keeping the earliest chunk on ties."""
    best = None
    for p in parts:
        if p is not None and (best is None or p[0] > best[0]):
            best = p
    return best


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _best_of(regret_strict: np.ndarray, regret_closed: np.ndarray):
    both = np.maximum(regret_strict, regret_closed)
    if both.size == 0:
        return None
    k = int(np.argmax(both))
    return float(both[k]), k, bool(regret_closed[k] > regret_strict[k])


# ---------------------------------------------------------------------------
# constant adversaries (MCE)


@lru_cache(maxsize=16)
def _mce_table(M: int, K: int, A: int):
    step = M // K
    i = np.arange(M + 1)
    s = np.arange(0, M + 1, step)
    ii, ss = np.meshgrid(i, s, indexing="ij")
    keep = np.abs(ss - ii) <= A
    return ii[keep], ss[keep]


def oracle_cost_mce(j: float, jstar: float, alpha: float, grid: Grid, cfg: OracleConfig = OracleConfig()) -> OracleCertificate:
    """Worst regret of ``j`` over constant predictors with gap at most ``alpha``."""
    st = _setup(j, jstar, alpha, grid, cfg)
    i, s = _mce_table(st.M, st.K, _budget_units(alpha, st.M))
    g = (s - st.js) / st.denom
    best = np.maximum(g, 0.0)
    found = _best_of(best - g * (i > st.t_strict), best - g * (i > st.t_closed))
    value, k, closed = found
    levels = [(int(i[k]), 1, int(s[k]))]
    return _certificate(st, Relation.MCE, j, jstar, alpha, levels, closed, value)


# ---------------------------------------------------------------------------
# two-level adversaries (ECE)


@lru_cache(maxsize=4)
def _ece_base(M: int, K: int):
    """Every ``(i1 <= i2, s1)`` row in lexicographic order, with ``|s1 - i1|``."""
    step = M // K
    i1, i2 = np.triu_indices(M + 1)
    s1 = np.arange(0, M + 1, step, dtype=np.int32)
    I1 = np.repeat(i1.astype(np.int32), s1.size)
    I2 = np.repeat(i2.astype(np.int32), s1.size)
    S1 = np.tile(s1, i1.size)
    return I1, I2, S1, np.abs(S1 - I1)


def _ece_chunk(M: int, K: int, B: int, a: int):
    """Feasible rows for lower-level mass ``a/K``: ``(i1, i2, s1, s2_low, s2_high)``.

    ``s2_low`` and ``s2_high`` are the ends of the grid interval the upper
    level's outcome mean may take with the budget left over.
    """
    step = M // K
    I1, I2, S1, D1 = _ece_base(M, K)
    rest = B - a * D1.astype(np.int64)
    keep = np.flatnonzero(rest >= 0)
    I1, I2, S1, rest = I1[keep], I2[keep], S1[keep], rest[keep]
    if a == K:
        # upper level carries no mass; its outcome mean is irrelevant
        S2 = (I2 // step) * step
        return I1, I2, S1, S2, S2
    w = rest // (K - a)
    lo = -((-np.maximum(I2 - w, 0)) // step) * step
    hi = (np.minimum(I2 + w, M) // step) * step
    ok = np.flatnonzero(lo <= hi)
    return I1[ok], I2[ok], S1[ok], lo[ok], hi[ok]


@lru_cache(maxsize=4)
def _ece_table(M: int, K: int, B: int):
    return tuple(_ece_chunk(M, K, B, a) for a in range(K + 1))


def _ece_size_estimate(M: int, K: int) -> int:
    return (K + 1) * (M + 1) * (M + 2) // 2 * (K + 1)


def oracle_cost_ece(
    j: float, jstar: float, alpha: float, grid: Grid, cfg: OracleConfig = OracleConfig(), jobs: int = 1
) -> OracleCertificate:
    """Worst regret of ``j`` over predictors on at most two values with ECE at most ``alpha``."""
    st = _setup(j, jstar, alpha, grid, cfg)
    K, M = st.K, st.M
    B = _budget_units(alpha, K * M)
    cached = _ece_table(M, K, B) if _ece_size_estimate(M, K) <= CACHE_MAX_ENTRIES else None
    scale1 = K * st.denom

    def regrets(g1, g2, I1, I2, split):
        best = np.maximum(np.maximum(g1 + g2, 0.0), np.where(split, g2, 0.0))
        strict = best - (g1 * (I1 > st.t_strict) + g2 * (I2 > st.t_strict))
        closed = best - (g1 * (I1 > st.t_closed) + g2 * (I2 > st.t_closed))
        return strict, closed

    def scan(a: int):
        I1, I2, S1, LO, HI = cached[a] if cached is not None else _ece_chunk(M, K, B, a)
        if I1.size == 0:
            return None
        g1 = a * (S1 - st.js) / scale1
        split = I1 < I2
        lo_s, lo_c = regrets(g1, (K - a) * (LO - st.js) / scale1, I1, I2, split)
        hi_s, hi_c = regrets(g1, (K - a) * (HI - st.js) / scale1, I1, I2, split)
        lo = np.maximum(lo_s, lo_c)
        hi = np.maximum(hi_s, hi_c)
        k = int(np.argmax(np.maximum(lo, hi)))
        # order within a row: low end before high end, strict before closed
        if lo[k] >= hi[k]:
            return float(lo[k]), a, k, False, bool(lo_c[k] > lo_s[k])
        return float(hi[k]), a, k, True, bool(hi_c[k] > hi_s[k])

    value, a, k, high, closed = _reduce(_map(scan, range(K + 1), jobs))
    I1, I2, S1, LO, HI = cached[a] if cached is not None else _ece_chunk(M, K, B, a)
    s2 = HI[k] if high else LO[k]
    levels = [(int(I1[k]), a, int(S1[k])), (int(I2[k]), K - a, int(s2))]
    return _certificate(st, Relation.ECE, j, jstar, alpha, levels, closed, value)


def oracle_cost(j, jstar, alpha, relation, grid: Grid, cfg: OracleConfig = OracleConfig(), jobs: int = 1):
    if Relation.parse(relation) is Relation.MCE:
        return oracle_cost_mce(j, jstar, alpha, grid, cfg)
    return oracle_cost_ece(j, jstar, alpha, grid, cfg, jobs=jobs)


# ---------------------------------------------------------------------------
# general adversaries with several level sets


def _compositions(total: int, parts: int) -> np.ndarray:
    """All ways to write ``total`` as an ordered sum of ``parts`` positive integers."""
    rows = [
        np.diff((0,) + cuts + (total,))
        for cuts in itertools.combinations(range(1, total), parts - 1)
    ]
    return np.array(rows, dtype=np.int64).reshape(-1, parts)


def _general_estimate(M: int, K: int, S: int, relation: Relation, alpha: float) -> int:
    total = 0
    for n in range(1, S + 1):
        values = math.comb(M + 1, n)
        masses = math.comb(K - 1, n - 1)
        if relation is Relation.MCE:
            width = min(K + 1, 2 * int(alpha * K + _EPS) + 1)
            means = width ** n
        else:
            means = (K + 1) ** (n - 1) * 2
        total += values * masses * means
    return total


def _product(grid_s: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(grid_s, repeat=n)), dtype=np.int64)


def _general_block(M: int, K: int, relation: Relation, A: int, B: int, n: int):
    """Feasible adversaries with exactly ``n`` distinct values.

    Returns ``[(masses, I, S), ...]`` in lexicographic order, one entry per
    composition of the mass; ``I`` and ``S`` are ``(N, n)`` arrays of value and
    outcome-mean indices.
    """
    step = M // K
    vals = np.array(list(itertools.combinations(range(M + 1), n)), dtype=np.int64).reshape(-1, n)
    grid_s = np.arange(0, M + 1, step)
    masses = _compositions(K, n)
    if relation is Relation.MCE:
        # feasibility ignores the masses, so every composition shares one table
        combos = _product(grid_s, n)
        I = np.repeat(vals, combos.shape[0], axis=0)
        S = np.tile(combos, (vals.shape[0], 1))
        keep = np.all(np.abs(S - I) <= A, axis=1)
        I, S = I[keep], S[keep]
        return [(a, I, S) for a in masses]
    head = _product(grid_s, n - 1)
    I0 = np.repeat(vals, head.shape[0], axis=0)
    H0 = np.tile(head, (vals.shape[0], 1))
    out = []
    for a in masses:
        rest = B - (np.abs(H0 - I0[:, : n - 1]) * a[: n - 1]).sum(axis=1)
        keep = rest >= 0
        I, H, rest = I0[keep], H0[keep], rest[keep]
        w = rest // a[-1]
        last = I[:, -1]
        lo = -((-np.maximum(last - w, 0)) // step) * step
        hi = (np.minimum(last + w, M) // step) * step
        ok = lo <= hi
        I, H, lo, hi = I[ok], H[ok], lo[ok], hi[ok]
        ends = np.empty(2 * I.shape[0], dtype=np.int64)
        ends[0::2] = lo
        ends[1::2] = hi
        S = np.column_stack([np.repeat(H, 2, axis=0), ends])
        out.append((a, np.repeat(I, 2, axis=0), S))
    return out


@lru_cache(maxsize=4)
def _general_table(M: int, K: int, relation: Relation, A: int, B: int, S: int):
    return tuple(_general_block(M, K, relation, A, B, n) for n in range(1, S + 1))


def oracle_general(
    j: float, jstar: float, alpha: float, relation, grid: Grid, cfg: OracleConfig = OracleConfig(support_cap=3)
) -> OracleCertificate:
    """Worst regret of ``j`` over predictors with up to ``cfg.support_cap`` level sets.

    Exponential in the support size, so only small grids are allowed.
    """
    relation = Relation.parse(relation)
    if grid.m > GENERAL_MAX_M:
        raise OracleBudgetError(f"general search needs m <= {GENERAL_MAX_M}, got m={grid.m}")
    st = _setup(j, jstar, alpha, grid, cfg)
    K, M = st.K, st.M
    estimate = _general_estimate(M, K, cfg.support_cap, relation, alpha)
    if estimate > GENERAL_MAX_ADVERSARIES:
        raise OracleBudgetError(
            f"general search would enumerate about {estimate:,} adversaries "
            f"(limit {GENERAL_MAX_ADVERSARIES:,}); lower the resolution or support cap"
        )
    if relation is Relation.MCE:
        A, B = _budget_units(alpha, M), 0
    else:
        A, B = 0, _budget_units(alpha, K * M)
    blocks = _general_table(M, K, relation, A, B, cfg.support_cap)

    best = None
    for n, block in enumerate(blocks, start=1):
        for c, (a, I, S) in enumerate(block):
            if I.shape[0] == 0:
                continue
            g = a * (S - st.js) / (K * st.denom)
            # values are sorted ascending, so suffix sums are the comparator rules
            top = np.maximum(np.cumsum(g[:, ::-1], axis=1).max(axis=1), 0.0)
            lam_s = (g * (I > st.t_strict)).sum(axis=1)
            lam_c = (g * (I > st.t_closed)).sum(axis=1)
            found = _best_of(top - lam_s, top - lam_c)
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], n, c, found[1], found[2])
    value, n, c, k, closed = best
    a, I, S = blocks[n - 1][c]
    levels = [(int(I[k, q]), int(a[q]), int(S[k, q])) for q in range(n)]
    return _certificate(st, relation, j, jstar, alpha, levels, closed, value)


# ---------------------------------------------------------------------------


class ArgminResult(NamedTuple):
    j_min: float
    cost: float
    candidates: tuple
    costs: tuple


def oracle_argmin(
    jstar: float, alpha: float, relation, grid: Grid, cfg: OracleConfig = OracleConfig(), jobs: int = 1
) -> ArgminResult:
    """Candidate threshold with the smallest enumerated worst-case regret.

    Candidates are ``threshold_steps`` evenly spaced points of ``[0, m]``;
    near-ties go to the candidate closest to ``jstar``, then the smallest.
    """
    relation = Relation.parse(relation)
    steps = cfg.steps_for(grid)
    cands = tuple(grid.m * k / (steps - 1) for k in range(steps))
    if relation is Relation.MCE:
        costs = tuple(oracle_cost_mce(c, jstar, alpha, grid, cfg).approx_cost for c in cands)
    else:
        costs = tuple(oracle_cost_ece(c, jstar, alpha, grid, cfg, jobs=jobs).approx_cost for c in cands)
    low = min(costs)
    tied = [c for c, v in zip(cands, costs) if v <= low + TIE_TOL]
    j_min = min(tied, key=lambda c: (abs(c - jstar), c))
    return ArgminResult(j_min, costs[cands.index(j_min)], cands, costs)

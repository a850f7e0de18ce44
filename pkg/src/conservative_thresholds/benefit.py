"""Net Benefit calculus for thresholded risk predictions.

The Net Benefit of threshold ``j`` is evaluated under the costs implied by
the therapeutic threshold ``ctx.j_star`` (the two roles are kept apart), in
the symmetric normalisation where the smaller of profit and loss is one.

Thresholds are grid indices: bin ``i`` is treated iff ``i > j``. Any real
``j`` is accepted; ``j < 0`` is the treat-everyone rule, ``j >= m`` treats
no one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import BinnedPair, CostContext
from .errors import DegenerateCostError, RangeError

DUAL_TOL = 1e-12
TREAT_ALL = -1


def _check(pair: BinnedPair, ctx: CostContext) -> float:
    pair.require_valid()
    if pair.m != ctx.m:
        raise RangeError(f"pair grid m={pair.m} does not match cost context m={ctx.m}")
    denom = ctx.denominator
    if not denom > 0:
        raise DegenerateCostError(f"j_star={ctx.j_star!r} leaves no room for symmetric costs")
    return denom


def _check_threshold(j) -> float:
    if not math.isfinite(j):
        raise RangeError(f"threshold must be a finite number, got {j!r}")
    return j


def _summands(pair: BinnedPair, ctx: CostContext, denom: float) -> np.ndarray:
    """Per-bin contribution to the Net Benefit when the bin is treated."""
    out = np.zeros(pair.grid.size)
    idx = pair.support
    out[idx] = pair.mu[idx] * (pair.m * pair.ytilde[idx] - ctx.j_star) / denom
    return out


def _nb(summands: np.ndarray, j) -> float:
    return math.fsum(summands[np.arange(summands.size) > j])


def tp_fp_fractions(pair: BinnedPair, j) -> tuple[float, float]:
    """Population fractions of true and false positives of the rule ``i > j``."""
    pair.require_valid()
    _check_threshold(j)
    idx = pair.support
    idx = idx[idx > j]
    y = pair.ytilde[idx]
    mu = pair.mu[idx]
    return math.fsum(mu * y), math.fsum(mu * (1.0 - y))


def net_benefit(pair: BinnedPair, j, ctx: CostContext) -> float:
    """Symmetric Net Benefit of treating bins above ``j``.

    Computed as ``sum_{i>j} mu_i (m*ytilde_i - j_star) / min(m - j_star, j_star)``
    and cross-checked against ``P'*TP - L'*FP``.
    """
    denom = _check(pair, ctx)
    _check_threshold(j)
    value = _nb(_summands(pair, ctx, denom), j)
    if __debug__:
        tp, fp = tp_fp_fractions(pair, j)
        dual = ctx.p_sym * tp - ctx.l_sym * fp
        assert abs(value - dual) <= DUAL_TOL * max(1.0, ctx.p_sym, ctx.l_sym), (value, dual)
    return value


class RegretResult(NamedTuple):
    value: float
    comparator: int


def _comparators(pair: BinnedPair) -> list[int]:
    # treat-everyone differs from j=0 only when bin 0 carries mass
    js = list(range(pair.m + 1))
    return [TREAT_ALL] + js if pair.mu[0] > 0 else js


def regret(pair: BinnedPair, j, ctx: CostContext) -> RegretResult:
    """Best constant-threshold Net Benefit minus that of ``j``.

    Comparators are every distinct threshold rule on the grid; ties go to the
    smallest index.
    """
    denom = _check(pair, ctx)
    _check_threshold(j)
    s = _summands(pair, ctx, denom)
    best_j, best = None, -math.inf
    for jp in _comparators(pair):
        v = _nb(s, jp)
        if v > best:
            best_j, best = jp, v
    return RegretResult(best - _nb(s, j), best_j)


def clinical_harm(pair: BinnedPair, j, ctx: CostContext) -> float:
    """Better of treat-all / treat-none minus the Net Benefit of ``j``."""
    denom = _check(pair, ctx)
    _check_threshold(j)
    s = _summands(pair, ctx, denom)
    return max(_nb(s, TREAT_ALL), 0.0) - _nb(s, j)


class CurvePoint(NamedTuple):
    j: int
    threshold: float
    nb_model: float
    nb_all: float
    nb_none: float
    utility: float


CURVE_FIELDS = ("j", "threshold", "nb_model", "nb_all", "nb_none", "utility")


@dataclass(frozen=True)
class DecisionCurve:
    jstar: float
    m: int
    points: tuple

    def point(self, j: int) -> CurvePoint:
        return self.points[j]

    def to_rows(self) -> list[dict]:
        return [p._asdict() for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_FIELDS)
        for p in self.points:
            w.writerow([p.j] + [repr(float(v)) for v in p[1:]])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"jstar": self.jstar, "m": self.m, "points": self.to_rows()}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def decision_curve(pair: BinnedPair, ctx: CostContext, jobs: int = 1) -> DecisionCurve:
    """Net Benefit of the model, treat-all and treat-none at every grid threshold."""
    denom = _check(pair, ctx)
    s = _summands(pair, ctx, denom)
    nb_all = _nb(s, TREAT_ALL)
    m = pair.m

    def point(j: int) -> CurvePoint:
        nb = _nb(s, j)
        return CurvePoint(j, j / m, nb, nb_all, 0.0, nb - max(nb_all, 0.0))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            points = tuple(ex.map(point, range(m + 1)))
    else:
        points = tuple(point(j) for j in range(m + 1))
    return DecisionCurve(ctx.j_star, m, points)

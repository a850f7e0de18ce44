"""Closed-form conservative therapeutic thresholds and the worst-case costs they minimise.

All quantities are in grid-index units: ``jstar`` and the returned ``j_hat``
live in ``[0, m]`` and the miscalibration budget ``alpha`` (probability units)
enters as ``alpha * m``.

The closed forms minimise their cost functions for ``alpha <= 1/2``; larger
budgets are accepted but the formulas are no longer minimisers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .calibration import Relation
from .core import Grid
from .errors import DegenerateCostError, RangeError

ECE_LEFT_VARIANTS = ("floor_one", "floor_zero")


def _check_alpha(alpha: float) -> float:
    if not (math.isfinite(alpha) and 0 <= alpha <= 1):
        raise RangeError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha > 0.5:
        warnings.warn("closed-form thresholds are only minimisers for alpha <= 0.5", stacklevel=3)
    return float(alpha)


def _check_jstar(jstar: float, m: int) -> float:
    if not (math.isfinite(jstar) and 0 < jstar < m):
        raise RangeError(f"jstar must lie strictly between 0 and m={m}, got {jstar!r}")
    return float(jstar)


def _denominator(jstar: float, m: int) -> float:
    d = min(m - jstar, jstar)
    if not d > 0:
        raise DegenerateCostError(f"jstar={jstar!r} is at the edge of [0, {m}]")
    return d


def worst_case_cost_mce(j: float, jstar: float, alpha: float, grid: Grid) -> float:
    """Largest regret of threshold ``j`` over pairs with MCE at most ``alpha``."""
    m = grid.m
    d = _denominator(jstar, m)
    am = alpha * m
    return max(min(m - jstar, j - jstar + am), min(jstar, jstar - j + am)) / d


def worst_case_cost_ece(j: float, jstar: float, alpha: float, grid: Grid) -> float:
    """Largest regret of threshold ``j`` over pairs with ECE at most ``alpha``.

    Four regimes split by ``j`` against ``jstar``, ``alpha*m`` and
    ``(1-alpha)*m``. Conditions are taken as closed; where several apply the
    largest value wins, which keeps the cost continuous across boundaries.
    """
    m = grid.m
    d = _denominator(jstar, m)
    am = alpha * m

    def ratio(num, den):
        if den > 0:
            return num / den
        return math.inf if num > 0 else 0.0

    vals = []
    if j <= jstar and j <= am:
        vals.append(max(jstar, ratio(am * (m - jstar), m - j)))
    if am <= j <= jstar:
        vals.append(max(jstar - j + am, ratio(am * (m - jstar), m - j)))
    if jstar <= j <= m - am:
        vals.append(max(j - jstar + am, ratio(am * jstar, j)))
    if j >= jstar and j >= m - am:
        vals.append(max(m - jstar, ratio(am * jstar, j)))
    if not vals:
        raise RangeError(f"threshold j={j!r} outside [0, {m}]")
    return max(vals) / d


def worst_case_cost(j: float, jstar: float, alpha: float, relation, grid: Grid) -> float:
    if Relation.parse(relation) is Relation.MCE:
        return worst_case_cost_mce(j, jstar, alpha, grid)
    return worst_case_cost_ece(j, jstar, alpha, grid)


@dataclass(frozen=True)
class ThresholdResult:
    j_hat: float
    relation: Relation
    alpha: float
    jstar: float
    cost_at_j_hat: float
    cost_at_jstar: float
    branch: str
    m: int

    @property
    def floor_index(self) -> int:
        """Grid threshold realising ``j_hat`` under the strict ``i > j`` rule."""
        return int(math.floor(self.j_hat + 1e-9))

    @property
    def nearest_index(self) -> int:
        return int(math.floor(self.j_hat + 0.5))

    def to_dict(self) -> dict:
        return {
            "j_hat": self.j_hat,
            "relation": str(self.relation),
            "alpha": self.alpha,
            "jstar": self.jstar,
            "m": self.m,
            "cost_at_j_hat": self.cost_at_j_hat,
            "cost_at_jstar": self.cost_at_jstar,
            "branch": self.branch,
            "floor_index": self.floor_index,
            "nearest_index": self.nearest_index,
        }


def _mce_branch(alpha: float, jstar: float, m: int) -> tuple[float, str]:
    am = alpha * m
    # identity first so boundary points return jstar itself
    if am <= jstar <= m - am:
        return jstar, "identity"
    if jstar <= am / 2:
        return 0.0, "left_clamp"
    if jstar <= am:
        return 2 * jstar - am, "left_ramp"
    if jstar <= (1 - alpha / 2) * m:
        return 2 * jstar - (m - am), "right_ramp"
    return float(m), "right_clamp"


def _ece_branch(alpha: float, jstar: float, m: int, left: str) -> tuple[float, str]:
    am = alpha * m
    if am <= jstar <= m - am:
        return jstar, "identity"
    if jstar < am:
        floor = 1.0 if left == "floor_one" else 0.0
        curve = (1 + alpha) * m - am * m / jstar
        return (curve, "left_curve") if curve > floor else (floor, "left_clamp")
    curve = am * jstar / (m - jstar)
    return (curve, "right_curve") if curve < m else (float(m), "right_clamp")


def _result(relation: Relation, alpha: float, jstar: float, grid: Grid, left: str) -> ThresholdResult:
    if relation is Relation.MCE:
        j_hat, branch = _mce_branch(alpha, jstar, grid.m)
        cost = worst_case_cost_mce
    else:
        j_hat, branch = _ece_branch(alpha, jstar, grid.m, left)
        cost = worst_case_cost_ece
    return ThresholdResult(
        j_hat, relation, alpha, jstar,
        cost(j_hat, jstar, alpha, grid), cost(jstar, jstar, alpha, grid),
        branch, grid.m,
    )


def conservative_threshold_mce(alpha: float, jstar: float, grid: Grid) -> ThresholdResult:
    """Regret-minimising threshold when the MCE can be as large as ``alpha``.

    Piecewise linear in ``jstar`` with slopes 0, 2, 1, 2, 0, breaking at
    ``alpha*m/2``, ``alpha*m``, ``(1-alpha)*m`` and ``(1-alpha/2)*m``.
    """
    alpha = _check_alpha(alpha)
    jstar = _check_jstar(jstar, grid.m)
    return _result(Relation.MCE, alpha, jstar, grid, "floor_one")


def conservative_threshold_ece(alpha: float, jstar: float, grid: Grid, left: str = "floor_one") -> ThresholdResult:
    """Regret-minimising threshold when the ECE can be as large as ``alpha``.

    ``left`` picks the floor of the low-``jstar`` branch: ``"floor_one"`` clamps
    at 1, ``"floor_zero"`` at 0. Only the latter minimises the worst-case cost
    where the clamp binds.
    """
    if left not in ECE_LEFT_VARIANTS:
        raise RangeError(f"left must be one of {ECE_LEFT_VARIANTS}, got {left!r}")
    alpha = _check_alpha(alpha)
    jstar = _check_jstar(jstar, grid.m)
    return _result(Relation.ECE, alpha, jstar, grid, left)


def conservative_threshold(alpha: float, jstar: float, relation, grid: Grid, ece_left: str = "floor_one") -> ThresholdResult:
    if Relation.parse(relation) is Relation.MCE:
        return conservative_threshold_mce(alpha, jstar, grid)
    return conservative_threshold_ece(alpha, jstar, grid, left=ece_left)


def jstar_grid(m: int, steps: int) -> list[float]:
    """``steps`` evenly spaced interior points of ``(0, m)``: ``m*k/(steps+1)``."""
    if steps < 1:
        raise RangeError(f"steps must be >= 1, got {steps}")
    return [m * k / (steps + 1) for k in range(1, steps + 1)]


@dataclass(frozen=True)
class SweepTable:
    alpha: float
    relation: Relation
    m: int
    rows: tuple  # of (jstar, j_hat, branch)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["jstar", "j_hat", "branch"])
        for js, jh, br in self.rows:
            w.writerow([repr(js), repr(jh), br])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "alpha": self.alpha,
            "relation": str(self.relation),
            "m": self.m,
            "rows": [{"jstar": js, "j_hat": jh, "branch": br} for js, jh, br in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sweep(alpha: float, grid: Grid, relation, jstar_steps: int, ece_left: str = "floor_one", jobs: int = 1) -> SweepTable:
    """Closed-form threshold over an even grid of therapeutic thresholds."""
    if jstar_steps < 2:
        raise RangeError(f"jstar_steps must be >= 2, got {jstar_steps}")
    relation = Relation.parse(relation)
    if ece_left not in ECE_LEFT_VARIANTS:
        raise RangeError(f"ece_left must be one of {ECE_LEFT_VARIANTS}, got {ece_left!r}")
    alpha = _check_alpha(alpha)
    jstars = jstar_grid(grid.m, jstar_steps)

    def row(js):
        r = _result(relation, alpha, js, grid, ece_left)
        return (r.jstar, r.j_hat, r.branch)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            rows = tuple(ex.map(row, jstars))
    else:
        rows = tuple(map(row, jstars))
    return SweepTable(alpha, relation, grid.m, rows)

"""Expected and maximum calibration error of a binned predictor pair.

Both errors are in probability units: the gap of bin ``i`` is
``|ytilde[i] - i/m|``. Miscalibration budgets ``alpha`` elsewhere in the
package use the same units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import BinnedPair
from .errors import RangeError

RELATION_TOL = 1e-12


class Relation(str, Enum):
    ECE = "ECE"
    MCE = "MCE"

    @classmethod
    def parse(cls, value) -> "Relation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise RangeError(f"relation must be 'ece' or 'mce', got {value!r}") from None

    def __str__(self) -> str:
        return self.value


def _gaps(pair: BinnedPair) -> tuple[np.ndarray, np.ndarray]:
    idx = pair.support
    return idx, np.abs(pair.ytilde[idx] - idx / pair.m)


def expected_calibration_error(pair: BinnedPair) -> float:
    """Mass-weighted mean gap between bin value and mean outcome."""
    pair.require_valid()
    idx, gaps = _gaps(pair)
    if not gaps.size:
        return 0.0
    # masses sum to 1 only within MASS_TOL; keep ece <= mce under rounding
    return min(math.fsum(pair.mu[idx] * gaps), float(gaps.max()))


def maximum_calibration_error(pair: BinnedPair) -> float:
    """Largest gap over bins carrying positive mass."""
    pair.require_valid()
    _, gaps = _gaps(pair)
    return float(gaps.max()) if gaps.size else 0.0


def in_relation(pair: BinnedPair, relation, alpha: float) -> bool:
    """Whether ``pair`` is at most ``alpha``-miscalibrated under ``relation``."""
    if not alpha >= 0:
        raise RangeError(f"alpha must be non-negative, got {alpha!r}")
    relation = Relation.parse(relation)
    err = expected_calibration_error(pair) if relation is Relation.ECE else maximum_calibration_error(pair)
    return err <= alpha + RELATION_TOL


@dataclass(frozen=True)
class CalibrationReport:
    ece: float
    mce: float
    per_bin: tuple  # of (i, mu_i, ytilde_i, gap_i)

    def to_dict(self) -> dict:
        return {
            "ece": self.ece,
            "mce": self.mce,
            "bins": [{"i": i, "mu": mu, "ytilde": y, "gap": g} for i, mu, y, g in self.per_bin],
        }


def calibration_report(pair: BinnedPair) -> CalibrationReport:
    pair.require_valid()
    idx, gaps = _gaps(pair)
    rows = tuple(
        (int(i), float(pair.mu[i]), float(pair.ytilde[i]), float(g)) for i, g in zip(idx, gaps)
    )
    return CalibrationReport(expected_calibration_error(pair), maximum_calibration_error(pair), rows)

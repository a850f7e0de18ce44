"""Shared domain types: prediction grid, cost structure, binned predictor pairs.

Indices: a predictor outputs values ``i/m`` for ``i`` in ``0..m`` (both
endpoints included so constant predictors at 0 or 1 are representable).
A threshold index ``j`` classifies bin ``i`` as *treat* iff ``i > j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import CostError, InvalidPairError, RangeError

MASS_TOL = 1e-9
COST_RTOL = 1e-9


@dataclass(frozen=True)
class Grid:
    """Discretization of ``[0, 1]`` into ``m`` intervals."""

    m: int

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)):
            raise RangeError(f"grid size m must be an integer, got {self.m!r}")
        if self.m < 2:
            raise RangeError(f"grid size m must be >= 2, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def size(self) -> int:
        """Number of bins (``m + 1``)."""
        return self.m + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.m + 1)

    def value(self, i: int) -> float:
        return i / self.m

    def index(self, value: float) -> int:
        return int(round(value * self.m))


@dataclass(frozen=True)
class CostContext:
    """Utilities of a binary treat/don't-treat decision and what they imply.

    ``j_star`` is the therapeutic threshold in grid-index units; ``p_sym`` and
    ``l_sym`` are the profit and loss rescaled so the smaller equals one.
    """

    u_tp: float
    u_fp: float
    u_fn: float
    u_tn: float
    grid: Grid
    j_star: float
    p_sym: float
    l_sym: float

    @property
    def profit(self) -> float:
        return self.u_tp - self.u_fn

    @property
    def loss(self) -> float:
        return self.u_tn - self.u_fp

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def denominator(self) -> float:
        """``min(m - j_star, j_star)``, the normaliser of the symmetric Net Benefit."""
        return min(self.grid.m - self.j_star, self.j_star)

    def to_dict(self) -> dict:
        return {
            "u_tp": self.u_tp,
            "u_fp": self.u_fp,
            "u_fn": self.u_fn,
            "u_tn": self.u_tn,
            "m": self.grid.m,
            "j_star": self.j_star,
            "p_sym": self.p_sym,
            "l_sym": self.l_sym,
        }


def _symmetric_costs(j_star: float, m: int) -> tuple[float, float]:
    if j_star == m / 2:
        return 1.0, 1.0
    if j_star < m / 2:
        return (m - j_star) / j_star, 1.0
    return 1.0, j_star / (m - j_star)


def make_cost_context(u_tp: float, u_fp: float, u_fn: float, u_tn: float, grid: Grid) -> CostContext:
    """Build a :class:`CostContext` from the four outcome utilities.

    Raises
    ------
    CostError
        If the profit ``u_tp - u_fn`` or the loss ``u_tn - u_fp`` is not positive.
    """
    profit = u_tp - u_fn
    loss = u_tn - u_fp
    if not profit > 0:
        raise CostError(f"profit u_tp - u_fn must be positive, got {profit!r}")
    if not loss > 0:
        raise CostError(f"loss u_tn - u_fp must be positive, got {loss!r}")
    m = grid.m
    j_star = m * loss / (profit + loss)
    if not 0 < j_star < m:
        # profit/loss ratio so extreme the threshold underflows to the boundary
        raise CostError(f"cost ratio {profit!r}/{loss!r} puts the therapeutic threshold at {j_star!r}")
    p_sym, l_sym = _symmetric_costs(j_star, m)
    return CostContext(float(u_tp), float(u_fp), float(u_fn), float(u_tn), grid, j_star, p_sym, l_sym)


def make_context_from_jstar(j_star: float, grid: Grid) -> CostContext:
    """Cost context implied by a therapeutic threshold alone.

    Only the ratio of profit to loss matters, so the utilities are stored as
    ``u_tp = P'``, ``u_tn = L'`` and ``u_fn = u_fp = 0``.
    """
    m = grid.m
    if not (isinstance(j_star, (int, float, np.number)) and math.isfinite(j_star) and 0 < j_star < m):
        raise RangeError(f"j_star must lie strictly between 0 and m={m}, got {j_star!r}")
    j_star = float(j_star)
    p_sym, l_sym = _symmetric_costs(j_star, m)
    return CostContext(p_sym, 0.0, 0.0, l_sym, grid, j_star, p_sym, l_sym)


@dataclass(frozen=True)
class LabeledDataset:
    """Scored individuals with binary outcomes and optional group labels."""

    scores: np.ndarray
    outcomes: np.ndarray
    groups: Optional[tuple] = None

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float).reshape(-1)
        outcomes = np.asarray(self.outcomes).reshape(-1).astype(np.int8)
        if scores.shape != outcomes.shape:
            raise RangeError("scores and outcomes must have the same length")
        if scores.size == 0:
            raise RangeError("dataset is empty")
        if not np.all((scores >= 0) & (scores <= 1)):
            raise RangeError("scores must lie in [0, 1]")
        if not np.all((outcomes == 0) | (outcomes == 1)):
            raise RangeError("outcomes must be 0 or 1")
        scores.flags.writeable = False
        outcomes.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "outcomes", outcomes)
        if self.groups is not None:
            groups = tuple(self.groups)
            if len(groups) != scores.size:
                raise RangeError("groups must have one label per row")
            object.__setattr__(self, "groups", groups)

    def __len__(self) -> int:
        return int(self.scores.size)

    @property
    def has_groups(self) -> bool:
        return self.groups is not None

    def take(self, idx: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        groups = None if self.groups is None else tuple(self.groups[k] for k in idx)
        return LabeledDataset(self.scores[idx], self.outcomes[idx], groups)

    def group_labels(self) -> list:
        """Distinct group labels in order of first appearance."""
        if self.groups is None:
            return []
        return list(dict.fromkeys(self.groups))

    def subset(self, group) -> "LabeledDataset":
        if self.groups is None:
            raise RangeError("dataset has no group column")
        return self.take([k for k, g in enumerate(self.groups) if g == group])


@dataclass(frozen=True)
class Violation:
    """First broken invariant of a :class:`BinnedPair`."""

    code: str
    message: str
    bin: Optional[int] = None

    def __str__(self) -> str:
        where = "" if self.bin is None else f" (bin {self.bin})"
        return f"{self.code}: {self.message}{where}"


@dataclass(frozen=True, eq=False)
class BinnedPair:
    """Joint description of a predictor and the truth on a grid.

    ``mu[i]`` is the probability mass predicted ``i/m``; ``ytilde[i]`` the mean
    outcome among those individuals, ``nan`` where the bin is empty.
    """

    grid: Grid
    mu: np.ndarray
    ytilde: np.ndarray
    _checked: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        yt = np.array([np.nan if v is None else v for v in np.asarray(self.ytilde, dtype=object).reshape(-1)], dtype=float)
        mu.flags.writeable = False
        yt.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "ytilde", yt)

    @classmethod
    def from_bins(cls, grid: Grid, bins: Mapping[int, tuple[float, float]]) -> "BinnedPair":
        """Build from ``{i: (mass, mean_outcome)}``; unlisted bins are empty."""
        mu = np.zeros(grid.size)
        yt = np.full(grid.size, np.nan)
        for i, (mass, y) in bins.items():
            mu[i] = mass
            yt[i] = y if mass > 0 else np.nan
        return cls(grid, mu, yt)

    @classmethod
    def constant(cls, grid: Grid, i: int, y: float) -> "BinnedPair":
        return cls.from_bins(grid, {i: (1.0, y)})

    @classmethod
    def calibrated(cls, grid: Grid, mu: Sequence[float]) -> "BinnedPair":
        """Perfectly calibrated pair: ``ytilde[i] = i/m`` wherever ``mu[i] > 0``."""
        mu = np.asarray(mu, dtype=float)
        yt = np.where(mu > 0, grid.indices / grid.m, np.nan)
        return cls(grid, mu, yt)

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mu > 0)

    def require_valid(self) -> "BinnedPair":
        """Raise :class:`InvalidPairError` unless the pair passes validation."""
        if not self._checked:
            v = validate_binned_pair(self)
            if v is not None:
                raise InvalidPairError(v)
            self._checked.append(True)
        return self

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "mu": [float(x) for x in self.mu],
            "ytilde": [None if np.isnan(y) else float(y) for y in self.ytilde],
        }


def validate_binned_pair(pair: BinnedPair) -> Optional[Violation]:
    """Return the first violated invariant of ``pair``, or ``None`` if valid."""
    n = pair.grid.size
    if pair.mu.shape != (n,) or pair.ytilde.shape != (n,):
        return Violation("length", f"mu and ytilde must have length m+1={n}")
    for i, w in enumerate(pair.mu):
        if not math.isfinite(w) or w < 0:
            return Violation("negative mass", f"mass {w!r} is not a non-negative number", i)
    total = math.fsum(pair.mu)
    if abs(total - 1.0) > MASS_TOL:
        return Violation("mass sum", f"masses sum to {total!r}, expected 1")
    for i, (w, y) in enumerate(zip(pair.mu, pair.ytilde)):
        if w > 0 and np.isnan(y):
            return Violation("missing conditional mean", "bin has mass but no conditional mean", i)
        if w == 0 and not np.isnan(y):
            return Violation("unexpected conditional mean", "empty bin carries a conditional mean", i)
        if w > 0 and not 0.0 <= y <= 1.0:
            return Violation("conditional mean range", f"conditional mean {y!r} outside [0, 1]", i)
    return None

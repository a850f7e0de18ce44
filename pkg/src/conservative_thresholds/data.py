"""Reading, binning, splitting and synthesising scored outcome data.

Scores are mapped to the grid by rounding ``score * m`` half-up and clamping
to ``[0, m]``. All randomness comes from :func:`numpy.random.default_rng`
seeded with a non-negative 64-bit integer.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .core import BinnedPair, Grid, LabeledDataset
from .errors import DataError, RangeError

HEADERS = (("score", "outcome"), ("score", "outcome", "group"))
RISK_LAWS = ("uniform", "two_point", "logit_normal")
CORRUPTIONS = ("none", "logit_shift", "logit_scale", "subgroup_shift")
SHIFTED, REFERENCE = "shifted", "reference"
SEED_LIMIT = 2**64


def read_csv(path) -> LabeledDataset:
    """Parse a ``score,outcome[,group]`` file.

    Raises
    ------
    DataError
        On an empty file, a wrong header, or a row with an unparsable or
        out-of-range field; the message carries the 1-based line number.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError("file is empty")
    header = tuple(c.strip().lower() for c in rows[0])
    if header not in HEADERS:
        raise DataError(f"expected header 'score,outcome[,group]', got {','.join(rows[0])!r}", line=1)
    grouped = len(header) == 3
    scores, outcomes, groups = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", line=line)
        try:
            score = float(row[0])
        except ValueError:
            raise DataError(f"score {row[0]!r} is not a number", line=line) from None
        if not 0.0 <= score <= 1.0:
            raise DataError(f"score {score!r} outside [0, 1]", line=line)
        outcome = row[1].strip()
        if outcome not in ("0", "1"):
            raise DataError(f"outcome {row[1]!r} must be 0 or 1", line=line)
        scores.append(score)
        outcomes.append(int(outcome))
        if grouped:
            groups.append(row[2].strip())
    if not scores:
        raise DataError("file has a header but no data rows")
    return LabeledDataset(np.array(scores), np.array(outcomes), tuple(groups) if grouped else None)


def write_csv(data: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(data))


def format_csv(data: LabeledDataset) -> str:
    lines = ["score,outcome,group" if data.has_groups else "score,outcome"]
    for k in range(len(data)):
        row = f"{float(data.scores[k])!r},{int(data.outcomes[k])}"
        if data.has_groups:
            row += f",{data.groups[k]}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def bin_indices(scores: np.ndarray, grid: Grid) -> np.ndarray:
    """Grid bin of each score: ``score * m`` rounded half-up, clamped to ``[0, m]``."""
    idx = np.floor(np.asarray(scores, dtype=float) * grid.m + 0.5).astype(np.int64)
    return np.clip(idx, 0, grid.m)


def bin_dataset(data: LabeledDataset, grid: Grid) -> BinnedPair:
    """Empirical :class:`BinnedPair`: bin masses and mean outcome per bin."""
    idx = bin_indices(data.scores, grid)
    counts = np.bincount(idx, minlength=grid.size)
    positives = np.bincount(idx, weights=data.outcomes.astype(float), minlength=grid.size)
    mu = counts / len(data)
    with np.errstate(invalid="ignore", divide="ignore"):
        yt = np.where(counts > 0, positives / np.maximum(counts, 1), np.nan)
    return BinnedPair(grid, mu, yt)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < SEED_LIMIT:
        raise RangeError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return np.random.default_rng(int(seed))


def split(data: LabeledDataset, train_fraction: float, seed) -> tuple[LabeledDataset, LabeledDataset]:
    """Shuffle with ``seed`` and cut into ``floor(n * train_fraction)`` and the rest."""
    if not (math.isfinite(train_fraction) and 0 < train_fraction < 1):
        raise RangeError(f"train_fraction must lie strictly between 0 and 1, got {train_fraction!r}")
    n = len(data)
    n_train = int(math.floor(n * train_fraction))
    if n_train == 0 or n_train == n:
        raise RangeError(f"train_fraction={train_fraction!r} leaves an empty part of n={n} rows")
    perm = _rng(seed).permutation(n)
    return data.take(perm[:n_train]), data.take(perm[n_train:])


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic scored population.

    Risk laws
        ``uniform``: true risk uniform over the interior grid values ``i/m``.
        ``two_point``: with probability ``mass`` the score is ``value`` and the
        true risk ``true_risk``; otherwise ``other_value`` and ``other_true_risk``.
        ``logit_normal``: logit of the risk is normal(``location``, ``scale``).
    Corruptions (applied to the score before rounding to the grid)
        ``logit_shift``: add ``shift`` on the logit scale.
        ``logit_scale``: multiply the logit by ``factor``.
        ``subgroup_shift``: a ``group_fraction`` share is labelled ``shifted``
        and gets the logit shift; the rest is labelled ``reference``.
    """

    n: int
    risk_law: str = "uniform"
    corruption: str = "none"
    seed: int = 0
    value: float = 1.0
    true_risk: float = 0.9
    mass: float = 1.0
    other_value: float = 0.0
    other_true_risk: float = 0.0
    location: float = 0.0
    scale: float = 1.0
    shift: float = 0.0
    factor: float = 1.0
    group_fraction: float = 0.5

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise RangeError(f"n must be a positive integer, got {self.n!r}")
        if self.risk_law not in RISK_LAWS:
            raise RangeError(f"risk_law must be one of {RISK_LAWS}, got {self.risk_law!r}")
        if self.corruption not in CORRUPTIONS:
            raise RangeError(f"corruption must be one of {CORRUPTIONS}, got {self.corruption!r}")
        _rng(self.seed)
        for name in ("value", "true_risk", "mass", "other_value", "other_true_risk", "group_fraction"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0 <= v <= 1):
                raise RangeError(f"{name} must lie in [0, 1], got {v!r}")
        for name in ("location", "shift", "factor"):
            if not math.isfinite(getattr(self, name)):
                raise RangeError(f"{name} must be finite")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise RangeError(f"scale must be positive, got {self.scale!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _logit(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p) - np.log1p(-p)


def _expit(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def generate(spec: SyntheticSpec, grid: Grid) -> LabeledDataset:
    """Draw a reproducible synthetic dataset; scores are rounded to ``grid``."""
    rng = _rng(spec.seed)
    n = spec.n
    if spec.risk_law == "uniform":
        risk = rng.integers(1, grid.m, size=n) / grid.m
        score = risk.copy()
    elif spec.risk_law == "two_point":
        first = rng.random(n) < spec.mass
        risk = np.where(first, spec.true_risk, spec.other_true_risk)
        score = np.where(first, spec.value, spec.other_value)
    else:
        risk = _expit(rng.normal(spec.location, spec.scale, size=n))
        score = risk.copy()
    outcomes = (rng.random(n) < risk).astype(np.int8)

    groups: Optional[tuple] = None
    if spec.corruption == "logit_shift":
        score = _expit(_logit(score) + spec.shift)
    elif spec.corruption == "logit_scale":
        score = _expit(_logit(score) * spec.factor)
    elif spec.corruption == "subgroup_shift":
        shifted = rng.random(n) < spec.group_fraction
        score = np.where(shifted, _expit(_logit(score) + spec.shift), score)
        groups = tuple(SHIFTED if s else REFERENCE for s in shifted)
    score = bin_indices(score, grid) / grid.m
    return LabeledDataset(score, outcomes, groups)


def parse_config(path) -> dict[str, str]:
    """Read a ``key = value`` file; blank lines and ``#`` comments are ignored."""
    out = {}
    for line, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise DataError(f"expected 'key = value', got {raw.strip()!r}", line=line)
        key, value = (p.strip() for p in text.split("=", 1))
        if not key:
            raise DataError("empty key", line=line)
        out[key.replace("-", "_")] = value
    return out


def spec_from_mapping(values: Mapping[str, object]) -> SyntheticSpec:
    """Build a :class:`SyntheticSpec` from string or typed values keyed by field name."""
    fields = {f.name: f for f in dataclasses.fields(SyntheticSpec)}
    kwargs = {}
    for key, raw in values.items():
        if key not in fields:
            raise DataError(f"unknown synthetic setting {key!r}")
        kind = type(SyntheticSpec.__dataclass_fields__[key].default) if key != "n" else int
        try:
            kwargs[key] = kind(raw) if not isinstance(raw, kind) else raw
        except ValueError:
            raise DataError(f"setting {key}={raw!r} is not a valid {kind.__name__}") from None
    if "n" not in kwargs:
        raise DataError("synthetic settings need 'n'")
    return SyntheticSpec(**kwargs)

"""Desk-scale experiment designs built on the threshold and benefit modules.

* :func:`gain_delta`: Net Benefit gained by deploying the conservative
  threshold instead of the therapeutic one, averaged over a grid of
  therapeutic thresholds.
* :func:`subgroup_eval`: per-group calibration and clinical utility, to spot
  groups where deploying at the therapeutic threshold does harm.
* :func:`compare_relations`: gains under ECE and MCE budgets set to the
  observed calibration errors.

Thresholds are applied to data as ``floor(j_hat)`` and ``floor(jstar)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from . import benefit
from .calibration import Relation, expected_calibration_error, maximum_calibration_error
from .core import BinnedPair, Grid, LabeledDataset, make_context_from_jstar
from .data import bin_dataset
from .errors import DataError, RangeError
from .threshold import conservative_threshold, jstar_grid

HARM_TOL = 1e-12
DEFAULT_JSTAR_STEPS = 99


def default_jstar_grid(m: int) -> list[float]:
    """99 interior therapeutic thresholds ``m/100, ..., 99m/100``."""
    return jstar_grid(m, DEFAULT_JSTAR_STEPS)


def applied_index(threshold: float) -> int:
    """Grid threshold used on data; absorbs float noise just below an integer."""
    return int(math.floor(threshold + 1e-9))


def _check_jstars(jstars: Sequence[float], m: int) -> tuple:
    jstars = tuple(float(js) for js in jstars)
    if not jstars:
        raise RangeError("jstar grid is empty")
    for js in jstars:
        if not (math.isfinite(js) and 0 < js < m):
            raise RangeError(f"jstar values must lie strictly between 0 and m={m}, got {js!r}")
    return jstars


def _map(fn, items, jobs: int) -> list:
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _thresholds(alpha, jstar, relation, grid, ece_left):
    # budgets above one half are legitimate inputs here; the threshold is still defined
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return conservative_threshold(alpha, jstar, relation, grid, ece_left=ece_left)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class GainRow(NamedTuple):
    jstar: float
    j_hat: float
    nb_at_jhat: float
    nb_at_jstar: float
    gain: float


@dataclass(frozen=True)
class GainReport:
    alpha: float
    relation: Relation
    per_jstar: tuple
    mean_gain: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "relation": str(self.relation),
            "mean_gain": self.mean_gain,
            "per_jstar": [r._asdict() for r in self.per_jstar],
        }

    def to_json(self) -> str:
        return _json(self.to_dict())

    def to_csv(self) -> str:
        return _csv(GainRow._fields, self.per_jstar)


def gain_delta(
    test_pair: BinnedPair,
    alpha: float,
    relation,
    grid: Grid,
    jstars: Sequence[float],
    ece_left: str = "floor_one",
    jobs: int = 1,
) -> GainReport:
    """Net Benefit at the conservative threshold minus that at ``jstar``, per ``jstar``."""
    relation = Relation.parse(relation)
    test_pair.require_valid()
    if test_pair.m != grid.m:
        raise RangeError(f"pair grid m={test_pair.m} does not match m={grid.m}")
    jstars = _check_jstars(jstars, grid.m)

    def row(js: float) -> GainRow:
        ctx = make_context_from_jstar(js, grid)
        j_hat = _thresholds(alpha, js, relation, grid, ece_left).j_hat
        at_hat = benefit.net_benefit(test_pair, applied_index(j_hat), ctx)
        at_star = benefit.net_benefit(test_pair, applied_index(js), ctx)
        return GainRow(js, j_hat, at_hat, at_star, at_hat - at_star)

    rows = tuple(_map(row, jstars, jobs))
    mean = math.fsum(r.gain for r in rows) / len(rows)
    return GainReport(float(alpha), relation, rows, mean)


class GroupRow(NamedTuple):
    group: str
    n: int
    ece: float
    mce: float
    worst_clinical_utility_at_jstar: float
    worst_clinical_utility_at_jhat: float
    harmful_thresholds_jstar: tuple
    harmful_thresholds_jhat: tuple


@dataclass(frozen=True)
class SubgroupReport:
    alpha: float
    relation: Relation
    per_group: tuple

    def group(self, name: str) -> GroupRow:
        for row in self.per_group:
            if row.group == name:
                return row
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "relation": str(self.relation),
            "per_group": [
                {**r._asdict(), "harmful_thresholds_jstar": list(r.harmful_thresholds_jstar),
                 "harmful_thresholds_jhat": list(r.harmful_thresholds_jhat)}
                for r in self.per_group
            ],
        }

    def to_json(self) -> str:
        return _json(self.to_dict())

    def to_csv(self) -> str:
        header = GroupRow._fields
        rows = [
            r[:6] + (";".join(repr(v) for v in r[6]), ";".join(repr(v) for v in r[7]))
            for r in self.per_group
        ]
        return _csv(header, rows)


def _group_row(name, pair: BinnedPair, n: int, alpha, relation, grid, jstars, ece_left) -> GroupRow:
    at_star, at_hat = [], []
    for js in jstars:
        ctx = make_context_from_jstar(js, grid)
        j_hat = _thresholds(alpha, js, relation, grid, ece_left).j_hat
        at_star.append(0.0 - benefit.clinical_harm(pair, applied_index(js), ctx))
        at_hat.append(0.0 - benefit.clinical_harm(pair, applied_index(j_hat), ctx))
    return GroupRow(
        str(name), n,
        expected_calibration_error(pair), maximum_calibration_error(pair),
        min(at_star), min(at_hat),
        tuple(js for js, u in zip(jstars, at_star) if u < -HARM_TOL),
        tuple(js for js, u in zip(jstars, at_hat) if u < -HARM_TOL),
    )


def subgroup_eval(
    data: LabeledDataset,
    grid: Grid,
    alpha: float,
    relation,
    jstars: Sequence[float],
    ece_left: str = "floor_one",
    jobs: int = 1,
) -> SubgroupReport:
    """Calibration and clinical utility of each group, at ``jstar`` and at the conservative threshold.

    Clinical utility is the Net Benefit of the threshold minus the better of
    treat-all and treat-none; a threshold is harmful when it is below
    ``-1e-12``. Groups appear in order of first occurrence.
    """
    relation = Relation.parse(relation)
    if not data.has_groups:
        raise DataError("dataset has no group column")
    jstars = _check_jstars(jstars, grid.m)

    def row(name) -> GroupRow:
        part = data.subset(name)
        return _group_row(name, bin_dataset(part, grid), len(part), alpha, relation, grid, jstars, ece_left)

    return SubgroupReport(float(alpha), relation, tuple(_map(row, data.group_labels(), jobs)))


class RelationRow(NamedTuple):
    jstar: float
    gain_ece: float
    gain_mce: float


@dataclass(frozen=True)
class RelationComparison:
    ece: float
    mce: float
    rows: tuple

    def to_dict(self) -> dict:
        return {"ece": self.ece, "mce": self.mce, "rows": [r._asdict() for r in self.rows]}

    def to_json(self) -> str:
        return _json(self.to_dict())

    def to_csv(self) -> str:
        return _csv(RelationRow._fields, self.rows)


def compare_relations(
    test_pair: BinnedPair, grid: Grid, jstars: Sequence[float], ece_left: str = "floor_one", jobs: int = 1
) -> RelationComparison:
    """Gains of the ECE and MCE thresholds, each with its budget set to the observed error."""
    ece = expected_calibration_error(test_pair)
    mce = maximum_calibration_error(test_pair)
    by_ece = gain_delta(test_pair, ece, Relation.ECE, grid, jstars, ece_left, jobs)
    by_mce = gain_delta(test_pair, mce, Relation.MCE, grid, jstars, ece_left, jobs)
    rows = tuple(
        RelationRow(a.jstar, a.gain, b.gain) for a, b in zip(by_ece.per_jstar, by_mce.per_jstar)
    )
    return RelationComparison(ece, mce, rows)


def report_filename(experiment: str, relation, alpha) -> str:
    """``{experiment}_{relation}_{alpha}.csv`` with the relation lower-cased."""
    rel = str(relation).lower()
    return f"{experiment}_{rel}_{alpha!r}.csv" if isinstance(alpha, float) else f"{experiment}_{rel}_{alpha}.csv"

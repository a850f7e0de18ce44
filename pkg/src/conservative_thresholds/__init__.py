"""Conservative treatment thresholds for miscalibrated risk predictors.

A risk model deployed at its therapeutic threshold can do harm when its
predictions are miscalibrated. Given a bound on the expected (ECE) or maximum
(MCE) calibration error, this package computes the threshold that minimises
the worst-case regret, evaluates Net Benefit and clinical utility on binned
data, and checks the closed forms against a brute-force adversary search.
"""

from .benefit import (
    TREAT_ALL,
    DecisionCurve,
    RegretResult,
    clinical_harm,
    decision_curve,
    net_benefit,
    regret,
    tp_fp_fractions,
)
from .calibration import (
    CalibrationReport,
    Relation,
    calibration_report,
    expected_calibration_error,
    in_relation,
    maximum_calibration_error,
)
from .core import (
    BinnedPair,
    CostContext,
    Grid,
    LabeledDataset,
    Violation,
    make_context_from_jstar,
    make_cost_context,
    validate_binned_pair,
)
from .data import SyntheticSpec, bin_dataset, generate, read_csv, split, write_csv
from .errors import (
    CostError,
    DataError,
    DegenerateCostError,
    DomainError,
    InvalidPairError,
    OracleBudgetError,
    RangeError,
)
from .experiments import GainReport, SubgroupReport, compare_relations, gain_delta, subgroup_eval
from .oracle import (
    OracleCertificate,
    OracleConfig,
    oracle_argmin,
    oracle_cost_ece,
    oracle_cost_mce,
    oracle_general,
)
from .threshold import (
    ThresholdResult,
    conservative_threshold,
    conservative_threshold_ece,
    conservative_threshold_mce,
    sweep,
    worst_case_cost,
    worst_case_cost_ece,
    worst_case_cost_mce,
)

__version__ = "0.1.0"

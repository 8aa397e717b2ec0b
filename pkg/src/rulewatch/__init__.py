"""Rule-hit histogram monitoring.

Fingerprint a training distribution as per-rule hit histograms over data
splits, build per-metric [min, max] baselines, and flag operational data
whose histograms fall outside them, in batch or incrementally over a
sliding sample window.
"""

from .data import CsvFormatError, DataError, DataTable, InsufficientDataError
from .detection import (
    BaselineBundle,
    Baselines,
    DetectionError,
    DetectionReport,
    FingerprintMismatchError,
    GroupConfig,
    MetricReport,
    compute_fingerprint,
    detect_group,
    detect_split,
    group_baseline,
    single_split_baseline,
    strict_majority,
)
from .histogram import (
    HitHistogram,
    HitMatrix,
    Split,
    hit_histogram,
    hit_matrix,
    make_splits,
)
from .inducer import (
    InducerError,
    RuleQualityWarning,
    TreeLeaf,
    TreeSplit,
    induce_ruleset,
    induce_tree,
    predict_tree,
    tree_to_rules,
)
from .metrics import (
    GaussianBank,
    GaussianParams,
    MetricError,
    ValueDistribution,
    alpha_weight,
    conditional_hits_entropy,
    fit_bank,
    gaussian_fit,
    hits_entropy,
    interval_mass,
    joint_value_distribution,
    lp_norm,
    mutual_information,
    rule_based_information,
    value_distribution,
    weighted_mutual_information,
)
from .rules import (
    Condition,
    Interval,
    MissingFeatureError,
    NonNumericValueError,
    Rule,
    RuleError,
    RuleSyntaxError,
    Ruleset,
    evaluate_premise,
    format_ruleset,
    parse_ruleset,
    ruleset_hits,
)
from .streaming import (
    InsufficientSamplesError,
    MomentAccumulator,
    SlidingHitWindow,
    StreamMonitor,
    StreamStateError,
    TickRecord,
    WindowSizeMismatchWarning,
    stream_detect,
)

__version__ = "0.1.0"

"""Fairness auditing toolkit for binary classification over tabular data.

Load a CSV against a typed schema, partition rows by protected
attributes, evaluate group and individual fairness metrics, diagnose
dataset quality, apply bias mitigations with full provenance, browse a
bias taxonomy spanning the project lifecycle, and produce governance
documents. All functionality is also exposed through the ``fairlens``
command-line tool.
"""

from ._util import FairlensError
from .diagnostics import (
    DiagnosticError,
    DiagnosticPolicy,
    DiagnosticResult,
    Flag,
    chronological_consistency,
    missingness_audit,
    representativeness,
    sufficiency,
    timeliness,
)
from .frame import (
    MISSING_GROUP,
    AuditFrame,
    Column,
    ColumnSpec,
    FrameError,
    FrameLoadError,
    GroupPartition,
    SchemaSpec,
    ValidationIssue,
    ValidationReport,
    group_label,
    load_csv,
    parse_group_label,
    partition_by_group,
    save_csv,
    validate,
)
from .metrics import (
    DEFAULT_EPSILON,
    GROUP_METRICS,
    METRIC_KINDS,
    ConfusionMatrix,
    DistanceConfig,
    FairnessReport,
    MetricError,
    MetricResult,
    TradeoffNote,
    confusion_by_group,
    consistency_score,
    counterfactual_flip_rate,
    evaluate_criteria,
    group_metric,
    tradeoff_diagnostic,
)
from .mitigation import (
    MitigationError,
    MitigationProvenance,
    RowWeights,
    ThresholdPolicy,
    fit_group_thresholds,
    reject_option_adjust,
    relabel_massage,
    resample,
    reweigh,
    reweigh_provenance,
)
from .reporting import (
    Document,
    PositionStatementInput,
    ReportError,
    bias_plan,
    data_factsheet,
    position_statement,
    render,
)
from .taxonomy import (
    CATEGORIES,
    FAIRNESS_TYPES,
    LIFECYCLE_STAGES,
    AssessmentRow,
    BiasEntry,
    TaxonomyError,
    query,
    registry,
    scaffold_assessment,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FairlensError",
    # frame
    "MISSING_GROUP",
    "AuditFrame",
    "Column",
    "ColumnSpec",
    "FrameError",
    "FrameLoadError",
    "GroupPartition",
    "SchemaSpec",
    "ValidationIssue",
    "ValidationReport",
    "group_label",
    "load_csv",
    "parse_group_label",
    "partition_by_group",
    "save_csv",
    "validate",
    # metrics
    "DEFAULT_EPSILON",
    "GROUP_METRICS",
    "METRIC_KINDS",
    "ConfusionMatrix",
    "DistanceConfig",
    "FairnessReport",
    "MetricError",
    "MetricResult",
    "TradeoffNote",
    "confusion_by_group",
    "consistency_score",
    "counterfactual_flip_rate",
    "evaluate_criteria",
    "group_metric",
    "tradeoff_diagnostic",
    # diagnostics
    "DiagnosticError",
    "DiagnosticPolicy",
    "DiagnosticResult",
    "Flag",
    "chronological_consistency",
    "missingness_audit",
    "representativeness",
    "sufficiency",
    "timeliness",
    # mitigation
    "MitigationError",
    "MitigationProvenance",
    "RowWeights",
    "ThresholdPolicy",
    "fit_group_thresholds",
    "reject_option_adjust",
    "relabel_massage",
    "resample",
    "reweigh",
    "reweigh_provenance",
    # taxonomy
    "CATEGORIES",
    "FAIRNESS_TYPES",
    "LIFECYCLE_STAGES",
    "AssessmentRow",
    "BiasEntry",
    "TaxonomyError",
    "query",
    "registry",
    "scaffold_assessment",
    # reporting
    "Document",
    "PositionStatementInput",
    "ReportError",
    "bias_plan",
    "data_factsheet",
    "position_statement",
    "render",
]

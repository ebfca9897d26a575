"""Group and individual fairness metrics for binary classification.

Group metrics compare a per-group rate (selection rate, TPR, FPR, PPV,
or the TPR/FPR pair) across a partition and report the worst-case gap
and min/max ratio. Rates with zero denominators are undefined, never
coerced; undefined groups are surfaced and, in strict mode, fail the
parity verdict. The ratio is reported against the conventional 0.8
four-fifths reference line but never drives the verdict; the gap does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ._util import FairlensError, now_iso
from .frame import AuditFrame, GroupPartition, group_label, parse_group_label

__all__ = [
    "GROUP_METRICS",
    "METRIC_KINDS",
    "FOUR_FIFTHS_RATIO",
    "DEFAULT_EPSILON",
    "MetricError",
    "ConfusionMatrix",
    "MetricResult",
    "TradeoffNote",
    "FairnessReport",
    "DistanceConfig",
    "confusion_by_group",
    "group_metric",
    "evaluate_criteria",
    "consistency_score",
    "counterfactual_flip_rate",
    "tradeoff_diagnostic",
]

# Metrics defined over per-group confusion matrices.
GROUP_METRICS = (
    "demographic_parity",
    "tpr_parity",
    "fpr_parity",
    "equalized_odds",
    "ppv_parity",
)

# All metric kinds, including the individual-level ones.
METRIC_KINDS = GROUP_METRICS + ("individual_consistency", "counterfactual_flip")

# Conventional four-fifths reference line for the min/max ratio. Reported
# for context only; verdicts use the gap against epsilon.
FOUR_FIFTHS_RATIO = 0.8

DEFAULT_EPSILON = 0.05


class MetricError(FairlensError):
    """A metric request that cannot be computed as posed."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts for one group.

    ``excluded`` tallies rows skipped for missing label or prediction.
    Every derived rate returns None when its denominator is zero.
    """

    tp: int
    fp: int
    tn: int
    fn: int
    excluded: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def group_size(self) -> int:
        return self.total + self.excluded

    @property
    def tpr(self):
        denom = self.tp + self.fn
        return self.tp / denom if denom else None

    @property
    def fpr(self):
        denom = self.fp + self.tn
        return self.fp / denom if denom else None

    @property
    def ppv(self):
        denom = self.tp + self.fp
        return self.tp / denom if denom else None

    @property
    def selection_rate(self):
        return (self.tp + self.fp) / self.total if self.total else None

    @property
    def base_rate(self):
        return (self.tp + self.fn) / self.total if self.total else None

    @property
    def accuracy(self):
        return (self.tp + self.tn) / self.total if self.total else None

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "excluded": self.excluded,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "ppv": self.ppv,
            "selection_rate": self.selection_rate,
            "base_rate": self.base_rate,
            "accuracy": self.accuracy,
        }


@dataclass(frozen=True)
class MetricResult:
    """Outcome of one group-metric comparison.

    ``per_group`` maps group key to the metric value: a float (or None
    when undefined) for scalar metrics, a (tpr, fpr) pair for equalized
    odds. ``passed`` is the strict-mode verdict unless ``mode`` is
    'lenient', in which case undefined groups are reported but do not
    fail the comparison.
    """

    metric: str
    per_group: Mapping
    gap: float
    ratio: float
    epsilon: float
    passed: bool
    undefined_groups: tuple = ()
    low_confidence_groups: tuple = ()
    mode: str = "strict"

    @property
    def meets_four_fifths(self) -> bool:
        return self.ratio >= FOUR_FIFTHS_RATIO

    def to_dict(self) -> dict:
        per_group = {}
        for key, value in self.per_group.items():
            if self.metric == "equalized_odds":
                tpr, fpr = value
                per_group[group_label(key)] = {"tpr": tpr, "fpr": fpr}
            else:
                per_group[group_label(key)] = value
        return {
            "metric": self.metric,
            "per_group": per_group,
            "gap": self.gap,
            "ratio": self.ratio,
            "epsilon": self.epsilon,
            "passed": self.passed,
            "undefined_groups": [group_label(k) for k in self.undefined_groups],
            "low_confidence_groups": [
                group_label(k) for k in self.low_confidence_groups
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricResult":
        try:
            metric = data["metric"]
            per_group = {}
            for label, value in data["per_group"].items():
                key = parse_group_label(label)
                if metric == "equalized_odds":
                    per_group[key] = (value["tpr"], value["fpr"])
                else:
                    per_group[key] = value
            return cls(
                metric=metric,
                per_group=per_group,
                gap=data["gap"],
                ratio=data["ratio"],
                epsilon=data["epsilon"],
                passed=data["passed"],
                undefined_groups=tuple(
                    parse_group_label(label) for label in data["undefined_groups"]
                ),
                low_confidence_groups=tuple(
                    parse_group_label(label)
                    for label in data["low_confidence_groups"]
                ),
            )
        except (KeyError, TypeError) as exc:
            raise MetricError(f"malformed metric result: {exc}") from None


@dataclass(frozen=True)
class TradeoffNote:
    """Base-rate context for the PPV-parity versus equalized-odds tension."""

    base_rates: Mapping
    base_rates_equal_within: float
    conflict_flag: bool
    message: str

    def to_dict(self) -> dict:
        return {
            "base_rates": {
                group_label(key): rate for key, rate in self.base_rates.items()
            },
            "base_rates_equal_within": self.base_rates_equal_within,
            "conflict_flag": self.conflict_flag,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TradeoffNote":
        try:
            return cls(
                base_rates={
                    parse_group_label(label): rate
                    for label, rate in data["base_rates"].items()
                },
                base_rates_equal_within=data["base_rates_equal_within"],
                conflict_flag=data["conflict_flag"],
                message=data["message"],
            )
        except (KeyError, TypeError) as exc:
            raise MetricError(f"malformed trade-off note: {exc}") from None


@dataclass(frozen=True)
class FairnessReport:
    """Ordered metric results plus the base-rate trade-off diagnostic."""

    metrics: tuple
    tradeoff: TradeoffNote
    attributes: tuple
    generated_at: str = field(default_factory=now_iso)
    notes: tuple = ()

    @property
    def overall_passed(self) -> bool:
        return all(result.passed for result in self.metrics)

    def to_dict(self) -> dict:
        return {
            "metrics": [result.to_dict() for result in self.metrics],
            "tradeoff": self.tradeoff.to_dict(),
            "overall_passed": self.overall_passed,
            "attributes": list(self.attributes),
            "generated_at": self.generated_at,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FairnessReport":
        try:
            return cls(
                metrics=tuple(
                    MetricResult.from_dict(entry) for entry in data["metrics"]
                ),
                tradeoff=TradeoffNote.from_dict(data["tradeoff"]),
                attributes=tuple(data["attributes"]),
                generated_at=data.get("generated_at", ""),
                notes=tuple(data.get("notes", ())),
            )
        except (KeyError, TypeError) as exc:
            raise MetricError(f"malformed fairness report: {exc}") from None


@dataclass(frozen=True)
class DistanceConfig:
    """Feature-space distance settings for the consistency score.

    ``columns`` names the columns to compare; None means every
    feature-role column. Protected columns are excluded unless named
    explicitly or ``include_protected`` is set.
    """

    columns: tuple = None
    include_protected: bool = False

    def __post_init__(self) -> None:
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(self.columns))


def _binary(value, what: str, where: str):
    if value not in (0, 1):
        raise MetricError(f"{what} value {value!r} ({where}) is not 0 or 1")
    return int(value)


def confusion_by_group(
    frame: AuditFrame, partition: GroupPartition, threshold=None
) -> dict:
    """Per-group confusion matrices from labels and predictions.

    With ``threshold`` set, predictions come from the score column as
    ``score >= threshold``; otherwise the prediction column is used.
    Rows missing a label or a prediction basis are tallied as excluded
    for their group.
    """
    label_col = frame.column_with_role("label")
    if label_col is None:
        raise MetricError("frame has no label column")
    if threshold is None:
        pred_col = frame.column_with_role("prediction")
        if pred_col is None:
            raise MetricError(
                "frame has no prediction column and no threshold was given"
            )
        basis = pred_col.cells
        predict = lambda v: _binary(v, "prediction", pred_col.name)
    else:
        score_col = frame.column_with_role("score")
        if score_col is None:
            raise MetricError("threshold given but frame has no score column")
        basis = score_col.cells
        predict = lambda v: 1 if v >= threshold else 0
    confusions = {}
    counts = {key: [0, 0, 0, 0, 0] for key in partition.keys}  # tp fp tn fn excl
    for row, key in enumerate(partition.key_of_row):
        cell = counts[key]
        label = label_col.cells[row]
        raw = basis[row]
        if label is None or raw is None:
            cell[4] += 1
            continue
        y = _binary(label, "label", label_col.name)
        yhat = predict(raw)
        if y and yhat:
            cell[0] += 1
        elif yhat:
            cell[1] += 1
        elif y:
            cell[3] += 1
        else:
            cell[2] += 1
    for key in partition.keys:
        tp, fp, tn, fn, excl = counts[key]
        confusions[key] = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn, excluded=excl)
    return confusions


def _spread(values: Iterable) -> float:
    """Worst-case gap (max minus min) over defined values; 0.0 if fewer than two."""
    values = list(values)
    if not values:
        return 0.0
    return max(values) - min(values)


def _min_max_ratio(values: Iterable) -> float:
    """min/max over defined values; 1.0 when all values are zero or absent."""
    values = list(values)
    if not values:
        return 1.0
    hi = max(values)
    if hi == 0:
        return 1.0
    return min(values) / hi


def _reference_spread(values: Mapping, reference) -> float:
    ref = values[reference]
    return max((abs(v - ref) for v in values.values()), default=0.0)


def _reference_ratio(values: Mapping, reference) -> float:
    ref = values[reference]
    worst = 1.0
    for v in values.values():
        pair_hi = max(v, ref)
        pair_ratio = 1.0 if pair_hi == 0 else min(v, ref) / pair_hi
        worst = min(worst, pair_ratio)
    return worst


def _component_stats(values: Mapping, reference):
    """(gap, ratio) over the defined values, optionally anchored to a reference."""
    if reference is None:
        return _spread(values.values()), _min_max_ratio(values.values())
    if reference not in values:
        raise MetricError(
            f"reference group {group_label(reference)!r} has no defined rate "
            "for this metric"
        )
    return _reference_spread(values, reference), _reference_ratio(values, reference)


def _scalar_rate(cm: ConfusionMatrix, metric: str):
    if metric == "demographic_parity":
        return cm.selection_rate
    if metric == "tpr_parity":
        return cm.tpr
    if metric == "fpr_parity":
        return cm.fpr
    if metric == "ppv_parity":
        return cm.ppv
    raise MetricError(f"unknown group metric {metric!r}")


def group_metric(
    confusions: Mapping,
    metric: str,
    epsilon: float = DEFAULT_EPSILON,
    *,
    mode: str = "strict",
    min_group_size: int = 10,
    reference_group=None,
) -> MetricResult:
    """Compare one rate across groups and judge it against ``epsilon``.

    The gap is max minus min over groups where the rate is defined (for
    equalized odds, the larger of the TPR and FPR gaps, each over its
    own defined set); the ratio is min over max (the smaller of the two
    component ratios for equalized odds), with 1.0 when every defined
    value is zero. With ``reference_group`` set, the gap is the largest
    absolute deviation from that group's rate instead. Strict mode fails
    the comparison when any group's rate is undefined; lenient mode only
    reports such groups.
    """
    if metric not in GROUP_METRICS:
        raise MetricError(
            f"unknown group metric {metric!r}; expected one of {', '.join(GROUP_METRICS)}"
        )
    if mode not in ("strict", "lenient"):
        raise MetricError(f"unknown mode {mode!r}; expected 'strict' or 'lenient'")
    if not epsilon >= 0:
        raise MetricError(f"epsilon must be non-negative, got {epsilon!r}")
    if min_group_size < 0:
        raise MetricError(f"min_group_size must be non-negative, got {min_group_size!r}")
    if reference_group is not None and reference_group not in confusions:
        raise MetricError(
            f"reference group {group_label(reference_group)!r} not in partition"
        )

    per_group = {}
    undefined = []
    if metric == "equalized_odds":
        tprs = {}
        fprs = {}
        for key, cm in confusions.items():
            pair = (cm.tpr, cm.fpr)
            per_group[key] = pair
            if pair[0] is None or pair[1] is None:
                undefined.append(key)
            if pair[0] is not None:
                tprs[key] = pair[0]
            if pair[1] is not None:
                fprs[key] = pair[1]
        tpr_gap, tpr_ratio = _component_stats(tprs, reference_group)
        fpr_gap, fpr_ratio = _component_stats(fprs, reference_group)
        gap = max(tpr_gap, fpr_gap)
        ratio = min(tpr_ratio, fpr_ratio)
    else:
        defined = {}
        for key, cm in confusions.items():
            value = _scalar_rate(cm, metric)
            per_group[key] = value
            if value is None:
                undefined.append(key)
            else:
                defined[key] = value
        gap, ratio = _component_stats(defined, reference_group)

    low_confidence = tuple(
        key for key, cm in confusions.items() if cm.group_size < min_group_size
    )
    undefined_sorted = tuple(sorted(undefined))
    passed = gap <= epsilon
    if mode == "strict" and undefined_sorted:
        passed = False
    return MetricResult(
        metric=metric,
        per_group=per_group,
        gap=gap,
        ratio=ratio,
        epsilon=epsilon,
        passed=passed,
        undefined_groups=undefined_sorted,
        low_confidence_groups=tuple(sorted(low_confidence)),
        mode=mode,
    )


def tradeoff_diagnostic(
    confusions: Mapping, base_rate_tolerance: float = DEFAULT_EPSILON
) -> TradeoffNote:
    """Check whether unequal base rates force a PPV/equalized-odds conflict.

    When base rates differ by more than the tolerance and at least one
    group is classified imperfectly, positive-predictive-value parity
    and equalized odds cannot both hold, and the flag is raised so the
    team knows a choice between them is required. Raises
    :class:`MetricError` when fewer than two groups have defined base
    rates.
    """
    if not base_rate_tolerance >= 0:
        raise MetricError(
            f"base_rate_tolerance must be non-negative, got {base_rate_tolerance!r}"
        )
    base_rates = {key: cm.base_rate for key, cm in confusions.items()}
    defined = [rate for rate in base_rates.values() if rate is not None]
    if len(defined) < 2:
        raise MetricError(
            "base-rate comparison needs at least two groups with defined base rates"
        )
    gap = max(defined) - min(defined)
    imperfect = any(
        cm.accuracy is not None and cm.accuracy < 1.0 for cm in confusions.values()
    )
    conflict = gap > base_rate_tolerance and imperfect
    if conflict:
        message = (
            f"Group base rates differ by {gap:.6g} (tolerance "
            f"{base_rate_tolerance:.6g}) and classification is imperfect: "
            "positive-predictive-value parity and equalized odds cannot both "
            "hold, so the team must choose which to prioritise."
        )
    elif gap <= base_rate_tolerance:
        message = (
            f"Group base rates agree within {base_rate_tolerance:.6g}; "
            "positive-predictive-value parity and equalized odds are not "
            "forced into conflict."
        )
    else:
        message = (
            f"Group base rates differ by {gap:.6g} but every group is "
            "classified perfectly; no conflict arises."
        )
    return TradeoffNote(
        base_rates=base_rates,
        base_rates_equal_within=base_rate_tolerance,
        conflict_flag=conflict,
        message=message,
    )


def evaluate_criteria(
    frame: AuditFrame,
    partition: GroupPartition,
    criteria: Sequence,
    threshold=None,
    *,
    mode: str = "strict",
    min_group_size: int = 10,
    base_rate_tolerance: float = DEFAULT_EPSILON,
) -> FairnessReport:
    """Evaluate (metric, epsilon) criteria and attach the trade-off note.

    ``criteria`` is a sequence of (metric_name, epsilon) pairs, judged in
    order. When the base-rate diagnostic is uncomputable (fewer than two
    groups with defined base rates) the report carries an unflagged
    explanatory note instead of failing.
    """
    confusions = confusion_by_group(frame, partition, threshold)
    results = tuple(
        group_metric(
            confusions,
            metric,
            eps,
            mode=mode,
            min_group_size=min_group_size,
        )
        for metric, eps in criteria
    )
    try:
        tradeoff = tradeoff_diagnostic(confusions, base_rate_tolerance)
    except MetricError as exc:
        tradeoff = TradeoffNote(
            base_rates={key: cm.base_rate for key, cm in confusions.items()},
            base_rates_equal_within=base_rate_tolerance,
            conflict_flag=False,
            message=f"Trade-off not assessed: {exc}.",
        )
    notes = () if criteria else ("no criteria requested; verdict is vacuous",)
    return FairnessReport(
        metrics=results,
        tradeoff=tradeoff,
        attributes=partition.attributes,
        notes=notes,
    )


def _numeric_feature_value(cell, dtype: str) -> float:
    if dtype == "timestamp":
        return cell.timestamp()
    return float(cell)


def consistency_score(frame: AuditFrame, k: int, distance: DistanceConfig = None) -> float:
    """Individual-fairness consistency of predictions with feature neighbors.

    Computes 1 minus the mean absolute difference between each row's
    prediction and the mean prediction of its ``k`` nearest neighbors in
    feature space. The distance is Euclidean over min-max normalized
    numeric features (constant columns contribute nothing) plus a 0/1
    mismatch term per categorical feature; neighbor ties break by
    (distance, row index). Only rows with a prediction and complete
    selected features participate, and ``k`` must be smaller than their
    count.
    """
    if distance is None:
        distance = DistanceConfig()
    if not isinstance(k, int) or k < 1:
        raise MetricError(f"k must be a positive integer, got {k!r}")
    pred_col = frame.column_with_role("prediction")
    if pred_col is None:
        raise MetricError("frame has no prediction column")

    if distance.columns is not None:
        selected = [frame.column(name) for name in distance.columns]
    else:
        selected = list(frame.columns_with_role("feature"))
        if distance.include_protected:
            selected.extend(frame.columns_with_role("protected"))
    if not selected:
        raise MetricError("no usable feature columns for the distance")

    usable = [
        row
        for row in range(frame.row_count)
        if pred_col.cells[row] is not None
        and all(col.cells[row] is not None for col in selected)
    ]
    if k >= len(usable):
        raise MetricError(
            f"k={k} must be smaller than the usable row count ({len(usable)})"
        )

    numeric_cols = [col for col in selected if col.dtype != "categorical"]
    categorical_cols = [col for col in selected if col.dtype == "categorical"]

    # Min-max scale each numeric column over the usable rows.
    scaled = {}
    for col in numeric_cols:
        raw = {row: _numeric_feature_value(col.cells[row], col.dtype) for row in usable}
        lo = min(raw.values())
        hi = max(raw.values())
        span = hi - lo
        if span == 0:
            continue  # constant column: zero contribution to every distance
        scaled[col.name] = {row: (raw[row] - lo) / span for row in raw}

    predictions = {
        row: _binary(pred_col.cells[row], "prediction", pred_col.name)
        for row in usable
    }

    def dist(a: int, b: int) -> float:
        acc = 0.0
        for values in scaled.values():
            diff = values[a] - values[b]
            acc += diff * diff
        for col in categorical_cols:
            if col.cells[a] != col.cells[b]:
                acc += 1.0
        return math.sqrt(acc)

    total = 0.0
    for a in usable:
        ranked = sorted(((dist(a, b), b) for b in usable if b != a))
        neighbor_mean = sum(predictions[b] for _, b in ranked[:k]) / k
        total += abs(predictions[a] - neighbor_mean)
    return 1.0 - total / len(usable)


def counterfactual_flip_rate(baseline: Sequence, flipped: Sequence) -> float:
    """Fraction of rows whose binary prediction changed between two runs."""
    baseline = list(baseline)
    flipped = list(flipped)
    if not baseline:
        raise MetricError("prediction sequences are empty")
    if len(baseline) != len(flipped):
        raise MetricError(
            f"prediction sequences differ in length: {len(baseline)} vs {len(flipped)}"
        )
    for i, (a, b) in enumerate(zip(baseline, flipped)):
        _binary(a, "baseline prediction", f"index {i}")
        _binary(b, "flipped prediction", f"index {i}")
    changed = sum(1 for a, b in zip(baseline, flipped) if int(a) != int(b))
    return changed / len(baseline)

"""Bias mitigation: reweighing, resampling, massaging, and threshold tuning.

The preprocessing techniques act on training data, so their provenance
records demographic parity of the *label* rates before and after; the
post-processing ones act on predictions and record prediction rates.
Every randomized step draws from a single seeded generator, making
outputs a pure function of (inputs, seed).
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from ._util import FairlensError
from .frame import (
    MISSING_GROUP,
    AuditFrame,
    GroupPartition,
    group_label,
    partition_by_group,
    replace_cells,
    take_rows,
)
from .metrics import (
    DEFAULT_EPSILON,
    ConfusionMatrix,
    MetricResult,
    _min_max_ratio,
    _spread,
    group_metric,
)

__all__ = [
    "RESAMPLE_STRATEGIES",
    "THRESHOLD_CONSTRAINT_METRICS",
    "MitigationError",
    "RowWeights",
    "MitigationProvenance",
    "ThresholdPolicy",
    "reweigh",
    "resample",
    "relabel_massage",
    "fit_group_thresholds",
    "reject_option_adjust",
]

RESAMPLE_STRATEGIES = ("oversample_to_independence", "undersample_to_independence")

THRESHOLD_CONSTRAINT_METRICS = (
    "demographic_parity",
    "tpr_parity",
    "fpr_parity",
    "equalized_odds",
)

# Group-count cap for the exhaustive threshold grid search.
MAX_THRESHOLD_GROUPS = 4


class MitigationError(FairlensError):
    """A mitigation request that cannot be honored as posed."""


@dataclass(frozen=True)
class RowWeights:
    """Reweighing output.

    ``cell_weights`` maps (group key, label) to the shared weight;
    ``row_indices``, ``row_cells``, and ``row_weights`` are parallel over
    the usable rows (original frame indices, ascending).
    """

    cell_weights: Mapping
    row_indices: tuple
    row_cells: tuple
    row_weights: tuple

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["row_index", "group", "label", "weight"])
        for index, (key, label), weight in zip(
            self.row_indices, self.row_cells, self.row_weights
        ):
            writer.writerow([index, group_label(key), label, repr(weight)])
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return {
            "cell_weights": [
                {"group": group_label(key), "label": label, "weight": weight}
                for (key, label), weight in sorted(self.cell_weights.items())
            ],
            "rows": [
                {
                    "row_index": index,
                    "group": group_label(key),
                    "label": label,
                    "weight": weight,
                }
                for index, (key, label), weight in zip(
                    self.row_indices, self.row_cells, self.row_weights
                )
            ],
        }


@dataclass(frozen=True)
class MitigationProvenance:
    """Audit trail for one mitigation run, embedded in every output."""

    technique: str
    parameters: Mapping
    seed: object
    rows_changed: int
    rows_added: int
    rows_removed: int
    before: MetricResult
    after: MetricResult

    def to_dict(self) -> dict:
        return {
            "technique": self.technique,
            "parameters": dict(self.parameters),
            "seed": self.seed,
            "rows_changed": self.rows_changed,
            "rows_added": self.rows_added,
            "rows_removed": self.rows_removed,
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
        }


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per-group decision thresholds found by the grid search."""

    per_group_threshold: Mapping
    achieved: Mapping
    objective: str
    objective_value: float
    feasible: bool
    constraints: tuple
    grid_step: float

    def to_dict(self) -> dict:
        return {
            "per_group_threshold": {
                group_label(key): value
                for key, value in self.per_group_threshold.items()
            },
            "achieved": {
                metric: result.to_dict() for metric, result in self.achieved.items()
            },
            "objective": self.objective,
            "objective_value": self.objective_value,
            "feasible": self.feasible,
            "constraints": [
                {"metric": metric, "epsilon": epsilon}
                for metric, epsilon in self.constraints
            ],
            "grid_step": self.grid_step,
        }


def _rate_parity(rates: Mapping, epsilon: float = DEFAULT_EPSILON) -> MetricResult:
    """Demographic-parity result over precomputed per-group rates."""
    defined = [value for value in rates.values() if value is not None]
    undefined = tuple(sorted(key for key, value in rates.items() if value is None))
    gap = _spread(defined)
    ratio = _min_max_ratio(defined)
    return MetricResult(
        metric="demographic_parity",
        per_group=dict(rates),
        gap=gap,
        ratio=ratio,
        epsilon=epsilon,
        passed=gap <= epsilon and not undefined,
        undefined_groups=undefined,
        low_confidence_groups=(),
        mode="strict",
    )


def _label_rates(frame: AuditFrame, partition: GroupPartition) -> dict:
    """Positive-label rate per group over rows with a label, None if empty."""
    label_col = frame.column_with_role("label")
    if label_col is None:
        raise MitigationError("frame has no label column")
    rates = {}
    for key, rows in partition.groups.items():
        labeled = [label_col.cells[r] for r in rows if label_col.cells[r] is not None]
        rates[key] = (
            sum(1 for v in labeled if v) / len(labeled) if labeled else None
        )
    return rates


def _usable_rows(frame: AuditFrame, partition: GroupPartition) -> list:
    """Rows with a label and a known group, the population reweighing acts on."""
    label_col = frame.column_with_role("label")
    if label_col is None:
        raise MitigationError("frame has no label column")
    return [
        row
        for row in range(frame.row_count)
        if label_col.cells[row] is not None
        and partition.key_of_row[row] != MISSING_GROUP
    ]


def reweigh(
    frame: AuditFrame, partition: GroupPartition, *, require_all_cells: bool = False
) -> RowWeights:
    """Instance weights making group membership independent of the label.

    Each usable row (known group, non-missing label) in cell (g, y) gets
    weight N_g * N_y / (N * N_gy), so the weighted positive rate is
    identical across groups and weights sum to the usable row count.
    Cells absent from the data get no weight; with ``require_all_cells``
    their absence is an error instead.
    """
    label_col = frame.column_with_role("label")
    usable = _usable_rows(frame, partition)
    if not usable:
        raise MitigationError("no rows with both a known group and a label")
    total = len(usable)
    group_counts = {}
    label_counts = {}
    cell_counts = {}
    row_cell = {}
    for row in usable:
        key = partition.key_of_row[row]
        label = int(label_col.cells[row])
        group_counts[key] = group_counts.get(key, 0) + 1
        label_counts[label] = label_counts.get(label, 0) + 1
        cell_counts[(key, label)] = cell_counts.get((key, label), 0) + 1
        row_cell[row] = (key, label)
    if require_all_cells:
        for key in sorted(group_counts):
            for label in sorted(label_counts):
                if (key, label) not in cell_counts:
                    raise MitigationError(
                        f"cell (group {group_label(key)!r}, label {label}) has "
                        "no rows; weights are undefined for it"
                    )
    cell_weights = {
        (key, label): group_counts[key] * label_counts[label] / (total * count)
        for (key, label), count in cell_counts.items()
    }
    row_indices = tuple(usable)
    row_cells = tuple(row_cell[row] for row in usable)
    row_weights = tuple(cell_weights[cell] for cell in row_cells)
    return RowWeights(
        cell_weights=cell_weights,
        row_indices=row_indices,
        row_cells=row_cells,
        row_weights=row_weights,
    )


def _weighted_label_rates(
    frame: AuditFrame, partition: GroupPartition, weights: RowWeights
) -> dict:
    label_col = frame.column_with_role("label")
    sums = {key: 0.0 for key in partition.keys}
    positive = {key: 0.0 for key in partition.keys}
    for row, weight in zip(weights.row_indices, weights.row_weights):
        key = partition.key_of_row[row]
        sums[key] += weight
        if label_col.cells[row]:
            positive[key] += weight
    return {
        key: (positive[key] / sums[key] if sums[key] > 0 else None)
        for key in partition.keys
    }


def reweigh_provenance(
    frame: AuditFrame, partition: GroupPartition, weights: RowWeights
) -> MitigationProvenance:
    """Before/after demographic parity of (weighted) label rates."""
    before = _rate_parity(_label_rates(frame, partition))
    after = _rate_parity(_weighted_label_rates(frame, partition, weights))
    return MitigationProvenance(
        technique="reweigh",
        parameters={"evaluated_on": "labels"},
        seed=None,
        rows_changed=0,
        rows_added=0,
        rows_removed=0,
        before=before,
        after=after,
    )


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def resample(
    frame: AuditFrame, partition: GroupPartition, strategy: str, seed: int
):
    """Duplicate and drop rows until every (group, label) cell hits its
    independence target round(N_g * N_y / N).

    Because the targets sum back to the usable row count (up to
    rounding), reaching them requires both duplicating under-target cells
    and dropping over-target ones; the two strategy names share this
    balancing pass and differ
    only in the recorded intent. Rows without a label or a known group
    pass through untouched. Deterministic for a fixed seed: cells are
    processed in sorted order against a single seeded generator, kept
    rows stay in original order, duplicates append after them.
    """
    if strategy not in RESAMPLE_STRATEGIES:
        raise MitigationError(
            f"unknown strategy {strategy!r}; expected one of "
            + ", ".join(RESAMPLE_STRATEGIES)
        )
    if not isinstance(seed, int):
        raise MitigationError(f"seed must be an integer, got {seed!r}")
    label_col = frame.column_with_role("label")
    usable = _usable_rows(frame, partition)
    if not usable:
        raise MitigationError("no rows with both a known group and a label")
    total = len(usable)
    group_counts = {}
    label_counts = {}
    cells = {}
    for row in usable:
        key = partition.key_of_row[row]
        label = int(label_col.cells[row])
        group_counts[key] = group_counts.get(key, 0) + 1
        label_counts[label] = label_counts.get(label, 0) + 1
        cells.setdefault((key, label), []).append(row)

    rng = random.Random(seed)
    dropped = set()
    duplicates = []
    targets = []
    for key in sorted(group_counts):
        for label in sorted(label_counts):
            target = _round_half_up(group_counts[key] * label_counts[label] / total)
            targets.append((key, label, target))
            members = cells.get((key, label), [])
            if not members and target > 0:
                raise MitigationError(
                    f"cell (group {group_label(key)!r}, label {label}) is empty "
                    f"but its target is {target}; nothing to duplicate"
                )
            count = len(members)
            if count > target:
                dropped.update(rng.sample(members, count - target))
            elif count < target:
                duplicates.extend(
                    rng.choice(members) for _ in range(target - count)
                )

    indices = [row for row in range(frame.row_count) if row not in dropped]
    indices.extend(duplicates)
    resampled = take_rows(frame, indices)
    before = _rate_parity(_label_rates(frame, partition))
    after_partition = partition_by_group(resampled, partition.attributes)
    after = _rate_parity(_label_rates(resampled, after_partition))
    provenance = MitigationProvenance(
        technique="resample",
        parameters={
            "strategy": strategy,
            "targets": [
                {"group": group_label(key), "label": label, "target": target}
                for key, label, target in targets
            ],
            "evaluated_on": "labels",
        },
        seed=seed,
        rows_changed=0,
        rows_added=len(duplicates),
        rows_removed=len(dropped),
        before=before,
        after=after,
    )
    return resampled, provenance


def relabel_massage(
    frame: AuditFrame, partition: GroupPartition, advantaged, disadvantaged
):
    """Flip the M most borderline labels in each of two groups to close
    their positive-rate gap, preserving the overall positive count.

    M is (p_adv - p_dis) * N_adv * N_dis / (N_adv + N_dis) rounded to
    the nearest integer (halves up), which keeps the post-flip gap
    within 1 / min(N_adv, N_dis); truncating instead can leave nearly
    the whole gap behind when the ideal flip count is fractional. The M
    highest-scored negatives in the disadvantaged group become positive;
    the M lowest-scored positives in the advantaged group become
    negative. Ties break by row index. The advantaged group must have
    the higher positive rate; otherwise the caller is told to swap.
    """
    for key, name in ((advantaged, "advantaged"), (disadvantaged, "disadvantaged")):
        if key not in partition.groups:
            raise MitigationError(f"{name} group {group_label(key)!r} not in partition")
    if advantaged == disadvantaged:
        raise MitigationError("advantaged and disadvantaged groups must differ")
    label_col = frame.column_with_role("label")
    if label_col is None:
        raise MitigationError("frame has no label column")
    score_col = frame.column_with_role("score")
    if score_col is None:
        raise MitigationError("relabeling needs a score column to rank candidates")

    def usable_in(key):
        return [
            row
            for row in partition.groups[key]
            if label_col.cells[row] is not None and score_col.cells[row] is not None
        ]

    adv_rows = usable_in(advantaged)
    dis_rows = usable_in(disadvantaged)
    if not adv_rows or not dis_rows:
        empty = "advantaged" if not adv_rows else "disadvantaged"
        raise MitigationError(f"{empty} group has no rows with label and score")
    n_adv, n_dis = len(adv_rows), len(dis_rows)
    p_adv_count = sum(1 for row in adv_rows if label_col.cells[row])
    p_dis_count = sum(1 for row in dis_rows if label_col.cells[row])
    if p_adv_count * n_dis < p_dis_count * n_adv:
        raise MitigationError(
            "advantaged group has the lower positive rate; swap the group roles"
        )
    # Exact half-up rounding of (p_adv - p_dis) * N_adv * N_dis / (N_adv + N_dis):
    # round(K / T) = floor((2K + T) / 2T) in integer arithmetic.
    gap_units = p_adv_count * n_dis - p_dis_count * n_adv
    flips = (2 * gap_units + (n_adv + n_dis)) // (2 * (n_adv + n_dis))

    promote_pool = sorted(
        (row for row in dis_rows if not label_col.cells[row]),
        key=lambda row: (-score_col.cells[row], row),
    )
    demote_pool = sorted(
        (row for row in adv_rows if label_col.cells[row]),
        key=lambda row: (score_col.cells[row], row),
    )
    if flips > len(promote_pool) or flips > len(demote_pool):
        raise MitigationError(
            f"cannot flip {flips} labels: only {len(promote_pool)} negatives in "
            f"the disadvantaged group and {len(demote_pool)} positives in the "
            "advantaged group"
        )
    numeric = label_col.dtype == "numeric"
    positive = 1.0 if numeric else 1
    negative = 0.0 if numeric else 0
    new_cells = list(label_col.cells)
    for row in promote_pool[:flips]:
        new_cells[row] = positive
    for row in demote_pool[:flips]:
        new_cells[row] = negative
    relabeled = replace_cells(frame, label_col.name, new_cells)
    before = _rate_parity(_label_rates(frame, partition))
    after = _rate_parity(_label_rates(relabeled, partition))
    provenance = MitigationProvenance(
        technique="relabel_massage",
        parameters={
            "advantaged": group_label(advantaged),
            "disadvantaged": group_label(disadvantaged),
            "flips_per_group": flips,
            "evaluated_on": "labels",
        },
        seed=None,
        rows_changed=2 * flips,
        rows_added=0,
        rows_removed=0,
        before=before,
        after=after,
    )
    return relabeled, provenance


def _threshold_grid(step: float) -> list:
    """0, step, 2*step, ... below 1, then 1.0; points rounded to 10 places."""
    grid = []
    index = 0
    while True:
        point = round(index * step, 10)
        if point >= 1.0:
            break
        grid.append(point)
        index += 1
    grid.append(1.0)
    return grid


def _constraint_gap(confusions: Mapping, metric: str):
    """(gap over defined rates, whether any group's rate is undefined).

    For these metrics definedness never depends on the threshold: the
    TPR denominator is the group's positive count, the FPR denominator
    its negative count, the selection-rate denominator its size.
    """
    if metric == "equalized_odds":
        tprs = [cm.tpr for cm in confusions.values() if cm.tpr is not None]
        fprs = [cm.fpr for cm in confusions.values() if cm.fpr is not None]
        undefined = len(tprs) < len(confusions) or len(fprs) < len(confusions)
        return max(_spread(tprs), _spread(fprs)), undefined
    attr = {
        "demographic_parity": "selection_rate",
        "tpr_parity": "tpr",
        "fpr_parity": "fpr",
    }[metric]
    values = [
        getattr(cm, attr) for cm in confusions.values() if getattr(cm, attr) is not None
    ]
    return _spread(values), len(values) < len(confusions)


def fit_group_thresholds(
    frame: AuditFrame,
    partition: GroupPartition,
    objective: str = "accuracy",
    constraints: Sequence = (),
    grid_step: float = 0.05,
) -> ThresholdPolicy:
    """Exhaustive per-group threshold search maximizing overall accuracy.

    Predictions are score >= threshold. Constraints are (metric, epsilon)
    pairs; a threshold assignment satisfies one when every group's rate
    exists and the gap is at most epsilon. Because the denominators of
    these rates do not depend on the threshold, a group that lacks them
    (say, no positive labels under a true-positive-rate constraint)
    makes that constraint infeasible at every assignment. Among feasible
    assignments the search maximizes accuracy, breaking ties by the
    smaller maximum threshold, then the lexicographically smallest
    threshold tuple in sorted-group-key order. When nothing is feasible
    the policy reports the assignment minimizing the total violation
    (sum over constraints of max(0, gap - epsilon)), same tie-break,
    with ``feasible`` False. Supports at most four groups.
    """
    if objective != "accuracy":
        raise MitigationError(f"unsupported objective {objective!r}")
    if not 0 < grid_step <= 0.5:
        raise MitigationError(
            f"grid_step must be in (0, 0.5], got {grid_step!r}"
        )
    constraints = tuple(constraints)
    for metric, epsilon in constraints:
        if metric not in THRESHOLD_CONSTRAINT_METRICS:
            raise MitigationError(
                f"unsupported constraint metric {metric!r}; expected one of "
                + ", ".join(THRESHOLD_CONSTRAINT_METRICS)
            )
        if not epsilon >= 0:
            raise MitigationError(f"constraint epsilon must be non-negative, got {epsilon!r}")
    label_col = frame.column_with_role("label")
    if label_col is None:
        raise MitigationError("frame has no label column")
    score_col = frame.column_with_role("score")
    if score_col is None:
        raise MitigationError("frame has no score column")
    keys = partition.keys
    if len(keys) > MAX_THRESHOLD_GROUPS:
        raise MitigationError(
            f"threshold search supports at most {MAX_THRESHOLD_GROUPS} groups, "
            f"got {len(keys)}"
        )

    grid = _threshold_grid(grid_step)
    samples = {
        key: [
            (score_col.cells[row], int(label_col.cells[row]))
            for row in partition.groups[key]
            if label_col.cells[row] is not None and score_col.cells[row] is not None
        ]
        for key in keys
    }
    if not any(samples.values()):
        raise MitigationError("no rows with both a label and a score")

    # Confusion counts per group per grid point, computed once.
    counts = {
        key: [
            _confusion_at(samples[key], threshold) for threshold in grid
        ]
        for key in keys
    }

    best_feasible = None  # (sort key, index tuple)
    best_infeasible = None
    for combo in itertools.product(range(len(grid)), repeat=len(keys)):
        confusions = {
            key: counts[key][combo[position]] for position, key in enumerate(keys)
        }
        correct = sum(cm.tp + cm.tn for cm in confusions.values())
        thresholds = tuple(grid[i] for i in combo)
        violation = 0.0
        feasible = True
        for metric, epsilon in constraints:
            gap, undefined = _constraint_gap(confusions, metric)
            if undefined or gap > epsilon:
                feasible = False
                violation += max(0.0, gap - epsilon)
        tie_break = (-correct, max(thresholds), thresholds)
        if feasible:
            if best_feasible is None or tie_break < best_feasible[0]:
                best_feasible = (tie_break, combo)
        else:
            ranked = (violation,) + tie_break
            if best_infeasible is None or ranked < best_infeasible[0]:
                best_infeasible = (ranked, combo)

    if best_feasible is not None:
        combo = best_feasible[1]
        feasible = True
    else:
        combo = best_infeasible[1]
        feasible = False
    chosen = {key: grid[combo[position]] for position, key in enumerate(keys)}
    confusions = {
        key: counts[key][combo[position]] for position, key in enumerate(keys)
    }
    total = sum(cm.total for cm in confusions.values())
    correct = sum(cm.tp + cm.tn for cm in confusions.values())
    achieved = {
        metric: group_metric(confusions, metric, epsilon)
        for metric, epsilon in constraints
    }
    return ThresholdPolicy(
        per_group_threshold=chosen,
        achieved=achieved,
        objective="accuracy",
        objective_value=correct / total,
        feasible=feasible,
        constraints=constraints,
        grid_step=grid_step,
    )


def _confusion_at(samples, threshold: float) -> ConfusionMatrix:
    tp = fp = tn = fn = 0
    for score, label in samples:
        predicted = 1 if score >= threshold else 0
        if label and predicted:
            tp += 1
        elif predicted:
            fp += 1
        elif label:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def reject_option_adjust(
    frame: AuditFrame, partition: GroupPartition, theta: float, disadvantaged
):
    """Override predictions inside the uncertainty band around 0.5.

    Scores within [0.5 - theta, 0.5 + theta] are too uncertain to trust:
    rows from the disadvantaged group are predicted positive there,
    everyone else negative. Outside the band the prediction is
    score >= 0.5. With theta equal to 0 the band is empty, reproducing
    plain thresholding. Rows without a score get a None prediction.
    Requires 0 <= theta < 0.5.
    """
    if not 0 <= theta < 0.5:
        raise MitigationError(f"theta must satisfy 0 <= theta < 0.5, got {theta!r}")
    if disadvantaged not in partition.groups:
        raise MitigationError(
            f"disadvantaged group {group_label(disadvantaged)!r} not in partition"
        )
    score_col = frame.column_with_role("score")
    if score_col is None:
        raise MitigationError("frame has no score column")
    low, high = 0.5 - theta, 0.5 + theta
    baseline = []
    adjusted = []
    changed = 0
    for row in range(frame.row_count):
        score = score_col.cells[row]
        if score is None:
            baseline.append(None)
            adjusted.append(None)
            continue
        default = 1 if score >= 0.5 else 0
        baseline.append(default)
        if theta > 0 and low <= score <= high:
            decision = 1 if partition.key_of_row[row] == disadvantaged else 0
        else:
            decision = default
        adjusted.append(decision)
        if decision != default:
            changed += 1

    def prediction_rates(predictions):
        rates = {}
        for key, rows in partition.groups.items():
            scored = [predictions[row] for row in rows if predictions[row] is not None]
            rates[key] = sum(scored) / len(scored) if scored else None
        return rates

    provenance = MitigationProvenance(
        technique="reject_option_adjust",
        parameters={
            "theta": theta,
            "disadvantaged": group_label(disadvantaged),
            "evaluated_on": "predictions",
        },
        seed=None,
        rows_changed=changed,
        rows_added=0,
        rows_removed=0,
        before=_rate_parity(prediction_rates(baseline)),
        after=_rate_parity(prediction_rates(adjusted)),
    )
    return tuple(adjusted), provenance

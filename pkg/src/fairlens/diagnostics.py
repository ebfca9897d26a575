"""Dataset quality checks run before trusting any fairness audit.

Each check returns a :class:`DiagnosticResult` whose ``flags`` carry a
severity: threshold violations are errors and fail the check, degraded
or informational notes are info and do not. Policies hold every
threshold so teams can tighten or relax them deliberately.
"""

from __future__ import annotations

import statistics
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from math import log
from typing import Mapping

from ._util import FairlensError
from .frame import AuditFrame, GroupPartition, group_label

__all__ = [
    "DiagnosticError",
    "DiagnosticPolicy",
    "Flag",
    "DiagnosticResult",
    "representativeness",
    "sufficiency",
    "timeliness",
    "missingness_audit",
    "chronological_consistency",
]

_SEVERITIES = ("info", "warning", "error")


class DiagnosticError(FairlensError):
    """A diagnostic that cannot run as requested."""


@dataclass(frozen=True)
class DiagnosticPolicy:
    """Thresholds governing all diagnostic checks.

    ``staleness_cutoff`` is an absolute ``datetime``, a ``timedelta``
    measured back from the newest row, or None (staleness reported as
    not configured).
    """

    group_share_floor: float = 0.05
    tv_flag_threshold: float = 0.10
    min_rows_per_group: int = 30
    rows_per_feature_min: int = 10
    staleness_cutoff: object = None
    drift_flag_threshold: float = 0.2
    missingness_gap_threshold: float = 0.10
    period_shift_threshold: float = 0.10

    def __post_init__(self) -> None:
        for name in (
            "group_share_floor",
            "tv_flag_threshold",
            "drift_flag_threshold",
            "missingness_gap_threshold",
            "period_shift_threshold",
        ):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value >= 0:
                raise DiagnosticError(f"{name} must be a non-negative number, got {value!r}")
        for name in ("min_rows_per_group", "rows_per_feature_min"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise DiagnosticError(f"{name} must be a non-negative integer, got {value!r}")
        cutoff = self.staleness_cutoff
        if cutoff is not None and not isinstance(cutoff, (datetime, timedelta)):
            raise DiagnosticError(
                "staleness_cutoff must be a datetime, a timedelta, or None"
            )

    def to_dict(self) -> dict:
        cutoff = self.staleness_cutoff
        if isinstance(cutoff, datetime):
            cutoff_value = cutoff.isoformat()
        elif isinstance(cutoff, timedelta):
            cutoff_value = {"duration_seconds": cutoff.total_seconds()}
        else:
            cutoff_value = None
        return {
            "group_share_floor": self.group_share_floor,
            "tv_flag_threshold": self.tv_flag_threshold,
            "min_rows_per_group": self.min_rows_per_group,
            "rows_per_feature_min": self.rows_per_feature_min,
            "staleness_cutoff": cutoff_value,
            "drift_flag_threshold": self.drift_flag_threshold,
            "missingness_gap_threshold": self.missingness_gap_threshold,
            "period_shift_threshold": self.period_shift_threshold,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DiagnosticPolicy":
        if not isinstance(data, Mapping):
            raise DiagnosticError("policy document must be a JSON object")
        known = {
            "group_share_floor",
            "tv_flag_threshold",
            "min_rows_per_group",
            "rows_per_feature_min",
            "staleness_cutoff",
            "drift_flag_threshold",
            "missingness_gap_threshold",
            "period_shift_threshold",
        }
        unknown = set(data) - known
        if unknown:
            raise DiagnosticError(f"unknown policy keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "staleness_cutoff" in kwargs:
            kwargs["staleness_cutoff"] = _parse_cutoff(kwargs["staleness_cutoff"])
        return cls(**kwargs)


def _parse_cutoff(raw):
    if raw is None:
        return None
    if isinstance(raw, str):
        try:
            return datetime.fromisoformat(raw)
        except ValueError:
            raise DiagnosticError(
                f"staleness_cutoff {raw!r} is not an ISO-8601 timestamp"
            ) from None
    if isinstance(raw, Mapping):
        allowed = {"days", "hours", "minutes", "seconds", "duration_seconds"}
        unknown = set(raw) - allowed
        if unknown:
            raise DiagnosticError(
                f"unknown staleness_cutoff keys: {', '.join(sorted(unknown))}"
            )
        seconds = raw.get("duration_seconds", 0)
        return timedelta(
            days=raw.get("days", 0),
            hours=raw.get("hours", 0),
            minutes=raw.get("minutes", 0),
            seconds=raw.get("seconds", 0) + seconds,
        )
    raise DiagnosticError(
        "staleness_cutoff must be an ISO-8601 string or a duration object"
    )


@dataclass(frozen=True)
class Flag:
    """One finding: ``subject`` names the group, column, or scope concerned."""

    subject: str
    severity: str
    message: str

    def __post_init__(self) -> None:
        if self.severity not in _SEVERITIES:
            raise DiagnosticError(f"unknown severity {self.severity!r}")

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "severity": self.severity,
            "message": self.message,
        }


@dataclass(frozen=True)
class DiagnosticResult:
    """Outcome of one check; fails exactly when an error-severity flag exists."""

    check: str
    details: Mapping
    flags: tuple
    policy_used: DiagnosticPolicy

    @property
    def passed(self) -> bool:
        return not any(flag.severity == "error" for flag in self.flags)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "details": dict(self.details),
            "flags": [flag.to_dict() for flag in self.flags],
            "passed": self.passed,
            "policy_used": self.policy_used.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DiagnosticResult":
        try:
            flags = tuple(
                Flag(f["subject"], f["severity"], f["message"])
                for f in data.get("flags", ())
            )
            return cls(
                check=data["check"],
                details=dict(data.get("details", {})),
                flags=flags,
                policy_used=DiagnosticPolicy.from_dict(data.get("policy_used", {})),
            )
        except (KeyError, TypeError) as exc:
            raise DiagnosticError(f"malformed diagnostic result: {exc}") from None


def representativeness(
    frame: AuditFrame,
    partition: GroupPartition,
    reference: Mapping = None,
    policy: DiagnosticPolicy = None,
) -> DiagnosticResult:
    """Compare observed group shares against a reference or a share floor.

    With ``reference`` (display label to expected share, covering exactly
    the observed groups and summing to 1): reports the total variation
    distance and flags any group whose share deviates by more than the
    policy threshold. Without it: flags groups below the share floor.
    """
    policy = policy or DiagnosticPolicy()
    if frame.row_count == 0:
        raise DiagnosticError("frame has no rows")
    shares = {
        key: len(rows) / frame.row_count for key, rows in partition.groups.items()
    }
    flags = []
    tv_distance = None
    if reference is not None:
        observed_labels = set(partition.labels())
        if set(reference) != observed_labels:
            raise DiagnosticError(
                "reference shares must cover exactly the observed groups; "
                f"expected {sorted(observed_labels)}, got {sorted(reference)}"
            )
        total = sum(reference.values())
        if abs(total - 1.0) > 1e-9:
            raise DiagnosticError(f"reference shares sum to {total!r}, expected 1")
        tv_distance = 0.5 * sum(
            abs(shares[key] - reference[group_label(key)]) for key in partition.keys
        )
        for key in partition.keys:
            deviation = shares[key] - reference[group_label(key)]
            if abs(deviation) > policy.tv_flag_threshold:
                direction = "under" if deviation < 0 else "over"
                flags.append(
                    Flag(
                        group_label(key),
                        "error",
                        f"group is {direction}-represented by {abs(deviation):.6g} "
                        f"(threshold {policy.tv_flag_threshold:.6g})",
                    )
                )
    else:
        for key in partition.keys:
            if shares[key] < policy.group_share_floor:
                flags.append(
                    Flag(
                        group_label(key),
                        "error",
                        f"group share {shares[key]:.6g} is below the floor "
                        f"{policy.group_share_floor:.6g}",
                    )
                )
    details = {
        "group_shares": {group_label(k): v for k, v in shares.items()},
        "reference": dict(reference) if reference is not None else None,
        "tv_distance": tv_distance,
    }
    return DiagnosticResult(
        check="representativeness",
        details=details,
        flags=tuple(flags),
        policy_used=policy,
    )


def sufficiency(
    frame: AuditFrame, partition: GroupPartition, policy: DiagnosticPolicy = None
) -> DiagnosticResult:
    """Flag groups with too few rows and datasets too small for their width."""
    policy = policy or DiagnosticPolicy()
    flags = []
    counts = {key: len(rows) for key, rows in partition.groups.items()}
    for key in partition.keys:
        if counts[key] < policy.min_rows_per_group:
            flags.append(
                Flag(
                    group_label(key),
                    "error",
                    f"group has {counts[key]} rows, fewer than the minimum "
                    f"{policy.min_rows_per_group}",
                )
            )
    feature_count = len(frame.columns_with_role("feature"))
    required_rows = feature_count * policy.rows_per_feature_min
    if frame.row_count < required_rows:
        flags.append(
            Flag(
                "dataset",
                "error",
                f"{frame.row_count} rows for {feature_count} features; "
                f"need at least {required_rows} "
                f"({policy.rows_per_feature_min} per feature)",
            )
        )
    details = {
        "group_counts": {group_label(k): v for k, v in counts.items()},
        "row_count": frame.row_count,
        "feature_count": feature_count,
        "required_rows": required_rows,
    }
    return DiagnosticResult(
        check="sufficiency", details=details, flags=tuple(flags), policy_used=policy
    )


def _normalize_ts(moment: datetime) -> datetime:
    """Comparable naive-UTC form; naive inputs are taken as already UTC."""
    if moment.tzinfo is not None:
        return moment.astimezone(timezone.utc).replace(tzinfo=None)
    return moment


def _psi(old_values, new_values) -> float:
    """Population stability index between two samples of one numeric column.

    Ten equal-frequency bins on the old sample (decile edges, inclusive
    quantiles), add-one smoothing of both histograms.
    """
    edges = statistics.quantiles(old_values, n=10, method="inclusive")
    old_counts = [0] * 10
    new_counts = [0] * 10
    for value in old_values:
        old_counts[bisect_right(edges, value)] += 1
    for value in new_values:
        new_counts[bisect_right(edges, value)] += 1
    n_old = len(old_values) + 10
    n_new = len(new_values) + 10
    psi = 0.0
    for bin_index in range(10):
        p_old = (old_counts[bin_index] + 1) / n_old
        p_new = (new_counts[bin_index] + 1) / n_new
        psi += (p_new - p_old) * log(p_new / p_old)
    return psi


def timeliness(frame: AuditFrame, policy: DiagnosticPolicy = None) -> DiagnosticResult:
    """Report staleness against the configured cutoff and old-vs-new drift.

    Drift splits rows at the median timestamp (ties break by row index)
    and computes the population stability index per numeric feature
    column; it needs at least 20 dated rows, below which an info note is
    recorded and staleness is still reported.
    """
    policy = policy or DiagnosticPolicy()
    ts_col = frame.column_with_role("timestamp")
    if ts_col is None:
        raise DiagnosticError("frame has no timestamp column")
    flags = []
    dated = [
        (row, _normalize_ts(ts_col.cells[row]))
        for row in range(frame.row_count)
        if ts_col.cells[row] is not None
    ]

    staleness = None
    stale_rows = 0
    cutoff_iso = None
    cutoff = policy.staleness_cutoff
    if not dated:
        flags.append(Flag("timestamp", "info", "no rows carry a timestamp"))
    elif cutoff is None:
        flags.append(
            Flag(
                "staleness",
                "info",
                "no staleness cutoff configured; staleness not assessed",
            )
        )
    else:
        if isinstance(cutoff, timedelta):
            newest = max(moment for _, moment in dated)
            cutoff_dt = newest - cutoff
        else:
            cutoff_dt = _normalize_ts(cutoff)
        cutoff_iso = cutoff_dt.isoformat()
        stale_rows = sum(1 for _, moment in dated if moment < cutoff_dt)
        staleness = stale_rows / len(dated)

    psi_per_feature = {}
    drift_computed = False
    if len(dated) < 20:
        flags.append(
            Flag(
                "drift",
                "info",
                f"{len(dated)} dated rows; at least 20 needed to assess drift",
            )
        )
    else:
        drift_computed = True
        ordered = [row for row, _ in sorted(dated, key=lambda item: (item[1], item[0]))]
        half = len(ordered) // 2
        old_rows, new_rows = ordered[:half], ordered[half:]
        for col in frame.columns_with_role("feature"):
            if col.dtype != "numeric":
                continue
            old_values = [col.cells[r] for r in old_rows if col.cells[r] is not None]
            new_values = [col.cells[r] for r in new_rows if col.cells[r] is not None]
            if len(old_values) < 2 or not new_values:
                psi_per_feature[col.name] = None
                flags.append(
                    Flag(
                        col.name,
                        "info",
                        "too few non-missing values to assess drift",
                    )
                )
                continue
            value = _psi(old_values, new_values)
            psi_per_feature[col.name] = value
            if value > policy.drift_flag_threshold:
                flags.append(
                    Flag(
                        col.name,
                        "error",
                        f"population stability index {value:.6g} exceeds "
                        f"{policy.drift_flag_threshold:.6g} between older and "
                        "newer halves",
                    )
                )
    details = {
        "dated_rows": len(dated),
        "stale_rows": stale_rows,
        "staleness": staleness,
        "cutoff": cutoff_iso,
        "psi_per_feature": psi_per_feature,
        "drift_computed": drift_computed,
    }
    return DiagnosticResult(
        check="timeliness", details=details, flags=tuple(flags), policy_used=policy
    )


def missingness_audit(
    frame: AuditFrame, partition: GroupPartition, policy: DiagnosticPolicy = None
) -> DiagnosticResult:
    """Per-group missingness rates per column, flagging differential gaps.

    A column missing in every row is flagged unusable instead of
    differential.
    """
    policy = policy or DiagnosticPolicy()
    flags = []
    rates = {}
    gaps = {}
    for col in frame.columns:
        per_group = {}
        for key, rows in partition.groups.items():
            missing = sum(1 for row in rows if col.cells[row] is None)
            per_group[key] = missing / len(rows)
        rates[col.name] = per_group
        if frame.row_count and col.missing_count() == frame.row_count:
            gaps[col.name] = 0.0
            flags.append(
                Flag(col.name, "error", "column is missing in every row; unusable")
            )
            continue
        values = list(per_group.values())
        gap = max(values) - min(values) if values else 0.0
        gaps[col.name] = gap
        if gap > policy.missingness_gap_threshold:
            flags.append(
                Flag(
                    col.name,
                    "error",
                    f"missingness differs across groups by {gap:.6g} "
                    f"(threshold {policy.missingness_gap_threshold:.6g})",
                )
            )
    details = {
        "rates": {
            col: {group_label(k): v for k, v in per_group.items()}
            for col, per_group in rates.items()
        },
        "gaps": gaps,
    }
    return DiagnosticResult(
        check="missingness_audit",
        details=details,
        flags=tuple(flags),
        policy_used=policy,
    )


def chronological_consistency(
    frame: AuditFrame, policy: DiagnosticPolicy = None
) -> DiagnosticResult:
    """Compare positive-label rates across collection periods.

    Needs a period column and a label column. A single observed period
    yields an informational note, not a failure.
    """
    policy = policy or DiagnosticPolicy()
    period_col = frame.column_with_role("period")
    if period_col is None:
        raise DiagnosticError("frame has no period column")
    label_col = frame.column_with_role("label")
    if label_col is None:
        raise DiagnosticError("frame has no label column")
    counts = {}
    positives = {}
    for row in range(frame.row_count):
        period = period_col.cells[row]
        label = label_col.cells[row]
        if period is None or label is None:
            continue
        counts[period] = counts.get(period, 0) + 1
        positives[period] = positives.get(period, 0) + (1 if label else 0)
    periods = sorted(counts)
    rates = {period: positives[period] / counts[period] for period in periods}
    flags = []
    shift = None
    if len(periods) < 2:
        note = (
            "no rows with both a period and a label"
            if not periods
            else f"only one period ({periods[0]}); nothing to compare"
        )
        flags.append(Flag("period", "info", note))
    else:
        values = list(rates.values())
        shift = max(values) - min(values)
        if shift > policy.period_shift_threshold:
            low = min(periods, key=lambda p: (rates[p], p))
            high = max(periods, key=lambda p: (rates[p], p))
            flags.append(
                Flag(
                    "period",
                    "error",
                    f"positive-label rate shifts by {shift:.6g} between "
                    f"periods {low!r} ({rates[low]:.6g}) and {high!r} "
                    f"({rates[high]:.6g}), threshold "
                    f"{policy.period_shift_threshold:.6g}",
                )
            )
    details = {
        "period_counts": counts,
        "period_rates": rates,
        "shift": shift,
    }
    return DiagnosticResult(
        check="chronological_consistency",
        details=details,
        flags=tuple(flags),
        policy_used=policy,
    )

"""Tests for dataset health checks: representation, volume, time, gaps."""

import datetime as dt

import pytest

from fairlens.diagnostics import (
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
from fairlens.frame import partition_by_group
from helpers import clf_frame, make_frame

A, B = ("A",), ("B",)


def part_of(frame):
    return partition_by_group(frame, ["grp"])


# ------------------------------------------------------------------- policy


class TestDiagnosticPolicy:
    def test_defaults(self):
        policy = DiagnosticPolicy()
        assert policy.group_share_floor == 0.05
        assert policy.tv_flag_threshold == 0.10
        assert policy.min_rows_per_group == 30
        assert policy.rows_per_feature_min == 10
        assert policy.staleness_cutoff is None
        assert policy.drift_flag_threshold == 0.2
        assert policy.missingness_gap_threshold == 0.10
        assert policy.period_shift_threshold == 0.10

    def test_validation(self):
        with pytest.raises(DiagnosticError, match="group_share_floor"):
            DiagnosticPolicy(group_share_floor=-0.1)
        with pytest.raises(DiagnosticError, match="min_rows_per_group"):
            DiagnosticPolicy(min_rows_per_group=2.5)
        with pytest.raises(DiagnosticError, match="staleness_cutoff"):
            DiagnosticPolicy(staleness_cutoff="2024-01-01")  # must be parsed first

    @pytest.mark.parametrize(
        "cutoff",
        [None, dt.datetime(2024, 1, 1, 12, 0), dt.timedelta(days=90, seconds=30)],
    )
    def test_dict_round_trip(self, cutoff):
        policy = DiagnosticPolicy(staleness_cutoff=cutoff, tv_flag_threshold=0.2)
        assert DiagnosticPolicy.from_dict(policy.to_dict()) == policy

    def test_from_dict_duration_spellings(self):
        policy = DiagnosticPolicy.from_dict(
            {"staleness_cutoff": {"days": 1, "hours": 2, "duration_seconds": 30}}
        )
        assert policy.staleness_cutoff == dt.timedelta(days=1, hours=2, seconds=30)

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(DiagnosticError, match="unknown policy keys: tv_cutoff"):
            DiagnosticPolicy.from_dict({"tv_cutoff": 0.1})
        with pytest.raises(DiagnosticError, match="unknown staleness_cutoff keys"):
            DiagnosticPolicy.from_dict({"staleness_cutoff": {"weeks": 2}})
        with pytest.raises(DiagnosticError, match="JSON object"):
            DiagnosticPolicy.from_dict([1])
        with pytest.raises(DiagnosticError, match="ISO-8601"):
            DiagnosticPolicy.from_dict({"staleness_cutoff": "last year"})


class TestResultShapes:
    def test_flag_severity_checked(self):
        with pytest.raises(DiagnosticError, match="unknown severity"):
            Flag("x", "fatal", "boom")

    def test_passed_iff_no_error_flag(self):
        policy = DiagnosticPolicy()
        info_only = DiagnosticResult(
            check="c", details={}, flags=(Flag("x", "info", "note"),), policy_used=policy
        )
        assert info_only.passed
        with_error = DiagnosticResult(
            check="c",
            details={},
            flags=(Flag("x", "warning", "w"), Flag("y", "error", "e")),
            policy_used=policy,
        )
        assert not with_error.passed

    def test_dict_round_trip(self):
        frame = clf_frame(["A"] * 3 + ["B"] * 7)
        result = representativeness(frame, part_of(frame))
        rebuilt = DiagnosticResult.from_dict(result.to_dict())
        assert rebuilt.check == result.check
        assert rebuilt.flags == result.flags
        assert rebuilt.passed == result.passed
        assert rebuilt.policy_used == result.policy_used


# --------------------------------------------------------- representativeness


class TestRepresentativeness:
    def test_tv_distance_against_reference(self):
        frame = clf_frame(["A"] * 8 + ["B"] * 2)
        result = representativeness(
            frame, part_of(frame), reference={"A": 0.5, "B": 0.5}
        )
        assert result.details["tv_distance"] == pytest.approx(0.3)
        assert not result.passed
        subjects = {flag.subject for flag in result.flags}
        assert subjects == {"A", "B"}
        assert any("over-represented" in f.message for f in result.flags)
        assert any("under-represented" in f.message for f in result.flags)

    def test_reference_within_threshold_passes(self):
        frame = clf_frame(["A"] * 8 + ["B"] * 2)
        policy = DiagnosticPolicy(tv_flag_threshold=0.35)
        result = representativeness(
            frame, part_of(frame), reference={"A": 0.5, "B": 0.5}, policy=policy
        )
        assert result.passed
        assert result.details["tv_distance"] == pytest.approx(0.3)

    def test_reference_must_cover_observed_groups(self):
        frame = clf_frame(["A", "B"])
        with pytest.raises(DiagnosticError, match="exactly the observed groups"):
            representativeness(frame, part_of(frame), reference={"A": 1.0})

    def test_reference_must_sum_to_one(self):
        frame = clf_frame(["A", "B"])
        with pytest.raises(DiagnosticError, match="sum to"):
            representativeness(
                frame, part_of(frame), reference={"A": 0.6, "B": 0.6}
            )

    def test_share_floor_without_reference(self):
        frame = clf_frame(["A"] * 24 + ["B"])
        result = representativeness(frame, part_of(frame))
        [flag] = result.flags
        assert flag.subject == "B"
        assert "below the floor" in flag.message
        ok = representativeness(
            frame, part_of(frame), policy=DiagnosticPolicy(group_share_floor=0.04)
        )
        assert ok.passed

    def test_empty_frame_rejected(self):
        frame = clf_frame([])
        with pytest.raises(DiagnosticError, match="no rows"):
            representativeness(frame, part_of(frame))


# ---------------------------------------------------------------- sufficiency


class TestSufficiency:
    def test_small_group_flagged(self):
        frame = clf_frame(["A"] * 30 + ["B"] * 29)
        result = sufficiency(frame, part_of(frame))
        [flag] = result.flags
        assert flag.subject == "B"
        assert "29 rows" in flag.message
        assert not result.passed

    def test_width_rule(self):
        frame = make_frame(
            ("grp", "categorical", "protected", ["A"] * 35),
            ("f1", "numeric", "feature", [1.0] * 35),
            ("f2", "numeric", "feature", [2.0] * 35),
            ("f3", "numeric", "feature", [3.0] * 35),
            ("f4", "numeric", "feature", [4.0] * 35),
        )
        result = sufficiency(frame, part_of(frame))
        [flag] = result.flags
        assert flag.subject == "dataset"
        assert "need at least 40" in flag.message
        assert result.details["required_rows"] == 40

    def test_sufficient_dataset_passes(self):
        frame = make_frame(
            ("grp", "categorical", "protected", ["A"] * 30 + ["B"] * 30),
            ("f1", "numeric", "feature", [1.0] * 60),
        )
        result = sufficiency(frame, part_of(frame))
        assert result.passed
        assert result.details["group_counts"] == {"A": 30, "B": 30}


# ----------------------------------------------------------------- timeliness


def dated_frame(times, values=None):
    cols = [("t", "timestamp", "timestamp", times)]
    if values is not None:
        cols.append(("x", "numeric", "feature", values))
    return make_frame(*cols)


class TestTimeliness:
    def test_requires_timestamp_column(self):
        with pytest.raises(DiagnosticError, match="no timestamp column"):
            timeliness(make_frame(("x", "numeric", "feature", [1.0])))

    def test_no_dated_rows_is_informational(self):
        result = timeliness(dated_frame([None, None]))
        assert result.passed
        assert result.details["staleness"] is None
        assert any("no rows carry a timestamp" in f.message for f in result.flags)

    def test_unconfigured_cutoff_is_informational(self):
        result = timeliness(dated_frame([dt.datetime(2024, 1, 1)]))
        assert result.passed
        assert result.details["staleness"] is None
        assert any("staleness not assessed" in f.message for f in result.flags)

    def test_absolute_cutoff_counts_strictly_older_rows(self):
        times = [
            dt.datetime(2023, 6, 1),
            dt.datetime(2023, 12, 31),
            dt.datetime(2024, 1, 1),  # equal to the cutoff: not stale
            dt.datetime(2024, 3, 1),
        ]
        policy = DiagnosticPolicy(staleness_cutoff=dt.datetime(2024, 1, 1))
        result = timeliness(dated_frame(times), policy)
        assert result.details["staleness"] == 0.5
        assert result.details["stale_rows"] == 2
        assert result.details["cutoff"] == "2024-01-01T00:00:00"

    def test_relative_cutoff_measured_from_newest(self):
        times = [dt.datetime(2024, 1, d) for d in (1, 2, 3, 4)]
        policy = DiagnosticPolicy(staleness_cutoff=dt.timedelta(days=2))
        result = timeliness(dated_frame(times), policy)
        # Cutoff is Jan 4 minus 2 days = Jan 2; only Jan 1 is older.
        assert result.details["staleness"] == 0.25

    def test_timezone_aware_rows_normalized_to_utc(self):
        plus2 = dt.timezone(dt.timedelta(hours=2))
        times = [
            dt.datetime(2024, 1, 1, 13, 0, tzinfo=plus2),  # 11:00 UTC: stale
            dt.datetime(2024, 1, 1, 13, 0),  # naive, taken as UTC: fresh
        ]
        policy = DiagnosticPolicy(staleness_cutoff=dt.datetime(2024, 1, 1, 12, 0))
        result = timeliness(dated_frame(times), policy)
        assert result.details["staleness"] == 0.5

    def test_few_dated_rows_skip_drift(self):
        times = [dt.datetime(2024, 1, 1)] * 19
        result = timeliness(dated_frame(times, [1.0] * 19))
        assert result.passed
        assert not result.details["drift_computed"]
        assert any("at least 20 needed" in f.message for f in result.flags)

    def test_identical_halves_have_negligible_psi(self):
        values = [float(v) for v in range(1, 11)]
        times = [dt.datetime(2024, 1, 1)] * 10 + [dt.datetime(2024, 6, 1)] * 10
        result = timeliness(dated_frame(times, values + values))
        assert result.passed
        assert abs(result.details["psi_per_feature"]["x"]) <= 1e-6

    def test_shifted_halves_flagged(self):
        old = [float(v) for v in range(10)]
        new = [float(v) + 100 for v in range(10)]
        times = [dt.datetime(2024, 1, 1)] * 10 + [dt.datetime(2024, 6, 1)] * 10
        result = timeliness(dated_frame(times, old + new))
        assert not result.passed
        [flag] = [f for f in result.flags if f.severity == "error"]
        assert flag.subject == "x"
        assert "population stability index" in flag.message

    def test_sparse_feature_gets_info_not_crash(self):
        times = [dt.datetime(2024, 1, 1)] * 10 + [dt.datetime(2024, 6, 1)] * 10
        values = [None] * 9 + [1.0] + [2.0] * 10  # one non-missing old value
        result = timeliness(dated_frame(times, values))
        assert result.details["psi_per_feature"]["x"] is None
        assert any("too few non-missing" in f.message for f in result.flags)
        assert result.passed

    def test_non_numeric_features_ignored_for_drift(self):
        times = [dt.datetime(2024, 1, 1)] * 10 + [dt.datetime(2024, 6, 1)] * 10
        frame = make_frame(
            ("t", "timestamp", "timestamp", times),
            ("c", "categorical", "feature", ["a"] * 10 + ["b"] * 10),
        )
        result = timeliness(frame)
        assert result.details["psi_per_feature"] == {}


# ----------------------------------------------------------- missing patterns


class TestMissingnessAudit:
    def test_differential_gap_flagged(self):
        frame = make_frame(
            ("grp", "categorical", "protected", ["A"] * 10 + ["B"] * 10),
            ("x", "numeric", "feature", [None] * 5 + [1.0] * 5 + [None] + [1.0] * 9),
        )
        result = missingness_audit(frame, part_of(frame))
        assert result.details["gaps"]["x"] == pytest.approx(0.4)
        [flag] = result.flags
        assert flag.subject == "x"
        assert "differs across groups by 0.4" in flag.message

    def test_gap_at_threshold_passes(self):
        frame = make_frame(
            ("grp", "categorical", "protected", ["A"] * 10 + ["B"] * 10),
            ("x", "numeric", "feature", [None] + [1.0] * 19),
        )
        assert missingness_audit(frame, part_of(frame)).passed

    def test_fully_missing_column_is_unusable_not_differential(self):
        frame = make_frame(
            ("grp", "categorical", "protected", ["A", "B"]),
            ("x", "numeric", "feature", [None, None]),
        )
        result = missingness_audit(frame, part_of(frame))
        [flag] = result.flags
        assert "unusable" in flag.message
        assert result.details["gaps"]["x"] == 0.0

    def test_rates_reported_per_group_and_column(self):
        frame = make_frame(
            ("grp", "categorical", "protected", ["A", "A", "B"]),
            ("x", "numeric", "feature", [None, 1.0, 1.0]),
        )
        result = missingness_audit(frame, part_of(frame))
        assert result.details["rates"]["x"] == {"A": 0.5, "B": 0.0}
        assert result.details["rates"]["grp"] == {"A": 0.0, "B": 0.0}


# ------------------------------------------------------- chronological shifts


class TestChronologicalConsistency:
    def frame_with_periods(self, periods, labels):
        return make_frame(
            ("p", "categorical", "period", periods),
            ("y", "boolean", "label", labels),
        )

    def test_requires_period_and_label_columns(self):
        with pytest.raises(DiagnosticError, match="no period column"):
            chronological_consistency(make_frame(("y", "boolean", "label", [1])))
        with pytest.raises(DiagnosticError, match="no label column"):
            chronological_consistency(
                make_frame(("p", "categorical", "period", ["2023"]))
            )

    def test_shift_flagged_with_period_names(self):
        frame = self.frame_with_periods(
            ["2022"] * 10 + ["2023"] * 10,
            [1] * 5 + [0] * 5 + [1] * 2 + [0] * 8,
        )
        result = chronological_consistency(frame)
        assert result.details["shift"] == pytest.approx(0.3)
        [flag] = result.flags
        assert flag.severity == "error"
        assert "'2023'" in flag.message and "'2022'" in flag.message

    def test_shift_within_threshold_passes(self):
        frame = self.frame_with_periods(["a", "a", "b", "b"], [1, 0, 1, 0])
        result = chronological_consistency(frame)
        assert result.passed
        assert result.details["shift"] == 0.0

    def test_single_period_is_informational(self):
        frame = self.frame_with_periods(["2023", "2023"], [1, 0])
        result = chronological_consistency(frame)
        assert result.passed
        assert result.details["shift"] is None
        assert any("only one period" in f.message for f in result.flags)

    def test_rows_missing_period_or_label_skipped(self):
        frame = self.frame_with_periods(
            ["a", "a", None, "b", "b"], [1, None, 1, 0, 0]
        )
        result = chronological_consistency(frame)
        assert result.details["period_counts"] == {"a": 1, "b": 2}
        assert result.details["period_rates"] == {"a": 1.0, "b": 0.0}

    def test_no_usable_rows_is_informational(self):
        frame = self.frame_with_periods(["a", None], [None, 1])
        result = chronological_consistency(frame)
        assert result.passed
        assert any("no rows with both" in f.message for f in result.flags)

"""Tests for the bias registry, its queries, and assessment scaffolds."""

import json
from pathlib import Path

import pytest

from fairlens.taxonomy import (
    CATEGORIES,
    FAIRNESS_TYPES,
    LIFECYCLE_STAGES,
    BiasEntry,
    TaxonomyError,
    entry_by_id,
    query,
    registry,
    registry_to_json_obj,
    scaffold_assessment,
    stage_name,
)

ANCHORS = json.loads(
    (Path(__file__).parent / "data" / "taxonomy_anchors.json").read_text(
        encoding="utf-8"
    )
)


class TestLifecycleVocabulary:
    def test_twelve_stages_in_order(self):
        assert [s.index for s in LIFECYCLE_STAGES] == list(range(1, 13))
        assert [s.name for s in LIFECYCLE_STAGES] == [
            "Project Planning",
            "Problem Formulation",
            "Data Extraction or Procurement",
            "Data Analysis",
            "Preprocessing & Feature Engineering",
            "Model Selection & Training",
            "Model Testing & Validation",
            "Model Reporting",
            "System Implementation",
            "User Training",
            "System Use & Monitoring",
            "Model Updating or Deprovisioning",
        ]

    def test_stage_name_lookup(self):
        assert stage_name(1) == "Project Planning"
        assert stage_name(12) == "Model Updating or Deprovisioning"
        with pytest.raises(TaxonomyError, match="1..12"):
            stage_name(0)
        with pytest.raises(TaxonomyError, match="1..12"):
            stage_name(13)

    def test_fairness_types(self):
        assert FAIRNESS_TYPES == (
            "Data Fairness",
            "Application Fairness",
            "Model Design and Development Fairness",
            "Metric-Based Fairness",
            "System Implementation Fairness",
            "Ecosystem Fairness",
        )

    def test_categories(self):
        assert CATEGORIES == ("World", "Data", "Design", "Ecosystem", "Cognition")


class TestRegistryShape:
    def test_entry_count_and_category_totals(self):
        entries = registry()
        assert len(entries) == 39
        by_category = {}
        for entry in entries:
            by_category[entry.category] = by_category.get(entry.category, 0) + 1
        assert by_category == {
            "World": 2,
            "Data": 6,
            "Design": 17,
            "Ecosystem": 6,
            "Cognition": 8,
        }

    def test_ids_unique(self):
        ids = [entry.id for entry in registry()]
        assert len(ids) == len(set(ids))

    def test_every_stage_covered(self):
        for stage in range(1, 13):
            assert query(stage=stage), f"no bias covers stage {stage}"

    def test_every_fairness_type_covered(self):
        for fairness_type in FAIRNESS_TYPES:
            assert query(fairness_type=fairness_type), (
                f"no bias tagged {fairness_type}"
            )

    def test_anchors_match_transcription_fixture(self):
        entries = {entry.id: entry for entry in registry()}
        assert set(entries) == set(ANCHORS)
        for bias_id, anchor in ANCHORS.items():
            assert entries[bias_id].anchor == anchor, bias_id

    def test_entries_carry_descriptions_and_names(self):
        for entry in registry():
            assert entry.name
            assert len(entry.description.split()) >= 5
            assert entry.lifecycle_stages
            assert entry.fairness_types


class TestBiasEntryValidation:
    def good(self, **overrides):
        kwargs = dict(
            id="x",
            name="X",
            category="Data",
            description="a perfectly reasonable description",
            lifecycle_stages=(3, 4),
            significant_stages=(3,),
            fairness_types=("Data Fairness",),
            anchor="short phrase",
        )
        kwargs.update(overrides)
        return BiasEntry(**kwargs)

    def test_valid_entry_builds(self):
        entry = self.good()
        assert entry.notes is None

    def test_category_checked(self):
        with pytest.raises(TaxonomyError, match="unknown category"):
            self.good(category="Folklore")

    def test_stage_range_checked(self):
        with pytest.raises(TaxonomyError, match="out of range"):
            self.good(lifecycle_stages=(0,), significant_stages=())

    def test_significant_must_be_within_scope(self):
        with pytest.raises(TaxonomyError, match="within the lifecycle scope"):
            self.good(significant_stages=(5,))

    def test_fairness_type_checked(self):
        with pytest.raises(TaxonomyError, match="unknown fairness type"):
            self.good(fairness_types=("Vibes",))

    def test_anchor_word_budget(self):
        with pytest.raises(TaxonomyError, match="eight words"):
            self.good(anchor="one two three four five six seven eight nine")

    def test_to_dict_key_set(self):
        assert sorted(self.good().to_dict()) == [
            "anchor",
            "category",
            "description",
            "fairness_types",
            "id",
            "lifecycle_stages",
            "name",
            "notes",
        ]


class TestLookupAndQuery:
    def test_entry_by_id(self):
        entry = entry_by_id("historical_bias")
        assert entry.name == "Historical Bias"
        assert entry.category == "World"
        with pytest.raises(TaxonomyError, match="no bias with id"):
            entry_by_id("recency_bias")

    def test_world_category_exactly_two(self):
        ids = {entry.id for entry in query(category="World")}
        assert ids == {"historical_bias", "institutional_bias"}

    def test_project_planning_usual_suspects(self):
        ids = {entry.id for entry in query(stage=1)}
        assert {"historical_bias", "optimism_bias", "availability_bias"} <= ids

    def test_feature_engineering_includes_representation(self):
        ids = {entry.id for entry in query(stage=5)}
        assert "representation_bias" in ids

    def test_metric_based_fairness_members(self):
        ids = {entry.id for entry in query(fairness_type="Metric-Based Fairness")}
        assert {"model_selection_bias", "evaluation_bias"} <= ids

    def test_filters_combine_conjunctively(self):
        combined = query(category="Design", stage=6)
        for entry in combined:
            assert entry.category == "Design"
            assert 6 in entry.lifecycle_stages
        assert set(combined) <= set(query(category="Design"))

    def test_no_filters_returns_everything(self):
        assert query() == registry()

    def test_filter_validation(self):
        with pytest.raises(TaxonomyError, match="unknown category"):
            query(category="data")
        with pytest.raises(TaxonomyError, match="stage must be an integer"):
            query(stage=13)
        with pytest.raises(TaxonomyError, match="stage must be an integer"):
            query(stage="1")
        with pytest.raises(TaxonomyError, match="unknown fairness type"):
            query(fairness_type="Data")

    def test_population_pair_share_their_anchor(self):
        assert (
            entry_by_id("population_bias").anchor
            == entry_by_id("training_serving_skew").anchor
        )


class TestScaffoldAssessment:
    def test_stage_one_contains_historical_bias_row(self):
        rows = scaffold_assessment([1])
        match = [row for row in rows if row.bias == "historical_bias"]
        assert len(match) == 1
        row = match[0]
        assert row.stage == 1
        assert stage_name(row.stage) == "Project Planning"
        assert entry_by_id(row.bias).name == "Historical Bias"
        assert row.category == "World"
        assert row.risk_mitigation_action == ""

    def test_rows_only_for_in_scope_biases(self):
        for row in scaffold_assessment([1, 6, 12]):
            assert row.stage in entry_by_id(row.bias).lifecycle_stages

    def test_stage_order_kept_duplicates_collapse(self):
        rows = scaffold_assessment([6, 1, 6])
        stages_seen = []
        for row in rows:
            if not stages_seen or stages_seen[-1] != row.stage:
                stages_seen.append(row.stage)
        assert stages_seen == [6, 1]

    def test_canonical_order_within_stage(self):
        rows = scaffold_assessment([3])
        canon = [e.id for e in registry() if 3 in e.lifecycle_stages]
        assert [row.bias for row in rows] == canon

    def test_validation(self):
        with pytest.raises(TaxonomyError, match="at least one stage"):
            scaffold_assessment([])
        with pytest.raises(TaxonomyError, match="stage must be an integer"):
            scaffold_assessment([0])

    def test_row_to_dict(self):
        row = scaffold_assessment([2])[0]
        data = row.to_dict()
        assert data["stage"] == 2
        assert data["risk_mitigation_action"] == ""


class TestJsonExport:
    def test_full_registry_export(self):
        obj = registry_to_json_obj()
        assert len(obj) == 39
        assert json.dumps(obj)  # JSON-ready
        for record in obj:
            assert sorted(record) == [
                "anchor",
                "category",
                "description",
                "fairness_types",
                "id",
                "lifecycle_stages",
                "name",
                "notes",
            ]

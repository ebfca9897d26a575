"""The published document schemas accept rendered documents and nothing else."""

import json
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator

from fairlens.diagnostics import sufficiency
from fairlens.frame import partition_by_group
from fairlens.reporting import (
    PositionStatementInput,
    bias_plan,
    data_factsheet,
    position_statement,
)
from fairlens.taxonomy import AssessmentRow
from helpers import clf_frame

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "docs" / "schemas"

QUALITATIVE = {
    name: f"Assessed: {name}."
    for name in (
        "data representativeness",
        "data sufficiency",
        "source integrity",
        "data timeliness",
        "data relevance",
        "training/testing/validating splits",
        "unforeseen data issues",
    )
}


def _statement():
    return position_statement(
        PositionStatementInput(
            project="Benefit Triage",
            established_metrics=(("demographic_parity", 0.05),),
            rationale="Selection parity is the binding obligation.",
            date_completed="2026-05-01",
            team_members=("Reviewer",),
        )
    )


def _plan():
    return bias_plan(
        [
            AssessmentRow(1, "historical_bias", "World", "document provenance"),
            AssessmentRow(6, "evaluation_bias", "Design", ""),
        ],
        {"date_completed": "2026-05-01"},
    )


def _factsheet():
    frame = clf_frame(["A", "A", "B"])
    diagnostics = [sufficiency(frame, partition_by_group(frame, ["grp"]))]
    qualitative = dict(QUALITATIVE)
    qualitative["source integrity"] = {"text": "Spot checks pending.", "internal": True}
    return data_factsheet(
        {
            "date_completed": "2026-05-01",
            "dataset": {"rows": 3, "origin": "unit fixture"},
            "provenance": {"pipeline": "v1"},
        },
        diagnostics=diagnostics,
        qualitative=qualitative,
    )


DOCUMENTS = {
    "position_statement.schema.json": _statement,
    "bias_plan.schema.json": _plan,
    "data_factsheet.schema.json": _factsheet,
}


def _validator(name):
    schema = json.loads((SCHEMA_DIR / name).read_text(encoding="utf-8"))
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)


@pytest.mark.parametrize("name", sorted(DOCUMENTS))
def test_schema_accepts_rendered_document(name):
    validator = _validator(name)
    document = DOCUMENTS[name]()
    validator.validate(document.to_dict())
    validator.validate(document.to_dict(public=True))


def test_schemas_are_kind_specific():
    validator = _validator("position_statement.schema.json")
    assert list(validator.iter_errors(_plan().to_dict()))


def test_schema_rejects_unknown_block_type():
    validator = _validator("bias_plan.schema.json")
    data = _plan().to_dict()
    data["sections"][0]["blocks"][0]["type"] = "chart"
    assert list(validator.iter_errors(data))


def test_schema_rejects_missing_metadata():
    validator = _validator("data_factsheet.schema.json")
    data = _factsheet().to_dict()
    del data["date_completed"]
    assert list(validator.iter_errors(data))


def test_schema_requires_mandated_factsheet_sections():
    validator = _validator("data_factsheet.schema.json")
    data = _factsheet().to_dict()
    data["sections"] = [
        section
        for section in data["sections"]
        if section["heading"] != "Data timeliness"
    ]
    assert list(validator.iter_errors(data))

"""Structured governance documents: position statements, bias plans, factsheets.

Documents are ordered sections of typed blocks (paragraphs, tables,
key-value lists, embedded JSON). Any block or key-value item can be
marked internal; rendering with ``public=True`` strips those, supporting
a public release cut of the same document. JSON rendering is canonical
and lossless: parse it, rebuild the document, render again, and the
bytes match.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Mapping, Sequence

from ._util import FairlensError, canonical_json
from .diagnostics import DiagnosticResult
from .metrics import METRIC_KINDS, FairnessReport
from .taxonomy import TaxonomyError, entry_by_id, stage_name

__all__ = [
    "DOCUMENT_KINDS",
    "REQUIRED_FACTSHEET_FIELDS",
    "BIAS_PLAN_COLUMNS",
    "ReportError",
    "Paragraph",
    "Table",
    "KeyValueItem",
    "KeyValues",
    "JsonPayload",
    "Section",
    "Document",
    "PositionStatementInput",
    "position_statement",
    "bias_plan",
    "data_factsheet",
    "render",
]

DOCUMENT_KINDS = ("position_statement", "bias_plan", "data_factsheet")

# Qualitative topics a data factsheet must address, in presentation order.
REQUIRED_FACTSHEET_FIELDS = (
    "data representativeness",
    "data sufficiency",
    "source integrity",
    "data timeliness",
    "data relevance",
    "training/testing/validating splits",
    "unforeseen data issues",
)

BIAS_PLAN_COLUMNS = ("AI Lifecycle Stage", "Bias", "Category", "Risk Mitigation Action")


class ReportError(FairlensError):
    """A document that cannot be built or rendered as requested."""


@dataclass(frozen=True)
class Paragraph:
    text: str
    internal: bool = False

    def to_dict(self) -> dict:
        return {"type": "paragraph", "text": self.text, "internal": self.internal}


@dataclass(frozen=True)
class Table:
    columns: tuple
    rows: tuple
    internal: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(row) for row in self.rows))
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ReportError(
                    f"table row {list(row)!r} has {len(row)} cells, "
                    f"expected {len(self.columns)}"
                )

    def to_dict(self) -> dict:
        return {
            "type": "table",
            "columns": list(self.columns),
            "rows": [list(row) for row in self.rows],
            "internal": self.internal,
        }


@dataclass(frozen=True)
class KeyValueItem:
    key: str
    value: object
    internal: bool = False

    def to_dict(self) -> dict:
        return {"key": self.key, "value": self.value, "internal": self.internal}


@dataclass(frozen=True)
class KeyValues:
    items: tuple
    internal: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def to_dict(self) -> dict:
        return {
            "type": "key_values",
            "items": [item.to_dict() for item in self.items],
            "internal": self.internal,
        }


@dataclass(frozen=True)
class JsonPayload:
    payload: object
    internal: bool = False

    def to_dict(self) -> dict:
        return {"type": "json", "payload": self.payload, "internal": self.internal}


_BLOCK_TYPES = {
    "paragraph": Paragraph,
    "table": Table,
    "key_values": KeyValues,
    "json": JsonPayload,
}


def _block_from_dict(data: Mapping):
    kind = data.get("type")
    if kind == "paragraph":
        return Paragraph(text=data["text"], internal=data.get("internal", False))
    if kind == "table":
        return Table(
            columns=tuple(data["columns"]),
            rows=tuple(tuple(row) for row in data["rows"]),
            internal=data.get("internal", False),
        )
    if kind == "key_values":
        return KeyValues(
            items=tuple(
                KeyValueItem(
                    key=item["key"],
                    value=item["value"],
                    internal=item.get("internal", False),
                )
                for item in data["items"]
            ),
            internal=data.get("internal", False),
        )
    if kind == "json":
        return JsonPayload(payload=data["payload"], internal=data.get("internal", False))
    raise ReportError(f"unknown block type {kind!r}")


@dataclass(frozen=True)
class Section:
    heading: str
    blocks: tuple

    def __post_init__(self) -> None:
        if not self.heading:
            raise ReportError("section heading must be non-empty")
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def to_dict(self) -> dict:
        return {
            "heading": self.heading,
            "blocks": [block.to_dict() for block in self.blocks],
        }


def _check_iso_date(text: str) -> None:
    for parser in (date.fromisoformat, datetime.fromisoformat):
        try:
            parser(text)
            return
        except (ValueError, TypeError):
            continue
    raise ReportError(f"date_completed {text!r} is not an ISO-8601 date")


@dataclass(frozen=True)
class Document:
    """A complete governance document ready to render."""

    kind: str
    title: str
    date_completed: str
    team_members: tuple
    sections: tuple
    public_release: bool = False

    def __post_init__(self) -> None:
        if self.kind not in DOCUMENT_KINDS:
            raise ReportError(
                f"unknown document kind {self.kind!r}; expected one of "
                + ", ".join(DOCUMENT_KINDS)
            )
        if not self.title:
            raise ReportError("document title must be non-empty")
        _check_iso_date(self.date_completed)
        object.__setattr__(self, "team_members", tuple(self.team_members))
        object.__setattr__(self, "sections", tuple(self.sections))

    def to_dict(self, public: bool = False) -> dict:
        sections = []
        for section in self.sections:
            blocks = []
            for block in section.blocks:
                if public and block.internal:
                    continue
                if public and isinstance(block, KeyValues):
                    kept = tuple(
                        item for item in block.items if not item.internal
                    )
                    block = KeyValues(items=kept, internal=block.internal)
                blocks.append(block.to_dict())
            sections.append({"heading": section.heading, "blocks": blocks})
        return {
            "kind": self.kind,
            "title": self.title,
            "date_completed": self.date_completed,
            "team_members": list(self.team_members),
            "sections": sections,
            "public_release": self.public_release,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Document":
        try:
            sections = tuple(
                Section(
                    heading=raw["heading"],
                    blocks=tuple(_block_from_dict(block) for block in raw["blocks"]),
                )
                for raw in data["sections"]
            )
            return cls(
                kind=data["kind"],
                title=data["title"],
                date_completed=data["date_completed"],
                team_members=tuple(data["team_members"]),
                sections=sections,
                public_release=data.get("public_release", False),
            )
        except (KeyError, TypeError) as exc:
            raise ReportError(f"malformed document: {exc}") from None


@dataclass(frozen=True)
class PositionStatementInput:
    """Inputs for a fairness position statement.

    ``established_metrics`` pairs metric names with their tolerated
    disparity; ``measured`` optionally attaches audit results.
    """

    project: str
    established_metrics: tuple
    rationale: str
    date_completed: str
    team_members: tuple = ()
    measured: FairnessReport = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "established_metrics", tuple(self.established_metrics)
        )
        object.__setattr__(self, "team_members", tuple(self.team_members))


def position_statement(spec: PositionStatementInput) -> Document:
    """A public statement of which fairness metrics the project holds
    itself to, why, and (optionally) how it currently measures up."""
    if not spec.project:
        raise ReportError("position statement needs a project name")
    if not spec.established_metrics:
        raise ReportError("position statement needs at least one established metric")
    if not spec.rationale or not spec.rationale.strip():
        raise ReportError("position statement needs a non-empty rationale")
    for metric, epsilon in spec.established_metrics:
        if metric not in METRIC_KINDS:
            raise ReportError(
                f"unknown metric {metric!r}; expected one of " + ", ".join(METRIC_KINDS)
            )
        if not isinstance(epsilon, (int, float)) or not epsilon >= 0:
            raise ReportError(
                f"tolerance for {metric} must be a non-negative number, got {epsilon!r}"
            )
    sections = [
        Section(
            heading="Established Fairness Metrics",
            blocks=(
                Table(
                    columns=("Metric", "Tolerance"),
                    rows=tuple(
                        (metric, epsilon)
                        for metric, epsilon in spec.established_metrics
                    ),
                ),
            ),
        ),
        Section(
            heading="Explanation of Choice and Rationale",
            blocks=(Paragraph(text=spec.rationale),),
        ),
    ]
    if spec.measured is not None:
        rows = tuple(
            (
                result.metric,
                result.gap,
                result.ratio,
                result.epsilon,
                result.passed,
            )
            for result in spec.measured.metrics
        )
        sections.append(
            Section(
                heading="Measured Results",
                blocks=(
                    Table(
                        columns=("Metric", "Gap", "Ratio", "Tolerance", "Passed"),
                        rows=rows,
                    ),
                ),
            )
        )
    return Document(
        kind="position_statement",
        title=f"Fairness Position Statement: {spec.project}",
        date_completed=spec.date_completed,
        team_members=spec.team_members,
        sections=tuple(sections),
        public_release=True,
    )


def bias_plan(rows: Sequence, metadata: Mapping) -> Document:
    """A bias self-assessment plan: one table of biases by lifecycle stage
    with the team's mitigation action for each, plus a completeness footer.

    Every row's bias must exist in the registry and list the row's stage
    in its lifecycle scope.
    """
    rows = list(rows)
    if not rows:
        raise ReportError("bias plan needs at least one assessment row")
    table_rows = []
    pending = 0
    for row in sorted(rows, key=lambda r: r.stage):
        try:
            entry = entry_by_id(row.bias)
        except TaxonomyError as exc:
            raise ReportError(str(exc)) from None
        if row.stage not in entry.lifecycle_stages:
            raise ReportError(
                f"bias {entry.name!r} does not arise at stage "
                f"{row.stage} ({stage_name(row.stage)}); its lifecycle scope is "
                + ", ".join(str(s) for s in entry.lifecycle_stages)
            )
        action = row.risk_mitigation_action or ""
        if not action.strip():
            pending += 1
        table_rows.append(
            (stage_name(row.stage), entry.name, row.category, action)
        )
    footer = f"{pending} of {len(rows)} actions pending"
    sections = (
        Section(
            heading="Assessment",
            blocks=(
                Table(columns=BIAS_PLAN_COLUMNS, rows=tuple(table_rows)),
                Paragraph(text=footer),
            ),
        ),
    )
    return Document(
        kind="bias_plan",
        title=metadata.get("title") or "Bias Self-Assessment Plan",
        date_completed=metadata.get("date_completed", ""),
        team_members=tuple(metadata.get("team_members", ())),
        sections=sections,
    )


def _qualitative_entry(value):
    """Normalize a qualitative field value to (text, internal)."""
    if isinstance(value, Mapping):
        return str(value.get("text", "")), bool(value.get("internal", False))
    return ("" if value is None else str(value)), False


def data_factsheet(
    metadata: Mapping, diagnostics: Sequence = (), qualitative: Mapping = None
) -> Document:
    """A dataset factsheet combining required qualitative answers with
    measured diagnostics.

    ``metadata`` carries document fields (title, date_completed,
    team_members) plus optional ``dataset`` facts and ``provenance`` to
    embed. ``qualitative`` must answer every topic in
    :data:`REQUIRED_FACTSHEET_FIELDS`; a missing or empty answer is an
    error naming the field. Values may be strings or
    ``{"text": ..., "internal": true}`` to keep an answer out of the
    public cut.
    """
    qualitative = dict(qualitative or {})
    missing = []
    for field_name in REQUIRED_FACTSHEET_FIELDS:
        text, _ = _qualitative_entry(qualitative.get(field_name))
        if not text.strip():
            missing.append(field_name)
    if missing:
        raise ReportError(
            "data factsheet is missing required fields: " + ", ".join(missing)
        )
    sections = []
    dataset = metadata.get("dataset") or {}
    provenance = metadata.get("provenance")
    if dataset or provenance is not None:
        blocks = []
        if dataset:
            items = []
            for key, value in dataset.items():
                if isinstance(value, Mapping) and "value" in value:
                    items.append(
                        KeyValueItem(
                            key=key,
                            value=value["value"],
                            internal=bool(value.get("internal", False)),
                        )
                    )
                else:
                    items.append(KeyValueItem(key=key, value=value))
            blocks.append(KeyValues(items=tuple(items)))
        if provenance is not None:
            blocks.append(JsonPayload(payload=provenance))
        sections.append(Section(heading="Dataset", blocks=tuple(blocks)))
    ordered_fields = list(REQUIRED_FACTSHEET_FIELDS) + sorted(
        key for key in qualitative if key not in REQUIRED_FACTSHEET_FIELDS
    )
    for field_name in ordered_fields:
        if field_name not in qualitative:
            continue
        text, internal = _qualitative_entry(qualitative[field_name])
        heading = field_name[0].upper() + field_name[1:]
        sections.append(
            Section(
                heading=heading,
                blocks=(Paragraph(text=text, internal=internal),),
            )
        )
    if diagnostics:
        tables = []
        for result in diagnostics:
            if isinstance(result, Mapping):
                result = DiagnosticResult.from_dict(result)
            flag_rows = tuple(
                (result.check, result.passed, flag.subject, flag.severity, flag.message)
                for flag in result.flags
            ) or ((result.check, result.passed, "", "info", "no findings"),)
            tables.append(
                Table(
                    columns=("Check", "Passed", "Subject", "Severity", "Message"),
                    rows=flag_rows,
                )
            )
        sections.append(Section(heading="Diagnostics", blocks=tuple(tables)))
    return Document(
        kind="data_factsheet",
        title=metadata.get("title") or "Data Factsheet",
        date_completed=metadata.get("date_completed", ""),
        team_members=tuple(metadata.get("team_members", ())),
        sections=tuple(sections),
    )


def _markdown_cell(value) -> str:
    if value is None:
        text = ""
    elif isinstance(value, bool):
        text = "true" if value else "false"
    else:
        text = str(value)
    return text.replace("|", "\\|").replace("\n", " ")


def _render_markdown(doc: Document, public: bool) -> str:
    lines = [f"# {doc.title}", ""]
    lines.append(f"Date completed: {doc.date_completed}")
    members = ", ".join(doc.team_members) if doc.team_members else "(none listed)"
    lines.append(f"Team members involved: {members}")
    lines.append("")
    for section in doc.sections:
        blocks = [
            block
            for block in section.blocks
            if not (public and block.internal)
        ]
        if public and not blocks:
            continue
        lines.append(f"## {section.heading}")
        lines.append("")
        for block in blocks:
            if isinstance(block, Paragraph):
                lines.append(block.text)
                lines.append("")
            elif isinstance(block, Table):
                lines.append(
                    "| " + " | ".join(_markdown_cell(c) for c in block.columns) + " |"
                )
                lines.append("|" + "|".join(" --- " for _ in block.columns) + "|")
                for row in block.rows:
                    lines.append(
                        "| " + " | ".join(_markdown_cell(c) for c in row) + " |"
                    )
                lines.append("")
            elif isinstance(block, KeyValues):
                items = [
                    item
                    for item in block.items
                    if not (public and item.internal)
                ]
                for item in items:
                    lines.append(f"- **{item.key}**: {_markdown_cell(item.value)}")
                lines.append("")
            elif isinstance(block, JsonPayload):
                lines.append("```json")
                lines.append(canonical_json(block.payload).rstrip("\n"))
                lines.append("```")
                lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def render(doc: Document, format: str = "json", public: bool = False) -> str:
    """Render a document to canonical JSON or Markdown.

    ``public=True`` drops internal-marked blocks and key-value items.
    JSON output is canonical: re-rendering a parsed document reproduces
    the bytes exactly.
    """
    if format == "json":
        return canonical_json(doc.to_dict(public=public))
    if format == "markdown":
        return _render_markdown(doc, public)
    raise ReportError(f"unknown format {format!r}; expected 'json' or 'markdown'")

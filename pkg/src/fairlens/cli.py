"""Command-line interface.

Exit codes: 0 for success (audit passed, diagnostics clean, output
written), 1 for a failed fairness or diagnostic verdict, 2 for usage
errors or unreadable inputs (with a one-line diagnostic on stderr).
JSON outputs carry a {tool_version, invocation, timestamp, ...} envelope
and are written atomically; set SOURCE_DATE_EPOCH to pin the timestamp
for byte-identical reruns. Logs go to stderr, never stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from ._util import FairlensError, atomic_write_text, canonical_json, now_iso
from .diagnostics import (
    DiagnosticPolicy,
    chronological_consistency,
    missingness_audit,
    representativeness,
    sufficiency,
    timeliness,
)
from .frame import SchemaSpec, load_csv, parse_group_label, partition_by_group, save_csv
from .metrics import DEFAULT_EPSILON, GROUP_METRICS, FairnessReport, evaluate_criteria
from .mitigation import (
    RESAMPLE_STRATEGIES,
    fit_group_thresholds,
    reject_option_adjust,
    relabel_massage,
    resample,
    reweigh,
    reweigh_provenance,
)
from .reporting import (
    PositionStatementInput,
    bias_plan,
    data_factsheet,
    position_statement,
    render,
)
from .taxonomy import AssessmentRow, entry_by_id, query, registry_to_json_obj

__all__ = ["build_parser", "run", "main"]


def _envelope(argv, **payload) -> dict:
    body = {
        "tool_version": __version__,
        "invocation": ["fairlens"] + list(argv),
        "timestamp": now_iso(),
    }
    body.update(payload)
    return body


def _write_json(path: str, obj: dict) -> None:
    atomic_write_text(path, canonical_json(obj))
    print(f"wrote {path}", file=sys.stderr)


def _write_text(path: str, text: str) -> None:
    atomic_write_text(path, text)
    print(f"wrote {path}", file=sys.stderr)


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise FairlensError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise FairlensError(f"{path}: invalid JSON: {exc}") from None


def _load_frame(args):
    schema = SchemaSpec.from_dict(_load_json(args.schema))
    frame = load_csv(args.data, schema)
    return frame, schema


def _split_protected(raw: str) -> list:
    attributes = [name for name in raw.split(",") if name]
    if not attributes:
        raise FairlensError("--protected needs at least one column name")
    return attributes


def _parse_criterion(text: str):
    name, sep, eps_text = text.partition(":")
    if sep:
        try:
            epsilon = float(eps_text)
        except ValueError:
            raise FairlensError(
                f"criterion {text!r}: tolerance {eps_text!r} is not a number"
            ) from None
    else:
        epsilon = DEFAULT_EPSILON
    if name not in GROUP_METRICS:
        raise FairlensError(
            f"criterion {text!r}: unknown metric {name!r}; expected one of "
            + ", ".join(GROUP_METRICS)
        )
    if epsilon < 0:
        raise FairlensError(f"criterion {text!r}: tolerance must be non-negative")
    return name, epsilon


def _resolve_seed(value):
    if value is not None:
        return value
    env = os.environ.get("FAIRLENS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise FairlensError(
                f"FAIRLENS_SEED {env!r} is not an integer"
            ) from None
    return 0


def _cmd_audit(args, argv) -> int:
    frame, _ = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    criteria = [_parse_criterion(text) for text in args.metric or []]
    report = evaluate_criteria(frame, partition, criteria, threshold=args.threshold)
    _write_json(args.out, _envelope(argv, report=report.to_dict()))
    return 0 if report.overall_passed else 1


def _cmd_diagnose(args, argv) -> int:
    frame, _ = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    policy = (
        DiagnosticPolicy.from_dict(_load_json(args.policy))
        if args.policy
        else DiagnosticPolicy()
    )
    reference = _load_json(args.reference) if args.reference else None
    results = [
        representativeness(frame, partition, reference=reference, policy=policy),
        sufficiency(frame, partition, policy=policy),
        missingness_audit(frame, partition, policy=policy),
    ]
    if frame.column_with_role("timestamp") is not None:
        results.append(timeliness(frame, policy=policy))
    if (
        frame.column_with_role("period") is not None
        and frame.column_with_role("label") is not None
    ):
        results.append(chronological_consistency(frame, policy=policy))
    _write_json(
        args.out,
        _envelope(argv, diagnostics=[result.to_dict() for result in results]),
    )
    return 0 if all(result.passed for result in results) else 1


def _provenance_path(args) -> str:
    return args.provenance or args.out + ".provenance.json"


def _cmd_mitigate_reweigh(args, argv) -> int:
    frame, _ = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    weights = reweigh(frame, partition, require_all_cells=args.require_all_cells)
    _write_text(args.out, weights.to_csv_text())
    provenance = reweigh_provenance(frame, partition, weights)
    _write_json(
        _provenance_path(args), _envelope(argv, provenance=provenance.to_dict())
    )
    return 0


def _cmd_mitigate_resample(args, argv) -> int:
    frame, schema = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    strategy = args.strategy
    if not strategy.endswith("_to_independence"):
        strategy += "_to_independence"
    if strategy not in RESAMPLE_STRATEGIES:
        raise FairlensError(f"unknown strategy {args.strategy!r}")
    resampled, provenance = resample(
        frame, partition, strategy, _resolve_seed(args.seed)
    )
    save_csv(resampled, args.out, missing_token=schema.missing_token)
    print(f"wrote {args.out}", file=sys.stderr)
    _write_json(
        _provenance_path(args), _envelope(argv, provenance=provenance.to_dict())
    )
    return 0


def _cmd_mitigate_relabel(args, argv) -> int:
    frame, schema = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    relabeled, provenance = relabel_massage(
        frame,
        partition,
        parse_group_label(args.advantaged),
        parse_group_label(args.disadvantaged),
    )
    save_csv(relabeled, args.out, missing_token=schema.missing_token)
    print(f"wrote {args.out}", file=sys.stderr)
    _write_json(
        _provenance_path(args), _envelope(argv, provenance=provenance.to_dict())
    )
    return 0


def _cmd_mitigate_thresholds(args, argv) -> int:
    frame, _ = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    constraints = [_parse_criterion(text) for text in args.constraint or []]
    policy = fit_group_thresholds(
        frame,
        partition,
        objective=args.objective,
        constraints=constraints,
        grid_step=args.grid_step,
    )
    _write_json(args.out, _envelope(argv, policy=policy.to_dict()))
    return 0


def _cmd_mitigate_reject_option(args, argv) -> int:
    frame, _ = _load_frame(args)
    partition = partition_by_group(frame, _split_protected(args.protected))
    adjusted, provenance = reject_option_adjust(
        frame, partition, args.theta, parse_group_label(args.disadvantaged)
    )
    lines = ["row_index,prediction"]
    for row, prediction in enumerate(adjusted):
        lines.append(f"{row},{'' if prediction is None else prediction}")
    _write_text(args.out, "\n".join(lines) + "\n")
    _write_json(
        _provenance_path(args), _envelope(argv, provenance=provenance.to_dict())
    )
    return 0


def _taxonomy_selection(args) -> list:
    entries = query(
        category=args.category, stage=args.stage, fairness_type=args.fairness_type
    )
    return [entry.to_dict() for entry in entries]


def _taxonomy_markdown(entries, full: bool) -> str:
    if full:
        columns = (
            "Id",
            "Name",
            "Category",
            "Lifecycle Stages",
            "Fairness Types",
            "Anchor",
            "Description",
        )
        rows = [
            (
                entry["id"],
                entry["name"],
                entry["category"],
                ", ".join(str(s) for s in entry["lifecycle_stages"]),
                "; ".join(entry["fairness_types"]),
                entry["anchor"],
                entry["description"],
            )
            for entry in entries
        ]
    else:
        columns = ("Id", "Name", "Category", "Lifecycle Stages")
        rows = [
            (
                entry["id"],
                entry["name"],
                entry["category"],
                ", ".join(str(s) for s in entry["lifecycle_stages"]),
            )
            for entry in entries
        ]
    lines = ["| " + " | ".join(columns) + " |"]
    lines.append("|" + "|".join(" --- " for _ in columns) + "|")
    for row in rows:
        cells = [str(cell).replace("|", "\\|").replace("\n", " ") for cell in row]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _cmd_taxonomy_list(args, argv) -> int:
    entries = _taxonomy_selection(args)
    if args.format == "json":
        _emit(args, canonical_json(_envelope(argv, taxonomy=entries)))
    else:
        _emit(args, _taxonomy_markdown(entries, full=False))
    return 0


def _cmd_taxonomy_export(args, argv) -> int:
    if args.category or args.stage or args.fairness_type:
        entries = _taxonomy_selection(args)
    else:
        entries = registry_to_json_obj()
    if args.format == "md":
        _emit(args, _taxonomy_markdown(entries, full=True))
    else:
        _emit(args, canonical_json(_envelope(argv, taxonomy=entries)))
    return 0


def _require(data, key: str, where: str):
    if key not in data:
        raise FairlensError(f"{where}: missing required key {key!r}")
    return data[key]


def _build_fps(data) -> "object":
    metrics = []
    for entry in _require(data, "established_metrics", "position statement input"):
        metrics.append(
            (
                _require(entry, "metric", "established_metrics entry"),
                entry.get("epsilon", DEFAULT_EPSILON),
            )
        )
    measured = data.get("measured")
    spec = PositionStatementInput(
        project=_require(data, "project", "position statement input"),
        established_metrics=tuple(metrics),
        rationale=_require(data, "rationale", "position statement input"),
        date_completed=_require(data, "date_completed", "position statement input"),
        team_members=tuple(data.get("team_members", ())),
        measured=FairnessReport.from_dict(measured) if measured else None,
    )
    return position_statement(spec)


def _build_plan(data) -> "object":
    rows = []
    for raw in _require(data, "rows", "bias plan input"):
        bias = _require(raw, "bias", "bias plan row")
        category = raw.get("category")
        if category is None:
            category = entry_by_id(bias).category
        rows.append(
            AssessmentRow(
                stage=_require(raw, "stage", "bias plan row"),
                bias=bias,
                category=category,
                risk_mitigation_action=raw.get("risk_mitigation_action", ""),
            )
        )
    metadata = {
        "title": data.get("title"),
        "date_completed": _require(data, "date_completed", "bias plan input"),
        "team_members": tuple(data.get("team_members", ())),
    }
    return bias_plan(rows, metadata)


def _build_factsheet(data) -> "object":
    metadata = {
        "title": data.get("title"),
        "date_completed": _require(data, "date_completed", "data factsheet input"),
        "team_members": tuple(data.get("team_members", ())),
        "dataset": data.get("dataset"),
        "provenance": data.get("provenance"),
    }
    return data_factsheet(
        metadata,
        diagnostics=data.get("diagnostics", ()),
        qualitative=data.get("qualitative", {}),
    )


_REPORT_BUILDERS = {
    "fps": _build_fps,
    "plan": _build_plan,
    "factsheet": _build_factsheet,
}


def _cmd_report(args, argv) -> int:
    data = _load_json(args.input)
    if not isinstance(data, dict):
        raise FairlensError(f"{args.input}: expected a JSON object")
    document = _REPORT_BUILDERS[args.report_kind](data)
    if args.format == "md":
        _write_text(args.out, render(document, "markdown", public=args.public))
    else:
        _write_json(
            args.out,
            _envelope(argv, document=document.to_dict(public=args.public)),
        )
    return 0


def _add_version(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )


def _add_frame_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="input data CSV")
    parser.add_argument("--schema", required=True, help="schema JSON for the data CSV")
    parser.add_argument(
        "--protected",
        required=True,
        help="comma-separated protected column name(s) to partition by",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairlens",
        description=(
            "Audit binary classifiers for group fairness, diagnose dataset "
            "quality, apply bias mitigations, and produce governance documents."
        ),
    )
    _add_version(parser)
    commands = parser.add_subparsers(dest="command", required=True)

    audit = commands.add_parser(
        "audit", help="evaluate fairness criteria over protected groups"
    )
    _add_version(audit)
    _add_frame_args(audit)
    audit.add_argument(
        "--threshold",
        type=float,
        default=None,
        help="binarize the score column at this threshold instead of using predictions",
    )
    audit.add_argument(
        "--metric",
        action="append",
        metavar="METRIC[:EPSILON]",
        help=f"criterion to judge (repeatable); default tolerance {DEFAULT_EPSILON}",
    )
    audit.add_argument("--out", required=True, help="output report JSON path")
    audit.set_defaults(handler=_cmd_audit)

    diagnose = commands.add_parser(
        "diagnose", help="run dataset quality diagnostics"
    )
    _add_version(diagnose)
    _add_frame_args(diagnose)
    diagnose.add_argument(
        "--reference",
        default=None,
        help="JSON file mapping group label to expected population share",
    )
    diagnose.add_argument(
        "--policy", default=None, help="JSON file overriding diagnostic thresholds"
    )
    diagnose.add_argument("--out", required=True, help="output diagnostics JSON path")
    diagnose.set_defaults(handler=_cmd_diagnose)

    mitigate = commands.add_parser("mitigate", help="apply a bias mitigation")
    _add_version(mitigate)
    techniques = mitigate.add_subparsers(dest="technique", required=True)

    reweigh_p = techniques.add_parser(
        "reweigh", help="compute independence-restoring instance weights"
    )
    _add_version(reweigh_p)
    _add_frame_args(reweigh_p)
    reweigh_p.add_argument(
        "--require-all-cells",
        action="store_true",
        help="error if any (group, label) cell has no rows",
    )
    reweigh_p.add_argument("--out", required=True, help="output weights CSV path")
    reweigh_p.add_argument(
        "--provenance", default=None, help="provenance JSON path (default OUT.provenance.json)"
    )
    reweigh_p.set_defaults(handler=_cmd_mitigate_reweigh)

    resample_p = techniques.add_parser(
        "resample", help="duplicate and drop rows toward group/label independence"
    )
    _add_version(resample_p)
    _add_frame_args(resample_p)
    resample_p.add_argument(
        "--strategy",
        required=True,
        choices=["oversample", "undersample"] + list(RESAMPLE_STRATEGIES),
        help="recorded resampling intent",
    )
    resample_p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="random seed (default: FAIRLENS_SEED or 0)",
    )
    resample_p.add_argument("--out", required=True, help="output data CSV path")
    resample_p.add_argument(
        "--provenance", default=None, help="provenance JSON path (default OUT.provenance.json)"
    )
    resample_p.set_defaults(handler=_cmd_mitigate_resample)

    relabel_p = techniques.add_parser(
        "relabel", help="flip borderline labels to close the positive-rate gap"
    )
    _add_version(relabel_p)
    _add_frame_args(relabel_p)
    relabel_p.add_argument(
        "--advantaged", required=True, help="group label with the higher positive rate"
    )
    relabel_p.add_argument(
        "--disadvantaged", required=True, help="group label with the lower positive rate"
    )
    relabel_p.add_argument("--out", required=True, help="output data CSV path")
    relabel_p.add_argument(
        "--provenance", default=None, help="provenance JSON path (default OUT.provenance.json)"
    )
    relabel_p.set_defaults(handler=_cmd_mitigate_relabel)

    thresholds_p = techniques.add_parser(
        "thresholds", help="search per-group decision thresholds"
    )
    _add_version(thresholds_p)
    _add_frame_args(thresholds_p)
    thresholds_p.add_argument(
        "--constraint",
        action="append",
        metavar="METRIC[:EPSILON]",
        help="fairness constraint the thresholds must satisfy (repeatable)",
    )
    thresholds_p.add_argument(
        "--grid-step", type=float, default=0.05, help="threshold grid spacing"
    )
    thresholds_p.add_argument(
        "--objective", default="accuracy", help="objective to maximize"
    )
    thresholds_p.add_argument("--out", required=True, help="output policy JSON path")
    thresholds_p.set_defaults(handler=_cmd_mitigate_thresholds)

    reject_p = techniques.add_parser(
        "reject-option", help="override predictions in the uncertainty band"
    )
    _add_version(reject_p)
    _add_frame_args(reject_p)
    reject_p.add_argument(
        "--theta", type=float, required=True, help="half-width of the band around 0.5"
    )
    reject_p.add_argument(
        "--disadvantaged",
        required=True,
        help="group label favored inside the band",
    )
    reject_p.add_argument("--out", required=True, help="output predictions CSV path")
    reject_p.add_argument(
        "--provenance", default=None, help="provenance JSON path (default OUT.provenance.json)"
    )
    reject_p.set_defaults(handler=_cmd_mitigate_reject_option)

    taxonomy = commands.add_parser("taxonomy", help="browse the bias registry")
    _add_version(taxonomy)
    taxonomy_actions = taxonomy.add_subparsers(dest="action", required=True)
    for action, default_format, handler in (
        ("list", "md", _cmd_taxonomy_list),
        ("export", "json", _cmd_taxonomy_export),
    ):
        sub = taxonomy_actions.add_parser(
            action,
            help=(
                "summarize matching biases"
                if action == "list"
                else "emit full registry records"
            ),
        )
        _add_version(sub)
        sub.add_argument("--stage", type=int, default=None, help="lifecycle stage 1..12")
        sub.add_argument("--category", default=None, help="bias category")
        sub.add_argument("--fairness-type", default=None, help="fairness type")
        sub.add_argument("--format", choices=["md", "json"], default=default_format)
        sub.add_argument("--out", default=None, help="output path (default stdout)")
        sub.set_defaults(handler=handler)

    report = commands.add_parser("report", help="build a governance document")
    _add_version(report)
    report.add_argument(
        "report_kind",
        choices=sorted(_REPORT_BUILDERS),
        help="fps (position statement), plan (bias plan), or factsheet",
    )
    report.add_argument("--input", required=True, help="document input JSON")
    report.add_argument("--format", choices=["md", "json"], required=True)
    report.add_argument("--out", required=True, help="output path")
    report.add_argument(
        "--public",
        action="store_true",
        help="strip internal-marked content for public release",
    )
    report.set_defaults(handler=_cmd_report)

    return parser


def run(argv=None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return args.handler(args, argv)
    except FairlensError as exc:
        print(f"fairlens: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"fairlens: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())

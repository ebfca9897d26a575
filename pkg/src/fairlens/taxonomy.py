"""Registry of social, statistical, and cognitive biases across the AI lifecycle.

Each entry names the bias, the lifecycle stages where it can arise
(``lifecycle_stages``, with the subset where it most demands attention
in ``significant_stages``), the fairness concerns it threatens, a short
verbatim anchor phrase from its source discussion, and optional notes.
Biases that predate any project, or that can surface anywhere, span all
twelve stages. The canonical order groups entries by category: World,
Data, Design, Ecosystem, Cognition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ._util import FairlensError

__all__ = [
    "TaxonomyError",
    "LifecycleStage",
    "LIFECYCLE_STAGES",
    "FAIRNESS_TYPES",
    "CATEGORIES",
    "BiasEntry",
    "AssessmentRow",
    "registry",
    "query",
    "scaffold_assessment",
    "registry_to_json_obj",
    "stage_name",
    "entry_by_id",
]


class TaxonomyError(FairlensError):
    """A registry query or scaffold request with invalid arguments."""


@dataclass(frozen=True)
class LifecycleStage:
    """One stage of the project lifecycle, 1-indexed in design order."""

    index: int
    name: str


LIFECYCLE_STAGES = (
    LifecycleStage(1, "Project Planning"),
    LifecycleStage(2, "Problem Formulation"),
    LifecycleStage(3, "Data Extraction or Procurement"),
    LifecycleStage(4, "Data Analysis"),
    LifecycleStage(5, "Preprocessing & Feature Engineering"),
    LifecycleStage(6, "Model Selection & Training"),
    LifecycleStage(7, "Model Testing & Validation"),
    LifecycleStage(8, "Model Reporting"),
    LifecycleStage(9, "System Implementation"),
    LifecycleStage(10, "User Training"),
    LifecycleStage(11, "System Use & Monitoring"),
    LifecycleStage(12, "Model Updating or Deprovisioning"),
)

FAIRNESS_TYPES = (
    "Data Fairness",
    "Application Fairness",
    "Model Design and Development Fairness",
    "Metric-Based Fairness",
    "System Implementation Fairness",
    "Ecosystem Fairness",
)

CATEGORIES = ("World", "Data", "Design", "Ecosystem", "Cognition")

_DATA = "Data Fairness"
_APP = "Application Fairness"
_MDD = "Model Design and Development Fairness"
_METRIC = "Metric-Based Fairness"
_SYS = "System Implementation Fairness"
_ECO = "Ecosystem Fairness"

_ALL_STAGES = tuple(range(1, 13))


def stage_name(index: int) -> str:
    if not 1 <= index <= 12:
        raise TaxonomyError(f"lifecycle stage must be in 1..12, got {index!r}")
    return LIFECYCLE_STAGES[index - 1].name


@dataclass(frozen=True)
class BiasEntry:
    """One bias in the registry.

    ``lifecycle_stages`` is the full span where the bias can arise and
    is what queries and assessment scaffolds match on;
    ``significant_stages`` is the narrower set where it most commonly
    demands attention. ``anchor`` quotes a short identifying phrase from
    the bias's source discussion.
    """

    id: str
    name: str
    category: str
    description: str
    lifecycle_stages: tuple
    significant_stages: tuple
    fairness_types: tuple
    anchor: str
    notes: str = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise TaxonomyError(f"{self.id}: unknown category {self.category!r}")
        for stage in self.lifecycle_stages + self.significant_stages:
            if not 1 <= stage <= 12:
                raise TaxonomyError(f"{self.id}: stage {stage!r} out of range")
        if not set(self.significant_stages) <= set(self.lifecycle_stages):
            raise TaxonomyError(
                f"{self.id}: significant stages must be within the lifecycle scope"
            )
        for fairness_type in self.fairness_types:
            if fairness_type not in FAIRNESS_TYPES:
                raise TaxonomyError(
                    f"{self.id}: unknown fairness type {fairness_type!r}"
                )
        if len(self.anchor.split()) > 8:
            raise TaxonomyError(f"{self.id}: anchor exceeds eight words")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "category": self.category,
            "description": self.description,
            "lifecycle_stages": list(self.lifecycle_stages),
            "fairness_types": list(self.fairness_types),
            "anchor": self.anchor,
            "notes": self.notes,
        }


def _entry(
    id,
    name,
    category,
    description,
    stages,
    significant,
    types,
    anchor,
    notes=None,
):
    return BiasEntry(
        id=id,
        name=name,
        category=category,
        description=description,
        lifecycle_stages=tuple(stages),
        significant_stages=tuple(significant),
        fairness_types=tuple(types),
        anchor=anchor,
        notes=notes,
    )


_REGISTRY = (
    # World: discriminatory patterns that exist before any project starts.
    _entry(
        "historical_bias",
        "Historical Bias",
        "World",
        "Longstanding discriminatory structures, processes, and attitudes in "
        "the world seep into any data drawn from it and into the choices made "
        "at every stage of a project, even when sampling and measurement are "
        "technically sound.",
        _ALL_STAGES,
        _ALL_STAGES,
        (_DATA, _APP, _MDD, _METRIC, _SYS, _ECO),
        "pre-existing societal patterns of discrimination",
        "Closely tied to structural forms of discrimination whose "
        "disadvantages accumulate across generations and institutions.",
    ),
    _entry(
        "institutional_bias",
        "Institutional Bias",
        "World",
        "Routine procedures and practices of organizations that "
        "systematically advantage some groups and disadvantage others, "
        "whether or not any individual intends to discriminate.",
        _ALL_STAGES,
        _ALL_STAGES,
        (_APP, _METRIC, _SYS, _ECO),
        "procedures and practices of particular institutions",
    ),
    # Data: defects in what was collected and how.
    _entry(
        "representation_bias",
        "Representation Bias",
        "Data",
        "Groups are sampled in proportions that misrepresent the population "
        "the system will serve, so the model fits underrepresented groups "
        "poorly and generalizes badly to them.",
        (1, 2, 3, 4, 5),
        (2, 3, 4, 5),
        (_DATA, _MDD, _SYS),
        "underrepresented in the dataset",
    ),
    _entry(
        "data_coding_bias",
        "Data Coding Bias",
        "Data",
        "Coding schemes and category systems misdescribe or erase demographic "
        "characteristics, for example by forcing people into labels that do "
        "not reflect how they identify.",
        (1, 2, 3, 4, 5),
        (1, 3),
        (_DATA, _MDD),
        "misrepresentation or erasure of demographic characteristics",
    ),
    _entry(
        "selection_bias",
        "Selection Bias",
        "Data",
        "The mechanism that brings data points into the sample is itself "
        "correlated with the outcome or with group membership, so the sample "
        "is unrepresentative however large it grows.",
        (1, 2, 3, 4, 5),
        (3, 4),
        (_DATA, _MDD),
        "selection or inclusion of data points",
    ),
    _entry(
        "chronological_bias",
        "Chronological Bias",
        "Data",
        "Records enter the dataset at different times under different "
        "collection practices or social conditions, so earlier and later "
        "cohorts are not comparable.",
        (3, 4, 5),
        (3,),
        (_DATA, _MDD),
        "added at different times",
    ),
    _entry(
        "missing_data_bias",
        "Missing Data Bias",
        "Data",
        "Gaps in the data are not random: the events that cause values to be "
        "absent are informative and unevenly distributed across groups, so "
        "ignoring or naively imputing them distorts results.",
        (3, 4, 5),
        (3, 4),
        (_DATA, _MDD),
        "non-random but statistically informative events",
    ),
    _entry(
        "wrong_sample_size_bias",
        "Wrong Sample Size Bias",
        "Data",
        "The dataset is too small for its dimensionality, or subgroups are "
        "too thin to estimate reliably, producing models that overfit noise "
        "and perform erratically on minorities.",
        (3, 4, 5, 6),
        (3, 4, 5, 6),
        (_DATA, _MDD),
        "curse of dimensionality",
    ),
    # Design: choices made while building the system.
    _entry(
        "label_choice_bias",
        "Label Choice Bias",
        "Design",
        "The target variable is a proxy that does not capture the real "
        "outcome of interest equally well for everyone, so optimizing it "
        "embeds a skewed notion of success.",
        (1, 2, 3, 4, 5, 6, 11),
        (2, 4, 5, 6),
        (_APP, _MDD, _SYS, _ECO),
        "the same meaning for all data subjects",
    ),
    _entry(
        "measurement_bias",
        "Measurement Bias",
        "Design",
        "How a construct is operationalized and measured differs in accuracy "
        "across groups, so identical underlying situations yield "
        "systematically different recorded values.",
        (1, 2, 3, 4, 5),
        (4, 5),
        (_DATA, _MDD),
        "the choice of how to measure",
    ),
    _entry(
        "cohort_bias",
        "Cohort Bias",
        "Design",
        "Analysis defaults to traditional or easily measured groupings, "
        "hiding finer-grained or less visible subgroups within coarse "
        "cohorts.",
        (3, 4, 5),
        (3, 4, 5),
        (_DATA, _MDD, _ECO),
        "traditional or easily measured groups",
    ),
    _entry(
        "annotation_bias",
        "Annotation Bias",
        "Design",
        "Human labelers put their own subjective perceptions, conventions, "
        "and stereotypes into the ground truth they create, and models then "
        "learn those judgments as fact.",
        (3, 4, 5),
        (5,),
        (_DATA, _MDD),
        "incorporate their subjective perceptions",
    ),
    _entry(
        "hardware_bias",
        "Hardware Bias",
        "Design",
        "Physical instruments and devices capture some bodies and "
        "environments better than others, so measurement quality and system "
        "performance vary with physiology and setting.",
        (3, 4, 5, 6, 7, 8, 9),
        (3, 9),
        (_DATA, _MDD, _SYS),
        "diverse physiological needs",
    ),
    _entry(
        "model_selection_bias",
        "Model Selection Bias",
        "Design",
        "The chosen model family, hyperparameters, or selection metric serve "
        "aggregate performance rather than the needs of affected groups, "
        "baking a skewed objective into the final system.",
        (2, 3, 4, 5, 6),
        (2, 6),
        (_METRIC, _MDD, _ECO),
        "does not sufficiently respond to the needs",
    ),
    _entry(
        "evaluation_bias",
        "Evaluation Bias",
        "Design",
        "Benchmarks and performance metrics fail to represent the deployment "
        "population or to disaggregate by group, so the reported quality "
        "overstates how well the model serves everyone.",
        (4, 5, 6, 7, 8, 9, 10, 11, 12),
        (7, 8),
        (_METRIC, _MDD, _ECO),
        "performance metrics that are insufficient",
    ),
    _entry(
        "semantic_bias",
        "Semantic Bias",
        "Design",
        "Discriminatory meanings latent in the data, such as stereotyped "
        "associations in language, survive feature construction and "
        "modeling, letting the system draw prejudicial inferences.",
        (2, 3, 4, 5, 6, 7),
        (2, 3, 5, 6, 7),
        (_DATA, _MDD, _ECO),
        "discriminatory inferences are allowed to arise",
    ),
    _entry(
        "confounding",
        "Confounding",
        "Design",
        "An unmodeled variable influences both the features and the outcome, "
        "creating spurious relationships that the model mistakes for real "
        "and that track group membership.",
        (4, 5, 6, 7, 8),
        (4, 5),
        (_DATA, _MDD, _ECO),
        "independently influences both the dependent and independent",
    ),
    _entry(
        "aggregation_bias",
        "Aggregation Bias",
        "Design",
        "A single model or summary is applied across heterogeneous groups as "
        "if one size fits all, so the aggregate answer is wrong for the "
        "subpopulations it averages over.",
        (5, 6, 7, 8),
        (5, 6),
        (_DATA, _MDD),
        "approach is taken to the outputs",
    ),
    _entry(
        "reporting_bias",
        "Reporting Bias",
        "Design",
        "What gets documented and disclosed about a system's effectiveness is "
        "partial or selective, depriving deployers and affected people of the "
        "evidence needed to judge it.",
        (7, 8, 9),
        (8,),
        (_METRIC, _MDD, _ECO),
        "transparently reported evidence of effectiveness",
    ),
    _entry(
        "population_bias",
        "Population Bias",
        "Design",
        "The demographics of the people in the data differ from the "
        "demographics of the population the deployed system actually serves, "
        "so learned patterns transfer unevenly.",
        (3, 4, 5, 6, 7, 8, 9, 10, 11),
        (3, 9, 11),
        (_DATA, _MDD, _SYS),
        "Population Bias and Training-Serving Skew",
        "Discussed jointly with training-serving skew; the two describe "
        "mismatch at collection time and at serving time respectively.",
    ),
    _entry(
        "training_serving_skew",
        "Training-Serving Skew",
        "Design",
        "The deployed system receives inputs drawn from a different "
        "distribution than its training data, degrading performance for the "
        "people most unlike the training cohort.",
        (9, 10, 11, 12),
        (9, 11),
        (_DATA, _MDD, _SYS),
        "Population Bias and Training-Serving Skew",
        "Discussed jointly with population bias; the two describe mismatch "
        "at collection time and at serving time respectively.",
    ),
    _entry(
        "cause_effect_bias",
        "Cause-Effect Bias",
        "Design",
        "Operators and decision subjects read the model's correlational "
        "outputs as causal claims, acting on explanations the system never "
        "licensed.",
        (9, 10, 11),
        (9, 11),
        (_MDD, _SYS),
        "correlation implies causation",
    ),
    _entry(
        "implementation_bias",
        "Implementation Bias",
        "Design",
        "A system is deployed, used, or repurposed in contexts and ways its "
        "design never anticipated, so safeguards validated for one setting "
        "fail in another.",
        (9, 10, 11),
        (9, 10, 11),
        (_APP, _SYS, _ECO),
        "used or repurposed in ways",
    ),
    _entry(
        "decision_automation_bias",
        "Decision-Automation Bias",
        "Design",
        "Users defer to automated outputs instead of exercising their own "
        "judgment, either relying on the system when it is wrong or "
        "complying with it against their better assessment.",
        (9, 10, 11),
        (9, 10, 11),
        (_SYS,),
        "complacent and overly deferent",
        "Covers both overreliance and overcompliance failure modes.",
    ),
    _entry(
        "automation_distrust_bias",
        "Automation-Distrust Bias",
        "Design",
        "Users discount or ignore sound system outputs out of blanket "
        "distrust of automation, forfeiting benefits and applying the system "
        "inconsistently across cases.",
        (9, 10, 11),
        (9, 10, 11),
        (_SYS,),
        "distrust or scepticism about AI technologies",
    ),
    # Ecosystem: forces in the wider environment around projects.
    _entry(
        "privilege_bias",
        "Privilege Bias",
        "Ecosystem",
        "The benefits of new technologies flow to already advantaged groups "
        "while their burdens and failure costs fall on marginalized ones, "
        "independent of any single system's internals.",
        _ALL_STAGES,
        (1, 9, 11),
        (_APP, _ECO),
        "skew the benefits of public service technologies",
    ),
    _entry(
        "research_bias",
        "Research Bias",
        "Ecosystem",
        "How research and innovation are funded, staffed, reviewed, and "
        "published underweights social equity, shaping which problems get "
        "solved and for whom.",
        _ALL_STAGES,
        (1, 2),
        (_APP, _ECO),
        "deficit in social equity standards",
    ),
    _entry(
        "mcnamara_fallacy",
        "McNamara Fallacy",
        "Ecosystem",
        "The conviction that only what can be quantified matters, which "
        "crowds out qualitative evidence and lived experience from decisions "
        "at every stage.",
        _ALL_STAGES,
        _ALL_STAGES,
        (_DATA, _APP, _MDD, _SYS, _ECO),
        "quantitative information is more valuable",
    ),
    _entry(
        "biases_of_rhetoric",
        "Biases of Rhetoric",
        "Ecosystem",
        "Persuasive but unjustified language, hype, and framing carry claims "
        "about a system further than its evidence supports, distorting the "
        "judgments of adopters and overseers.",
        (7, 8, 9, 10, 11),
        (7, 8, 9, 10, 11),
        (_APP, _MDD, _SYS, _ECO),
        "unjustified or illegitimate forms of persuasive language",
    ),
    _entry(
        "informed_mistrust",
        "Informed Mistrust",
        "Ecosystem",
        "Communities that have been mistreated by institutions reasonably "
        "distrust new systems built by them, avoiding or resisting services "
        "and thereby compounding existing disparities.",
        (9, 10, 11),
        (9, 10, 11),
        (_APP, _MDD, _ECO),
        "they have been mistreated in the past",
    ),
    _entry(
        "de_agentification_bias",
        "De-Agentification Bias",
        "Ecosystem",
        "Structures of participation systemically exclude minoritized, "
        "marginalized, and vulnerable people from shaping, contesting, or "
        "benefiting from the systems that affect them.",
        _ALL_STAGES,
        (1, 2, 9, 11, 12),
        (_APP, _MDD, _ECO),
        "systemically exclude minoritised, marginalised, vulnerable",
    ),
    # Cognition: reasoning shortcuts of the people running the project.
    _entry(
        "availability_bias",
        "Availability Bias",
        "Cognition",
        "Judgments lean on whatever information comes to mind most easily, "
        "so vivid or recent cases outweigh representative evidence in "
        "decisions throughout the project.",
        _ALL_STAGES,
        (1, 4),
        (_APP, _MDD),
        "information that is most readily available",
    ),
    _entry(
        "self_assessment_bias",
        "Self-Assessment Bias",
        "Cognition",
        "Teams rate their own skills, data, and readiness more favorably "
        "than outside evidence warrants, green-lighting projects beyond "
        "their actual capability.",
        (1,),
        (1,),
        (_APP, _MDD),
        "more favourable terms than others",
    ),
    _entry(
        "confirmation_bias",
        "Confirmation Bias",
        "Cognition",
        "People seek, weight, and remember evidence that supports what they "
        "already believe, steering analysis and monitoring toward "
        "comfortable conclusions.",
        _ALL_STAGES,
        (4, 11),
        (_APP, _MDD, _SYS),
        "confirms preexisting ideas and beliefs",
    ),
    _entry(
        "naive_realism",
        "Naive Realism",
        "Cognition",
        "The assumption that one's own view of the world is simply objective, "
        "which hides the value judgments embedded in how a problem gets "
        "formulated.",
        (2,),
        (2,),
        (_APP, _MDD),
        "perceive the world in objective terms",
    ),
    _entry(
        "law_of_the_instrument",
        "Law of the Instrument",
        "Cognition",
        "Familiar tools dictate the framing: when the team holds a hammer, "
        "every problem is made to look like a nail, whether or not the tool "
        "fits the need.",
        (2, 3, 4, 5, 6),
        (2, 6),
        (_APP, _MDD),
        "everything looks like a nail",
    ),
    _entry(
        "optimism_bias",
        "Optimism Bias",
        "Cognition",
        "Planners underestimate the time, cost, and risk of their own "
        "project, deferring safeguards and overpromising performance that "
        "deployment then fails to deliver.",
        (1, 2, 3, 4, 5, 6, 7, 8, 9),
        (1, 9),
        (_APP, _SYS),
        "underestimate the amount of time required",
    ),
    _entry(
        "status_quo_bias",
        "Status Quo Bias",
        "Cognition",
        "Preference for the way things currently work keeps aging systems "
        "and practices in place past their justification, blocking updates "
        "and deprovisioning decisions.",
        (1, 12),
        (1, 12),
        (_APP, _MDD, _ECO),
        "the way things are currently",
    ),
    _entry(
        "positive_results_bias",
        "Positive-Results Bias",
        "Cognition",
        "Successes are published and circulated while negative or null "
        "results stay invisible, so teams repeat known failures and "
        "overestimate what similar systems achieve.",
        _ALL_STAGES,
        (1, 2, 4, 6),
        (_APP, _SYS, _ECO),
        "negative or null results tend to go unpublished",
    ),
)

_BY_ID = {entry.id: entry for entry in _REGISTRY}


def registry() -> tuple:
    """All bias entries in canonical order (by category, then source order)."""
    return _REGISTRY


def entry_by_id(bias_id: str) -> BiasEntry:
    try:
        return _BY_ID[bias_id]
    except KeyError:
        raise TaxonomyError(f"no bias with id {bias_id!r}") from None


def query(category: str = None, stage: int = None, fairness_type: str = None) -> tuple:
    """Entries matching every given filter, in canonical order.

    ``stage`` matches against the full lifecycle scope.
    """
    if category is not None and category not in CATEGORIES:
        raise TaxonomyError(
            f"unknown category {category!r}; expected one of {', '.join(CATEGORIES)}"
        )
    if stage is not None and (not isinstance(stage, int) or not 1 <= stage <= 12):
        raise TaxonomyError(f"stage must be an integer in 1..12, got {stage!r}")
    if fairness_type is not None and fairness_type not in FAIRNESS_TYPES:
        raise TaxonomyError(
            f"unknown fairness type {fairness_type!r}; expected one of "
            + ", ".join(FAIRNESS_TYPES)
        )
    selected = []
    for entry in _REGISTRY:
        if category is not None and entry.category != category:
            continue
        if stage is not None and stage not in entry.lifecycle_stages:
            continue
        if fairness_type is not None and fairness_type not in entry.fairness_types:
            continue
        selected.append(entry)
    return tuple(selected)


@dataclass(frozen=True)
class AssessmentRow:
    """One row of a bias self-assessment: a bias at a stage, plus the
    team's planned mitigation action (empty until filled in)."""

    stage: int
    bias: str
    category: str
    risk_mitigation_action: str = ""

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "bias": self.bias,
            "category": self.category,
            "risk_mitigation_action": self.risk_mitigation_action,
        }


def scaffold_assessment(stages: Iterable) -> list:
    """Empty assessment rows for every bias applicable at the given stages.

    Stages keep their given order (duplicates collapse); within a stage,
    biases appear in canonical registry order with empty action fields.
    """
    ordered = []
    for stage in stages:
        if not isinstance(stage, int) or not 1 <= stage <= 12:
            raise TaxonomyError(f"stage must be an integer in 1..12, got {stage!r}")
        if stage not in ordered:
            ordered.append(stage)
    if not ordered:
        raise TaxonomyError("scaffold needs at least one stage")
    rows = []
    for stage in ordered:
        for entry in _REGISTRY:
            if stage in entry.lifecycle_stages:
                rows.append(
                    AssessmentRow(
                        stage=stage,
                        bias=entry.id,
                        category=entry.category,
                        risk_mitigation_action="",
                    )
                )
    return rows


def registry_to_json_obj() -> list:
    """The registry as plain JSON-ready objects with stable keys."""
    return [entry.to_dict() for entry in _REGISTRY]

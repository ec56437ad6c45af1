"""Post-hoc trace annotation: cognitive-intent tags and usability issues.

Annotation always runs on cached traces, never inline with simulation.
Tagging output is scored for consistency (reward same-persona overlap,
penalize cross-persona overlap) and the score feeds back into the prompt
as a scalar across refinement rounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

from uxprobe.errors import AnnotationError, SchemaViolation
from uxprobe.llm import ChatMessage, ChatRequest, Gateway
from uxprobe.prompts import ISSUE_DETECTION_PROMPT, TAGGING_PROMPT, fill
from uxprobe.simulate import Trace, extract_fenced_json

UPT_CODES = frozenset(
    {
        "A1", "A2", "A3", "A4",
        "B1", "B2", "B3", "B4",
        "C1", "C2", "C3", "C4",
        "D1", "D2", "D3",
        "E1", "E2", "E3", "E4",
    }
)

SEVERITY_RANGE = range(0, 5)

ISSUE_FIELDS = (
    "type",
    "element",
    "reason",
    "fix",
    "upt_codes",
    "upt_explanation",
    "issue_severity",
)


@dataclass
class StepTags:
    run_id: str
    step: int
    tags: list[str]


@dataclass
class TagScore:
    intra: float
    inter: float

    @property
    def score(self) -> float:
        return self.intra - self.inter

    def to_json_dict(self) -> dict:
        return {"intra": self.intra, "inter": self.inter, "score": self.score}


@dataclass
class IssueRecord:
    type: str
    element: str
    reason: str
    fix: str
    upt_codes: list[str]
    upt_explanation: str
    issue_severity: int
    run_id: str = ""
    step: int = 0
    ordinal: int = 0

    @property
    def issue_id(self) -> str:
        return f"{self.run_id}.s{self.step}.i{self.ordinal}"

    def validate(self) -> None:
        if not isinstance(self.issue_severity, int) or isinstance(self.issue_severity, bool):
            raise SchemaViolation(f"issue_severity must be an integer, got {self.issue_severity!r}")
        if self.issue_severity not in SEVERITY_RANGE:
            raise SchemaViolation(f"issue_severity {self.issue_severity} outside 0-4")
        if not self.upt_codes:
            raise SchemaViolation("upt_codes must be non-empty")
        unknown = [c for c in self.upt_codes if c not in UPT_CODES]
        if unknown:
            raise SchemaViolation(f"unknown upt_codes {unknown} (outside the 19-code taxonomy)")

    def to_json_dict(self) -> dict:
        return {
            "type": self.type,
            "element": self.element,
            "reason": self.reason,
            "fix": self.fix,
            "upt_codes": list(self.upt_codes),
            "upt_explanation": self.upt_explanation,
            "issue_severity": self.issue_severity,
        }


@dataclass
class IssueReport:
    expected_steps: int
    steps: list[tuple[int, list[IssueRecord]]] = field(default_factory=list)
    version: str = "1.0"

    def validate(self) -> None:
        if self.version != "1.0":
            raise SchemaViolation(f"unknown report version {self.version!r}")
        if len(self.steps) != self.expected_steps:
            raise SchemaViolation(
                f"report has {len(self.steps)} steps but expected_steps={self.expected_steps}"
            )
        for position, (step, issues) in enumerate(self.steps, start=1):
            if step != position:
                raise SchemaViolation(f"step numbers must run 1..{self.expected_steps} in order")
            for issue in issues:
                issue.validate()

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "expected_steps": self.expected_steps,
            "steps": [
                {"step": step, "issues": [i.to_json_dict() for i in issues]}
                for step, issues in self.steps
            ],
        }

    def all_issues(self) -> list[IssueRecord]:
        return [issue for _, issues in self.steps for issue in issues]


def parse_issue_report(payload: dict | str, run_id: str = "") -> IssueReport:
    """Parse and validate the strict issue-report object."""
    if isinstance(payload, str):
        try:
            payload = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"report is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaViolation("report must be a JSON object")
    if "expected_steps" not in payload or "steps" not in payload:
        raise SchemaViolation("report needs 'expected_steps' and 'steps'")
    raw_steps = payload["steps"]
    if not isinstance(raw_steps, list):
        raise SchemaViolation("'steps' must be an array")
    steps: list[tuple[int, list[IssueRecord]]] = []
    for entry in raw_steps:
        if not isinstance(entry, dict) or "step" not in entry:
            raise SchemaViolation("each step entry needs a 'step' number")
        issues_raw = entry.get("issues", [])
        if not isinstance(issues_raw, list):
            raise SchemaViolation("'issues' must be an array")
        issues = []
        for ordinal, raw in enumerate(issues_raw):
            if not isinstance(raw, dict):
                raise SchemaViolation("each issue must be an object")
            missing = [f for f in ISSUE_FIELDS if f not in raw]
            if missing:
                raise SchemaViolation(f"issue missing fields {missing}")
            codes = raw["upt_codes"]
            if not isinstance(codes, list):
                raise SchemaViolation("upt_codes must be an array")
            issue = IssueRecord(
                type=str(raw["type"]),
                element=str(raw["element"]),
                reason=str(raw["reason"]),
                fix=str(raw["fix"]),
                upt_codes=[str(c) for c in codes],
                upt_explanation=str(raw["upt_explanation"]),
                issue_severity=raw["issue_severity"],
                run_id=run_id,
                step=int(entry["step"]),
                ordinal=ordinal,
            )
            issues.append(issue)
        steps.append((int(entry["step"]), issues))
    report = IssueReport(
        expected_steps=payload["expected_steps"],
        steps=steps,
        version=str(payload.get("version", "")),
    )
    report.validate()
    return report


# -- tagging -----------------------------------------------------------------


def normalize_tag(tag: str) -> str:
    return " ".join(tag.casefold().split())


def trace_tag_set(step_tags: list[StepTags]) -> frozenset[str]:
    return frozenset(normalize_tag(t) for st in step_tags for t in st.tags)


def _validate_tag_arrays(payload, step_count: int, n_tags: int) -> list[list[str]]:
    if not isinstance(payload, list):
        raise SchemaViolation("output must be a JSON array of arrays")
    if len(payload) != step_count:
        raise SchemaViolation(f"expected exactly {step_count} arrays, got {len(payload)}")
    arrays: list[list[str]] = []
    for i, inner in enumerate(payload, start=1):
        if not isinstance(inner, list):
            raise SchemaViolation(f"entry {i} is not an array")
        if len(inner) > n_tags:
            raise SchemaViolation(f"entry {i} has {len(inner)} tags, cap is {n_tags}")
        tags = []
        for tag in inner:
            if not isinstance(tag, str) or not tag.strip():
                raise SchemaViolation(f"entry {i} contains a non-string or empty tag")
            tags.append(tag)
        arrays.append(tags)
    return arrays


def tag_trace(
    trace: Trace,
    n_tags: int,
    gateway: Gateway,
    feedback: str | None = None,
) -> list[StepTags]:
    """Tag each step's cognitive intent; validates the array-of-arrays shape.

    One corrective re-prompt quoting the violation; a second invalid output
    raises AnnotationError and leaves the trace unannotated.
    """
    reasoning_texts = [event.reasoning for event in trace.steps]
    system_text = fill(TAGGING_PROMPT, n_tags=n_tags, step_count=len(reasoning_texts))
    user_text = json.dumps(reasoning_texts, indent=2, ensure_ascii=False)
    if feedback:
        user_text += "\n\n" + feedback
    messages = [ChatMessage("system", system_text), ChatMessage("user", user_text)]

    response = gateway.complete(ChatRequest(messages=messages, tag="annotation"))
    try:
        arrays = _validate_tag_arrays(
            _parse_lenient_array(response.text), len(reasoning_texts), n_tags
        )
    except (SchemaViolation, json.JSONDecodeError) as exc:
        retry = messages + [
            ChatMessage("assistant", response.text),
            ChatMessage(
                "user",
                f"Your output was invalid: {exc}. Return only a JSON array of arrays "
                f"with exactly {len(reasoning_texts)} inner arrays, each containing up "
                f"to {n_tags} tags.",
            ),
        ]
        second = gateway.complete(ChatRequest(messages=retry, tag="annotation"))
        try:
            arrays = _validate_tag_arrays(
                _parse_lenient_array(second.text), len(reasoning_texts), n_tags
            )
        except (SchemaViolation, json.JSONDecodeError) as exc2:
            raise AnnotationError(
                f"tagging failed for {trace.run_id} after re-prompt: {exc2}"
            ) from exc2
    return [
        StepTags(run_id=trace.run_id, step=i, tags=tags)
        for i, tags in enumerate(arrays, start=1)
    ]


def _parse_lenient_array(text: str):
    stripped = text.strip()
    if stripped.startswith("```"):
        inner = stripped.strip("`")
        if inner.startswith("json"):
            inner = inner[4:]
        return json.loads(inner.strip())
    return json.loads(stripped)


# -- scoring -------------------------------------------------------------------


@dataclass
class TaggedTrace:
    run_id: str
    persona_id: str
    step_tags: list[StepTags]


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    """Set similarity; two empty sets count as identical (1.0)."""
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def score_tags(tagged: list[TaggedTrace]) -> TagScore:
    """Consistency score: mean same-persona Jaccard minus cross-persona.

    Trace-level tag sets are the union of the trace's step tags after
    case-folding and whitespace normalization. Either mean is 0 when no
    pair of that kind exists.
    """
    if len(tagged) < 2:
        raise AnnotationError("scoring needs at least two tagged traces")
    sets = [(t.persona_id, trace_tag_set(t.step_tags)) for t in tagged]
    intra_values = []
    inter_values = []
    for (persona_a, set_a), (persona_b, set_b) in combinations(sets, 2):
        value = jaccard(set_a, set_b)
        if persona_a == persona_b:
            intra_values.append(value)
        else:
            inter_values.append(value)
    intra = sum(intra_values) / len(intra_values) if intra_values else 0.0
    inter = sum(inter_values) / len(inter_values) if inter_values else 0.0
    return TagScore(intra=intra, inter=inter)


def feedback_text(score: float) -> str:
    return (
        f"Previous tagging consistency score: {score:.4f}. Improve cross-run "
        "consistency for same personas; reduce overlap across different personas."
    )


def refine_tagging(
    traces: list[Trace],
    gateway: Gateway,
    rounds: int,
    threshold: float,
    n_tags: int,
    on_error: str = "raise",
) -> tuple[dict[str, list[list[str]]], list[TagScore], dict[str, str]]:
    """Iterate tagging with scalar feedback; returns the best round's tags.

    Returns (tags_by_run, score history, flagged run ids with reasons).
    With on_error="flag", traces whose tagging stays invalid are flagged
    and excluded from scoring instead of raising.
    """
    if rounds < 1:
        raise AnnotationError("rounds must be >= 1")
    history: list[TagScore] = []
    flagged: dict[str, str] = {}
    best_tags: dict[str, list[list[str]]] = {}
    best_score: float | None = None
    feedback: str | None = None

    for _ in range(rounds):
        tagged: list[TaggedTrace] = []
        round_tags: dict[str, list[list[str]]] = {}
        for trace in traces:
            if trace.run_id in flagged:
                continue
            try:
                step_tags = tag_trace(trace, n_tags, gateway, feedback=feedback)
            except AnnotationError as exc:
                if on_error == "flag":
                    flagged[trace.run_id] = str(exc)
                    continue
                raise
            tagged.append(TaggedTrace(trace.run_id, trace.persona_id, step_tags))
            round_tags[trace.run_id] = [st.tags for st in step_tags]
        if len(tagged) < 2:
            raise AnnotationError("fewer than two traces could be tagged")
        round_score = score_tags(tagged)
        history.append(round_score)
        if best_score is None or round_score.score > best_score:
            best_score = round_score.score
            best_tags = round_tags
        if round_score.score >= threshold:
            break
        feedback = feedback_text(round_score.score)
    return best_tags, history, flagged


# -- issue detection ---------------------------------------------------------------


def _step_log_payload(trace: Trace) -> str:
    entries = []
    for event in trace.steps:
        entries.append(
            {
                "step": event.step,
                "url": event.url,
                "intent": event.intent,
                "action": event.action.to_json_dict(),
                "result": event.result,
                "reasoning": event.reasoning,
                "error": event.error,
            }
        )
    return json.dumps(entries, indent=2, ensure_ascii=False)


def detect_issues(trace: Trace, gateway: Gateway) -> IssueReport:
    """Detect usability issues for every step of a cached trace."""
    expected = len(trace.steps)
    system_text = ISSUE_DETECTION_PROMPT.replace("{expected_len}", str(expected))
    messages = [
        ChatMessage("system", system_text),
        ChatMessage("user", _step_log_payload(trace)),
    ]
    response = gateway.complete(ChatRequest(messages=messages, tag="annotation"))
    try:
        report = parse_issue_report(_extract_object(response.text), run_id=trace.run_id)
        _check_expected(report, expected)
    except SchemaViolation as exc:
        retry = messages + [
            ChatMessage("assistant", response.text),
            ChatMessage(
                "user",
                f"Your output violated the schema: {exc}. Return only the strict JSON "
                f"object with exactly {expected} steps and valid issue fields.",
            ),
        ]
        second = gateway.complete(ChatRequest(messages=retry, tag="annotation"))
        try:
            report = parse_issue_report(_extract_object(second.text), run_id=trace.run_id)
            _check_expected(report, expected)
        except SchemaViolation as exc2:
            raise AnnotationError(
                f"issue detection failed for {trace.run_id} after re-prompt: {exc2}"
            ) from exc2
    return report


def _check_expected(report: IssueReport, expected: int) -> None:
    if report.expected_steps != expected:
        raise SchemaViolation(
            f"expected_steps={report.expected_steps} but the trace has {expected} steps"
        )


def _extract_object(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            payload = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise SchemaViolation("output must be a JSON object")
        return payload
    try:
        return extract_fenced_json(text)
    except Exception as exc:
        raise SchemaViolation(f"no JSON object in output: {exc}") from exc


# -- pipeline ------------------------------------------------------------------------


def annotate_experiment(
    store,
    gateway: Gateway,
    rounds: int = 1,
    threshold: float = -1.0,
    n_tags: int | None = None,
) -> dict:
    """Tag and issue-annotate every cached trace of an experiment."""
    from uxprobe.simulate import load_traces

    config = store.config()
    n_tags = n_tags if n_tags is not None else config.n_tags
    traces = load_traces(store)
    tags_by_run, history, flagged = refine_tagging(
        traces, gateway, rounds=rounds, threshold=threshold, n_tags=n_tags, on_error="flag"
    )

    reports: dict[str, dict] = {}
    for trace in traces:
        if trace.run_id in flagged:
            continue
        try:
            report = detect_issues(trace, gateway)
        except AnnotationError as exc:
            flagged[trace.run_id] = str(exc)
            continue
        reports[trace.run_id] = report.to_json_dict()

    store.save_tags(tags_by_run, score_history=[s.to_json_dict() for s in history])
    store.save_issues(reports)
    store.set_status("annotated")
    return {
        "tagged_runs": len(tags_by_run),
        "issue_reports": len(reports),
        "flagged": flagged,
        "score_history": [s.to_json_dict() for s in history],
    }


def load_issue_records(store) -> list[IssueRecord]:
    """All issue records of an experiment, with run/step provenance."""
    records: list[IssueRecord] = []
    for run_id, raw in store.load_issues().items():
        report = parse_issue_report(raw, run_id=run_id)
        records.extend(report.all_issues())
    return records

"""Aggregation of annotated traces into the analysis-view data.

All aggregates are pure functions of the persisted logs; recomputation from
disk is bit-identical. Ordering is total and deterministic everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from uxprobe.annotate import IssueRecord, load_issue_records
from uxprobe.errors import QueryError, UXProbeError
from uxprobe.personas import ExperimentConfig
from uxprobe.simulate import Trace, load_traces
from uxprobe.store import ExperimentStore


@dataclass
class GoalSummary:
    goal_id: str
    agents_attempting: int
    agents_with_issues: int
    success_ratio: float

    def to_json_dict(self) -> dict:
        return {
            "goal_id": self.goal_id,
            "agents_attempting": self.agents_attempting,
            "agents_with_issues": self.agents_with_issues,
            "success_ratio": self.success_ratio,
        }


@dataclass
class BreakdownEntry:
    key: str
    issue_count: int
    run_count: int
    failure_rate: float | None = None  # trait_centric only
    dimension: str | None = None
    value: str | None = None
    traits: dict[str, str] | None = None  # composite mode only

    def to_json_dict(self) -> dict:
        payload: dict = {
            "key": self.key,
            "issue_count": self.issue_count,
            "run_count": self.run_count,
        }
        if self.failure_rate is not None:
            payload["failure_rate"] = self.failure_rate
        if self.dimension is not None:
            payload["dimension"] = self.dimension
            payload["value"] = self.value
        if self.traits is not None:
            payload["traits"] = self.traits
        return payload


@dataclass
class TraitBreakdown:
    mode: str  # trait_centric | composite_persona
    entries: list[BreakdownEntry]

    def to_json_dict(self) -> dict:
        return {"mode": self.mode, "entries": [e.to_json_dict() for e in self.entries]}


@dataclass
class JourneyNode:
    node_id: str
    label: str
    kind: str  # page | intent
    starts: int = 0
    terminations: int = 0
    issues: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "id": self.node_id,
            "label": self.label,
            "kind": self.kind,
            "starts": self.starts,
            "terminations": self.terminations,
            "issues": self.issues,
        }


@dataclass
class JourneyGraph:
    mode: str  # page_level | goal_level
    nodes: list[JourneyNode]
    links: list[tuple[str, str, int]]

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "nodes": [n.to_json_dict() for n in self.nodes],
            "links": [
                {"source": src, "target": dst, "count": count}
                for src, dst, count in self.links
            ],
        }


class ExperimentData:
    """Immutable read view over one experiment's persisted artifacts."""

    def __init__(
        self,
        config: ExperimentConfig,
        assignments: list[dict],
        traces: dict[str, Trace],
        issues: list[IssueRecord],
        annotated_runs: set[str],
        tags: dict[str, list[list[str]]],
    ) -> None:
        self.config = config
        self.assignments = assignments
        self.traces = traces
        self.issues = issues
        self.annotated_runs = annotated_runs
        self.tags = tags
        self.by_run = {a["run_id"]: a for a in assignments}

    @classmethod
    def from_store(cls, store: ExperimentStore) -> "ExperimentData":
        config = store.config()
        assignments = store.run_assignments()
        traces = {t.run_id: t for t in load_traces(store)}
        issues: list[IssueRecord] = []
        annotated: set[str] = set()
        tags: dict[str, list[list[str]]] = {}
        if store.issues_path.exists():
            issues = load_issue_records(store)
            annotated = set(store.load_issues().keys())
        if store.tags_path.exists():
            tags = store.load_tags()
        return cls(config, assignments, traces, issues, annotated, tags)

    def traits_of(self, run_id: str) -> dict[str, str]:
        return dict(self.by_run[run_id]["traits"])

    def persona_of(self, run_id: str) -> str:
        return self.by_run[run_id]["persona_id"]

    def goal_of(self, run_id: str) -> str:
        return self.by_run[run_id]["goal_id"]


# -- goal summaries ---------------------------------------------------------


def goal_summary(data: ExperimentData) -> tuple[list[GoalSummary], list[str]]:
    """One summary per goal plus the run ids excluded for missing annotation."""
    excluded = sorted(
        run_id for run_id in data.traces if run_id not in data.annotated_runs
    )
    issues_by_run: dict[str, int] = {}
    for issue in data.issues:
        issues_by_run[issue.run_id] = issues_by_run.get(issue.run_id, 0) + 1

    summaries = []
    for goal in data.config.goals:
        run_ids = [
            run_id
            for run_id, a in data.by_run.items()
            if a["goal_id"] == goal.id and run_id in data.annotated_runs
        ]
        attempting = len(run_ids)
        with_issues = sum(1 for run_id in run_ids if issues_by_run.get(run_id, 0) > 0)
        successes = sum(
            1 for run_id in run_ids if data.traces[run_id].terminal.success is True
        )
        ratio = successes / attempting if attempting else 0.0
        summaries.append(
            GoalSummary(
                goal_id=goal.id,
                agents_attempting=attempting,
                agents_with_issues=with_issues,
                success_ratio=ratio,
            )
        )
    return summaries, excluded


# -- trait breakdowns -----------------------------------------------------------


def trait_breakdown(data: ExperimentData, goal_id: str | None, mode: str) -> TraitBreakdown:
    """Issue distribution per trait value or per composite persona profile.

    An issue counts once per matching entry key; a failed run is one whose
    terminal self-report is not success (explicit failure or step cap).
    """
    if mode not in ("trait_centric", "composite_persona"):
        raise QueryError(f"unknown trait mode {mode!r}")
    if goal_id is not None and goal_id not in {g.id for g in data.config.goals}:
        raise QueryError(f"unknown goal {goal_id!r}")

    run_ids = [
        run_id
        for run_id in data.by_run
        if goal_id is None or data.goal_of(run_id) == goal_id
    ]
    run_set = set(run_ids)
    issues = [i for i in data.issues if i.run_id in run_set]

    entries: list[BreakdownEntry] = []
    if mode == "trait_centric":
        for dimension in data.config.dimensions:
            for value in dimension.values:
                matching = [
                    run_id
                    for run_id in run_ids
                    if data.traits_of(run_id).get(dimension.name) == value
                ]
                matching_set = set(matching)
                issue_count = sum(1 for i in issues if i.run_id in matching_set)
                failures = sum(
                    1
                    for run_id in matching
                    if data.traces[run_id].terminal.success is not True
                )
                entries.append(
                    BreakdownEntry(
                        key=f"{dimension.name}={value}",
                        issue_count=issue_count,
                        run_count=len(matching),
                        failure_rate=failures / len(matching) if matching else 0.0,
                        dimension=dimension.name,
                        value=value,
                    )
                )
    else:
        combos: dict[tuple, list[str]] = {}
        for run_id in run_ids:
            traits = data.traits_of(run_id)
            combo = tuple(traits.get(d.name, "") for d in data.config.dimensions)
            combos.setdefault(combo, []).append(run_id)
        for combo in sorted(combos):
            members = set(combos[combo])
            issue_count = sum(1 for i in issues if i.run_id in members)
            key = ", ".join(
                f"{d.name}={v}" for d, v in zip(data.config.dimensions, combo)
            )
            entries.append(
                BreakdownEntry(
                    key=key,
                    issue_count=issue_count,
                    run_count=len(members),
                    traits={
                        d.name: v for d, v in zip(data.config.dimensions, combo)
                    },
                )
            )

    entries.sort(key=lambda e: (-e.issue_count, e.key))
    return TraitBreakdown(mode=mode, entries=entries)


# -- issue lists ---------------------------------------------------------------


VALID_FILTER_KEYS = {"goal", "trait", "persona"}


def issue_list(data: ExperimentData, filters: dict | None = None) -> list[IssueRecord]:
    """Issues ordered by severity desc, occurrence count desc, id asc.

    Occurrence count groups issues sharing the same type label within the
    filtered set. Filter keys: goal, trait ("Dimension=value"), persona.
    """
    filters = filters or {}
    unknown = set(filters) - VALID_FILTER_KEYS
    if unknown:
        raise QueryError(f"unknown filter keys: {sorted(unknown)}")

    issues = list(data.issues)
    goal_id = filters.get("goal")
    if goal_id is not None:
        issues = [i for i in issues if data.goal_of(i.run_id) == goal_id]
    trait = filters.get("trait")
    if trait is not None:
        if "=" not in trait:
            raise QueryError("trait filter must look like 'Dimension=value'")
        dim, _, value = trait.partition("=")
        issues = [i for i in issues if data.traits_of(i.run_id).get(dim) == value]
    persona = filters.get("persona")
    if persona is not None:
        issues = [i for i in issues if data.persona_of(i.run_id) == persona]

    counts: dict[str, int] = {}
    for issue in issues:
        counts[issue.type] = counts.get(issue.type, 0) + 1
    issues.sort(key=lambda i: (-i.issue_severity, -counts[i.type], i.issue_id))
    return issues


# -- journey graphs ---------------------------------------------------------------


def normalize_url(url: str) -> str:
    url = url.split("#", 1)[0].split("?", 1)[0]
    if len(url) > 1 and url.endswith("/"):
        url = url.rstrip("/") or "/"
    return url


UNTAGGED = "(untagged)"


def journey_graph(data: ExperimentData, mode: str) -> JourneyGraph:
    """Flow aggregation over pages or primary intent tags.

    Every consecutive step pair contributes one transition; per node,
    inflow - outflow = terminations - starts.
    """
    if mode not in ("page_level", "goal_level"):
        raise QueryError(f"unknown journey mode {mode!r}")
    if mode == "goal_level" and not data.tags:
        raise UXProbeError("goal_level journey requires tags; run annotation first")

    def node_for(run_id: str, event_index: int, trace: Trace) -> str:
        if mode == "page_level":
            return normalize_url(trace.steps[event_index].url)
        arrays = data.tags.get(run_id)
        if arrays is None or event_index >= len(arrays) or not arrays[event_index]:
            return UNTAGGED
        return arrays[event_index][0]

    nodes: dict[str, JourneyNode] = {}
    links: dict[tuple[str, str], int] = {}
    kind = "page" if mode == "page_level" else "intent"

    def ensure(node_id: str) -> JourneyNode:
        if node_id not in nodes:
            nodes[node_id] = JourneyNode(node_id=node_id, label=node_id, kind=kind)
        return nodes[node_id]

    issue_keys = {}
    for issue in data.issues:
        issue_keys.setdefault((issue.run_id, issue.step), []).append(issue.issue_id)

    for run_id in sorted(data.traces):
        trace = data.traces[run_id]
        if not trace.steps:
            continue
        if mode == "goal_level" and run_id not in data.tags:
            continue
        step_nodes = [node_for(run_id, i, trace) for i in range(len(trace.steps))]
        ensure(step_nodes[0]).starts += 1
        ensure(step_nodes[-1]).terminations += 1
        for i in range(len(step_nodes) - 1):
            key = (step_nodes[i], step_nodes[i + 1])
            ensure(key[0])
            ensure(key[1])
            links[key] = links.get(key, 0) + 1
        for i, node_id in enumerate(step_nodes, start=1):
            for issue_id in issue_keys.get((run_id, i), []):
                node = ensure(node_id)
                if issue_id not in node.issues:
                    node.issues.append(issue_id)

    for node in nodes.values():
        node.issues.sort()
    ordered_nodes = [nodes[node_id] for node_id in sorted(nodes)]
    ordered_links = [
        (src, dst, count) for (src, dst), count in sorted(links.items())
    ]
    return JourneyGraph(mode=mode, nodes=ordered_nodes, links=ordered_links)


# -- report emitters -----------------------------------------------------------------


def goal_summary_json(data: ExperimentData) -> dict:
    summaries, excluded = goal_summary(data)
    return {
        "version": "1.0",
        "goals": [s.to_json_dict() for s in summaries],
        "excluded_runs": excluded,
    }


def issue_json_entry(data: ExperimentData, issue: IssueRecord) -> dict:
    return {
        "issue_id": issue.issue_id,
        "run_id": issue.run_id,
        "persona_id": data.persona_of(issue.run_id),
        "goal_id": data.goal_of(issue.run_id),
        "step": issue.step,
        **issue.to_json_dict(),
    }


def journey_json(data: ExperimentData, mode: str) -> dict:
    return {"version": "1.0", **journey_graph(data, mode).to_json_dict()}


def report_json(store: ExperimentStore) -> dict:
    """Canonical analysis report over one experiment."""
    data = ExperimentData.from_store(store)
    goals_payload = goal_summary_json(data)
    traits = {}
    for goal in data.config.goals:
        traits[goal.id] = {
            "trait_centric": trait_breakdown(data, goal.id, "trait_centric").to_json_dict(),
            "composite_persona": trait_breakdown(
                data, goal.id, "composite_persona"
            ).to_json_dict(),
        }
    journeys = {"page_level": journey_json(data, "page_level")}
    if data.tags:
        journeys["goal_level"] = journey_json(data, "goal_level")
    return {
        "version": "1.0",
        "experiment_id": store.experiment_id,
        "goals": goals_payload["goals"],
        "excluded_runs": goals_payload["excluded_runs"],
        "traits_by_goal": traits,
        "issues": [issue_json_entry(data, i) for i in issue_list(data)],
        "journeys": journeys,
    }


def report_markdown(store: ExperimentStore) -> str:
    """Human-readable summary of the analysis report."""
    payload = report_json(store)
    lines = [f"# Usability report: {payload['experiment_id']}", ""]
    lines.append("## Goals")
    lines.append("")
    lines.append("| goal | attempting | with issues | success ratio |")
    lines.append("| --- | --- | --- | --- |")
    for goal in payload["goals"]:
        lines.append(
            f"| {goal['goal_id']} | {goal['agents_attempting']} "
            f"| {goal['agents_with_issues']} | {goal['success_ratio']:.2f} |"
        )
    lines.append("")
    lines.append("## Issues (severity desc)")
    lines.append("")
    for issue in payload["issues"]:
        lines.append(
            f"- [{issue['issue_severity']}] {issue['type']} at {issue['element']} "
            f"({issue['run_id']} step {issue['step']}): {issue['reason']} "
            f"Fix: {issue['fix']}"
        )
    if payload["excluded_runs"]:
        lines.append("")
        lines.append("## Excluded (unannotated) runs")
        for run_id in payload["excluded_runs"]:
            lines.append(f"- {run_id}")
    lines.append("")
    return "\n".join(lines)

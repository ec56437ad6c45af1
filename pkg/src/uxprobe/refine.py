"""Edit-and-evaluate loop: NL editing sessions, single-step replay preview,
and impacted-persona lookup.

Edit sessions are non-destructive: the base snapshot is never mutated and
any history position is reproducible by replaying patchsets from the base.
The replay preview and the resolved/unresolved judgment are two separate
gateway calls; the judgment never receives the replay completion verbatim,
only the parsed actions.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field

from uxprobe.annotate import IssueRecord, jaccard, normalize_tag
from uxprobe.env.extract import extract_elements, interactive_nodes, page_title
from uxprobe.env.state import (
    PAGE_STATE_FOOTER,
    PAGE_STATE_HEADER,
    AgentAction,
    PageState,
    StepEvent,
    TabInfo,
    serialize_page_state,
)
from uxprobe.errors import (
    DecisionParseError,
    EditError,
    PreviewError,
    SchemaViolation,
    SelectorError,
    UXProbeError,
)
from uxprobe.llm import ChatMessage, ChatRequest, Gateway
from uxprobe.patch import dom
from uxprobe.patch.engine import PatchSet, apply_patchset, parse_patchset
from uxprobe.patch.selectors import select_all
from uxprobe.prompts import HTML_EDIT_PROMPT, REPLAY_JUDGMENT_PROMPT
from uxprobe.simulate import extract_fenced_json, parse_decision, split_prompt_text
from uxprobe.store import ExperimentStore

_SESSION_COUNTER = itertools.count(1)


@dataclass
class HistoryEntry:
    instruction: str
    patchset: PatchSet
    snapshot_ref: str
    message: str

    def to_json_dict(self) -> dict:
        return {
            "instruction": self.instruction,
            "patchset": self.patchset.to_json_dict(),
            "snapshot_ref": self.snapshot_ref,
            "message": self.message,
        }


@dataclass
class EditSession:
    store: ExperimentStore
    base_snapshot_ref: str
    session_id: str = ""
    history: list[HistoryEntry] = field(default_factory=list)
    cursor: int = 0  # 0 = base snapshot, k = after history[k-1]

    def __post_init__(self) -> None:
        if not self.session_id:
            self.session_id = f"edit-{next(_SESSION_COUNTER)}"

    @property
    def current_ref(self) -> str:
        if self.cursor == 0:
            return self.base_snapshot_ref
        return self.history[self.cursor - 1].snapshot_ref

    def current_html(self) -> str:
        return self.store.get_html(self.current_ref)

    def revert(self, cursor: int) -> str:
        """Move the cursor to a prior position; returns the snapshot ref."""
        if not 0 <= cursor <= len(self.history):
            raise EditError(f"cursor {cursor} outside history (0..{len(self.history)})")
        self.cursor = cursor
        return self.current_ref

    def replay(self, cursor: int | None = None) -> str:
        """Recompute the snapshot at a cursor by pure patchset replay."""
        cursor = self.cursor if cursor is None else cursor
        html = self.store.get_html(self.base_snapshot_ref)
        for entry in self.history[:cursor]:
            result = apply_patchset(html, entry.patchset)
            if result.status != "ok":
                raise EditError(f"history replay failed: {result.error}")
            html = result.html
        return html


def _edit_user_payload(html: str, instruction: str) -> str:
    return json.dumps({"html": html, "request": instruction}, ensure_ascii=False)


def edit_step(session: EditSession, instruction: str, gateway: Gateway) -> tuple[PatchSet, str]:
    """One natural-language edit: agent patchset, applied when status is ok.

    Ambiguous/impossible responses surface the agent's explanation and leave
    history unchanged. Malformed agent JSON gets one corrective re-prompt.
    """
    html = session.current_html()
    messages = [
        ChatMessage("system", HTML_EDIT_PROMPT),
        ChatMessage("user", _edit_user_payload(html, instruction)),
    ]
    response = gateway.complete(ChatRequest(messages=messages, tag="refinement"))
    try:
        patchset = _parse_patchset_response(response.text)
    except SchemaViolation as exc:
        retry = messages + [
            ChatMessage("assistant", response.text),
            ChatMessage(
                "user",
                f"Your reply was not a valid patchset ({exc}). Respond only with the "
                "JSON object in a fenced code block, following the contract exactly.",
            ),
        ]
        second = gateway.complete(ChatRequest(messages=retry, tag="refinement"))
        try:
            patchset = _parse_patchset_response(second.text)
        except SchemaViolation as exc2:
            raise EditError(f"edit failed after re-prompt: {exc2}") from exc2

    if patchset.status != "ok":
        explanation = patchset.notes or f"agent returned status {patchset.status}"
        return patchset, explanation

    result = apply_patchset(html, patchset)
    if result.status != "ok":
        return patchset, f"patchset could not be applied: {result.error}"

    ref = session.store.put_blob(result.html, ext="html")
    # an edit after a revert truncates the undone tail
    del session.history[session.cursor :]
    session.history.append(
        HistoryEntry(
            instruction=instruction,
            patchset=patchset,
            snapshot_ref=ref,
            message=result.diff_summary,
        )
    )
    session.cursor = len(session.history)
    applied = len(patchset.patches)
    return patchset, f"applied {applied} patch(es):\n{result.diff_summary}"


def _parse_patchset_response(text: str) -> PatchSet:
    try:
        payload = extract_fenced_json(text)
    except DecisionParseError as exc:
        raise SchemaViolation(str(exc)) from exc
    return parse_patchset(payload)


# -- replay preview -----------------------------------------------------------


@dataclass
class DiffReport:
    issue_id: str
    original_action: AgentAction
    new_action: AgentAction
    action_changed: bool
    issue_resolved: bool
    summary: str

    def to_json_dict(self) -> dict:
        return {
            "version": "1.0",
            "issue_id": self.issue_id,
            "original_action": self.original_action.to_json_dict(),
            "new_action": self.new_action.to_json_dict(),
            "action_changed": self.action_changed,
            "issue_resolved": self.issue_resolved,
            "summary": self.summary,
        }


_SCROLL_RE = re.compile(r"^SCROLL_OFFSET: (\d+)$", re.MULTILINE)


def _find_step_event(store: ExperimentStore, run_id: str, step: int) -> StepEvent:
    for record in store.read_events(run_id):
        if record.get("type") == "step" and record.get("step") == step:
            return StepEvent.from_json_dict(record)
    raise PreviewError(f"no step event for {run_id} step {step}")


def _substitute_page_state(user_text: str, new_state_text: str) -> str:
    start = user_text.find(PAGE_STATE_HEADER)
    end = user_text.find(PAGE_STATE_FOOTER)
    if start == -1 or end == -1:
        raise PreviewError("recorded prompt has no page-state section to substitute")
    return (
        user_text[: start + len(PAGE_STATE_HEADER)]
        + "\n"
        + new_state_text
        + "\n"
        + user_text[end:]
    )


def observe_snapshot(html: str, url: str, scroll_offset: int = 0) -> PageState:
    """Offline-style observation of a bare snapshot (for replay previews)."""
    document = dom.parse_html(html)
    title = page_title(document)
    return PageState(
        url=url,
        title=title,
        elements=extract_elements(document),
        tabs=[TabInfo(tab_id="tab-1", url=url, title=title)],
        scroll_offset=scroll_offset,
        screenshot_ref=None,
    )


def _element_html(html: str, selector: str) -> str | None:
    try:
        document = dom.parse_html(html)
        matches = select_all(document, selector)
    except SelectorError:
        return None
    if not matches:
        return None
    return dom.serialize(matches[0])


def preview_replay(
    store: ExperimentStore,
    issue: IssueRecord,
    modified_snapshot_ref: str,
    gateway: Gateway,
) -> DiffReport:
    """Re-run exactly one recorded decision step against a modified snapshot.

    The step prompt is rebuilt by substituting the modified snapshot's
    serialized page state into the recorded prompt. One decision call
    predicts the new action; a second, separate call judges resolution from
    structured data only. Nothing is executed in any environment.
    """
    event = _find_step_event(store, issue.run_id, issue.step)
    if not event.prompt_text:
        raise PreviewError(f"step event for {issue.issue_id} has no recorded prompt")
    system_text, user_text = split_prompt_text(event.prompt_text)

    scroll_match = _SCROLL_RE.search(user_text)
    scroll_offset = int(scroll_match.group(1)) if scroll_match else 0

    modified_html = store.get_html(modified_snapshot_ref)
    new_state = observe_snapshot(modified_html, event.url, scroll_offset)
    new_user_text = _substitute_page_state(user_text, serialize_page_state(new_state))

    messages = [ChatMessage("system", system_text), ChatMessage("user", new_user_text)]
    response = gateway.complete(ChatRequest(messages=messages, tag="refinement"))
    try:
        decision = parse_decision(response.text)
    except DecisionParseError as exc:
        retry = messages + [
            ChatMessage("assistant", response.text),
            ChatMessage(
                "user",
                f"Your previous reply was not a valid decision ({exc}). "
                "Reply again with a single fenced JSON decision block.",
            ),
        ]
        second = gateway.complete(ChatRequest(messages=retry, tag="refinement"))
        try:
            decision = parse_decision(second.text)
        except DecisionParseError as exc2:
            raise PreviewError(f"replay decision unparseable after re-prompt: {exc2}") from exc2

    new_action = decision.action
    original_action = event.action

    original_html = store.get_html(event.raw_html_ref)
    judgment_payload = json.dumps(
        {
            "issue": issue.to_json_dict(),
            "original_action": original_action.to_json_dict(),
            "new_action": new_action.to_json_dict(),
            "element_before": _element_html(original_html, issue.element),
            "element_after": _element_html(modified_html, issue.element),
        },
        ensure_ascii=False,
    )
    judgment_messages = [
        ChatMessage("system", REPLAY_JUDGMENT_PROMPT),
        ChatMessage("user", judgment_payload),
    ]
    judgment = gateway.complete(ChatRequest(messages=judgment_messages, tag="refinement"))
    try:
        verdict = extract_fenced_json(judgment.text)
        resolved = bool(verdict.get("resolved"))
        summary = str(verdict.get("summary", ""))
    except DecisionParseError as exc:
        raise PreviewError(f"judgment output unparseable: {exc}") from exc

    return DiffReport(
        issue_id=issue.issue_id,
        original_action=original_action,
        new_action=new_action,
        action_changed=original_action != new_action,
        issue_resolved=resolved,
        summary=summary,
    )


# -- impacted personas ------------------------------------------------------------


def goal_tag_sets(store: ExperimentStore) -> dict[str, frozenset[str]]:
    """Union of normalized tags per goal, from the annotation output."""
    tags = store.load_tags()
    by_goal: dict[str, set[str]] = {}
    goal_by_run = {a["run_id"]: a["goal_id"] for a in store.run_assignments()}
    for run_id, arrays in tags.items():
        goal_id = goal_by_run.get(run_id)
        if goal_id is None:
            continue
        bucket = by_goal.setdefault(goal_id, set())
        for inner in arrays:
            for tag in inner:
                bucket.add(normalize_tag(tag))
    return {goal: frozenset(values) for goal, values in by_goal.items()}


def adjacent_goals(
    store: ExperimentStore, goal_id: str, threshold: float = 0.25
) -> set[str]:
    """The goal itself plus goals whose tag sets overlap at Jaccard >= threshold."""
    sets = goal_tag_sets(store)
    base = sets.get(goal_id, frozenset())
    adjacent = {goal_id}
    for other, tag_set in sets.items():
        if other != goal_id and base and jaccard(base, tag_set) >= threshold:
            adjacent.add(other)
    return adjacent


def impacted_personas(
    store: ExperimentStore,
    selector: str,
    goal_id: str,
    adjacency_threshold: float = 0.25,
) -> list[tuple[str, str, int]]:
    """Runs that interacted with the modified element, on same/adjacent goals.

    A run qualifies when some step's snapshot resolves the selector AND that
    step's action targeted the resolved element. Returns (persona_id,
    run_id, step) sorted by persona id. SelectorError propagates.
    """
    if not store.has_annotations():
        raise UXProbeError("impacted-persona lookup requires an annotated experiment")
    goals = adjacent_goals(store, goal_id, adjacency_threshold)

    hits: list[tuple[str, str, int]] = []
    doc_cache: dict[str, tuple[dom.Document, list, dict]] = {}

    for assignment in store.run_assignments():
        if assignment["goal_id"] not in goals:
            continue
        run_id = assignment["run_id"]
        for record in store.read_events(run_id):
            if record.get("type") != "step":
                continue
            event = StepEvent.from_json_dict(record)
            if event.action.target_index is None:
                continue
            ref = event.raw_html_ref
            if ref not in doc_cache:
                document = dom.parse_html(store.get_html(ref))
                doc_cache[ref] = (
                    document,
                    select_all(document, selector),
                    interactive_nodes(document),
                )
            _, matches, nodes = doc_cache[ref]
            if not matches:
                continue
            target = nodes.get(event.action.target_index)
            if target is not None and any(m is target for m in matches):
                hits.append((assignment["persona_id"], run_id, event.step))

    hits.sort()
    return hits

"""Persona-conditioned simulation loop producing one trace per (persona, goal)."""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from uxprobe.env.emit import emit_snapshot
from uxprobe.env.offline import OfflineSession
from uxprobe.env.state import (
    PAGE_STATE_FOOTER,
    PAGE_STATE_HEADER,
    AgentAction,
    PageState,
    StepEvent,
    serialize_page_state,
)
from uxprobe.errors import ActionError, DecisionParseError, EnvironmentError_
from uxprobe.events import TOPIC_RUN_FINISHED, TOPIC_RUN_STARTED, EventBus
from uxprobe.llm import ChatMessage, ChatRequest, Gateway, RecordingGateway
from uxprobe.personas import ExperimentConfig, Goal, Persona, expand_traits, render_persona_prompt
from uxprobe.prompts import BEHAVIOR_PROMPT, TASK_PROMPT, fill
from uxprobe.store import ExperimentStore, utc_now_iso

HISTORY_WINDOW = 5

RESPONSE_FORMAT_REMINDER = """\
=== RESPONSE FORMAT ===
Respond with exactly one fenced JSON block:
```json
{"intent": "<current micro-goal>",
 "reasoning": "<think-aloud reasoning in the persona's voice>",
 "action": {"kind": "<click|scroll|type|navigate|go_back|done>",
            "target_index": <element index, for click/type>,
            "payload": "<typed text, URL, or scroll delta, when needed>",
            "success_flag": <true|false, only for done>}}
```"""

SYSTEM_MARKER = "### SYSTEM ###"
USER_MARKER = "### USER ###"


@dataclass
class Decision:
    intent: str
    reasoning: str
    action: AgentAction


@dataclass
class Terminal:
    completed: bool
    success: bool | None
    reason: str

    def to_json_dict(self) -> dict:
        return {
            "type": "terminal",
            "completed": self.completed,
            "success": self.success,
            "reason": self.reason,
        }


@dataclass
class Trace:
    run_id: str
    persona_id: str
    goal_id: str
    steps: list[StepEvent] = field(default_factory=list)
    terminal: Terminal = field(default_factory=lambda: Terminal(False, None, ""))


_FENCED_RE = re.compile(r"```[a-zA-Z]*\s*\n(.*?)```", re.DOTALL)


def extract_fenced_json(text: str) -> dict:
    """First fenced block that parses as a JSON object; raises otherwise."""
    blocks = _FENCED_RE.findall(text)
    if not blocks:
        # tolerate a bare JSON object as the entire reply
        stripped = text.strip()
        if stripped.startswith("{") and stripped.endswith("}"):
            blocks = [stripped]
    for block in blocks:
        try:
            payload = json.loads(block)
        except json.JSONDecodeError:
            continue
        if isinstance(payload, dict):
            return payload
    raise DecisionParseError("no fenced JSON object found in completion")


def parse_decision(text: str) -> Decision:
    """Parse the structured decision block out of a completion."""
    payload = extract_fenced_json(text)
    action_raw = payload.get("action")
    if not isinstance(action_raw, dict):
        raise DecisionParseError("decision block has no action object")
    kind = action_raw.get("kind")
    try:
        action = AgentAction(
            kind=kind if isinstance(kind, str) else "",
            target_index=action_raw.get("target_index"),
            payload=(
                str(action_raw["payload"]) if action_raw.get("payload") is not None else None
            ),
            success_flag=action_raw.get("success_flag"),
        )
    except ActionError as exc:
        raise DecisionParseError(str(exc)) from exc
    return Decision(
        intent=str(payload.get("intent", "")),
        reasoning=str(payload.get("reasoning", "")),
        action=action,
    )


def render_focus_bullets(config: ExperimentConfig) -> str:
    bullets = [f"- {goal.text}" for goal in config.goals]
    for line in config.directives.splitlines():
        line = line.strip()
        if line:
            bullets.append(f"- {line}")
    return "\n" + "\n".join(bullets)


def compose_step_prompt(
    config: ExperimentConfig,
    persona: Persona,
    goal: Goal,
    state: PageState,
    history: list[StepEvent],
) -> tuple[str, str]:
    """(system_text, user_text) for one simulation step."""
    system_text = BEHAVIOR_PROMPT.replace("{persona}", render_persona_prompt(persona))

    task = fill(
        TASK_PROMPT,
        site_name=config.site_name,
        site_url=config.site,
        focus_bullets=render_focus_bullets(config),
    )
    parts = [task, f"Current goal: {goal.text}", ""]
    parts.append(PAGE_STATE_HEADER)
    parts.append(serialize_page_state(state))
    parts.append(PAGE_STATE_FOOTER)
    parts.append("")
    parts.append("=== RECENT STEPS ===")
    parts.append(render_history(history))
    parts.append("=== END RECENT STEPS ===")
    parts.append("")
    parts.append(RESPONSE_FORMAT_REMINDER)
    return system_text, "\n".join(parts)


def render_history(history: list[StepEvent]) -> str:
    if not history:
        return "No steps taken yet."
    lines = []
    for event in history[-HISTORY_WINDOW:]:
        action = event.action
        detail = action.kind
        if action.target_index is not None:
            detail += f"({action.target_index})"
        if action.payload is not None:
            detail += f" payload={action.payload!r}"
        lines.append(
            f"{event.step}. intent={event.intent!r} action={detail} result={event.result!r}"
        )
    pages: list[str] = []
    for event in history:
        if not pages or pages[-1] != event.url:
            pages.append(event.url)
    lines.append(f"Summary: {len(history)} steps so far; pages visited: {' -> '.join(pages)}")
    return "\n".join(lines)


def format_prompt_text(system_text: str, user_text: str) -> str:
    return f"{SYSTEM_MARKER}\n{system_text}\n\n{USER_MARKER}\n{user_text}"


def split_prompt_text(prompt_text: str) -> tuple[str, str]:
    """Invert format_prompt_text (used by the replay preview)."""
    if USER_MARKER not in prompt_text:
        raise DecisionParseError("prompt text is missing its user section")
    head, user_text = prompt_text.split(USER_MARKER, 1)
    system_text = head.replace(SYSTEM_MARKER, "", 1).strip("\n")
    return system_text, user_text.strip("\n")


def run_simulation(
    config: ExperimentConfig,
    persona: Persona,
    goal: Goal,
    session,
    gateway: Gateway,
    store: ExperimentStore,
    bus: EventBus | None = None,
    run_id: str | None = None,
    clock=utc_now_iso,
) -> Trace:
    """Iterative perception-decision-action loop for one (persona, goal).

    Stops when the agent reports done or the step cap is reached. An
    unparseable decision gets one corrective re-prompt; a second failure
    terminates the trace as an unsuccessful decision-parse failure.
    """
    run_id = run_id or f"{persona.id}--{goal.id}"
    recording = RecordingGateway(gateway, lambda record: store.append_event(run_id, record))
    if bus is not None:
        bus.publish(TOPIC_RUN_STARTED, {"run_id": run_id})

    trace = Trace(run_id=run_id, persona_id=persona.id, goal_id=goal.id)
    terminal: Terminal | None = None

    for step in range(1, config.max_steps + 1):
        state = session.observe()
        html = session.current_html()
        system_text, user_text = compose_step_prompt(config, persona, goal, state, trace.steps)
        prompt_text = format_prompt_text(system_text, user_text)

        if getattr(session, "needs_return_to_site", False):
            # Task rule: after leaving the site origin, the next recorded
            # action is go_back. No model call for this step.
            decision = Decision(
                intent="return to the site",
                reasoning="The last navigation left the site, so I go back to "
                "the last page I was on and continue there.",
                action=AgentAction(kind="go_back"),
            )
            parse_failed = False
        else:
            decision, parse_failed = _decide(recording, system_text, user_text)

        if parse_failed:
            event = emit_snapshot(
                store=store,
                bus=bus,
                run_id=run_id,
                step=step,
                timestamp=clock(),
                state=state,
                html=html,
                prompt_text=prompt_text,
                action=AgentAction(kind="done", success_flag=False),
                intent="",
                reasoning=decision.reasoning,
                result="run aborted: decision parse failure",
                error="decision parse failure",
            )
            trace.steps.append(event)
            terminal = Terminal(True, False, "decision parse failure")
            break

        error: str | None = None
        try:
            result = session.execute(decision.action)
        except ActionError as exc:
            error = str(exc)
            result = f"action failed: {exc}"

        event = emit_snapshot(
            store=store,
            bus=bus,
            run_id=run_id,
            step=step,
            timestamp=clock(),
            state=state,
            html=html,
            prompt_text=prompt_text,
            action=decision.action,
            intent=decision.intent,
            reasoning=decision.reasoning,
            result=result,
            error=error,
        )
        trace.steps.append(event)

        if decision.action.kind == "done":
            terminal = Terminal(True, decision.action.success_flag, "agent done")
            break

    if terminal is None:
        terminal = Terminal(True, None, "step cap")
    trace.terminal = terminal
    store.append_event(run_id, {**terminal.to_json_dict(), "run_id": run_id})
    if bus is not None:
        bus.publish(TOPIC_RUN_FINISHED, {"run_id": run_id, "reason": terminal.reason})
    return trace


def _decide(gateway: Gateway, system_text: str, user_text: str) -> tuple[Decision, bool]:
    """One decision with a single corrective re-prompt on parse failure."""
    messages = [ChatMessage("system", system_text), ChatMessage("user", user_text)]
    response = gateway.complete(ChatRequest(messages=messages, tag="simulation"))
    try:
        return parse_decision(response.text), False
    except DecisionParseError as exc:
        retry = messages + [
            ChatMessage("assistant", response.text),
            ChatMessage(
                "user",
                f"Your previous reply was not a valid decision ({exc}). "
                f"Reply again following the format exactly.\n\n{RESPONSE_FORMAT_REMINDER}",
            ),
        ]
        second = gateway.complete(ChatRequest(messages=retry, tag="simulation"))
        try:
            return parse_decision(second.text), False
        except DecisionParseError:
            return Decision(intent="", reasoning=second.text, action=AgentAction("go_back")), True


def make_session(config: ExperimentConfig):
    """Open a browsing session for the configured site."""
    site = config.site
    if site.startswith(("http://", "https://")):
        from uxprobe.env.cdp import CdpSession

        return CdpSession.launch(site)
    path = Path(site)
    if path.is_dir():
        return OfflineSession(path)
    raise EnvironmentError_(f"config.site {site!r} is neither a URL nor a snapshot directory")


def plan_runs(store: ExperimentStore) -> list[tuple[Persona, Goal]]:
    """Assign every persona to every goal and record run ids in the manifest."""
    config = store.config()
    personas = expand_traits(config)
    pairs = [(persona, goal) for persona in personas for goal in config.goals]
    store.add_runs(
        [
            {
                "run_id": f"{persona.id}--{goal.id}",
                "persona_id": persona.id,
                "goal_id": goal.id,
                "traits": persona.trait_map,
                "replica_index": persona.replica_index,
            }
            for persona, goal in pairs
        ]
    )
    return pairs


def execute_runs(
    store: ExperimentStore,
    pairs: list[tuple[Persona, Goal]],
    gateway: Gateway,
    pool_size: int = 1,
    bus: EventBus | None = None,
    session_factory=None,
    clock=utc_now_iso,
) -> list[Trace]:
    """Execute planned runs, one session per (persona, goal) pair."""
    config = store.config()
    store.set_status("running")
    factory = session_factory or (lambda: make_session(config))

    def _one(pair) -> Trace:
        persona, goal = pair
        session = factory()
        return run_simulation(
            config, persona, goal, session, gateway, store, bus=bus, clock=clock
        )

    if pool_size <= 1:
        traces = [_one(pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            traces = list(pool.map(_one, pairs))
    store.set_status("complete")
    return traces


def run_experiment(
    store: ExperimentStore,
    gateway: Gateway,
    pool_size: int = 1,
    bus: EventBus | None = None,
    session_factory=None,
    clock=utc_now_iso,
) -> list[Trace]:
    """Run every persona against every goal; returns traces in run order."""
    pairs = plan_runs(store)
    return execute_runs(
        store,
        pairs,
        gateway,
        pool_size=pool_size,
        bus=bus,
        session_factory=session_factory,
        clock=clock,
    )


def load_trace(store: ExperimentStore, run_id: str) -> Trace:
    """Rebuild a trace from the persisted event log."""
    assignment = next(
        (a for a in store.run_assignments() if a["run_id"] == run_id), None
    )
    if assignment is None:
        raise EnvironmentError_(f"unknown run {run_id!r}")
    trace = Trace(
        run_id=run_id,
        persona_id=assignment["persona_id"],
        goal_id=assignment["goal_id"],
    )
    for record in store.read_events(run_id):
        if record.get("type") == "step":
            trace.steps.append(StepEvent.from_json_dict(record))
        elif record.get("type") == "terminal":
            trace.terminal = Terminal(
                completed=record["completed"],
                success=record.get("success"),
                reason=record.get("reason", ""),
            )
    return trace


def load_traces(store: ExperimentStore) -> list[Trace]:
    return [load_trace(store, run_id) for run_id in store.run_ids()]

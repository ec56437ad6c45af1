"""Step-event emission: content-addressed HTML, append-only log, bus publish."""

from __future__ import annotations

from uxprobe.env.state import AgentAction, PageState, StepEvent
from uxprobe.events import TOPIC_STEP, EventBus
from uxprobe.store import ExperimentStore


def emit_snapshot(
    store: ExperimentStore,
    bus: EventBus | None,
    run_id: str,
    step: int,
    timestamp: str,
    state: PageState,
    html: str,
    prompt_text: str,
    action: AgentAction,
    intent: str,
    reasoning: str,
    result: str,
    error: str | None = None,
) -> StepEvent:
    """Persist one completed step and publish it.

    Raw HTML is stored content-addressed (equal bytes, equal ref), the
    StepEvent is appended to the run's event log, then published on the
    bus. Storage failures propagate and abort the run; whatever was already
    appended stays on disk.
    """
    raw_html_ref = store.put_blob(html, ext="html")
    event = StepEvent(
        run_id=run_id,
        step=step,
        timestamp=timestamp,
        url=state.url,
        raw_html_ref=raw_html_ref,
        prompt_text=prompt_text,
        tabs=state.tabs,
        screenshot_ref=state.screenshot_ref,
        action=action,
        intent=intent,
        reasoning=reasoning,
        result=result,
        error=error,
    )
    store.append_event(run_id, event.to_json_dict())
    if bus is not None:
        bus.publish(TOPIC_STEP, event.to_json_dict())
    return event

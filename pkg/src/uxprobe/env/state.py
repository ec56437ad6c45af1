"""Structured page state, agent actions, and per-step event records."""

from __future__ import annotations

from dataclasses import dataclass, field

from uxprobe.errors import ActionError

ACTION_KINDS = ("click", "scroll", "type", "navigate", "go_back", "done")

_ROLE_BY_TAG = {
    "a": "link",
    "button": "button",
    "select": "listbox",
    "textarea": "textbox",
}


def role_for(tag: str, attrs: dict[str, str]) -> str:
    explicit = attrs.get("role")
    if explicit:
        return explicit
    if tag == "input":
        input_type = (attrs.get("type") or "text").lower()
        if input_type in ("button", "submit", "reset", "image"):
            return "button"
        if input_type in ("checkbox", "radio", "range"):
            return input_type
        return "textbox"
    if tag in _ROLE_BY_TAG:
        return _ROLE_BY_TAG[tag]
    if "onclick" in attrs:
        return "button"
    return tag


@dataclass
class ElementInfo:
    selector: str
    tag: str
    role: str
    text: str
    href: str | None = None
    value: str | None = None
    classes: list[str] = field(default_factory=list)
    bbox: tuple[float, float, float, float] | None = None  # x, y, w, h

    @property
    def display_tag(self) -> str:
        """Tag with class tokens, CSS-compound style (a.btn.primary)."""
        return self.tag + "".join(f".{c}" for c in self.classes)

    def to_json_dict(self) -> dict:
        payload = {
            "selector": self.selector,
            "tag": self.tag,
            "role": self.role,
            "text": self.text,
        }
        if self.href is not None:
            payload["href"] = self.href
        if self.value is not None:
            payload["value"] = self.value
        if self.classes:
            payload["classes"] = list(self.classes)
        if self.bbox is not None:
            payload["bbox"] = list(self.bbox)
        return payload

    @classmethod
    def from_json_dict(cls, data: dict) -> "ElementInfo":
        bbox = data.get("bbox")
        return cls(
            selector=data["selector"],
            tag=data["tag"],
            role=data["role"],
            text=data["text"],
            href=data.get("href"),
            value=data.get("value"),
            classes=list(data.get("classes", [])),
            bbox=tuple(bbox) if bbox else None,
        )


@dataclass
class TabInfo:
    tab_id: str
    url: str
    title: str

    def to_json_dict(self) -> dict:
        return {"tab_id": self.tab_id, "url": self.url, "title": self.title}

    @classmethod
    def from_json_dict(cls, data: dict) -> "TabInfo":
        return cls(tab_id=data["tab_id"], url=data["url"], title=data["title"])


@dataclass
class PageState:
    url: str
    title: str
    elements: dict[int, ElementInfo]  # indices contiguous from 1, document order
    tabs: list[TabInfo] = field(default_factory=list)
    scroll_offset: int = 0
    screenshot_ref: str | None = None


@dataclass(frozen=True)
class AgentAction:
    kind: str
    target_index: int | None = None
    payload: str | None = None
    success_flag: bool | None = None

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ActionError(f"unknown action kind {self.kind!r}")
        if self.kind in ("click", "type") and self.target_index is None:
            raise ActionError(f"{self.kind} requires target_index")
        if self.kind == "type" and self.payload is None:
            raise ActionError("type requires payload text")
        if self.kind == "navigate" and not self.payload:
            raise ActionError("navigate requires a payload URL")
        if self.kind == "scroll" and self.payload is None:
            raise ActionError("scroll requires a payload delta")
        if self.kind == "done" and self.success_flag is None:
            raise ActionError("done carries success_flag")

    def to_json_dict(self) -> dict:
        payload: dict = {"kind": self.kind}
        if self.target_index is not None:
            payload["target_index"] = self.target_index
        if self.payload is not None:
            payload["payload"] = self.payload
        if self.success_flag is not None:
            payload["success_flag"] = self.success_flag
        return payload

    @classmethod
    def from_json_dict(cls, data: dict) -> "AgentAction":
        return cls(
            kind=data.get("kind", ""),
            target_index=data.get("target_index"),
            payload=data.get("payload"),
            success_flag=data.get("success_flag"),
        )


@dataclass
class StepEvent:
    run_id: str
    step: int
    timestamp: str
    url: str
    raw_html_ref: str
    prompt_text: str
    tabs: list[TabInfo]
    action: AgentAction
    intent: str
    reasoning: str
    result: str
    screenshot_ref: str | None = None
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "type": "step",
            "version": "1.0",
            "run_id": self.run_id,
            "step": self.step,
            "timestamp": self.timestamp,
            "url": self.url,
            "raw_html_ref": self.raw_html_ref,
            "prompt_text": self.prompt_text,
            "tabs": [t.to_json_dict() for t in self.tabs],
            "screenshot_ref": self.screenshot_ref,
            "action": self.action.to_json_dict(),
            "intent": self.intent,
            "reasoning": self.reasoning,
            "result": self.result,
            "error": self.error,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "StepEvent":
        return cls(
            run_id=data["run_id"],
            step=data["step"],
            timestamp=data["timestamp"],
            url=data["url"],
            raw_html_ref=data["raw_html_ref"],
            prompt_text=data["prompt_text"],
            tabs=[TabInfo.from_json_dict(t) for t in data.get("tabs", [])],
            screenshot_ref=data.get("screenshot_ref"),
            action=AgentAction.from_json_dict(data["action"]),
            intent=data.get("intent", ""),
            reasoning=data.get("reasoning", ""),
            result=data.get("result", ""),
            error=data.get("error"),
        )


PAGE_STATE_HEADER = "=== PAGE STATE ==="
PAGE_STATE_FOOTER = "=== END PAGE STATE ==="


def serialize_page_state(state: PageState) -> str:
    """Deterministic textual page state for prompts (and replay substitution)."""
    lines = [
        f"URL: {state.url}",
        f"TITLE: {state.title}",
        f"SCROLL_OFFSET: {state.scroll_offset}",
        "TABS:",
    ]
    for tab in state.tabs:
        lines.append(f'  [{tab.tab_id}] {tab.url} "{tab.title}"')
    lines.append("INTERACTIVE ELEMENTS:")
    for index in sorted(state.elements):
        info = state.elements[index]
        line = f'[{index}] <{info.display_tag}> role={info.role} "{info.text}"'
        if info.href is not None:
            line += f" href={info.href}"
        if info.value:
            line += f" value={info.value!r}"
        lines.append(line)
    return "\n".join(lines)

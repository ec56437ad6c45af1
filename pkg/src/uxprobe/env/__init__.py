"""Browser environments: offline snapshot sessions and the live CDP driver."""

from uxprobe.env.state import (
    ACTION_KINDS,
    AgentAction,
    ElementInfo,
    PageState,
    StepEvent,
    TabInfo,
    serialize_page_state,
)
from uxprobe.env.extract import extract_elements
from uxprobe.env.offline import OfflineSession

__all__ = [
    "ACTION_KINDS",
    "AgentAction",
    "ElementInfo",
    "OfflineSession",
    "PageState",
    "StepEvent",
    "TabInfo",
    "extract_elements",
    "serialize_page_state",
]

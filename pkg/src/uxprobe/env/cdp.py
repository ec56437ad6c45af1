"""Live browsing session over the browser remote-debugging wire protocol.

Targets a locally running browser exposing the JSON-RPC debugging endpoint
(navigation, runtime evaluation, DOM snapshot, input dispatch, screenshot).
Element perception reuses the same extraction rule as the offline
environment, so element indices mean the same thing in both.
"""

from __future__ import annotations

import json
import time
from urllib.parse import urlparse

import httpx

from uxprobe.env.extract import extract_elements, page_title
from uxprobe.env.state import AgentAction, ElementInfo, PageState, TabInfo
from uxprobe.env.wsproto import WebSocketClient
from uxprobe.errors import ActionError, EnvironmentError_
from uxprobe.patch import dom

DEFAULT_DEBUG_PORT = 9222
LOAD_POLL_INTERVAL = 0.05
LOAD_TIMEOUT = 15.0


class CdpClient:
    """JSON-RPC command/response client over one debugger websocket."""

    def __init__(self, ws: WebSocketClient) -> None:
        self._ws = ws
        self._next_id = 1
        self.events: list[dict] = []

    def call(self, method: str, params: dict | None = None) -> dict:
        message_id = self._next_id
        self._next_id += 1
        self._ws.send_text(
            json.dumps({"id": message_id, "method": method, "params": params or {}})
        )
        while True:
            payload = json.loads(self._ws.recv_text())
            if payload.get("id") == message_id:
                if "error" in payload:
                    raise EnvironmentError_(
                        f"{method} failed: {payload['error'].get('message')}"
                    )
                return payload.get("result", {})
            self.events.append(payload)

    def close(self) -> None:
        self._ws.close()


class CdpSession:
    """Single-threaded live session; satisfies the same observe/execute
    protocol as OfflineSession."""

    is_live = True

    def __init__(
        self,
        client: CdpClient,
        site_url: str,
        tab_id: str = "tab-1",
        capture_screenshots: bool = False,
        screenshot_sink=None,
    ) -> None:
        self.client = client
        self.site_url = site_url
        self.site_origin = _origin(site_url)
        self.tab_id = tab_id
        self.capture_screenshots = capture_screenshots
        self.screenshot_sink = screenshot_sink  # callable: bytes -> ref
        self.needs_return_to_site = False
        self._selector_by_index: dict[int, str] = {}
        for domain in ("Page", "Runtime", "DOM"):
            self.client.call(f"{domain}.enable")

    # -- construction -----------------------------------------------------

    @classmethod
    def launch(
        cls,
        site_url: str,
        host: str = "127.0.0.1",
        port: int = DEFAULT_DEBUG_PORT,
        **kwargs,
    ) -> "CdpSession":
        """Attach to a locally running browser and open the site."""
        try:
            targets = httpx.get(f"http://{host}:{port}/json/list", timeout=10).json()
        except httpx.HTTPError as exc:
            raise EnvironmentError_(
                f"no remote-debugging endpoint at {host}:{port}: {exc}"
            ) from exc
        page = next((t for t in targets if t.get("type") == "page"), None)
        if page is None:
            raise EnvironmentError_("debugging endpoint reports no page target")
        ws_url = page["webSocketDebuggerUrl"]
        parsed = urlparse(ws_url)
        ws = WebSocketClient(parsed.hostname or host, parsed.port or port, parsed.path)
        session = cls(CdpClient(ws), site_url, tab_id=page.get("id", "tab-1"), **kwargs)
        session._navigate(site_url)
        return session

    # -- protocol helpers ----------------------------------------------------

    def _evaluate(self, expression: str):
        result = self.client.call(
            "Runtime.evaluate", {"expression": expression, "returnByValue": True}
        )
        if "exceptionDetails" in result:
            raise EnvironmentError_(
                f"evaluate failed: {result['exceptionDetails'].get('text')}"
            )
        return result.get("result", {}).get("value")

    def _wait_for_load(self) -> None:
        deadline = time.monotonic() + LOAD_TIMEOUT
        while time.monotonic() < deadline:
            if self._evaluate("document.readyState") == "complete":
                return
            time.sleep(LOAD_POLL_INTERVAL)
        raise EnvironmentError_(f"page load timed out after {LOAD_TIMEOUT}s")

    def _navigate(self, url: str) -> None:
        self.client.call("Page.navigate", {"url": url})
        self._wait_for_load()
        self._after_navigation()

    def _after_navigation(self) -> None:
        origin = _origin(self.url)
        self.needs_return_to_site = bool(
            self.site_origin and origin and origin != self.site_origin
        )

    @property
    def url(self) -> str:
        return str(self._evaluate("location.href") or "")

    def current_html(self) -> str:
        html = self._evaluate("document.documentElement.outerHTML")
        if html is None:
            raise EnvironmentError_(f"DOM snapshot failed for {self.url}")
        return f"<!DOCTYPE html>\n{html}"

    # -- observe ----------------------------------------------------------------

    def observe(self) -> PageState:
        html = self.current_html()
        document = dom.parse_html(html)
        elements = extract_elements(document)
        self._selector_by_index = {i: e.selector for i, e in elements.items()}
        self._attach_boxes(elements)

        url = self.url
        title = page_title(document) or str(self._evaluate("document.title") or "")
        scroll = int(self._evaluate("window.pageYOffset || 0") or 0)

        screenshot_ref = None
        if self.capture_screenshots and self.screenshot_sink is not None:
            shot = self.client.call("Page.captureScreenshot", {"format": "png"})
            data = shot.get("data")
            if data:
                import base64

                screenshot_ref = self.screenshot_sink(base64.b64decode(data))

        return PageState(
            url=url,
            title=title,
            elements=elements,
            tabs=[TabInfo(tab_id=self.tab_id, url=url, title=title)],
            scroll_offset=scroll,
            screenshot_ref=screenshot_ref,
        )

    def _attach_boxes(self, elements: dict[int, ElementInfo]) -> None:
        if not elements:
            return
        selectors = [elements[i].selector for i in sorted(elements)]
        expression = (
            "JSON.stringify(" + json.dumps(selectors) + ".map(function(sel){"
            "var el=document.querySelector(sel);"
            "if(!el){return null;}var r=el.getBoundingClientRect();"
            "return [r.x,r.y,r.width,r.height];}))"
        )
        raw = self._evaluate(expression)
        if not raw:
            return
        try:
            boxes = json.loads(raw)
        except (TypeError, json.JSONDecodeError):
            return
        for i, index in enumerate(sorted(elements)):
            box = boxes[i] if i < len(boxes) else None
            if box:
                elements[index].bbox = tuple(float(v) for v in box)

    # -- execute ----------------------------------------------------------------

    def execute(self, action: AgentAction) -> str:
        if action.kind == "click":
            return self._click(action.target_index)  # type: ignore[arg-type]
        if action.kind == "type":
            return self._type(action.target_index, action.payload or "")  # type: ignore[arg-type]
        if action.kind == "scroll":
            delta = int(str(action.payload).replace("+", "").strip() or 0)
            self._evaluate(f"window.scrollBy(0, {delta})")
            return f"scrolled by {delta}px"
        if action.kind == "navigate":
            self._navigate(action.payload or "")
            return f"navigated to {self.url}"
        if action.kind == "go_back":
            return self._go_back()
        if action.kind == "done":
            return "run ended by agent"
        raise ActionError(f"unknown action kind {action.kind!r}")  # pragma: no cover

    def _selector_for(self, index: int) -> str:
        selector = self._selector_by_index.get(index)
        if selector is None:
            raise ActionError(f"unknown element index {index}")
        return selector

    def _click(self, index: int) -> str:
        selector = self._selector_for(index)
        box = self._evaluate(
            "(function(){var el=document.querySelector(" + json.dumps(selector) + ");"
            "if(!el){return null;}var r=el.getBoundingClientRect();"
            "return [r.x+r.width/2, r.y+r.height/2];})()"
        )
        if box and box[0] is not None and (box[0] or box[1]):
            x, y = float(box[0]), float(box[1])
            for event_type in ("mousePressed", "mouseReleased"):
                self.client.call(
                    "Input.dispatchMouseEvent",
                    {
                        "type": event_type,
                        "x": x,
                        "y": y,
                        "button": "left",
                        "clickCount": 1,
                    },
                )
        else:
            clicked = self._evaluate(
                "(function(){var el=document.querySelector("
                + json.dumps(selector)
                + "); if(!el){return false;} el.click(); return true;})()"
            )
            if not clicked:
                raise ActionError(f"element vanished for index {index}")
        self._wait_for_load()
        self._after_navigation()
        return f"clicked element {index}; now at {self.url}"

    def _type(self, index: int, text: str) -> str:
        selector = self._selector_for(index)
        focused = self._evaluate(
            "(function(){var el=document.querySelector("
            + json.dumps(selector)
            + "); if(!el){return false;} el.focus(); return true;})()"
        )
        if not focused:
            raise ActionError(f"element vanished for index {index}")
        self.client.call("Input.insertText", {"text": text})
        return f"typed {text!r} into element {index}"

    def _go_back(self) -> str:
        history = self.client.call("Page.getNavigationHistory")
        index = history.get("currentIndex", 0)
        entries = history.get("entries", [])
        if index <= 0:
            self.needs_return_to_site = False
            return "already at the first page; nothing to go back to"
        self.client.call(
            "Page.navigateToHistoryEntry", {"entryId": entries[index - 1]["id"]}
        )
        self._wait_for_load()
        self._after_navigation()
        return f"went back to {self.url}"

    def close(self) -> None:
        self.client.close()


def _origin(url: str) -> str:
    parsed = urlparse(url)
    if not parsed.scheme or not parsed.netloc:
        return ""
    return f"{parsed.scheme}://{parsed.netloc}"

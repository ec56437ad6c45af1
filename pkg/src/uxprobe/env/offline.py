"""Deterministic offline browsing environment over a snapshot directory.

A snapshot site is a directory of HTML files plus an optional `navmap.json`
overriding href resolution:

    {
      "index.html": {
        "/shop": "shop.html",            # href override
        "click:Search": "results.html"   # non-link element, by visible text
      },
      "*": {"/home": "index.html"}       # fallback for any page
    }

Default resolution follows relative hrefs within the directory. External
(http/https) links never leave the snapshot: the session stays on the
current page and reports that it came back, mirroring the task rule for
leaving the site. Typing mutates the in-memory page, navigation reloads
pages fresh from disk.
"""

from __future__ import annotations

import json
import posixpath
from pathlib import Path

from uxprobe.env.extract import (
    extract_elements,
    interactive_nodes,
    page_title,
    visible_text,
)
from uxprobe.env.state import AgentAction, PageState, TabInfo
from uxprobe.errors import ActionError, EnvironmentError_
from uxprobe.patch import dom

DEFAULT_VIEWPORT_HEIGHT = 900


def _normalize_page(path: str) -> str:
    path = path.split("#", 1)[0].split("?", 1)[0]
    return posixpath.normpath(path).lstrip("./")


class OfflineSession:
    """Single-threaded browsing session over a snapshot directory."""

    is_live = False

    def __init__(
        self,
        snapshot_dir: str | Path,
        start_page: str = "index.html",
        viewport_height: int = DEFAULT_VIEWPORT_HEIGHT,
    ) -> None:
        self.snapshot_dir = Path(snapshot_dir)
        if not self.snapshot_dir.is_dir():
            raise EnvironmentError_(f"snapshot directory not found: {snapshot_dir}")
        self.viewport_height = viewport_height
        self.navmap = self._load_navmap()
        self.history: list[str] = []
        self.scroll_offset = 0
        self._document: dom.Document | None = None
        self._nodes_by_index: dict[int, dom.Element] = {}
        self.current_page = ""
        self._load_page(_normalize_page(start_page), push_history=False)

    def _load_navmap(self) -> dict:
        path = self.snapshot_dir / "navmap.json"
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {}

    # -- page loading -------------------------------------------------------

    def _page_path(self, page: str) -> Path:
        return self.snapshot_dir / page

    def _load_page(self, page: str, push_history: bool = True) -> None:
        path = self._page_path(page)
        if not path.is_file():
            raise EnvironmentError_(f"page load failure: {page} (no such snapshot file)")
        if push_history and self.current_page:
            self.history.append(self.current_page)
        self.current_page = page
        self.scroll_offset = 0
        self._document = dom.parse_html(path.read_text(encoding="utf-8"))
        self._index_nodes()

    def _index_nodes(self) -> None:
        assert self._document is not None
        self._nodes_by_index = interactive_nodes(self._document)

    def current_html(self) -> str:
        assert self._document is not None
        return dom.serialize(self._document)

    @property
    def url(self) -> str:
        return self.current_page

    # -- observe ---------------------------------------------------------------

    def observe(self) -> PageState:
        assert self._document is not None
        title = page_title(self._document)
        return PageState(
            url=self.current_page,
            title=title,
            elements=extract_elements(self._document),
            tabs=[TabInfo(tab_id="tab-1", url=self.current_page, title=title)],
            scroll_offset=self.scroll_offset,
            screenshot_ref=None,
        )

    # -- execute ---------------------------------------------------------------

    def execute(self, action: AgentAction) -> str:
        if action.kind == "click":
            return self._click(action.target_index)  # type: ignore[arg-type]
        if action.kind == "type":
            return self._type(action.target_index, action.payload or "")  # type: ignore[arg-type]
        if action.kind == "scroll":
            return self._scroll(action.payload or "0")
        if action.kind == "navigate":
            return self._navigate(action.payload or "")
        if action.kind == "go_back":
            return self._go_back()
        if action.kind == "done":
            return "run ended by agent"
        raise ActionError(f"unknown action kind {action.kind!r}")  # pragma: no cover

    def _node(self, index: int) -> dom.Element:
        node = self._nodes_by_index.get(index)
        if node is None:
            raise ActionError(f"unknown element index {index}")
        return node

    def _nav_override(self, key: str) -> str | None:
        for scope in (self.current_page, "*"):
            mapping = self.navmap.get(scope, {})
            if key in mapping:
                return mapping[key]
        return None

    def _click(self, index: int) -> str:
        node = self._node(index)
        label = visible_text(node) or node.tag

        if node.tag == "a" and node.has_attr("href"):
            href = node.get("href") or ""
            override = self._nav_override(href)
            if override is not None:
                self._load_page(_normalize_page(override))
                return f'clicked link "{label}"; navigated to {self.current_page}'
            if href.startswith(("http://", "https://")):
                return (
                    f'clicked link "{label}" ({href}); the link leaves the site, '
                    "went back to the last page"
                )
            if href.startswith("#") or not href:
                return f'clicked link "{label}"; stayed on {self.current_page} (in-page anchor)'
            base = posixpath.dirname(self.current_page)
            target = _normalize_page(posixpath.join(base, href))
            if not self._page_path(target).is_file():
                raise ActionError(f"snapshot has no page for href {href!r}")
            self._load_page(target)
            return f'clicked link "{label}"; navigated to {self.current_page}'

        override = self._nav_override(f"click:{label}")
        if override is not None:
            self._load_page(_normalize_page(override))
            return f'clicked "{label}"; navigated to {self.current_page}'
        return f'clicked "{label}"; no navigation in snapshot mode'

    def _type(self, index: int, text: str) -> str:
        node = self._node(index)
        if node.tag == "input":
            node.set_attr("value", text)
        elif node.tag == "textarea":
            content = dom.Text.from_plain(text)
            content.parent = node
            node.children = [content]
        elif node.tag == "select":
            node.set_attr("value", text)
        else:
            raise ActionError(f"element {index} (<{node.tag}>) does not accept text")
        return f"typed {text!r} into element {index}"

    def _scroll(self, payload: str) -> str:
        try:
            delta = int(str(payload).replace("+", "").strip())
        except ValueError as exc:
            raise ActionError(f"scroll delta {payload!r} is not an integer") from exc
        self.scroll_offset = max(0, self.scroll_offset + delta)
        return f"scrolled to offset {self.scroll_offset}"

    def _navigate(self, target: str) -> str:
        page = _normalize_page(target)
        override = self._nav_override(target)
        if override is not None:
            page = _normalize_page(override)
        if not self._page_path(page).is_file():
            raise ActionError(f"snapshot has no page {target!r}")
        self._load_page(page)
        return f"navigated to {self.current_page}"

    def _go_back(self) -> str:
        if not self.history:
            return "already at the first page; nothing to go back to"
        page = self.history.pop()
        self._load_page(page, push_history=False)
        return f"went back to {self.current_page}"

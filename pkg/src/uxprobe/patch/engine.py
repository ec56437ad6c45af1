"""Deterministic DOM patch engine for HTML snapshots.

Targets resolve marker-comments first, then CSS selector (unique match
required), then exact source snippet. Patches apply querySelector-style
(first match in document order) and a patchset is atomic: the first failing
patch aborts the whole set and the caller gets the original input back
byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from uxprobe.errors import PatchError, SchemaViolation, SelectorError
from uxprobe.patch import dom
from uxprobe.patch.dom import Comment, Document, Element, Text
from uxprobe.patch.selectors import select_all, select_first

ALLOWED_ACTIONS = (
    "replace_text",
    "set_attribute",
    "remove_attribute",
    "add_class",
    "remove_class",
    "insert_before",
    "insert_after",
    "replace_element",
    "remove_element",
    "append_child",
    "inject_style",
)

ATTRIBUTE_ACTIONS = ("set_attribute", "remove_attribute")

MARKER_START = "TARGET-START"
MARKER_END = "TARGET-END"

# Marker attribute on the single engine-owned <style> element.
STYLE_MARKER_ATTR = "data-uxprobe"

PATCHSET_STATUSES = ("ok", "ambiguous", "impossible")


@dataclass
class Target:
    """Exactly one of css_selector / markers / snippet identifies the element."""

    css_selector: str | None = None
    markers: bool = False
    snippet: str | None = None

    def __post_init__(self) -> None:
        populated = sum(
            [self.css_selector is not None, bool(self.markers), self.snippet is not None]
        )
        if populated != 1:
            raise ValueError("target must populate exactly one variant")


@dataclass
class Ambiguous:
    count: int


@dataclass
class NotFound:
    pass


@dataclass
class Resolved:
    document: Document
    element: Element


@dataclass
class Patch:
    selector: str
    action: str
    value: str = ""
    rationale: str = ""
    name: str | None = None

    def validate(self) -> None:
        if self.action not in ALLOWED_ACTIONS:
            raise SchemaViolation(f"unknown patch action {self.action!r}")
        if self.action in ATTRIBUTE_ACTIONS and not self.name:
            raise SchemaViolation(f"{self.action} requires a 'name' key")
        if self.action not in ATTRIBUTE_ACTIONS and self.name is not None:
            raise SchemaViolation(f"'name' is only valid for attribute actions, got {self.action}")

    def to_json_dict(self) -> dict:
        payload = {
            "selector": self.selector,
            "action": self.action,
            "value": self.value,
            "rationale": self.rationale,
        }
        if self.name is not None:
            payload["name"] = self.name
        return payload


@dataclass
class PatchSet:
    status: str
    patches: list[Patch] = field(default_factory=list)
    notes: str = ""

    def validate(self) -> None:
        if self.status not in PATCHSET_STATUSES:
            raise SchemaViolation(f"unknown patchset status {self.status!r}")
        if self.status == "ok" and not self.patches:
            raise SchemaViolation("status 'ok' requires a non-empty patch list")
        if self.status != "ok" and self.patches:
            raise SchemaViolation(f"status {self.status!r} must carry no patches")
        for patch in self.patches:
            patch.validate()

    def to_json_dict(self) -> dict:
        return {
            "status": self.status,
            "patches": [p.to_json_dict() for p in self.patches],
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def parse_patchset(payload: str | dict) -> PatchSet:
    """Parse and validate the patchset JSON contract."""
    if isinstance(payload, str):
        try:
            payload = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"patchset is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaViolation("patchset must be a JSON object")
    status = payload.get("status")
    raw_patches = payload.get("patches", [])
    if not isinstance(raw_patches, list):
        raise SchemaViolation("'patches' must be an array")
    patches = []
    for i, raw in enumerate(raw_patches, start=1):
        if not isinstance(raw, dict):
            raise SchemaViolation(f"patch #{i} must be an object")
        unknown = set(raw) - {"selector", "action", "value", "rationale", "name"}
        if unknown:
            raise SchemaViolation(f"patch #{i} has unknown keys: {sorted(unknown)}")
        if "selector" not in raw or "action" not in raw:
            raise SchemaViolation(f"patch #{i} needs 'selector' and 'action'")
        patches.append(
            Patch(
                selector=str(raw["selector"]),
                action=str(raw["action"]),
                value=str(raw.get("value", "")),
                rationale=str(raw.get("rationale", "")),
                name=raw.get("name"),
            )
        )
    patchset = PatchSet(
        status=str(status), patches=patches, notes=str(payload.get("notes", ""))
    )
    patchset.validate()
    return patchset


def _marker_element(document: Document) -> Element | None:
    """First element strictly between the TARGET-START / TARGET-END comments."""
    order = list(dom.walk(document))
    start = end = None
    for i, node in enumerate(order):
        if isinstance(node, Comment):
            data = node.data.strip()
            if data == MARKER_START and start is None:
                start = i
            elif data == MARKER_END and start is not None and end is None:
                end = i
    if start is None or end is None:
        return None
    for node in order[start + 1 : end]:
        if isinstance(node, Element):
            return node
    return None


def resolve_target(html: str, target: Target) -> Resolved | Ambiguous | NotFound:
    """Resolve an edit target against a snapshot.

    Marker comments in the document always win. A CSS selector must match
    exactly one element; multiple matches come back as Ambiguous with the
    match count. A snippet must occur in the source verbatim at an element
    start. SelectorError propagates for invalid selector syntax.
    """
    document = dom.parse_html(html)

    marked = _marker_element(document)
    if marked is not None:
        return Resolved(document, marked)

    if target.css_selector is not None:
        matches = select_all(document, target.css_selector)
        if len(matches) == 1:
            return Resolved(document, matches[0])
        if len(matches) > 1:
            return Ambiguous(len(matches))
        return NotFound()

    if target.snippet is not None:
        offsets = []
        start = html.find(target.snippet)
        while start != -1:
            offsets.append(start)
            start = html.find(target.snippet, start + 1)
        elements = [
            e
            for e in dom.iter_elements(document)
            if e.source_start is not None and e.source_start in offsets
        ]
        if len(elements) == 1:
            return Resolved(document, elements[0])
        if len(elements) > 1:
            return Ambiguous(len(elements))
        return NotFound()

    return NotFound()


def _require_parent(element: Element) -> tuple[Element | Document, int]:
    parent = element.parent
    if parent is None:
        raise PatchError("element has no parent; structural edit impossible")
    index = parent.children.index(element)
    return parent, index


def _parse_fragment_nodes(value: str) -> list[dom.Node]:
    nodes = dom.parse_fragment(value)
    if not nodes:
        raise PatchError("patch value is not a parseable HTML fragment")
    return nodes


def _splice(parent: Element | Document, index: int, nodes: list[dom.Node]) -> None:
    for node in nodes:
        node.parent = parent  # type: ignore[assignment]
    parent.children[index:index] = nodes


def _engine_style(document: Document) -> Element | None:
    return select_first(document, f"style[{STYLE_MARKER_ATTR}]")


def _apply_to_document(document: Document, patch: Patch) -> str:
    """Mutate the document per one patch; returns a short applied-log line."""
    patch.validate()
    action = patch.action

    if action == "inject_style":
        if not patch.value:
            raise PatchError("inject_style requires CSS rules in 'value'")
        existing = _engine_style(document)
        if existing is not None:
            existing.append(Text("\n" + patch.value))
            return f"inject_style: appended rules to engine style block"
        style = Element("style", [[STYLE_MARKER_ATTR, "styles"]])
        style.append(Text(patch.value))
        head = select_first(document, "head")
        if head is not None:
            head.append(style)
        elif document.root is not None:
            document.root.children.insert(0, style)
            style.parent = document.root
        else:
            document.append(style)
        return "inject_style: created engine style block"

    try:
        element = select_first(document, patch.selector)
    except SelectorError as exc:
        raise PatchError(f"invalid selector {patch.selector!r}: {exc}") from exc
    if element is None:
        raise PatchError(f"no element matches selector {patch.selector!r}")

    if action == "replace_text":
        text = Text.from_plain(patch.value)
        text.parent = element
        element.children = [text]
        return f'replace_text {patch.selector}: text set to {patch.value!r}'

    if action == "set_attribute":
        element.set_attr(patch.name, patch.value)  # type: ignore[arg-type]
        return f"set_attribute {patch.selector}: {patch.name}={patch.value!r}"

    if action == "remove_attribute":
        element.remove_attr(patch.name)  # type: ignore[arg-type]
        return f"remove_attribute {patch.selector}: {patch.name}"

    if action == "add_class":
        if not patch.value.strip():
            raise PatchError("add_class requires a class name in 'value'")
        tokens = element.class_tokens()
        for token in patch.value.split():
            if token not in tokens:
                tokens.append(token)
        element.set_class_tokens(tokens)
        return f"add_class {patch.selector}: +{patch.value}"

    if action == "remove_class":
        if not patch.value.strip():
            raise PatchError("remove_class requires a class name in 'value'")
        remove = set(patch.value.split())
        element.set_class_tokens([t for t in element.class_tokens() if t not in remove])
        return f"remove_class {patch.selector}: -{patch.value}"

    if action == "insert_before":
        parent, index = _require_parent(element)
        _splice(parent, index, _parse_fragment_nodes(patch.value))
        return f"insert_before {patch.selector}"

    if action == "insert_after":
        parent, index = _require_parent(element)
        _splice(parent, index + 1, _parse_fragment_nodes(patch.value))
        return f"insert_after {patch.selector}"

    if action == "replace_element":
        parent, index = _require_parent(element)
        nodes = _parse_fragment_nodes(patch.value)
        parent.children.pop(index)
        _splice(parent, index, nodes)
        return f"replace_element {patch.selector}"

    if action == "remove_element":
        parent, index = _require_parent(element)
        parent.children.pop(index)
        return f"remove_element {patch.selector}"

    if action == "append_child":
        nodes = _parse_fragment_nodes(patch.value)
        for node in nodes:
            element.append(node)
        return f"append_child {patch.selector}"

    raise PatchError(f"unknown action {action!r}")  # pragma: no cover


def apply_patch(html: str, patch: Patch) -> str:
    """Apply one patch to a snapshot; raises PatchError leaving input be."""
    document = dom.parse_html(html)
    try:
        _apply_to_document(document, patch)
    except SchemaViolation as exc:
        raise PatchError(str(exc)) from exc
    return dom.serialize(document)


@dataclass
class PatchResult:
    status: str
    html: str
    applied: list[str]
    diff_summary: str
    failing_index: int | None = None
    error: str | None = None


def apply_patchset(html: str, patchset: PatchSet) -> PatchResult:
    """Apply a whole patchset atomically against the evolving document.

    Any patch failure aborts and returns the original input byte-identical
    with status "impossible" and the failing 1-based patch index.
    """
    patchset.validate()
    if patchset.status != "ok":
        raise PatchError(f"patchset status {patchset.status!r} is not applicable")

    document = dom.parse_html(html)
    applied: list[str] = []
    for i, patch in enumerate(patchset.patches, start=1):
        try:
            applied.append(_apply_to_document(document, patch))
        except (PatchError, SchemaViolation) as exc:
            return PatchResult(
                status="impossible",
                html=html,
                applied=[],
                diff_summary=f"aborted: patch {i} failed ({exc})",
                failing_index=i,
                error=str(exc),
            )
    summary_lines = [f"{i}. {line}" for i, line in enumerate(applied, start=1)]
    return PatchResult(
        status="ok",
        html=dom.serialize(document),
        applied=applied,
        diff_summary="\n".join(summary_lines),
    )

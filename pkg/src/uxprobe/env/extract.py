"""Interactive-element extraction from a page's HTML.

The rule for what counts as interactive is deliberately minimal and fixed:
anchors carrying href, buttons, inputs, selects, textareas, and any element
with an onclick attribute. Elements are indexed from 1 in document order and
each carries a CSS selector that resolves uniquely against the same HTML.
"""

from __future__ import annotations

import re

from uxprobe.env.state import ElementInfo, role_for
from uxprobe.patch import dom

_WS = re.compile(r"\s+")


def is_interactive(element: dom.Element) -> bool:
    tag = element.tag
    if tag == "a":
        return element.has_attr("href")
    if tag in ("button", "input", "select", "textarea"):
        return True
    return element.has_attr("onclick")


def visible_text(element: dom.Element) -> str:
    text = _WS.sub(" ", element.text_content()).strip()
    if text:
        return text
    for attr in ("value", "placeholder", "aria-label", "alt", "title"):
        fallback = element.get(attr)
        if fallback:
            return _WS.sub(" ", fallback).strip()
    return ""


def extract_elements(document: dom.Document) -> dict[int, ElementInfo]:
    """Indexed map of interactive elements (contiguous from 1)."""
    elements: dict[int, ElementInfo] = {}
    index = 1
    for element in dom.iter_elements(document):
        if not is_interactive(element):
            continue
        attrs = {name: (value or "") for name, value in element.attrs}
        info = ElementInfo(
            selector=dom.unique_selector(document, element),
            tag=element.tag,
            role=role_for(element.tag, attrs),
            text=visible_text(element),
            href=element.get("href") if element.tag == "a" else None,
            value=element.get("value") if element.tag in ("input", "textarea") else None,
            classes=element.class_tokens(),
        )
        elements[index] = info
        index += 1
    return elements


def interactive_nodes(document: dom.Document) -> dict[int, dom.Element]:
    """DOM nodes behind each element-map index (same walk, same indices)."""
    nodes: dict[int, dom.Element] = {}
    index = 1
    for element in dom.iter_elements(document):
        if is_interactive(element):
            nodes[index] = element
            index += 1
    return nodes


def page_title(document: dom.Document) -> str:
    for element in dom.iter_elements(document):
        if element.tag == "title":
            return _WS.sub(" ", element.text_content()).strip()
    return ""

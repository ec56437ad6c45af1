"""Minimal mutable DOM over stdlib html.parser.

Built for byte-stable re-serialization: text and entity references are kept
verbatim as parsed, attribute order is preserved, void elements are
normalized to their bare form (`<br>`). Tag and attribute names are
lowercased by the parser; attribute values are re-quoted with double quotes.
These are the documented normalizations - everything else round-trips
byte-identically.
"""

from __future__ import annotations

import html as html_lib
from html.parser import HTMLParser

VOID_ELEMENTS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

# Content of these elements is raw text (no entity escaping on output).
RAW_TEXT_ELEMENTS = {"script", "style"}


def escape_text(value: str) -> str:
    """Escape plain text for insertion as markup text content."""
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def escape_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace('"', "&quot;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
    )


class Node:
    __slots__ = ("parent",)

    def __init__(self) -> None:
        self.parent: Element | Document | None = None


class Text(Node):
    """Text content stored in its serialized (markup) form."""

    __slots__ = ("raw",)

    def __init__(self, raw: str) -> None:
        super().__init__()
        self.raw = raw

    @classmethod
    def from_plain(cls, value: str) -> "Text":
        return cls(escape_text(value))

    @property
    def text(self) -> str:
        """Unescaped text value."""
        return html_lib.unescape(self.raw)

    def __repr__(self) -> str:
        return f"Text({self.raw!r})"


class Comment(Node):
    __slots__ = ("data",)

    def __init__(self, data: str) -> None:
        super().__init__()
        self.data = data

    def __repr__(self) -> str:
        return f"Comment({self.data!r})"


class Raw(Node):
    """Declarations, doctypes, processing instructions: emitted verbatim."""

    __slots__ = ("raw",)

    def __init__(self, raw: str) -> None:
        super().__init__()
        self.raw = raw


class Element(Node):
    __slots__ = ("tag", "attrs", "children", "source_start")

    def __init__(self, tag: str, attrs: list[list[str | None]] | None = None) -> None:
        super().__init__()
        self.tag = tag
        # Ordered [name, value] pairs; value None means a bare attribute.
        self.attrs: list[list[str | None]] = attrs if attrs is not None else []
        self.children: list[Node] = []
        self.source_start: int | None = None

    # -- attribute helpers ------------------------------------------------

    def get(self, name: str, default: str | None = None) -> str | None:
        for key, value in self.attrs:
            if key == name:
                return value if value is not None else ""
        return default

    def has_attr(self, name: str) -> bool:
        return any(key == name for key, _ in self.attrs)

    def set_attr(self, name: str, value: str) -> None:
        for pair in self.attrs:
            if pair[0] == name:
                pair[1] = value
                return
        self.attrs.append([name, value])

    def remove_attr(self, name: str) -> bool:
        for i, (key, _) in enumerate(self.attrs):
            if key == name:
                del self.attrs[i]
                return True
        return False

    def class_tokens(self) -> list[str]:
        value = self.get("class")
        return value.split() if value else []

    def set_class_tokens(self, tokens: list[str]) -> None:
        if tokens:
            self.set_attr("class", " ".join(tokens))
        else:
            self.remove_attr("class")

    # -- tree helpers ------------------------------------------------------

    def append(self, node: Node) -> None:
        node.parent = self
        self.children.append(node)

    def element_children(self) -> list["Element"]:
        return [c for c in self.children if isinstance(c, Element)]

    def text_content(self) -> str:
        """Concatenated descendant text, entities unescaped, raw text skipped."""
        parts: list[str] = []
        for node in walk(self):
            if isinstance(node, Text):
                holder = node.parent
                if isinstance(holder, Element) and holder.tag in RAW_TEXT_ELEMENTS:
                    continue
                parts.append(node.text)
        return "".join(parts)

    def __repr__(self) -> str:
        return f"Element(<{self.tag}> attrs={self.attrs})"


class Document:
    """Root container; children are top-level nodes (doctype, html, ...)."""

    def __init__(self) -> None:
        self.children: list[Node] = []
        self.parent = None

    def append(self, node: Node) -> None:
        node.parent = self  # type: ignore[assignment]
        self.children.append(node)

    def element_children(self) -> list[Element]:
        return [c for c in self.children if isinstance(c, Element)]

    @property
    def root(self) -> Element | None:
        for child in self.children:
            if isinstance(child, Element):
                return child
        return None


def walk(node: Element | Document):
    """Yield descendants of ``node`` in document order (node excluded)."""
    stack = list(reversed(node.children))
    while stack:
        current = stack.pop()
        yield current
        if isinstance(current, Element):
            stack.extend(reversed(current.children))


def iter_elements(node: Element | Document):
    for child in walk(node):
        if isinstance(child, Element):
            yield child


class _TreeBuilder(HTMLParser):
    def __init__(self, source: str) -> None:
        super().__init__(convert_charrefs=False)
        self.document = Document()
        self._stack: list[Element] = []
        self._line_offsets = _line_offsets(source)

    # current insertion point
    def _top(self) -> Element | Document:
        return self._stack[-1] if self._stack else self.document

    def _absolute_pos(self) -> int:
        line, col = self.getpos()
        return self._line_offsets[line - 1] + col

    def handle_starttag(self, tag, attrs):
        element = Element(tag, [list(pair) for pair in attrs])
        element.source_start = self._absolute_pos()
        self._top().append(element)
        if tag not in VOID_ELEMENTS:
            self._stack.append(element)

    def handle_startendtag(self, tag, attrs):
        element = Element(tag, [list(pair) for pair in attrs])
        element.source_start = self._absolute_pos()
        self._top().append(element)

    def handle_endtag(self, tag):
        # Tolerant close: pop to the nearest matching open element, else ignore.
        for i in range(len(self._stack) - 1, -1, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                return

    def handle_data(self, data):
        self._top().append(Text(data))

    def handle_entityref(self, name):
        self._top().append(Text(f"&{name};"))

    def handle_charref(self, name):
        self._top().append(Text(f"&#{name};"))

    def handle_comment(self, data):
        self._top().append(Comment(data))

    def handle_decl(self, decl):
        self._top().append(Raw(f"<!{decl}>"))

    def unknown_decl(self, data):
        self._top().append(Raw(f"<![{data}]>"))

    def handle_pi(self, data):
        self._top().append(Raw(f"<?{data}>"))


def _line_offsets(source: str) -> list[int]:
    offsets = [0]
    for i, ch in enumerate(source):
        if ch == "\n":
            offsets.append(i + 1)
    return offsets


def parse_html(source: str) -> Document:
    """Parse HTML tolerantly into a Document tree."""
    builder = _TreeBuilder(source)
    builder.feed(source)
    builder.close()
    return builder.document


def parse_fragment(source: str) -> list[Node]:
    """Parse an HTML fragment; returns its top-level nodes (detached)."""
    doc = parse_html(source)
    nodes = list(doc.children)
    for node in nodes:
        node.parent = None
    return nodes


def _serialize_node(node: Node, out: list[str]) -> None:
    if isinstance(node, Text):
        out.append(node.raw)
    elif isinstance(node, Comment):
        out.append(f"<!--{node.data}-->")
    elif isinstance(node, Raw):
        out.append(node.raw)
    elif isinstance(node, Element):
        out.append(f"<{node.tag}")
        for name, value in node.attrs:
            if value is None:
                out.append(f" {name}")
            else:
                out.append(f' {name}="{escape_attr(value)}"')
        out.append(">")
        if node.tag in VOID_ELEMENTS:
            return
        for child in node.children:
            _serialize_node(child, out)
        out.append(f"</{node.tag}>")


def serialize(node: Node | Document) -> str:
    """Serialize a node or document under the documented normalization."""
    out: list[str] = []
    if isinstance(node, Document):
        for child in node.children:
            _serialize_node(child, out)
    else:
        _serialize_node(node, out)
    return "".join(out)


def nth_child_position(element: Element) -> int:
    """1-based position among the parent's element children."""
    parent = element.parent
    siblings = parent.element_children() if parent is not None else [element]
    for i, sibling in enumerate(siblings, start=1):
        if sibling is element:
            return i
    raise ValueError("element detached from its parent")


def unique_selector(document: Document, element: Element) -> str:
    """Build a CSS selector that resolves uniquely to ``element``.

    Prefers `#id` when the id is unique and syntactically safe; otherwise
    falls back to an nth-child path from the document root.
    """
    elem_id = element.get("id")
    if elem_id and _safe_identifier(elem_id):
        matches = [e for e in iter_elements(document) if e.get("id") == elem_id]
        if len(matches) == 1:
            return f"#{elem_id}"

    segments: list[str] = []
    node: Element | None = element
    while node is not None:
        parent = node.parent
        if isinstance(parent, Document) or parent is None:
            segments.append(node.tag)
            break
        segments.append(f"{node.tag}:nth-child({nth_child_position(node)})")
        node = parent
    return " > ".join(reversed(segments))


def _safe_identifier(value: str) -> bool:
    return bool(value) and all(ch.isalnum() or ch in "-_" for ch in value)

"""Bounded CSS selector subset used by the patch engine.

Supported: type selectors, `*`, `.class`, `#id`, `[attr]`, `[attr=value]`,
descendant and child combinators, `:nth-child(k)` with a literal integer,
and comma-separated groups. Anything else (other pseudo-classes,
pseudo-elements, sibling combinators) raises SelectorError, which callers
must keep distinct from "selector matched nothing".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from uxprobe.errors import SelectorError
from uxprobe.patch.dom import Document, Element, iter_elements, nth_child_position

_IDENT = re.compile(r"[a-zA-Z0-9_-]+")
_TAG = re.compile(r"(?:[a-zA-Z][a-zA-Z0-9-]*|\*)")
_NTH = re.compile(r":nth-child\(\s*(\d+)\s*\)")


@dataclass
class Compound:
    tag: str | None = None
    ids: list[str] = field(default_factory=list)
    classes: list[str] = field(default_factory=list)
    attrs: list[tuple[str, str | None]] = field(default_factory=list)
    nth_child: int | None = None


@dataclass
class Chain:
    """Compound selectors joined by combinators, rightmost last.

    ``combinators[i]`` sits between ``compounds[i]`` and ``compounds[i+1]``
    and is either " " (descendant) or ">" (child).
    """

    compounds: list[Compound]
    combinators: list[str]


def parse_selector(selector: str) -> list[Chain]:
    """Parse a selector group; raises SelectorError on invalid syntax."""
    if not isinstance(selector, str) or not selector.strip():
        raise SelectorError("empty selector")
    chains: list[Chain] = []
    for part in _split_group(selector):
        chains.append(_parse_chain(part))
    return chains


def _split_group(selector: str) -> list[str]:
    # Commas never appear inside our supported bracket/paren contents with
    # quoting handled below.
    parts: list[str] = []
    depth = 0
    quote: str | None = None
    current: list[str] = []
    for ch in selector:
        if quote:
            current.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
            current.append(ch)
        elif ch in "[(":
            depth += 1
            current.append(ch)
        elif ch in "])":
            depth -= 1
            current.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if quote is not None or depth != 0:
        raise SelectorError(f"unbalanced selector: {selector!r}")
    parts.append("".join(current))
    if any(not p.strip() for p in parts):
        raise SelectorError(f"empty selector in group: {selector!r}")
    return parts


def _parse_chain(text: str) -> Chain:
    pos = 0
    text = text.strip()
    compounds: list[Compound] = []
    combinators: list[str] = []
    pending_combinator: str | None = None

    while pos < len(text):
        compound, pos = _parse_compound(text, pos)
        if compounds:
            combinators.append(pending_combinator or " ")
        compounds.append(compound)
        pending_combinator = None

        # find what follows: end, child combinator, or next compound
        ws = False
        while pos < len(text) and text[pos].isspace():
            pos += 1
            ws = True
        if pos >= len(text):
            break
        if text[pos] == ">":
            pending_combinator = ">"
            pos += 1
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                raise SelectorError(f"dangling combinator in {text!r}")
        elif ws:
            pending_combinator = " "
        else:
            raise SelectorError(f"unexpected {text[pos]!r} in selector {text!r}")

    if not compounds:
        raise SelectorError(f"no compound selector in {text!r}")
    return Chain(compounds, combinators)


def _parse_compound(text: str, pos: int) -> tuple[Compound, int]:
    compound = Compound()
    matched_any = False

    tag_match = _TAG.match(text, pos)
    if tag_match:
        tag = tag_match.group(0)
        compound.tag = None if tag == "*" else tag.lower()
        pos = tag_match.end()
        matched_any = True

    while pos < len(text):
        ch = text[pos]
        if ch == "#":
            ident = _IDENT.match(text, pos + 1)
            if not ident:
                raise SelectorError(f"bad id selector at {text[pos:]!r}")
            compound.ids.append(ident.group(0))
            pos = ident.end()
        elif ch == ".":
            ident = _IDENT.match(text, pos + 1)
            if not ident:
                raise SelectorError(f"bad class selector at {text[pos:]!r}")
            compound.classes.append(ident.group(0))
            pos = ident.end()
        elif ch == "[":
            name_match = _IDENT.match(text, pos + 1)
            if not name_match:
                raise SelectorError(f"bad attribute selector at {text[pos:]!r}")
            name = name_match.group(0).lower()
            pos = name_match.end()
            if pos < len(text) and text[pos] == "=":
                pos += 1
                value, pos = _parse_attr_value(text, pos)
                compound.attrs.append((name, value))
            else:
                compound.attrs.append((name, None))
            if pos >= len(text) or text[pos] != "]":
                raise SelectorError(f"unterminated attribute selector in {text!r}")
            pos += 1
        elif ch == ":":
            nth = _NTH.match(text, pos)
            if not nth:
                raise SelectorError(
                    f"unsupported pseudo-class at {text[pos:]!r} "
                    "(only :nth-child(k) is supported)"
                )
            compound.nth_child = int(nth.group(1))
            pos = nth.end()
        else:
            break
        matched_any = True

    if not matched_any:
        raise SelectorError(f"expected selector at {text[pos:]!r}")
    return compound, pos


def _parse_attr_value(text: str, pos: int) -> tuple[str, int]:
    if pos < len(text) and text[pos] in "'\"":
        quote = text[pos]
        end = text.find(quote, pos + 1)
        if end == -1:
            raise SelectorError(f"unterminated quoted value in {text!r}")
        return text[pos + 1 : end], end + 1
    end = pos
    while end < len(text) and text[end] != "]":
        end += 1
    value = text[pos:end].strip()
    if not value:
        raise SelectorError(f"missing attribute value in {text!r}")
    return value, end


def _match_compound(element: Element, compound: Compound) -> bool:
    if compound.tag is not None and element.tag != compound.tag:
        return False
    for ident in compound.ids:
        if element.get("id") != ident:
            return False
    if compound.classes:
        tokens = set(element.class_tokens())
        if not all(cls in tokens for cls in compound.classes):
            return False
    for name, value in compound.attrs:
        if not element.has_attr(name):
            return False
        if value is not None and element.get(name) != value:
            return False
    if compound.nth_child is not None:
        if nth_child_position(element) != compound.nth_child:
            return False
    return True


def _match_chain(element: Element, chain: Chain) -> bool:
    return _match_from(element, chain, len(chain.compounds) - 1)


def _match_from(element: Element, chain: Chain, index: int) -> bool:
    if not _match_compound(element, chain.compounds[index]):
        return False
    if index == 0:
        return True
    combinator = chain.combinators[index - 1]
    parent = element.parent
    if combinator == ">":
        return isinstance(parent, Element) and _match_from(parent, chain, index - 1)
    ancestor = parent
    while isinstance(ancestor, Element):
        if _match_from(ancestor, chain, index - 1):
            return True
        ancestor = ancestor.parent
    return False


def select_all(root: Document | Element, selector: str) -> list[Element]:
    """All elements matching the selector group, in document order."""
    chains = parse_selector(selector)
    matches: list[Element] = []
    for element in iter_elements(root):
        if any(_match_chain(element, chain) for chain in chains):
            matches.append(element)
    return matches


def select_first(root: Document | Element, selector: str) -> Element | None:
    """First match in document order (querySelector semantics), or None."""
    chains = parse_selector(selector)
    for element in iter_elements(root):
        if any(_match_chain(element, chain) for chain in chains):
            return element
    return None

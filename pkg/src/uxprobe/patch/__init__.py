"""HTML snapshot patching: DOM, selector subset, and the patch engine."""

from uxprobe.patch.dom import Comment, Document, Element, Text, parse_html, serialize
from uxprobe.patch.engine import (
    ALLOWED_ACTIONS,
    Ambiguous,
    NotFound,
    Patch,
    PatchResult,
    PatchSet,
    Target,
    apply_patch,
    apply_patchset,
    resolve_target,
)
from uxprobe.patch.selectors import select_all, select_first

__all__ = [
    "ALLOWED_ACTIONS",
    "Ambiguous",
    "Comment",
    "Document",
    "Element",
    "NotFound",
    "Patch",
    "PatchResult",
    "PatchSet",
    "Target",
    "Text",
    "apply_patch",
    "apply_patchset",
    "parse_html",
    "resolve_target",
    "select_all",
    "select_first",
    "serialize",
]

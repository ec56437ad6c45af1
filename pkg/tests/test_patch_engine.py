"""Patch engine: target resolution, action semantics, atomicity, goldens."""

import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from uxprobe.errors import PatchError, SchemaViolation, SelectorError
from uxprobe.patch import dom
from uxprobe.patch.engine import (
    Ambiguous,
    NotFound,
    Patch,
    PatchSet,
    Resolved,
    Target,
    apply_patch,
    apply_patchset,
    parse_patchset,
    resolve_target,
)
from uxprobe.patch.selectors import select_first

GOLDEN_DIR = Path(__file__).parent / "fixtures" / "golden"

PAGE = (
    '<html><head><title>P</title></head><body>'
    '<div class="card"><button id="buy" class="btn">Buy</button></div>'
    '<div class="card">other</div>'
    "</body></html>"
)


# -- resolve_target -----------------------------------------------------------


def test_markers_take_precedence_over_selector():
    html = (
        "<html><body>"
        '<div class="card">a</div>'
        "<!--TARGET-START--><button class=\"card\">pick me</button><!--TARGET-END-->"
        '<div class="card">b</div><div class="card">c</div><div class="card">d</div>'
        "</body></html>"
    )
    result = resolve_target(html, Target(css_selector=".card"))
    assert isinstance(result, Resolved)
    assert result.element.tag == "button"


def test_selector_requires_unique_match():
    result = resolve_target(PAGE, Target(css_selector=".card"))
    assert isinstance(result, Ambiguous)
    assert result.count == 2


def test_selector_unique_match():
    result = resolve_target(PAGE, Target(css_selector="#buy"))
    assert isinstance(result, Resolved)
    assert result.element.get("id") == "buy"


def test_selector_no_match_is_not_found():
    assert isinstance(resolve_target(PAGE, Target(css_selector="#nope")), NotFound)


def test_snippet_match():
    html = '<html><body><p>x</p><span id="x">hi</span></body></html>'
    result = resolve_target(html, Target(snippet='<span id="x">hi</span>'))
    assert isinstance(result, Resolved)
    assert result.element.tag == "span"


def test_snippet_absent():
    assert isinstance(resolve_target(PAGE, Target(snippet="<em>gone</em>")), NotFound)


def test_snippet_ambiguous():
    html = "<html><body><i>x</i><i>x</i></body></html>"
    result = resolve_target(html, Target(snippet="<i>x</i>"))
    assert isinstance(result, Ambiguous)
    assert result.count == 2


def test_invalid_selector_syntax_is_selector_error():
    with pytest.raises(SelectorError):
        resolve_target(PAGE, Target(css_selector="div:hover"))


def test_target_exactly_one_variant():
    with pytest.raises(ValueError):
        Target(css_selector=".a", snippet="<p>x</p>")
    with pytest.raises(ValueError):
        Target()


# -- apply_patch semantics ---------------------------------------------------------


def test_replace_text_touches_only_text():
    out = apply_patch(PAGE, Patch(selector="#buy", action="replace_text", value="Buy now"))
    assert '<button id="buy" class="btn">Buy now</button>' in out
    assert out.replace("Buy now", "Buy") == dom.serialize(dom.parse_html(PAGE))


def test_add_class_idempotent():
    once = apply_patch(PAGE, Patch(selector="#buy", action="add_class", value="sale"))
    twice = apply_patch(once, Patch(selector="#buy", action="add_class", value="sale"))
    assert once == twice
    assert 'class="btn sale"' in once


def test_remove_attribute_is_noop_when_absent():
    out = apply_patch(
        PAGE, Patch(selector="#buy", action="remove_attribute", name="data-x")
    )
    assert out == dom.serialize(dom.parse_html(PAGE))


def test_set_attribute_preserves_unrelated_attributes():
    out = apply_patch(
        PAGE, Patch(selector="#buy", action="set_attribute", name="aria-label", value="Buy")
    )
    element = select_first(dom.parse_html(out), "#buy")
    assert element.get("id") == "buy"
    assert element.get("class") == "btn"
    assert element.get("aria-label") == "Buy"


def test_attribute_action_requires_name():
    with pytest.raises(PatchError):
        apply_patch(PAGE, Patch(selector="#buy", action="set_attribute", value="x"))


def test_unknown_action_rejected():
    with pytest.raises(PatchError):
        apply_patch(PAGE, Patch(selector="#buy", action="swap_markup", value="x"))


def test_missing_selector_is_patch_error():
    with pytest.raises(PatchError):
        apply_patch(PAGE, Patch(selector="#missing", action="remove_element"))


def test_querySelector_semantics_first_match():
    out = apply_patch(PAGE, Patch(selector=".card", action="add_class", value="hit"))
    cards = [
        e.get("class")
        for e in dom.iter_elements(dom.parse_html(out))
        if "card" in (e.get("class") or "")
    ]
    assert cards == ["card hit", "card"]


def test_unparseable_fragment_is_patch_error():
    with pytest.raises(PatchError):
        apply_patch(PAGE, Patch(selector="#buy", action="insert_after", value=""))


def test_inject_style_appends_to_single_engine_block():
    first = apply_patch(PAGE, Patch(selector=".x", action="inject_style", value=".a{color:red}"))
    second = apply_patch(first, Patch(selector=".y", action="inject_style", value=".b{color:blue}"))
    assert second.count("<style") == 1
    assert ".a{color:red}\n.b{color:blue}" in second


def test_class_round_trip_restores_token_set():
    added = apply_patch(PAGE, Patch(selector="#buy", action="add_class", value="flash"))
    removed = apply_patch(added, Patch(selector="#buy", action="remove_class", value="flash"))
    before = set(select_first(dom.parse_html(PAGE), "#buy").class_tokens())
    after = set(select_first(dom.parse_html(removed), "#buy").class_tokens())
    assert before == after


@given(st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=4, unique=True))
def test_class_round_trip_property(tokens):
    class_attr = f' class="{" ".join(tokens)}"' if tokens else ""
    html = f"<html><body><p id=\"t\"{class_attr}>x</p></body></html>"
    added = apply_patch(html, Patch(selector="#t", action="add_class", value="zz"))
    removed = apply_patch(added, Patch(selector="#t", action="remove_class", value="zz"))
    after = set(select_first(dom.parse_html(removed), "#t").class_tokens())
    assert after == set(tokens)


# -- locality ------------------------------------------------------------------


def _without_target(html: str, selector: str) -> str:
    document = dom.parse_html(html)
    element = select_first(document, selector)
    parent = element.parent
    parent.children.remove(element)
    return dom.serialize(document)


@pytest.mark.parametrize(
    "patch",
    [
        Patch(selector="#buy", action="replace_text", value="changed"),
        Patch(selector="#buy", action="set_attribute", name="data-x", value="1"),
        Patch(selector="#buy", action="remove_attribute", name="class"),
        Patch(selector="#buy", action="add_class", value="zap"),
        Patch(selector="#buy", action="remove_class", value="btn"),
    ],
)
def test_locality_outside_target_unchanged(patch):
    out = apply_patch(PAGE, patch)
    normalized_in = dom.serialize(dom.parse_html(PAGE))
    assert _without_target(out, "#buy") == _without_target(normalized_in, "#buy")


# -- patchsets -----------------------------------------------------------------------


def test_patchset_applies_in_order():
    patchset = PatchSet(
        status="ok",
        patches=[
            Patch(selector="#buy", action="replace_text", value="Go"),
            Patch(selector="#buy", action="add_class", value="big"),
        ],
    )
    result = apply_patchset(PAGE, patchset)
    assert result.status == "ok"
    assert len(result.applied) == 2
    assert '<button id="buy" class="btn big">Go</button>' in result.html


def test_patchset_atomicity_returns_original_bytes():
    patchset = PatchSet(
        status="ok",
        patches=[
            Patch(selector="#buy", action="add_class", value="x"),
            Patch(selector="#missing", action="remove_element"),
        ],
    )
    result = apply_patchset(PAGE, patchset)
    assert result.status == "impossible"
    assert result.html == PAGE
    assert result.failing_index == 2
    assert result.applied == []


def test_empty_ok_patchset_is_contract_violation():
    with pytest.raises(SchemaViolation):
        PatchSet(status="ok", patches=[]).validate()


def test_non_ok_patchset_rejected_at_entry():
    with pytest.raises(PatchError):
        apply_patchset(PAGE, PatchSet(status="ambiguous", patches=[], notes="2 matches"))


def test_non_ok_with_patches_violates_invariant():
    with pytest.raises(SchemaViolation):
        parse_patchset(
            {
                "status": "impossible",
                "patches": [{"selector": "#x", "action": "remove_element"}],
                "notes": "",
            }
        )


def test_patchset_determinism():
    patchset = PatchSet(
        status="ok", patches=[Patch(selector="#buy", action="add_class", value="q")]
    )
    first = apply_patchset(PAGE, patchset)
    second = apply_patchset(PAGE, patchset)
    assert first.html == second.html


def test_patchset_json_round_trip_bit_exact():
    raw = {
        "status": "ok",
        "patches": [
            {"selector": "#a", "action": "replace_text", "value": "x", "rationale": "r"},
            {
                "selector": "#b",
                "action": "set_attribute",
                "value": "v",
                "rationale": "r2",
                "name": "href",
            },
        ],
        "notes": "n",
    }
    patchset = parse_patchset(raw)
    assert patchset.to_json_dict() == raw
    again = parse_patchset(patchset.to_json())
    assert again.to_json() == patchset.to_json()


def test_parse_patchset_rejects_unknown_keys_and_kinds():
    with pytest.raises(SchemaViolation):
        parse_patchset({"status": "ok", "patches": [{"selector": "#a", "action": "zap"}]})
    with pytest.raises(SchemaViolation):
        parse_patchset(
            {"status": "ok", "patches": [{"selector": "#a", "action": "replace_text", "huh": 1}]}
        )
    with pytest.raises(SchemaViolation):
        parse_patchset("not json at all")


# -- golden suite ---------------------------------------------------------------------


ALL_ACTIONS = sorted(p.name for p in GOLDEN_DIR.iterdir() if p.is_dir())


def test_golden_suite_covers_all_eleven_actions():
    from uxprobe.patch.engine import ALLOWED_ACTIONS

    assert set(ALL_ACTIONS) == set(ALLOWED_ACTIONS)


@pytest.mark.parametrize("action", ALL_ACTIONS)
def test_golden_byte_exact(action):
    folder = GOLDEN_DIR / action
    before = (folder / "before.html").read_text(encoding="utf-8")
    expected = (folder / "after.html").read_text(encoding="utf-8")
    patchset = parse_patchset(json.loads((folder / "patch.json").read_text()))
    result = apply_patchset(before, patchset)
    assert result.status == "ok"
    assert result.html == expected

"""Edit sessions, single-step replay previews, impacted-persona lookup."""

import json

import pytest

from shopfixture import FIXED_CLOCK, SHOP_DIR, decision
from uxprobe.annotate import IssueRecord
from uxprobe.env.offline import OfflineSession
from uxprobe.errors import EditError, SelectorError, UXProbeError
from uxprobe.llm import MockGateway, TranscriptEntry
from uxprobe.patch.engine import Patch, PatchSet, apply_patchset
from uxprobe.personas import config_from_dict, expand_traits
from uxprobe.refine import (
    EditSession,
    adjacent_goals,
    edit_step,
    impacted_personas,
    preview_replay,
)
from uxprobe.simulate import run_simulation
from uxprobe.store import ExperimentStore


def fenced(payload: dict) -> str:
    return "```json\n" + json.dumps(payload) + "\n```"


def ok_patchset(*patches, notes="done"):
    return {
        "status": "ok",
        "patches": list(patches),
        "notes": notes,
    }


BASE_HTML = (
    '<html><head><title>E</title></head><body>'
    '<h1 id="title">Old Title</h1><p id="body">text</p>'
    "</body></html>"
)


def make_session(tmp_path):
    config = config_from_dict(
        {"site": str(SHOP_DIR), "goals": [{"id": "g", "text": "t"}]}
    )
    store = ExperimentStore.create(tmp_path / "exp", "exp", config)
    ref = store.put_blob(BASE_HTML)
    return EditSession(store=store, base_snapshot_ref=ref), store


# -- edit sessions -----------------------------------------------------------


def test_edit_step_applies_and_grows_history(tmp_path):
    session, store = make_session(tmp_path)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "*",
                fenced(
                    ok_patchset(
                        {"selector": "#title", "action": "replace_text", "value": "New Title", "rationale": "r"}
                    )
                ),
            )
        ]
    )
    patchset, message = edit_step(session, "rename the title", gateway)
    assert patchset.status == "ok"
    assert "applied 1 patch" in message
    assert len(session.history) == 1
    assert session.cursor == 1
    new_html = session.current_html()
    assert "New Title" in new_html
    # only that text changed
    assert new_html.replace("New Title", "Old Title") == store.get_html(session.base_snapshot_ref)
    # the request carried the current snapshot and the instruction
    sent = json.loads(gateway.calls[0].messages[-1].text)
    assert sent["request"] == "rename the title"
    assert sent["html"] == BASE_HTML


def test_ambiguous_response_leaves_history_unchanged(tmp_path):
    session, _store = make_session(tmp_path)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "*",
                fenced({"status": "ambiguous", "patches": [], "notes": "two candidates match"}),
            )
        ]
    )
    patchset, message = edit_step(session, "make the card pop", gateway)
    assert patchset.status == "ambiguous"
    assert message == "two candidates match"
    assert session.history == []
    assert session.current_ref == session.base_snapshot_ref


def test_revert_restores_prior_snapshot_byte_equal(tmp_path):
    session, store = make_session(tmp_path)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "rename",
                fenced(ok_patchset({"selector": "#title", "action": "replace_text", "value": "A", "rationale": ""})),
            ),
            TranscriptEntry(
                "recolor",
                fenced(ok_patchset({"selector": "#body", "action": "add_class", "value": "hot", "rationale": ""})),
            ),
        ]
    )
    edit_step(session, "rename the title", gateway)
    after_first = session.current_html()
    edit_step(session, "recolor the body", gateway)
    assert session.cursor == 2
    session.revert(1)
    assert session.current_html() == after_first
    session.revert(0)
    assert session.current_html() == store.get_html(session.base_snapshot_ref)


def test_history_is_pure_replay(tmp_path):
    session, _store = make_session(tmp_path)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "rename",
                fenced(ok_patchset({"selector": "#title", "action": "replace_text", "value": "A", "rationale": ""})),
            ),
            TranscriptEntry(
                "class",
                fenced(ok_patchset({"selector": "#body", "action": "add_class", "value": "x", "rationale": ""})),
            ),
        ]
    )
    edit_step(session, "rename it", gateway)
    edit_step(session, "class it", gateway)
    for cursor in (0, 1, 2):
        assert session.replay(cursor) == (
            session.store.get_html(session.base_snapshot_ref)
            if cursor == 0
            else session.store.get_html(session.history[cursor - 1].snapshot_ref)
        )


def test_edit_after_revert_truncates_tail(tmp_path):
    session, _store = make_session(tmp_path)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "one",
                fenced(ok_patchset({"selector": "#title", "action": "replace_text", "value": "1", "rationale": ""})),
            ),
            TranscriptEntry(
                "two",
                fenced(ok_patchset({"selector": "#title", "action": "replace_text", "value": "2", "rationale": ""})),
            ),
            TranscriptEntry(
                "three",
                fenced(ok_patchset({"selector": "#title", "action": "replace_text", "value": "3", "rationale": ""})),
            ),
        ]
    )
    edit_step(session, "one", gateway)
    edit_step(session, "two", gateway)
    session.revert(1)
    edit_step(session, "three", gateway)
    assert len(session.history) == 2
    assert ">3<" in session.current_html()


def test_malformed_patchset_reprompts_then_errors(tmp_path):
    session, _store = make_session(tmp_path)
    gateway = MockGateway(transcript=[TranscriptEntry("*", "not a patchset")])
    with pytest.raises(EditError):
        edit_step(session, "do something", gateway)
    assert len(gateway.calls) == 2
    assert "not a valid patchset" in gateway.calls[1].messages[-1].text


def test_engine_failure_surfaces_without_history_change(tmp_path):
    session, _store = make_session(tmp_path)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "*",
                fenced(ok_patchset({"selector": "#ghost", "action": "remove_element", "value": "", "rationale": ""})),
            )
        ]
    )
    patchset, message = edit_step(session, "remove the ghost", gateway)
    assert patchset.status == "ok"
    assert "could not be applied" in message
    assert session.history == []


# -- preview replay -----------------------------------------------------------------


def build_preview_fixture(tmp_path):
    """One run on the fixture shop whose step 2 scrolls past the
    disabled-looking Add to Cart button; the issue is recorded at step 2."""
    config = config_from_dict(
        {
            "site": str(SHOP_DIR),
            "site_name": "Cascada Tees",
            "dimensions": [{"name": "Price Sensitivity", "values": ["budget"]}],
            "goals": [{"id": "g-buy", "text": "Buy the classic tee"}],
        }
    )
    store = ExperimentStore.create(tmp_path / "exp", "exp", config)
    persona = expand_traits(config)[0]
    goal = config.goals[0]
    store.add_runs(
        [
            {
                "run_id": f"{persona.id}--{goal.id}",
                "persona_id": persona.id,
                "goal_id": goal.id,
                "traits": persona.trait_map,
                "replica_index": 1,
            }
        ]
    )
    sim = MockGateway(
        transcript=[
            TranscriptEntry(
                "URL: index.html",
                decision("open product", "going to the product page",
                         {"kind": "navigate", "payload": "product-classic.html"}),
            ),
            TranscriptEntry(
                "SCROLL_OFFSET: 0",
                decision(
                    "find a usable buy button",
                    "The Add to Cart button looks disabled, so I scroll to find "
                    "another way to buy.",
                    {"kind": "scroll", "payload": "+300"},
                ),
            ),
            TranscriptEntry(
                "SCROLL_OFFSET: 300",
                decision("give up", "no other way to buy", {"kind": "done", "success_flag": False}),
            ),
        ]
    )
    session = OfflineSession(SHOP_DIR)
    trace = run_simulation(config, persona, goal, session, sim, store, clock=FIXED_CLOCK)
    assert [s.step for s in trace.steps] == [1, 2, 3]

    issue = IssueRecord(
        type="add_to_cart_looks_disabled",
        element="#add-to-cart",
        reason="Button appears inactive but still works",
        fix="Update button style and fix accessibility",
        upt_codes=["C2"],
        upt_explanation="Affordance suggests the control cannot be used",
        issue_severity=4,
        run_id=trace.run_id,
        step=2,
        ordinal=0,
    )
    return store, trace, issue


def patched_snapshot_ref(store, trace):
    """Apply the style fix to the issue step's snapshot."""
    original_ref = trace.steps[1].raw_html_ref
    html = store.get_html(original_ref)
    result = apply_patchset(
        html,
        PatchSet(
            status="ok",
            patches=[
                Patch(selector="#add-to-cart", action="remove_class", value="btn-disabled"),
                Patch(selector="#add-to-cart", action="add_class", value="btn-primary"),
                Patch(selector="#add-to-cart", action="inject_style",
                      value=".btn-primary{background:#0a7;color:#fff}"),
            ],
        ),
    )
    assert result.status == "ok"
    return store.put_blob(result.html), original_ref


def preview_gateway(add_to_cart_index):
    return MockGateway(
        transcript=[
            TranscriptEntry(
                '"original_action"',
                fenced({"resolved": True, "summary": "The button now reads as active."}),
            ),
            TranscriptEntry(
                "<a.btn.btn-primary>",
                decision("buy it", "the button is clearly active now",
                         {"kind": "click", "target_index": add_to_cart_index}),
            ),
            TranscriptEntry(
                "*",
                decision(
                    "find a usable buy button",
                    "The Add to Cart button looks disabled, so I scroll to find "
                    "another way to buy.",
                    {"kind": "scroll", "payload": "+300"},
                ),
            ),
        ]
    )


def add_to_cart_index_for(store, ref):
    from uxprobe.refine import observe_snapshot

    state = observe_snapshot(store.get_html(ref), "product-classic.html")
    return next(
        i for i in sorted(state.elements) if state.elements[i].selector == "#add-to-cart"
    )


def test_preview_unmodified_snapshot_reproduces_action(tmp_path):
    store, trace, issue = build_preview_fixture(tmp_path)
    original_ref = trace.steps[1].raw_html_ref
    gateway = preview_gateway(add_to_cart_index_for(store, original_ref))
    report = preview_replay(store, issue, original_ref, gateway)
    assert report.action_changed is False
    assert report.new_action == trace.steps[1].action
    assert report.issue_resolved is True  # judgment is independent of the replay


def test_preview_patched_snapshot_changes_action(tmp_path):
    store, trace, issue = build_preview_fixture(tmp_path)
    new_ref, _original = patched_snapshot_ref(store, trace)
    gateway = preview_gateway(add_to_cart_index_for(store, new_ref))
    report = preview_replay(store, issue, new_ref, gateway)
    assert report.action_changed is True
    assert report.new_action.kind == "click"
    assert report.original_action.kind == "scroll"
    assert report.issue_resolved is True
    assert report.summary == "The button now reads as active."


def test_preview_issues_two_separate_decoupled_calls(tmp_path):
    store, trace, issue = build_preview_fixture(tmp_path)
    new_ref, _original = patched_snapshot_ref(store, trace)
    gateway = preview_gateway(add_to_cart_index_for(store, new_ref))
    preview_replay(store, issue, new_ref, gateway)
    assert len(gateway.calls) == 2
    replay_call, judgment_call = gateway.calls
    assert replay_call.tag == "refinement"
    assert judgment_call.tag == "refinement"
    # decoupling: the judgment transcript never carries the replay completion
    replay_completion = decision(
        "buy it", "the button is clearly active now",
        {"kind": "click", "target_index": add_to_cart_index_for(store, new_ref)},
    )
    for message in judgment_call.messages:
        assert replay_completion not in message.text
    # but it does carry the parsed actions as structured data
    payload = json.loads(judgment_call.messages[-1].text)
    assert payload["original_action"] == {"kind": "scroll", "payload": "+300"}
    assert payload["new_action"]["kind"] == "click"
    assert "element_before" in payload and "element_after" in payload
    assert "btn-disabled" in payload["element_before"]
    assert "btn-primary" in payload["element_after"]


def test_preview_fields_are_independent(tmp_path):
    store, trace, issue = build_preview_fixture(tmp_path)
    new_ref, _original = patched_snapshot_ref(store, trace)
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                '"original_action"',
                fenced({"resolved": False, "summary": "Still confusing."}),
            ),
            TranscriptEntry(
                "<a.btn.btn-primary>",
                decision("buy it", "active now", {"kind": "click",
                         "target_index": add_to_cart_index_for(store, new_ref)}),
            ),
        ]
    )
    report = preview_replay(store, issue, new_ref, gateway)
    assert report.action_changed is True
    assert report.issue_resolved is False


def test_preview_requires_recorded_step(tmp_path):
    store, _trace, issue = build_preview_fixture(tmp_path)
    issue.step = 99
    ref = store.put_blob("<html><body></body></html>")
    with pytest.raises(Exception, match="no step event"):
        preview_replay(store, issue, ref, MockGateway())


# -- impacted personas ---------------------------------------------------------------


def build_impact_fixture(tmp_path):
    """3 personas x 2 goals on the shop; two goals share tags (adjacent),
    a third goal is disjoint. Personas on g1/g2 click Shop from the landing
    page; the g3 persona never touches it."""
    config = config_from_dict(
        {
            "site": str(SHOP_DIR),
            "site_name": "Cascada Tees",
            "dimensions": [{"name": "PS", "values": ["budget", "flexible", "rich"]}],
            "goals": [
                {"id": "g1", "text": "goal one"},
                {"id": "g2", "text": "goal two"},
                {"id": "g3", "text": "goal three"},
            ],
        }
    )
    store = ExperimentStore.create(tmp_path / "exp", "exp", config)
    personas = expand_traits(config)
    shop_idx_transcript = MockGateway(
        transcript=[
            TranscriptEntry(
                "Current goal: goal three",
                decision("wrap", "done already", {"kind": "done", "success_flag": True}),
            ),
            TranscriptEntry(
                "URL: index.html",
                decision("to the shop", "see whats there",
                         {"kind": "click", "target_index": 2}),  # index 2 = Shop nav link
            ),
            TranscriptEntry(
                "URL: shop.html",
                decision("wrap", "looked around", {"kind": "done", "success_flag": True}),
            ),
        ]
    )
    assignments = []
    pairs = []
    for persona, goal in [
        (personas[0], config.goals[0]),
        (personas[1], config.goals[1]),
        (personas[2], config.goals[2]),
    ]:
        run_id = f"{persona.id}--{goal.id}"
        assignments.append(
            {
                "run_id": run_id,
                "persona_id": persona.id,
                "goal_id": goal.id,
                "traits": persona.trait_map,
                "replica_index": 1,
            }
        )
        pairs.append((persona, goal))
    store.add_runs(assignments)
    for persona, goal in pairs:
        run_simulation(
            config, persona, goal, OfflineSession(SHOP_DIR), shop_idx_transcript,
            store, clock=FIXED_CLOCK,
        )
    # tags: g1 and g2 overlap heavily; g3 disjoint
    store.save_tags(
        {
            f"{personas[0].id}--g1": [["browse shop"], ["compare prices"]],
            f"{personas[1].id}--g2": [["browse shop"], ["check sizes"]],
            f"{personas[2].id}--g3": [["read policies"]],
        }
    )
    store.save_issues({a["run_id"]: {"version": "1.0", "expected_steps": 2,
                                     "steps": [{"step": 1, "issues": []}, {"step": 2, "issues": []}]}
                       if a["goal_id"] != "g3" else
                       {"version": "1.0", "expected_steps": 1,
                        "steps": [{"step": 1, "issues": []}]}
                       for a in assignments})
    return store, personas, config


def test_impacted_personas_brute_force_oracle(tmp_path):
    store, personas, config = build_impact_fixture(tmp_path)
    # the Shop nav link on the landing page in fixture nav order is index 2
    selector = "body > nav:nth-child(2) > a:nth-child(2)"
    hits = impacted_personas(store, selector, "g1")

    # brute-force oracle: scan every step event of same/adjacent-goal runs
    from uxprobe.env.extract import interactive_nodes
    from uxprobe.patch import dom
    from uxprobe.patch.selectors import select_all

    expected = []
    for assignment in store.run_assignments():
        if assignment["goal_id"] not in ("g1", "g2"):
            continue
        for record in store.read_events(assignment["run_id"]):
            if record.get("type") != "step" or record["action"].get("target_index") is None:
                continue
            document = dom.parse_html(store.get_html(record["raw_html_ref"]))
            matches = select_all(document, selector)
            if not matches:
                continue
            node = interactive_nodes(document).get(record["action"]["target_index"])
            if node is not None and any(m is node for m in matches):
                expected.append((assignment["persona_id"], assignment["run_id"], record["step"]))
    assert hits == sorted(expected)
    assert len(hits) == 2  # g1 and g2 runs clicked it; g3 never did
    assert all(run_id.endswith(("g1", "g2")) for _p, run_id, _s in hits)


def test_impacted_personas_sorted_by_persona(tmp_path):
    store, _personas, _config = build_impact_fixture(tmp_path)
    hits = impacted_personas(store, "body > nav:nth-child(2) > a:nth-child(2)", "g1")
    assert hits == sorted(hits)


def test_selector_matching_nothing_is_empty(tmp_path):
    store, _personas, _config = build_impact_fixture(tmp_path)
    assert impacted_personas(store, "#does-not-exist", "g1") == []


def test_selector_error_propagates(tmp_path):
    store, _personas, _config = build_impact_fixture(tmp_path)
    with pytest.raises(SelectorError):
        impacted_personas(store, "a:hover", "g1")


def test_non_adjacent_goal_excluded(tmp_path):
    store, _personas, _config = build_impact_fixture(tmp_path)
    adjacent = adjacent_goals(store, "g1")
    assert adjacent == {"g1", "g2"}
    assert "g3" not in adjacent


def test_requires_annotated_experiment(tmp_path):
    config = config_from_dict({"site": str(SHOP_DIR), "goals": [{"id": "g", "text": "t"}]})
    store = ExperimentStore.create(tmp_path / "bare", "bare", config)
    with pytest.raises(UXProbeError):
        impacted_personas(store, "#x", "g")

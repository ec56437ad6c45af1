"""HTTP service over a pre-populated fixture store."""

import json
import shutil
import time

import pytest
from fastapi.testclient import TestClient

from shopfixture import build_sim_transcript, decision, e2e_config_dict
from uxprobe.analyze import ExperimentData, goal_summary_json
from uxprobe.api import create_app
from uxprobe.llm import MockGateway, TranscriptEntry


@pytest.fixture()
def client(tmp_path, pipeline_store):
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    shutil.copytree(pipeline_store.root, data_dir / "shop-e2e")
    gateway = MockGateway(
        transcript=[
            TranscriptEntry(
                "rename",
                "```json\n"
                + json.dumps(
                    {
                        "status": "ok",
                        "patches": [
                            {
                                "selector": "h1",
                                "action": "replace_text",
                                "value": "All The Tees",
                                "rationale": "clearer heading",
                            }
                        ],
                        "notes": "renamed",
                    }
                )
                + "\n```",
            ),
            TranscriptEntry(
                '"original_action"',
                "```json\n" + json.dumps({"resolved": False, "summary": "unchanged"}) + "\n```",
            ),
            TranscriptEntry(
                "*",
                decision("stay put", "same as before", {"kind": "scroll", "payload": "+300"}),
            ),
        ]
    )
    app = create_app(data_dir, gateway=gateway)
    return TestClient(app)


def test_list_experiments(client):
    body = client.get("/experiments").json()
    assert body["version"] == "1.0"
    assert [e["id"] for e in body["experiments"]] == ["shop-e2e"]
    assert body["experiments"][0]["status"] == "annotated"
    assert len(body["experiments"][0]["run_ids"]) == 16


def test_goals_endpoint_equals_analyzer_output(client, pipeline_store):
    body = client.get("/experiments/shop-e2e/goals").json()
    expected = goal_summary_json(ExperimentData.from_store(pipeline_store))
    assert body == expected


def test_traits_endpoint_modes(client):
    centric = client.get(
        "/experiments/shop-e2e/goals/g-bundles/traits", params={"mode": "trait_centric"}
    ).json()
    assert centric["mode"] == "trait_centric"
    assert any(e["key"] == "Price Sensitivity=budget" for e in centric["entries"])
    composite = client.get(
        "/experiments/shop-e2e/goals/g-bundles/traits",
        params={"mode": "composite_persona"},
    ).json()
    assert composite["mode"] == "composite_persona"
    assert len(composite["entries"]) == 8


def test_traits_unknown_goal_404_unknown_mode_422(client):
    assert client.get("/experiments/shop-e2e/goals/ghost/traits").status_code == 404
    response = client.get(
        "/experiments/shop-e2e/goals/g-bundles/traits", params={"mode": "wild"}
    )
    assert response.status_code == 422


def test_issues_endpoint_with_filters(client):
    everything = client.get("/experiments/shop-e2e/issues").json()["issues"]
    assert len(everything) == 80
    severities = [i["issue_severity"] for i in everything]
    assert severities == sorted(severities, reverse=True)
    filtered = client.get(
        "/experiments/shop-e2e/issues", params={"goal": "g-bundles"}
    ).json()["issues"]
    assert all(i["goal_id"] == "g-bundles" for i in filtered)
    trait_filtered = client.get(
        "/experiments/shop-e2e/issues", params={"trait": "Price Sensitivity=budget"}
    ).json()["issues"]
    assert len(trait_filtered) == 40


def test_unknown_experiment_404(client):
    assert client.get("/experiments/ghost/goals").status_code == 404


def test_issue_detail_and_timeline(client):
    issues = client.get("/experiments/shop-e2e/issues").json()["issues"]
    target = issues[0]
    detail = client.get(f"/issues/{target['issue_id']}").json()
    assert detail["issue"]["issue_id"] == target["issue_id"]
    assert len(detail["timeline"]) == 4
    assert any(step["is_issue_step"] for step in detail["reasoning_window"])
    assert detail["snapshot_ref"]


def test_issue_detail_unknown_404(client):
    assert client.get("/issues/nope.s1.i0").status_code == 404
    assert client.get("/issues/garbage").status_code == 404


def test_journey_endpoint_modes(client):
    page = client.get("/experiments/shop-e2e/journey", params={"mode": "page_level"}).json()
    assert page["mode"] == "page_level"
    goal = client.get("/experiments/shop-e2e/journey", params={"mode": "goal_level"}).json()
    assert goal["mode"] == "goal_level"
    assert client.get(
        "/experiments/shop-e2e/journey", params={"mode": "diagonal"}
    ).status_code == 422


def test_snapshot_fetch_and_edit_roundtrip(client):
    issues = client.get("/experiments/shop-e2e/issues").json()["issues"]
    shop_issue = next(i for i in issues if i["type"] == "sort_label_mismatch")
    detail = client.get(f"/issues/{shop_issue['issue_id']}").json()
    ref = detail["snapshot_ref"]

    snapshot = client.get(f"/snapshots/{ref}").json()
    assert "<title>Shop - Cascada Tees</title>" in snapshot["html"]

    edited = client.post(
        f"/snapshots/{ref}/edit", json={"instruction": "rename the heading"}
    ).json()
    assert edited["status"] == "ok"
    assert edited["cursor"] == 1
    assert edited["snapshot_ref"] != ref
    new_html = client.get(f"/snapshots/{edited['snapshot_ref']}").json()["html"]
    assert "All The Tees" in new_html

    reverted = client.post(
        f"/snapshots/{ref}/edit",
        json={"session_id": edited["session_id"], "revert": 0},
    ).json()
    assert reverted["snapshot_ref"] == ref
    assert client.get(f"/snapshots/{ref}").json()["html"] == snapshot["html"]


def test_edit_requires_instruction_or_revert(client):
    issues = client.get("/experiments/shop-e2e/issues").json()["issues"]
    ref = client.get(f"/issues/{issues[0]['issue_id']}").json()["snapshot_ref"]
    assert client.post(f"/snapshots/{ref}/edit", json={}).status_code == 422
    assert client.post("/snapshots/feedbeef/edit", json={"instruction": "x"}).status_code == 404


def test_direct_patchset_endpoint(client):
    issues = client.get("/experiments/shop-e2e/issues").json()["issues"]
    ref = client.get(f"/issues/{issues[0]['issue_id']}").json()["snapshot_ref"]
    ok_body = {
        "status": "ok",
        "patches": [
            {"selector": "h1", "action": "add_class", "value": "big", "rationale": "r"}
        ],
        "notes": "",
    }
    response = client.post(f"/snapshots/{ref}/patches", json=ok_body).json()
    assert response["status"] == "ok"
    assert response["snapshot_ref"] != ref


def test_ambiguous_patchset_is_422(client):
    issues = client.get("/experiments/shop-e2e/issues").json()["issues"]
    ref = client.get(f"/issues/{issues[0]['issue_id']}").json()["snapshot_ref"]
    body = {"status": "ambiguous", "patches": [], "notes": "which one?"}
    assert client.post(f"/snapshots/{ref}/patches", json=body).status_code == 422


def test_preview_endpoint_unknown_issue_404(client):
    response = client.post(
        "/issues/ghost-run.s1.i0/preview", json={"snapshot_ref": "0" * 64}
    )
    assert response.status_code == 404


def test_preview_endpoint_runs_replay(client):
    issues = client.get("/experiments/shop-e2e/issues").json()["issues"]
    b6 = next(i for i in issues if i["type"] == "add_to_cart_looks_disabled")
    detail = client.get(f"/issues/{b6['issue_id']}").json()
    report = client.post(
        f"/issues/{b6['issue_id']}/preview", json={"snapshot_ref": detail["snapshot_ref"]}
    ).json()
    assert report["action_changed"] is False
    assert report["new_action"] == {"kind": "scroll", "payload": "+300"}
    assert report["issue_resolved"] is False


def test_impacted_endpoint(client):
    body = client.get(
        "/experiments/shop-e2e/impacted",
        params={"selector": "#add-to-cart", "goal": "g-find-tee"},
    ).json()
    assert body["version"] == "1.0"
    assert isinstance(body["impacted"], list)


def test_create_and_run_experiment_async(tmp_path):
    data_dir = tmp_path / "fresh"
    gateway = MockGateway(transcript=build_sim_transcript())
    app = create_app(data_dir, gateway=gateway)
    client = TestClient(app)

    created = client.post(
        "/experiments", json={"id": "spun-up", "config": e2e_config_dict()}
    )
    assert created.status_code == 201
    assert created.json()["status"] == "created"

    started = client.post("/experiments/spun-up/run", json={"pool": 2})
    assert started.status_code == 202
    run_ids = started.json()["run_ids"]
    assert len(run_ids) == 16

    # also guard the double-run conflict while it executes or after
    deadline = time.time() + 30
    while time.time() < deadline:
        status = client.get("/experiments").json()["experiments"][0]["status"]
        if status == "complete":
            break
        time.sleep(0.05)
    assert status == "complete"
    assert client.post("/experiments/spun-up/run", json={}).status_code == 409


def test_create_experiment_validation(tmp_path):
    app = create_app(tmp_path / "v", gateway=MockGateway())
    client = TestClient(app)
    assert client.post("/experiments", json={}).status_code == 422
    bad_config = {"config": {"site": "x", "goals": []}}
    response = client.post("/experiments", json=bad_config)
    assert response.status_code == 422

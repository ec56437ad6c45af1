"""HTTP service exposing analysis, editing, and preview over a data directory.

Responses are pure views over the store: GET endpoints never mutate.
Run execution is asynchronous (run ids come back immediately, status is
polled via GET /experiments).
"""

from __future__ import annotations

import re
import threading
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from uxprobe.analyze import (
    ExperimentData,
    goal_summary_json,
    issue_json_entry,
    issue_list,
    journey_json,
    trait_breakdown,
)
from uxprobe.annotate import load_issue_records
from uxprobe.errors import (
    ConfigurationError,
    EditError,
    PatchError,
    PreviewError,
    QueryError,
    SchemaViolation,
    SelectorError,
    StorageError,
    UXProbeError,
)
from uxprobe.llm import Gateway, MockGateway
from uxprobe.patch.engine import apply_patchset, parse_patchset
from uxprobe.personas import config_from_dict
from uxprobe.refine import EditSession, edit_step, impacted_personas, preview_replay
from uxprobe.simulate import execute_runs, plan_runs
from uxprobe.store import DataRoot, ExperimentStore

_ISSUE_ID_RE = re.compile(r"^(?P<run>.+)\.s(?P<step>\d+)\.i(?P<ordinal>\d+)$")


def _experiment_payload(store: ExperimentStore) -> dict:
    manifest = store.manifest()
    return {
        "version": "1.0",
        "id": manifest["id"],
        "created_at": manifest["created_at"],
        "status": manifest["status"],
        "config": manifest["config"],
        "run_ids": [r["run_id"] for r in manifest["runs"]],
    }


def create_app(
    data_dir: str | Path,
    gateway: Gateway | None = None,
    pool_size: int = 2,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="uxprobe", version="1.0")
    root = DataRoot(data_dir)
    app.state.root = root
    app.state.gateway = gateway or MockGateway()
    app.state.edit_sessions: dict[str, EditSession] = {}
    app.state.run_threads: dict[str, threading.Thread] = {}

    @app.exception_handler(UXProbeError)
    def _handle_domain_error(request, exc: UXProbeError):
        if isinstance(exc, StorageError):
            return JSONResponse(status_code=404, content={"detail": str(exc)})
        if isinstance(
            exc, (SchemaViolation, QueryError, SelectorError, PatchError, ConfigurationError)
        ):
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        if isinstance(exc, (EditError, PreviewError)):
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    def _store(experiment_id: str) -> ExperimentStore:
        try:
            return root.store_for(experiment_id)
        except StorageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    def _find_issue(issue_id: str):
        match = _ISSUE_ID_RE.match(issue_id)
        if not match:
            raise HTTPException(status_code=404, detail=f"malformed issue id {issue_id!r}")
        run_id = match.group("run")
        for experiment_id in root.experiment_ids():
            store = root.store_for(experiment_id)
            if run_id not in store.run_ids() or not store.issues_path.exists():
                continue
            for record in load_issue_records(store):
                if record.issue_id == issue_id:
                    return store, record
        raise HTTPException(status_code=404, detail=f"unknown issue {issue_id!r}")

    # -- experiments -------------------------------------------------------

    @app.get("/experiments")
    def list_experiments():
        return {
            "version": "1.0",
            "experiments": [
                _experiment_payload(root.store_for(eid)) for eid in root.experiment_ids()
            ],
        }

    @app.post("/experiments", status_code=201)
    def create_experiment(body: dict = Body(...)):
        if "config" not in body:
            raise HTTPException(status_code=422, detail="body needs a 'config' object")
        config = config_from_dict(body["config"])
        experiment_id = body.get("id") or f"exp-{len(root.experiment_ids()) + 1}"
        try:
            store = root.create(experiment_id, config)
        except StorageError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return _experiment_payload(store)

    @app.post("/experiments/{experiment_id}/run", status_code=202)
    def start_run(experiment_id: str, body: dict = Body(default={})):
        store = _store(experiment_id)
        if store.status() == "running":
            raise HTTPException(status_code=409, detail="experiment is already running")
        if store.run_ids():
            raise HTTPException(status_code=409, detail="experiment already has runs")
        pairs = plan_runs(store)
        pool = int(body.get("pool", pool_size))

        def _execute():
            try:
                execute_runs(store, pairs, app.state.gateway, pool_size=pool)
            except Exception as exc:  # run failures are polled, not raised
                (store.root / "run_error.txt").write_text(str(exc), encoding="utf-8")

        thread = threading.Thread(target=_execute, daemon=True)
        app.state.run_threads[experiment_id] = thread
        thread.start()
        return {
            "version": "1.0",
            "experiment_id": experiment_id,
            "run_ids": [f"{p.id}--{g.id}" for p, g in pairs],
            "status": "running",
        }

    @app.get("/experiments/{experiment_id}/goals")
    def goals(experiment_id: str):
        data = ExperimentData.from_store(_store(experiment_id))
        return goal_summary_json(data)

    @app.get("/experiments/{experiment_id}/goals/{goal_id}/traits")
    def traits(experiment_id: str, goal_id: str, mode: str = Query("trait_centric")):
        store = _store(experiment_id)
        data = ExperimentData.from_store(store)
        if goal_id not in {g.id for g in data.config.goals}:
            raise HTTPException(status_code=404, detail=f"unknown goal {goal_id!r}")
        return {"version": "1.0", **trait_breakdown(data, goal_id, mode).to_json_dict()}

    @app.get("/experiments/{experiment_id}/issues")
    def issues(
        experiment_id: str,
        goal: str | None = None,
        trait: str | None = None,
        persona: str | None = None,
    ):
        data = ExperimentData.from_store(_store(experiment_id))
        filters = {
            key: value
            for key, value in (("goal", goal), ("trait", trait), ("persona", persona))
            if value is not None
        }
        records = issue_list(data, filters)
        return {
            "version": "1.0",
            "issues": [issue_json_entry(data, record) for record in records],
        }

    @app.get("/experiments/{experiment_id}/journey")
    def journey(experiment_id: str, mode: str = Query("page_level")):
        data = ExperimentData.from_store(_store(experiment_id))
        return journey_json(data, mode)

    @app.get("/experiments/{experiment_id}/impacted")
    def impacted(experiment_id: str, selector: str, goal: str):
        store = _store(experiment_id)
        entries = impacted_personas(store, selector, goal)
        return {
            "version": "1.0",
            "impacted": [
                {"persona_id": persona, "run_id": run_id, "step": step}
                for persona, run_id, step in entries
            ],
        }

    # -- issues --------------------------------------------------------------

    @app.get("/issues/{issue_id}")
    def issue_detail(issue_id: str):
        store, record = _find_issue(issue_id)
        data = ExperimentData.from_store(store)
        trace = data.traces[record.run_id]
        window = [
            {
                "step": event.step,
                "url": event.url,
                "intent": event.intent,
                "reasoning": event.reasoning,
                "action": event.action.to_json_dict(),
                "result": event.result,
                "error": event.error,
                "is_issue_step": event.step == record.step,
            }
            for event in trace.steps
            if abs(event.step - record.step) <= 2
        ]
        issue_event = next((e for e in trace.steps if e.step == record.step), None)
        timeline = [
            {
                "step": event.step,
                "url": event.url,
                "intent": event.intent,
                "action": event.action.to_json_dict(),
            }
            for event in trace.steps
        ]
        return {
            "version": "1.0",
            "issue": issue_json_entry(data, record),
            "reasoning_window": window,
            "timeline": timeline,
            "snapshot_ref": issue_event.raw_html_ref if issue_event else None,
            "screenshot_ref": issue_event.screenshot_ref if issue_event else None,
        }

    @app.post("/issues/{issue_id}/preview")
    def preview(issue_id: str, body: dict = Body(...)):
        snapshot_ref = body.get("snapshot_ref")
        if not snapshot_ref:
            raise HTTPException(status_code=422, detail="body needs 'snapshot_ref'")
        store, record = _find_issue(issue_id)
        report = preview_replay(store, record, snapshot_ref, app.state.gateway)
        return report.to_json_dict()

    # -- snapshots ------------------------------------------------------------

    @app.get("/snapshots/{ref}")
    def snapshot(ref: str):
        try:
            store, path = root.find_blob(ref)
        except StorageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"version": "1.0", "ref": ref, "html": store.get_html(ref)}

    @app.post("/snapshots/{ref}/edit")
    def edit(ref: str, body: dict = Body(...)):
        try:
            store, _ = root.find_blob(ref)
        except StorageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        session_id = body.get("session_id")
        if session_id:
            session = app.state.edit_sessions.get(session_id)
            if session is None:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        else:
            session = EditSession(store=store, base_snapshot_ref=ref)
            app.state.edit_sessions[session.session_id] = session

        if "revert" in body:
            session.revert(int(body["revert"]))
            status, message = "ok", f"reverted to history position {session.cursor}"
        elif "instruction" in body and str(body["instruction"]).strip():
            patchset, message = edit_step(session, str(body["instruction"]), app.state.gateway)
            status = patchset.status
        else:
            raise HTTPException(
                status_code=422, detail="body needs 'instruction' or 'revert'"
            )
        return {
            "version": "1.0",
            "session_id": session.session_id,
            "status": status,
            "message": message,
            "snapshot_ref": session.current_ref,
            "cursor": session.cursor,
            "history": [entry.to_json_dict() for entry in session.history],
        }

    @app.post("/snapshots/{ref}/patches")
    def patches(ref: str, body: dict = Body(...)):
        try:
            store, _ = root.find_blob(ref)
        except StorageError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        patchset = parse_patchset(body)
        if patchset.status != "ok":
            raise HTTPException(
                status_code=422, detail=f"patchset status {patchset.status!r} is not applicable"
            )
        result = apply_patchset(store.get_html(ref), patchset)
        new_ref = store.put_blob(result.html, ext="html") if result.status == "ok" else ref
        return {
            "version": "1.0",
            "status": result.status,
            "snapshot_ref": new_ref,
            "diff_summary": result.diff_summary,
            "failing_index": result.failing_index,
            "error": result.error,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

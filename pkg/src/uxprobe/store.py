"""Experiment persistence.

One directory per experiment: `manifest.json`, `runs/<run_id>/events.ndjson`
(append-only, one JSON record per line), `blobs/` (content-addressed,
write-once), `annotations/`. Greppable and diff-friendly; no database.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import threading
from collections import defaultdict
from pathlib import Path

from uxprobe.errors import IntegrityError, StorageError, UXProbeError
from uxprobe.personas import ExperimentConfig, config_from_dict, config_to_dict

STATUS_ORDER = ("created", "running", "complete", "annotated")


def utc_now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def content_ref(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def dump_json(payload: dict | list) -> str:
    """Deterministic JSON serialization for stored artifacts."""
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


class ExperimentStore:
    """Filesystem store for one experiment."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._run_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._manifest_lock = threading.Lock()

    # -- layout ------------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def blob_dir(self) -> Path:
        return self.root / "blobs"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def annotations_dir(self) -> Path:
        return self.root / "annotations"

    def events_path(self, run_id: str) -> Path:
        return self.runs_dir / run_id / "events.ndjson"

    # -- lifecycle -----------------------------------------------------------

    @classmethod
    def create(
        cls, root: str | Path, experiment_id: str, config: ExperimentConfig
    ) -> "ExperimentStore":
        store = cls(root)
        if store.manifest_path.exists():
            raise StorageError(f"experiment already exists at {store.root}")
        store.root.mkdir(parents=True, exist_ok=True)
        store.blob_dir.mkdir(exist_ok=True)
        store.runs_dir.mkdir(exist_ok=True)
        store.annotations_dir.mkdir(exist_ok=True)
        manifest = {
            "version": "1.0",
            "id": experiment_id,
            "created_at": utc_now_iso(),
            "status": "created",
            "config": config_to_dict(config),
            "runs": [],
        }
        store._write_manifest(manifest)
        return store

    def _write_manifest(self, manifest: dict) -> None:
        self.manifest_path.write_text(dump_json(manifest), encoding="utf-8")

    def manifest(self) -> dict:
        if not self.manifest_path.exists():
            raise StorageError(f"no experiment at {self.root}")
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def config(self) -> ExperimentConfig:
        return config_from_dict(self.manifest()["config"])

    @property
    def experiment_id(self) -> str:
        return self.manifest()["id"]

    def status(self) -> str:
        return self.manifest()["status"]

    def set_status(self, status: str) -> None:
        if status not in STATUS_ORDER:
            raise StorageError(f"unknown status {status!r}")
        with self._manifest_lock:
            manifest = self.manifest()
            if STATUS_ORDER.index(status) < STATUS_ORDER.index(manifest["status"]):
                raise StorageError(
                    f"status cannot move backwards ({manifest['status']} -> {status})"
                )
            manifest["status"] = status
            self._write_manifest(manifest)

    def add_runs(self, assignments: list[dict]) -> None:
        """Append run assignments ({run_id, persona_id, goal_id, traits,
        replica_index}) to the manifest. Run ids are append-only."""
        with self._manifest_lock:
            manifest = self.manifest()
            known = {r["run_id"] for r in manifest["runs"]}
            for assignment in assignments:
                if assignment["run_id"] in known:
                    raise StorageError(f"duplicate run id {assignment['run_id']}")
                manifest["runs"].append(assignment)
            self._write_manifest(manifest)

    def run_assignments(self) -> list[dict]:
        return list(self.manifest()["runs"])

    # -- blobs ---------------------------------------------------------------

    def put_blob(self, data: bytes | str, ext: str = "html") -> str:
        if isinstance(data, str):
            data = data.encode("utf-8")
        ref = content_ref(data)
        path = self.blob_dir / f"{ref}.{ext}"
        if not path.exists():
            self.blob_dir.mkdir(parents=True, exist_ok=True)
            try:
                path.write_bytes(data)
            except OSError as exc:
                raise StorageError(f"blob write failed: {exc}") from exc
        return ref

    def blob_path(self, ref: str) -> Path:
        matches = sorted(self.blob_dir.glob(f"{ref}.*"))
        if not matches:
            raise StorageError(f"unknown blob {ref}")
        return matches[0]

    def get_blob(self, ref: str) -> bytes:
        data = self.blob_path(ref).read_bytes()
        if content_ref(data) != ref:
            raise IntegrityError(f"blob {ref} failed its content-hash check")
        return data

    def get_html(self, ref: str) -> str:
        return self.get_blob(ref).decode("utf-8")

    # -- event logs ------------------------------------------------------------

    def append_event(self, run_id: str, record: dict) -> None:
        path = self.events_path(run_id)
        with self._run_locks[run_id]:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            except OSError as exc:
                raise StorageError(f"event append failed for {run_id}: {exc}") from exc

    def read_events(self, run_id: str) -> list[dict]:
        path = self.events_path(run_id)
        if not path.exists():
            return []
        records = []
        with path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def run_ids(self) -> list[str]:
        return [r["run_id"] for r in self.run_assignments()]

    # -- annotations -------------------------------------------------------------

    @property
    def tags_path(self) -> Path:
        return self.annotations_dir / "tags.json"

    @property
    def issues_path(self) -> Path:
        return self.annotations_dir / "issues.json"

    def save_tags(self, tags_by_run: dict[str, list[list[str]]], score_history=None) -> None:
        payload: dict = {"version": "1.0", "tags": {}}
        for run_id in sorted(tags_by_run):
            payload["tags"][run_id] = tags_by_run[run_id]
        if score_history is not None:
            payload["score_history"] = score_history
        self.annotations_dir.mkdir(parents=True, exist_ok=True)
        self.tags_path.write_text(dump_json(payload), encoding="utf-8")

    def load_tags(self) -> dict[str, list[list[str]]]:
        if not self.tags_path.exists():
            raise StorageError("no tags.json; run annotation first")
        return json.loads(self.tags_path.read_text(encoding="utf-8"))["tags"]

    def save_issues(self, reports_by_run: dict[str, dict]) -> None:
        payload: dict = {"version": "1.0", "reports": {}}
        for run_id in sorted(reports_by_run):
            payload["reports"][run_id] = reports_by_run[run_id]
        self.annotations_dir.mkdir(parents=True, exist_ok=True)
        self.issues_path.write_text(dump_json(payload), encoding="utf-8")

    def load_issues(self) -> dict[str, dict]:
        if not self.issues_path.exists():
            raise StorageError("no issues.json; run annotation first")
        return json.loads(self.issues_path.read_text(encoding="utf-8"))["reports"]

    def has_annotations(self) -> bool:
        return self.tags_path.exists() and self.issues_path.exists()


class DataRoot:
    """Directory holding many experiment stores (server data dir)."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def experiment_ids(self) -> list[str]:
        ids = []
        for child in sorted(self.root.iterdir()):
            if (child / "manifest.json").exists():
                ids.append(json.loads((child / "manifest.json").read_text())["id"])
        return ids

    def store_for(self, experiment_id: str) -> ExperimentStore:
        for child in sorted(self.root.iterdir()):
            manifest = child / "manifest.json"
            if manifest.exists():
                if json.loads(manifest.read_text())["id"] == experiment_id:
                    return ExperimentStore(child)
        raise StorageError(f"unknown experiment {experiment_id!r}")

    def create(self, experiment_id: str, config: ExperimentConfig) -> ExperimentStore:
        return ExperimentStore.create(self.root / experiment_id, experiment_id, config)

    def find_blob(self, ref: str) -> tuple[ExperimentStore, Path]:
        for child in sorted(self.root.iterdir()):
            store = ExperimentStore(child)
            if store.blob_dir.exists() and sorted(store.blob_dir.glob(f"{ref}.*")):
                return store, store.blob_path(ref)
        raise StorageError(f"unknown blob {ref}")


def load_experiment(path: str | Path) -> ExperimentStore:
    store = ExperimentStore(path)
    if not store.manifest_path.exists():
        raise UXProbeError(f"{path} is not an experiment directory")
    return store

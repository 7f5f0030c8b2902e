"""HTTP API over a directory store of instances and runs.

Instances are content-addressed (the id is a digest of the canonical
document) and runs are append-only files; GET /runs/{id} serves the
stored bytes untouched, so a finished run re-reads identically across
service restarts.  Solves execute on a bounded worker pool; run ids are
random, and the store refuses to overwrite a run file, which together
give at-most-once execution per id.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .instance import Instance, InstanceError, SchemaError, parse_instance, serialize_instance
from .scenario import (
    CityRun,
    ScenarioConfig,
    export_geojson,
    instance_fingerprint,
    run_document,
    run_two_stage,
    serialize_run,
)

_RUN_PREFIX = "run-"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunStore:
    """One directory of canonical JSON documents, instances and runs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._instances = self.root / "instances"
        self._runs = self.root / "runs"
        self._instances.mkdir(parents=True, exist_ok=True)
        self._runs.mkdir(parents=True, exist_ok=True)

    def put_instance(self, inst: Instance) -> str:
        iid = instance_fingerprint(inst)
        path = self._instances / f"{iid}.json"
        if not path.exists():
            path.write_text(serialize_instance(inst))
        return iid

    def has_instance(self, iid: str) -> bool:
        return (self._instances / f"{iid}.json").exists()

    def get_instance(self, iid: str) -> Instance:
        path = self._instances / f"{iid}.json"
        if not path.exists():
            raise KeyError(iid)
        return parse_instance(path.read_text())

    def get_instance_document(self, iid: str) -> dict:
        path = self._instances / f"{iid}.json"
        if not path.exists():
            raise KeyError(iid)
        return json.loads(path.read_text())

    def save_run(self, run: CityRun, overwrite: bool = False) -> None:
        path = self._runs / f"{run.run_id}.json"
        if path.exists() and not overwrite:
            raise FileExistsError(f"run {run.run_id} already stored")
        path.write_text(serialize_run(run))

    def get_run_bytes(self, run_id: str) -> bytes:
        path = self._runs / f"{run_id}.json"
        if not path.exists():
            raise KeyError(run_id)
        return path.read_bytes()

    def get_run(self, run_id: str) -> dict:
        return json.loads(self.get_run_bytes(run_id))

    def list_runs(self, instance_id: str | None = None) -> list[dict]:
        summaries = []
        for path in sorted(self._runs.glob("*.json")):
            doc = json.loads(path.read_text())
            if instance_id and doc.get("instance_id") != instance_id:
                continue
            summaries.append({"run_id": doc["run_id"],
                              "instance_id": doc["instance_id"],
                              "status": doc["status"],
                              "created_at": doc["created_at"]})
        summaries.sort(key=lambda s: (s["created_at"], s["run_id"]))
        return summaries

    def delete_run(self, run_id: str) -> bool:
        path = self._runs / f"{run_id}.json"
        if not path.exists():
            return False
        path.unlink()
        return True


def _error(status: int, code: str, message: str, path: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message, "path": path})


def create_app(store_dir: str | Path, max_workers: int = 2) -> FastAPI:
    """Build the service over one store directory."""
    store = RunStore(store_dir)
    pending: dict[str, dict] = {}
    lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        executor = ThreadPoolExecutor(max_workers=max_workers,
                                      thread_name_prefix="solver")
        _app.state.executor = executor
        yield
        executor.shutdown(wait=True)

    app = FastAPI(title="ugsopt", lifespan=lifespan)
    app.state.store = store

    def execute(run_id: str, inst: Instance, cfg: ScenarioConfig) -> None:
        with lock:
            pending[run_id]["status"] = "running"
        try:
            run = run_two_stage(inst, cfg, run_id=run_id)
        except Exception as exc:  # noqa: BLE001  (runs must always land in the store)
            run = CityRun(run_id=run_id, instance_id=instance_fingerprint(inst),
                          status="failed", created_at=pending[run_id]["created_at"],
                          finished_at=_now_iso(), config=cfg.as_document(),
                          allocation={}, error=str(exc))
        store.save_run(run)
        with lock:
            pending.pop(run_id, None)

    @app.post("/instances")
    async def post_instance(request: Request):
        body = await request.body()
        try:
            inst = parse_instance(body)
        except SchemaError as exc:
            return _error(422, "invalid_instance", str(exc), exc.path)
        except InstanceError as exc:
            return _error(422, "invalid_instance", str(exc), "/instances")
        return {"id": store.put_instance(inst)}

    @app.get("/instances/{iid}")
    def get_instance(iid: str):
        try:
            return store.get_instance_document(iid)
        except KeyError:
            return _error(404, "not_found", f"instance {iid} not stored",
                          f"/instances/{iid}")

    @app.post("/solve")
    async def post_solve(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(422, "invalid_request", f"not valid JSON: {exc}", "/solve")
        if not isinstance(body, dict) or "instance_id" not in body:
            return _error(422, "invalid_request", "body needs instance_id", "/solve")
        iid = body["instance_id"]
        try:
            inst = store.get_instance(iid)
        except KeyError:
            return _error(404, "not_found", f"instance {iid} not stored", "/solve")
        try:
            cfg = ScenarioConfig.from_document(body.get("config") or {})
        except (ValueError, TypeError) as exc:
            return _error(422, "invalid_config", str(exc), "/solve")
        run_id = _RUN_PREFIX + uuid.uuid4().hex[:12]
        with lock:
            pending[run_id] = {"run_id": run_id, "instance_id": iid,
                               "status": "queued", "created_at": _now_iso()}
        app.state.executor.submit(execute, run_id, inst, cfg)
        return {"run_id": run_id}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        with lock:
            entry = pending.get(run_id)
        if entry is not None:
            return dict(entry)
        try:
            payload = store.get_run_bytes(run_id)
        except KeyError:
            return _error(404, "not_found", f"run {run_id} not stored",
                          f"/runs/{run_id}")
        return Response(content=payload, media_type="application/json")

    @app.get("/runs")
    def list_runs(instance_id: str | None = None):
        with lock:
            queued = [dict(entry) for entry in pending.values()
                      if not instance_id or entry["instance_id"] == instance_id]
        return {"runs": store.list_runs(instance_id) + queued}

    @app.get("/runs/{run_id}/geojson")
    def get_run_geojson(run_id: str):
        with lock:
            if run_id in pending:
                return _error(409, "incomplete_run", f"run {run_id} still executing",
                              f"/runs/{run_id}/geojson")
        try:
            doc = store.get_run(run_id)
        except KeyError:
            return _error(404, "not_found", f"run {run_id} not stored",
                          f"/runs/{run_id}/geojson")
        if doc["status"] != "done":
            return _error(409, "incomplete_run", f"run {run_id} is {doc['status']}",
                          f"/runs/{run_id}/geojson")
        inst = store.get_instance(doc["instance_id"])
        return export_geojson(doc, inst)

    @app.delete("/runs/{run_id}")
    def delete_run(run_id: str):
        with lock:
            if run_id in pending:
                return _error(409, "run_pending", f"run {run_id} still executing",
                              f"/runs/{run_id}")
        if not store.delete_run(run_id):
            return _error(404, "not_found", f"run {run_id} not stored",
                          f"/runs/{run_id}")
        return {"deleted": run_id}

    return app


def serve(store_dir: str | Path, bind: str = "127.0.0.1:8000",
          max_workers: int = 2) -> None:
    """Run the service until interrupted (errors surface to the caller)."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    app = create_app(store_dir, max_workers=max_workers)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")

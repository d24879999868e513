"""HTTP + websocket surface of the ground station.

Endpoints (wire schema in docs/protocol.md):
  POST /runs                      create a run, make it active
  GET  /runs/{id}/records         paged query (after, limit, node, kind)
  GET  /vehicles                  connected vehicle ids
  POST /commands                  dispatch to all or a subset; returns acks
  WS   /stream                    live record fan-out for operator sessions
"""

from __future__ import annotations

import queue
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.concurrency import run_in_threadpool
from fastapi.staticfiles import StaticFiles

from .service import (
    GroundStation,
    MalformedMessage,
    NoActiveRun,
    NoTargetsResolved,
)
from .store import UnknownRun


def create_app(gs: GroundStation, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="fanetsim ground station")
    app.state.gs = gs

    @app.post("/runs")
    def create_run(body: dict | None = None):
        run_id = gs.create_run(metadata=body or {})
        return {"run_id": run_id}

    @app.get("/runs/{run_id}/records")
    def get_records(
        run_id: str,
        after: int = 0,
        limit: int = 100,
        node: str | None = None,
        kind: str | None = None,
    ):
        try:
            records = gs.query_run(
                run_id,
                after=after,
                limit=limit,
                node_ids={node} if node else None,
                kinds={kind} if kind else None,
            )
        except (UnknownRun, NoActiveRun) as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"run_id": run_id, "records": records}

    @app.get("/vehicles")
    def vehicles():
        return {"vehicles": gs.vehicles(), "run_id": gs.active_run}

    @app.post("/telemetry")
    def telemetry(body: dict):
        try:
            seq = gs.ingest_telemetry(body)
        except MalformedMessage as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except NoActiveRun as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"seq": seq}

    @app.post("/commands")
    def commands(body: dict):
        try:
            acks = gs.dispatch_command(body)
        except MalformedMessage as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except NoTargetsResolved as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except NoActiveRun as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"acks": [a.to_dict() for a in acks]}

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        sub = gs.subscribe()
        await ws.send_json({"type": "hello", "session_id": sub.session_id, "run_id": gs.active_run})
        try:
            while True:
                try:
                    record = await run_in_threadpool(sub.q.get, True, 0.5)
                except queue.Empty:
                    continue
                await ws.send_json(record)
        except (WebSocketDisconnect, RuntimeError):
            pass  # session closed; sends to a closed socket surface as RuntimeError
        finally:
            gs.unsubscribe(sub)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app

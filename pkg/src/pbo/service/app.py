"""The session HTTP service.

Endpoints:
  POST /sessions                 create a session
  GET  /sessions/{id}            full public state
  GET  /sessions/{id}/next-duel  idempotent duel proposal
  POST /sessions/{id}/outcome    record the pending duel's result
  GET  /sessions/{id}/winner     current Condorcet winner and score table
Errors come back as {code, message} with a matching HTTP status.  When a
built UI bundle is available it is served under /ui/.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..benchmarks import Domain
from . import schemas
from .store import SessionConfig, SessionError, SessionStore


def create_app(data_dir: str, ui_dir: str | None = None) -> FastAPI:
    store = SessionStore(data_dir)
    app = FastAPI(title="preference-duel optimization service")
    app.state.store = store

    @app.exception_handler(SessionError)
    async def session_error_handler(request: Request, exc: SessionError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"code": "invalid_request", "message": str(exc.errors())}
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422, content={"code": "invalid_value", "message": str(exc)}
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", response_model=schemas.SessionCreateOut, status_code=201)
    def create_session(body: schemas.SessionCreateIn):
        domain = Domain(tuple(tuple(b) for b in body.domain.bounds), body.domain.grid_per_dim)
        config = SessionConfig(**body.config.model_dump())
        session = store.create(domain, body.policy, config)
        return {"id": session.session_id}

    @app.get("/sessions/{session_id}", response_model=schemas.SessionStateOut)
    def session_state(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.public_state()

    @app.get("/sessions/{session_id}/next-duel", response_model=schemas.DuelOut)
    def next_duel(session_id: str):
        session = store.get(session_id)
        with session.lock:
            duel, size = session.next_duel()
            return {
                "left": list(duel.left),
                "right": list(duel.right),
                "iteration": size + 1,
            }

    @app.post("/sessions/{session_id}/outcome", response_model=schemas.OutcomeOut)
    def record_outcome(session_id: str, body: schemas.OutcomeIn):
        session = store.get(session_id)
        with session.lock:
            return {"size": session.record_outcome(body.y)}

    @app.get("/sessions/{session_id}/winner", response_model=schemas.WinnerOut)
    def winner(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.winner()

    if ui_dir and os.path.isdir(ui_dir):
        index_path = os.path.join(ui_dir, "index.html")

        @app.get("/ui/s/{session_id}")
        def ui_session(session_id: str):
            return FileResponse(index_path)

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

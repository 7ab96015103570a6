"""HTTP API over project stores; one server can host many projects.

Error contract: 400 malformed input, 404 unknown project/decision id,
409 dependency or pending-decision conflicts (the body carries the blocking
decision ids), 500 broken internal invariants.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .config import ProjectConfig
from .errors import (
    DependencyError,
    InternalError,
    PendingDecisionsError,
    UnknownIdError,
    UserError,
)
from .project import _ID_RE, PHASES, Project

_MEDIA_TYPES = {
    "tsv": "text/tab-separated-values; charset=utf-8",
    "ttl": "text/turtle; charset=utf-8",
    "jsonld": "application/ld+json",
}


def _open_project(root: Path, project_id: str) -> Project:
    if not _ID_RE.match(project_id) or not (root / project_id / "project.json").is_file():
        raise UnknownIdError(f"unknown project {project_id!r}")
    return Project(root / project_id)


def create_app(root: Path | str) -> FastAPI:
    root = Path(root)
    app = FastAPI(title="strata", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(UnknownIdError)
    async def _unknown(request: Request, exc: UnknownIdError):
        return JSONResponse({"detail": str(exc)}, status_code=404)

    @app.exception_handler(PendingDecisionsError)
    async def _pending(request: Request, exc: PendingDecisionsError):
        return JSONResponse(
            {"detail": str(exc), "blocking": exc.pending}, status_code=409
        )

    @app.exception_handler(DependencyError)
    async def _dependency(request: Request, exc: DependencyError):
        return JSONResponse({"detail": str(exc), "blocking": []}, status_code=409)

    @app.exception_handler(UserError)
    async def _user(request: Request, exc: UserError):
        return JSONResponse({"detail": str(exc)}, status_code=400)

    @app.exception_handler(InternalError)
    async def _internal(request: Request, exc: InternalError):
        return JSONResponse({"detail": str(exc)}, status_code=500)

    @app.get("/projects")
    def list_projects() -> dict:
        out = []
        for path in sorted(root.iterdir() if root.is_dir() else []):
            if (path / "project.json").is_file():
                out.append(Project(path).summary())
        return {"projects": out}

    @app.post("/projects", status_code=201)
    def create_project(body: dict) -> dict:
        name = body.get("name")
        lexicon = body.get("lexicon")
        if not isinstance(name, str) or not isinstance(lexicon, str):
            raise UserError("body must carry 'name' and 'lexicon' strings")
        config = ProjectConfig.from_dict(body["config"]) if body.get("config") else None
        target = root / name
        if target.exists():
            raise DependencyError(f"project {name!r} already exists")
        project = Project.create(target, name, lexicon, config)
        return project.summary()

    @app.get("/projects/{project_id}")
    def get_project(project_id: str) -> dict:
        return _open_project(root, project_id).summary()

    @app.post("/projects/{project_id}/datasets", status_code=201)
    def add_dataset(project_id: str, body: dict) -> dict:
        project = _open_project(root, project_id)
        csv_text = body.get("csv")
        meta_text = body.get("meta")
        if not isinstance(csv_text, str) or not isinstance(meta_text, str):
            raise UserError("body must carry 'csv' and 'meta' strings")
        return {"dataset": project.import_dataset(csv_text, meta_text)}

    @app.post("/projects/{project_id}/phases/{phase}")
    def run_phase(project_id: str, phase: str) -> dict:
        if phase not in PHASES:
            raise UserError(f"unknown phase {phase!r}")
        return _open_project(root, project_id).run_phase(phase).to_dict()

    @app.get("/projects/{project_id}/decisions")
    def list_decisions(project_id: str, status: str | None = None) -> dict:
        if status not in (None, "pending"):
            raise UserError("the only supported status filter is 'pending'")
        project = _open_project(root, project_id)
        return {"decisions": project.list_decisions(pending_only=status == "pending")}

    @app.post("/projects/{project_id}/decisions/{decision_id}")
    def submit_decision(project_id: str, decision_id: str, body: dict) -> dict:
        project = _open_project(root, project_id)
        return project.submit_decision(decision_id, body)

    @app.get("/projects/{project_id}/export/{what}")
    def export_artifact(project_id: str, what: str, format: str) -> PlainTextResponse:
        project = _open_project(root, project_id)
        text = project.export(what, format)
        return PlainTextResponse(text, media_type=_MEDIA_TYPES[format])

    @app.get("/projects/{project_id}/render")
    def render(project_id: str, lang: str) -> PlainTextResponse:
        project = _open_project(root, project_id)
        return PlainTextResponse(project.render(lang), media_type="text/plain; charset=utf-8")

    return app

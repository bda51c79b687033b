"""HTTP gateway: the JSON API plus static hosting for the browser client.

Endpoints:
    POST /sessions
    GET  /sessions/{id}
    POST /sessions/{id}/tracks       multipart form: file (+ optional filename)
    POST /sessions/{id}/analyze
    GET  /sessions/{id}/report
    POST /sessions/{id}/messages     {"text": ..., "selected_track": ...?}
    GET  /artifacts/{id}

Errors come back as JSON {"code": ..., "message": ...}. A per-session
assistant API key may ride along in the X-Api-Key header.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, File, Form, Header, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import errors
from .config import AppConfig, load_config
from .service import UPLOAD_FORMAT_INSTRUCTION, SessionService
from .store import SessionStore

_STATUS_BY_ERROR = {
    errors.MalformedFilename: 422,
    errors.UnsupportedFormat: 422,
    errors.CorruptFile: 422,
    errors.UploadTooLarge: 413,
    errors.TooManyTracks: 422,
    errors.ClipTooShort: 422,
    errors.NoTracks: 409,
    errors.TrackNotFound: 404,
    errors.NotFound: 404,
    errors.StorageUnavailable: 503,
    errors.BackendUnavailable: 502,
    errors.MalformedReport: 502,
}


class SessionCreated(BaseModel):
    session_id: str


class TrackUploaded(BaseModel):
    track_id: str
    title: str
    artist: str
    status: str


class MessageRequest(BaseModel):
    text: str = ""
    selected_track: str | None = None


class MessagePosted(BaseModel):
    type: str
    message: dict
    pending_tool: str | None = None
    envelope: dict | None = None


class AnalysisResult(BaseModel):
    report: dict
    warnings: list


class SessionState(BaseModel):
    session_id: str
    tracks: list
    analyzed: bool
    report: dict | None
    warnings: list
    pending_tool: str | None
    messages: list
    artifacts: list


def create_app(config: AppConfig | None = None, static_dir: str | None = None) -> FastAPI:
    config = config or load_config()
    store = SessionStore(config.store_path)
    service = SessionService(store, config)

    app = FastAPI(title="soundsig", version="0.1.0")
    app.state.service = service
    app.state.config = config

    @app.exception_handler(errors.SoundSigError)
    async def _domain_error(request: Request, exc: errors.SoundSigError):
        status = _STATUS_BY_ERROR.get(type(exc), 500)
        message = str(exc)
        if isinstance(exc, errors.MalformedFilename):
            message = f"{UPLOAD_FORMAT_INSTRUCTION} {message}"
        return JSONResponse(status_code=status, content={"code": exc.code, "message": message})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"code": "invalid_request", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        # keep the documented {code, message} error shape for framework errors too
        return JSONResponse(
            status_code=422, content={"code": "invalid_request", "message": str(exc.errors())}
        )

    @app.post("/sessions", response_model=SessionCreated, status_code=201)
    def create_session():
        record = service.create_session()
        return SessionCreated(session_id=record["id"])

    @app.get("/sessions/{session_id}", response_model=SessionState)
    def get_session(session_id: str):
        return SessionState(**service.get_session_state(session_id))

    @app.post("/sessions/{session_id}/tracks", response_model=TrackUploaded, status_code=201)
    def upload_track(
        session_id: str,
        file: UploadFile = File(...),
        filename: str | None = Form(default=None),
    ):
        name = filename or file.filename or ""
        data = file.file.read()
        track = service.upload_track(session_id, name, data)
        return TrackUploaded(
            track_id=track["track_id"],
            title=track["title"],
            artist=track["artist"],
            status=track["status"],
        )

    @app.post("/sessions/{session_id}/analyze", response_model=AnalysisResult)
    def analyze(session_id: str, x_api_key: str | None = Header(default=None)):
        return AnalysisResult(**service.run_analysis(session_id, api_key=x_api_key))

    @app.get("/sessions/{session_id}/report", response_model=AnalysisResult)
    def get_report(session_id: str):
        return AnalysisResult(**service.get_report(session_id))

    @app.post("/sessions/{session_id}/messages", response_model=MessagePosted)
    def post_message(
        session_id: str,
        body: MessageRequest,
        x_api_key: str | None = Header(default=None),
    ):
        result = service.post_message(
            session_id,
            body.text,
            selected_track=body.selected_track,
            api_key=x_api_key,
        )
        return MessagePosted(**result)

    _ARTIFACT_EXTENSIONS = {
        "spectrogram_png": ".png",
        "chord_table": ".csv",
        "midi_file": ".mid",
        "stem_audio": ".wav",
    }

    @app.get("/artifacts/{artifact_id}")
    def get_artifact(artifact_id: str):
        data, media_type, kind = service.get_artifact(artifact_id)
        ext = _ARTIFACT_EXTENSIONS.get(kind, "")
        return Response(
            content=data,
            media_type=media_type,
            headers={
                "Content-Disposition": f'inline; filename="{kind}-{artifact_id[:8]}{ext}"'
            },
        )

    static_dir = static_dir or os.environ.get("SOUNDSIG_STATIC_DIR")
    if static_dir is None:
        default_dir = os.path.join(os.path.dirname(__file__), "..", "..", "frontend", "dist")
        if os.path.isdir(default_dir):
            static_dir = default_dir
    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app

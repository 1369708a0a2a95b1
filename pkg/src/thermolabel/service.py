"""Authenticated HTTP facade over the store, workflow, tracker and reports.

The API is a thin adapter: every rule it appears to enforce (ownership,
sequence numbers, confirmations, propagation) actually lives in the
workflow/store layer; this module only translates HTTP to those calls and
exceptions to status codes.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from . import ops
from .consensus import ConsensusConfig
from .errors import (
    AuthError,
    ConfigurationError,
    ConflictError,
    DomainError,
    ForbiddenError,
    IntegrityError,
    LabelingError,
    NotFoundError,
    StateError,
)
from .store import AccountRole, DataStore, SessionManager, DEFAULT_SESSION_TIMEOUT
from .tracker import MAX_BUFFER, FrameImage, TrackerConfig
from .workflow import (
    EventKind,
    SubmissionEvent,
    SubmissionMode,
    SubmissionStatus,
    plan_advance,
)

_STATUS = {
    DomainError: 400,
    ConfigurationError: 400,
    AuthError: 401,
    ForbiddenError: 403,
    NotFoundError: 404,
    StateError: 409,
    ConflictError: 409,
    IntegrityError: 409,
}


def _error_payload(exc: LabelingError) -> dict:
    code = type(exc).__name__.removesuffix("Error").lower() or "error"
    return {"code": code, "message": str(exc)}


class LoginBody(BaseModel):
    username: str
    password: str


class CreateSubmissionBody(BaseModel):
    mode: str
    segment_id: str
    reviewed_submission_id: Optional[str] = None


class EventsBody(BaseModel):
    events: list[dict]


class AdvanceBody(BaseModel):
    model_config = {"populate_by_name": True}

    from_frame: int = Field(alias="from")
    to_frame: int = Field(alias="to")
    tracker_enabled: bool = False
    buffer: Optional[int] = None


def load_frame_image(store: DataStore, video_id: str, n: int) -> FrameImage:
    """Decode a stored frame; polarity-inverted videos flip so warm is bright."""
    meta = store.get_video(video_id)
    with Image.open(io.BytesIO(store.read_frame_bytes(video_id, n))) as im:
        pixels = np.asarray(im.convert("L"), dtype=np.uint8)
    frame = FrameImage(
        width=meta.width, height=meta.height, pixels=pixels, frame_index=n
    )
    return frame.inverted() if meta.polarity_inverted else frame


def create_app(
    data_root: str | Path,
    session_timeout: float = DEFAULT_SESSION_TIMEOUT,
    tracker_defaults: Optional[TrackerConfig] = None,
    consensus_cfg: Optional[ConsensusConfig] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    store = DataStore(data_root)
    sessions = SessionManager(session_timeout)
    tracker_cfg = tracker_defaults or TrackerConfig()
    ccfg = consensus_cfg or ConsensusConfig()

    app = FastAPI(title="thermolabel", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.sessions = sessions

    @app.exception_handler(LabelingError)
    async def handle_labeling_error(request: Request, exc: LabelingError):
        status = next(
            (s for t, s in _STATUS.items() if isinstance(exc, t)), 500
        )
        return JSONResponse(status_code=status, content=_error_payload(exc))

    def current_account(authorization: Optional[str] = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise AuthError("missing bearer token")
        return sessions.resolve(authorization.removeprefix("Bearer "))

    def require_admin(account_id: str) -> None:
        if store.get_account(account_id).role is not AccountRole.ADMIN:
            raise ForbiddenError("admin role required")

    def require_owner(account_id: str, submission_owner: str) -> None:
        if account_id == submission_owner:
            return
        if store.get_account(account_id).role is AccountRole.ADMIN:
            return
        raise ForbiddenError("not the submission owner")

    # -- auth --

    @app.post("/api/login")
    def login(body: LoginBody):
        token = sessions.authenticate(store, body.username, body.password)
        account = store.get_account(body.username)
        return {"token": token, "account_id": account.account_id, "role": account.role.value}

    # -- videos and frames --

    @app.get("/api/videos")
    def list_videos(account: str = Depends(current_account)):
        segments = store.list_segments()
        out = []
        for meta in store.list_videos():
            out.append(
                {
                    **meta.to_dict(),
                    "segments": [
                        s.to_dict() for s in segments if s.video_id == meta.video_id
                    ],
                }
            )
        return {"videos": out}

    @app.get("/api/videos/{video_id}/frames/{n}")
    def get_frame(video_id: str, n: int, account: str = Depends(current_account)):
        data = store.read_frame_bytes(video_id, n)
        return Response(
            content=data,
            media_type="image/png",
            headers={"Cache-Control": "no-store"},
        )

    @app.get("/api/videos/{video_id}/submissions")
    def video_submissions(video_id: str, account: str = Depends(current_account)):
        store.get_video(video_id)
        subs = store.list_submissions(video_id=video_id)
        return {
            "submissions": [
                {
                    "submission_id": s.submission_id,
                    "video_segment_id": s.video_segment_id,
                    "labeler_id": s.labeler_id,
                    "submitted_at": s.submitted_at,
                    "label_count": s.label_count(),
                }
                for s in subs
                if s.mode is SubmissionMode.LABEL
                and s.status is SubmissionStatus.SUBMITTED
            ]
        }

    # -- submissions --

    @app.post("/api/submissions")
    def create_submission(
        body: CreateSubmissionBody, account: str = Depends(current_account)
    ):
        sub = store.create_submission(
            segment_id=body.segment_id,
            labeler_id=account,
            mode=SubmissionMode(body.mode),
            reviewed_submission_id=body.reviewed_submission_id,
        )
        return sub.to_dict()

    @app.get("/api/submissions/{submission_id}")
    def get_submission(submission_id: str, account: str = Depends(current_account)):
        sub = store.load_submission(submission_id)
        require_owner(account, sub.labeler_id)
        return sub.to_dict()

    @app.post("/api/submissions/{submission_id}/events")
    def post_events(
        submission_id: str,
        body: EventsBody,
        account: str = Depends(current_account),
    ):
        sub = store.load_submission(submission_id)
        require_owner(account, sub.labeler_id)
        events = [SubmissionEvent.from_dict(d) for d in body.events]
        stored = store.append_events(submission_id, events)
        return {
            "stored": stored,
            "next_sequence_no": store.load_submission(submission_id).next_sequence_no,
        }

    @app.post("/api/submissions/{submission_id}/advance")
    def advance(
        submission_id: str,
        body: AdvanceBody,
        account: str = Depends(current_account),
    ):
        sub = store.load_submission(submission_id)
        require_owner(account, sub.labeler_id)
        buffer = tracker_cfg.buffer if body.buffer is None else body.buffer
        if not 0 <= buffer <= MAX_BUFFER:
            raise DomainError(f"buffer must be in [0, {MAX_BUFFER}]")
        cfg = TrackerConfig(
            buffer=buffer,
            brightness_threshold=tracker_cfg.brightness_threshold,
            size_threshold=tracker_cfg.size_threshold,
            connectivity=tracker_cfg.connectivity,
        )
        new_frame = None
        if body.tracker_enabled:
            segment = store.get_segment(sub.video_segment_id)
            new_frame = load_frame_image(store, segment.video_id, body.to_frame)
        event, created = plan_advance(
            sub,
            body.from_frame,
            body.to_frame,
            body.tracker_enabled,
            cfg,
            new_frame=new_frame,
        )
        store.append_event(submission_id, event)
        return {
            "created": [b.to_dict() for b in created],
            "sequence_no": event.sequence_no,
            "next_sequence_no": event.sequence_no + 1,
        }

    @app.post("/api/submissions/{submission_id}/submit")
    def submit_submission(
        submission_id: str,
        confirm: bool = Query(default=False),
        account: str = Depends(current_account),
    ):
        if not confirm:
            raise DomainError("submit requires confirm=true")
        sub = store.load_submission(submission_id)
        require_owner(account, sub.labeler_id)
        if sub.status is not SubmissionStatus.IN_PROGRESS:
            raise StateError(f"cannot submit a {sub.status.value} submission")
        event = SubmissionEvent(sub.next_sequence_no, EventKind.SUBMIT, {})
        store.append_event(submission_id, event)
        return store.load_submission(submission_id).to_dict()

    @app.delete("/api/submissions/{submission_id}")
    def delete_submission(
        submission_id: str,
        confirm: bool = Query(default=False),
        account: str = Depends(current_account),
    ):
        if not confirm:
            raise DomainError("delete requires confirm=true")
        sub = store.load_submission(submission_id)
        require_owner(account, sub.labeler_id)
        if sub.status is not SubmissionStatus.IN_PROGRESS:
            raise StateError(f"cannot delete a {sub.status.value} submission")
        event = SubmissionEvent(sub.next_sequence_no, EventKind.DELETE, {})
        store.append_event(submission_id, event)
        return store.load_submission(submission_id).to_dict()

    # -- consensus and reports --

    @app.post("/api/consensus/{segment_id}")
    def consensus_segment(
        segment_id: str,
        framework: str = Query(...),
        account: str = Depends(current_account),
    ):
        require_admin(account)
        finals = ops.run_consensus(store, segment_id, framework, ccfg)
        return {"segment_id": segment_id, "final_labels": [f.to_dict() for f in finals]}

    @app.get("/api/reports/efficiency")
    def report_efficiency(
        trim: bool = Query(default=True),
        per_group_trim: bool = Query(default=True),
        account: str = Depends(current_account),
    ):
        require_admin(account)
        return ops.efficiency_report(store, trim=trim, per_group_trim=per_group_trim).to_dict()

    if ui_dir:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app

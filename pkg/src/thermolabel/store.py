"""Persistence and authentication.

Data root layout:

    <root>/accounts.json
    <root>/videos/<video_id>/meta.json
    <root>/videos/<video_id>/frames/frame_<6 digits>.png
    <root>/segments.json
    <root>/assignments.json
    <root>/submissions/<submission_id>/meta.json
    <root>/submissions/<submission_id>/events.ndjson
    <root>/finals/<segment_id>.json

Submission logs are append-only line-delimited JSON events; every write is
flushed and fsynced before it is acknowledged, and the in-memory state cache
is only updated afterwards. Replaying a log from sequence 0 reconstructs the
submission exactly (see workflow.apply_event).
"""

from __future__ import annotations

import copy
import hashlib
import hmac
import json
import os
import re
import secrets
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .errors import (
    AuthError,
    ConflictError,
    DomainError,
    IntegrityError,
    NotFoundError,
    StateError,
)
from .workflow import (
    Submission,
    SubmissionEvent,
    SubmissionMode,
    SubmissionStatus,
    VideoSegment,
    apply_event,
    new_submission,
)

FRAME_NAME_RE = re.compile(r"^frame_(\d{6})\.png$")
DEFAULT_SESSION_TIMEOUT = 12 * 3600.0

PBKDF2_ITERATIONS = 200_000


class AccountRole(str, Enum):
    LABELER = "Labeler"
    ADMIN = "Admin"


@dataclass(frozen=True)
class UserAccount:
    account_id: str
    username: str
    password_hash: str  # "pbkdf2$<iterations>$<salt hex>$<digest hex>"
    role: AccountRole = AccountRole.LABELER


def hash_password(password: str) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, PBKDF2_ITERATIONS)
    return f"pbkdf2${PBKDF2_ITERATIONS}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        _, iterations, salt_hex, digest_hex = stored.split("$")
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode(), bytes.fromhex(salt_hex), int(iterations)
        )
        return hmac.compare_digest(digest.hex(), digest_hex)
    except (ValueError, AttributeError):
        return False


@dataclass
class Session:
    token: str
    account_id: str
    last_used: float


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    frame_count: int
    width: int
    height: int
    fps: float = 1.0
    polarity_inverted: bool = False

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_count": self.frame_count,
            "width": self.width,
            "height": self.height,
            "fps": self.fps,
            "polarity_inverted": self.polarity_inverted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VideoMeta":
        return cls(
            video_id=d["video_id"],
            frame_count=int(d["frame_count"]),
            width=int(d["width"]),
            height=int(d["height"]),
            fps=float(d.get("fps", 1.0)),
            polarity_inverted=bool(d.get("polarity_inverted", False)),
        )


def _write_json(path: Path, data) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


class DataStore:
    """Single-process gateway to the data root.

    One serialized writer per submission log (this process); readers may run
    concurrently. Cross-submission writes are independent.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "videos").mkdir(exist_ok=True)
        (self.root / "submissions").mkdir(exist_ok=True)
        (self.root / "finals").mkdir(exist_ok=True)
        self._submission_cache: dict[str, Submission] = {}

    # -- accounts -------------------------------------------------------------

    @property
    def _accounts_path(self) -> Path:
        return self.root / "accounts.json"

    def _load_accounts(self) -> dict[str, UserAccount]:
        if not self._accounts_path.exists():
            return {}
        raw = json.loads(self._accounts_path.read_text())
        return {
            a["username"]: UserAccount(
                account_id=a["account_id"],
                username=a["username"],
                password_hash=a["password_hash"],
                role=AccountRole(a.get("role", "Labeler")),
            )
            for a in raw
        }

    def _save_accounts(self, accounts: dict[str, UserAccount]) -> None:
        _write_json(
            self._accounts_path,
            [
                {
                    "account_id": a.account_id,
                    "username": a.username,
                    "password_hash": a.password_hash,
                    "role": a.role.value,
                }
                for a in sorted(accounts.values(), key=lambda a: a.username)
            ],
        )

    def add_account(
        self, username: str, password: str, role: AccountRole = AccountRole.LABELER
    ) -> UserAccount:
        if not username or not re.fullmatch(r"[A-Za-z0-9_.-]+", username):
            raise DomainError(f"invalid username {username!r}")
        accounts = self._load_accounts()
        if username in accounts:
            raise StateError(f"username {username!r} already exists")
        account = UserAccount(
            account_id=username,  # usernames are unique, so they double as ids
            username=username,
            password_hash=hash_password(password),
            role=role,
        )
        accounts[username] = account
        self._save_accounts(accounts)
        return account

    def remove_account(self, username: str) -> None:
        accounts = self._load_accounts()
        if username not in accounts:
            raise NotFoundError(f"no account {username!r}")
        del accounts[username]
        self._save_accounts(accounts)

    def get_account(self, username: str) -> UserAccount:
        accounts = self._load_accounts()
        if username not in accounts:
            raise NotFoundError(f"no account {username!r}")
        return accounts[username]

    def list_accounts(self) -> list[UserAccount]:
        return sorted(self._load_accounts().values(), key=lambda a: a.username)

    # -- videos and frames ------------------------------------------------------

    def video_dir(self, video_id: str) -> Path:
        return self.root / "videos" / video_id

    def register_video(self, meta: VideoMeta) -> None:
        d = self.video_dir(meta.video_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / "frames").mkdir(exist_ok=True)
        _write_json(d / "meta.json", meta.to_dict())

    def get_video(self, video_id: str) -> VideoMeta:
        path = self.video_dir(video_id) / "meta.json"
        if not path.exists():
            raise NotFoundError(f"no video {video_id!r}")
        return VideoMeta.from_dict(json.loads(path.read_text()))

    def list_videos(self) -> list[VideoMeta]:
        out = []
        for d in sorted((self.root / "videos").iterdir()):
            if (d / "meta.json").exists():
                out.append(VideoMeta.from_dict(json.loads((d / "meta.json").read_text())))
        return out

    def frame_path(self, video_id: str, n: int) -> Path:
        meta = self.get_video(video_id)
        if not 0 <= n < meta.frame_count:
            raise NotFoundError(f"frame {n} out of range for {video_id!r}")
        return self.video_dir(video_id) / "frames" / f"frame_{n:06d}.png"

    def read_frame_bytes(self, video_id: str, n: int) -> bytes:
        return self.frame_path(video_id, n).read_bytes()

    # -- segments and assignments -----------------------------------------------

    def save_segments(self, segments: list[VideoSegment]) -> None:
        _write_json(self.root / "segments.json", [s.to_dict() for s in segments])

    def list_segments(self) -> list[VideoSegment]:
        path = self.root / "segments.json"
        if not path.exists():
            return []
        return [VideoSegment.from_dict(d) for d in json.loads(path.read_text())]

    def get_segment(self, segment_id: str) -> VideoSegment:
        for s in self.list_segments():
            if s.segment_id == segment_id:
                return s
        raise NotFoundError(f"no segment {segment_id!r}")

    def save_assignments(self, assignments: list) -> None:
        _write_json(self.root / "assignments.json", [a.to_dict() for a in assignments])

    def list_assignments(self) -> list:
        from .workflow import Assignment

        path = self.root / "assignments.json"
        if not path.exists():
            return []
        return [Assignment.from_dict(d) for d in json.loads(path.read_text())]

    # -- submissions -------------------------------------------------------------

    def _submission_dir(self, submission_id: str) -> Path:
        return self.root / "submissions" / submission_id

    def _next_submission_id(self) -> str:
        existing = [p.name for p in (self.root / "submissions").iterdir() if p.is_dir()]
        numbers = [int(name[1:]) for name in existing if re.fullmatch(r"s\d{6}", name)]
        return f"s{max(numbers, default=-1) + 1:06d}"

    def create_submission(
        self,
        segment_id: str,
        labeler_id: str,
        mode: SubmissionMode,
        reviewed_submission_id: Optional[str] = None,
    ) -> Submission:
        segment = self.get_segment(segment_id)
        video = self.get_video(segment.video_id)

        seed_frames = None
        if mode is SubmissionMode.REVIEW:
            if reviewed_submission_id is None:
                raise DomainError("review requires a submission to review")
            original = self.load_submission(reviewed_submission_id)
            if original.video_segment_id != segment_id:
                raise IntegrityError(
                    "reviewed submission belongs to a different segment"
                )
            if original.status is not SubmissionStatus.SUBMITTED:
                raise StateError("only submitted work can be reviewed")
            seed_frames = {f: list(boxes) for f, boxes in original.frames.items()}

        sub = new_submission(
            submission_id=self._next_submission_id(),
            video_segment_id=segment_id,
            labeler_id=labeler_id,
            mode=mode,
            frame_width=video.width,
            frame_height=video.height,
            first_frame=segment.first_frame,
            last_frame=segment.last_frame,
            reviewed_submission_id=reviewed_submission_id,
            seed_frames=seed_frames,
        )
        d = self._submission_dir(sub.submission_id)
        d.mkdir(parents=True)
        _write_json(
            d / "meta.json",
            {
                "submission_id": sub.submission_id,
                "video_segment_id": sub.video_segment_id,
                "labeler_id": sub.labeler_id,
                "mode": sub.mode.value,
                "frame_width": sub.frame_width,
                "frame_height": sub.frame_height,
                "first_frame": sub.first_frame,
                "last_frame": sub.last_frame,
                "reviewed_submission_id": sub.reviewed_submission_id,
                "min_box_size": sub.min_box_size,
            },
        )
        (d / "events.ndjson").touch()
        self._submission_cache[sub.submission_id] = sub
        return copy.deepcopy(sub)

    def _rebuild_submission(self, submission_id: str) -> Submission:
        d = self._submission_dir(submission_id)
        meta_path = d / "meta.json"
        if not meta_path.exists():
            raise NotFoundError(f"no submission {submission_id!r}")
        meta = json.loads(meta_path.read_text())

        seed_frames = None
        if meta["mode"] == SubmissionMode.REVIEW.value:
            original = self.load_submission(meta["reviewed_submission_id"])
            seed_frames = {f: list(boxes) for f, boxes in original.frames.items()}

        sub = new_submission(
            submission_id=meta["submission_id"],
            video_segment_id=meta["video_segment_id"],
            labeler_id=meta["labeler_id"],
            mode=SubmissionMode(meta["mode"]),
            frame_width=meta["frame_width"],
            frame_height=meta["frame_height"],
            first_frame=meta["first_frame"],
            last_frame=meta["last_frame"],
            reviewed_submission_id=meta.get("reviewed_submission_id"),
            seed_frames=seed_frames,
            min_box_size=meta.get("min_box_size", 4),
        )
        with open(d / "events.ndjson") as f:
            for line in f:
                line = line.strip()
                if line:
                    apply_event(sub, SubmissionEvent.from_dict(json.loads(line)))
        return sub

    def load_submission(self, submission_id: str) -> Submission:
        """Folded state of all acknowledged events (cached)."""
        if submission_id not in self._submission_cache:
            self._submission_cache[submission_id] = self._rebuild_submission(
                submission_id
            )
        return copy.deepcopy(self._submission_cache[submission_id])

    def append_events(
        self, submission_id: str, events: list[SubmissionEvent]
    ) -> list[int]:
        """Validate, durably append, then update the cache. All or nothing.

        Returns the stored sequence numbers. A gap or replayed sequence number
        raises ConflictError and persists nothing.
        """
        current = self.load_submission(submission_id)  # deep copy; safe to fold
        for event in events:
            apply_event(current, event)

        path = self._submission_dir(submission_id) / "events.ndjson"
        with open(path, "a") as f:
            for event in events:
                f.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())
        self._submission_cache[submission_id] = current
        return [e.sequence_no for e in events]

    def append_event(self, submission_id: str, event: SubmissionEvent) -> int:
        return self.append_events(submission_id, [event])[0]

    def list_submissions(
        self,
        segment_id: Optional[str] = None,
        video_id: Optional[str] = None,
    ) -> list[Submission]:
        out = []
        for d in sorted((self.root / "submissions").iterdir()):
            if not (d / "meta.json").exists():
                continue
            sub = self.load_submission(d.name)
            if segment_id and sub.video_segment_id != segment_id:
                continue
            if video_id and not sub.video_segment_id.startswith(f"{video_id}:"):
                continue
            out.append(sub)
        return out

    # -- final labels --------------------------------------------------------------

    def save_finals(
        self,
        segment_id: str,
        framework: str,
        labels: list,
        submission_ids: list[str],
    ) -> None:
        safe = segment_id.replace(":", "_")
        _write_json(
            self.root / "finals" / f"{safe}.json",
            {
                "segment_id": segment_id,
                "framework": framework,
                "submission_ids": submission_ids,
                "labels": [fl.to_dict() for fl in labels],
            },
        )

    def load_finals(self, segment_id: str) -> Optional[dict]:
        safe = segment_id.replace(":", "_")
        path = self.root / "finals" / f"{safe}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def list_finals(self) -> list[dict]:
        out = []
        for path in sorted((self.root / "finals").iterdir()):
            if path.suffix == ".json":
                out.append(json.loads(path.read_text()))
        return out


class SessionManager:
    """Random bearer tokens with a sliding idle timeout."""

    def __init__(self, timeout_seconds: float = DEFAULT_SESSION_TIMEOUT):
        self.timeout = timeout_seconds
        self._sessions: dict[str, Session] = {}

    def authenticate(
        self, store: DataStore, username: str, password: str, now: Optional[float] = None
    ) -> str:
        """Constant-time credential check; one uniform rejection for any failure."""
        accounts = store._load_accounts()
        account = accounts.get(username)
        if account is None:
            # Burn a hash anyway so unknown usernames take as long as bad passwords.
            verify_password(password, hash_password("timing-equalizer"))
            raise AuthError("invalid credentials")
        if not verify_password(password, account.password_hash):
            raise AuthError("invalid credentials")
        token = secrets.token_hex(32)  # 256 bits
        self._sessions[token] = Session(
            token=token,
            account_id=account.account_id,
            last_used=now if now is not None else time.time(),
        )
        return token

    def resolve(self, token: Optional[str], now: Optional[float] = None) -> str:
        """Account id for a live token; touches the idle timer."""
        now = now if now is not None else time.time()
        session = self._sessions.get(token or "")
        if session is None:
            raise AuthError("missing or unknown session token")
        if now - session.last_used > self.timeout:
            del self._sessions[token]
            raise AuthError("session expired")
        session.last_used = now
        return session.account_id

    def revoke(self, token: str) -> None:
        self._sessions.pop(token, None)

"""Submission lifecycle, first-visit propagation, undo/submit/delete semantics,
video segmentation and assignment distribution.

A submission is an event-sourced state machine: every mutation is a
SubmissionEvent with a dense sequence number, and apply_event is the single
transition function. Replaying a log from sequence 0 reconstructs the
submission exactly, which is what gives autosave/reload for free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

from .errors import ConfigurationError, ConflictError, DomainError, StateError
from .geometry import (
    DEFAULT_MIN_BOX_SIZE,
    BoundingBox,
    Category,
    Origin,
    clamp_and_filter,
)
from .tracker import FrameImage, TrackerConfig, copy_boxes, track_boxes


class SubmissionMode(str, Enum):
    LABEL = "Label"
    REVIEW = "Review"


class SubmissionStatus(str, Enum):
    IN_PROGRESS = "InProgress"
    SUBMITTED = "Submitted"
    DELETED = "Deleted"


class EventKind(str, Enum):
    BOX_DRAWN = "BoxDrawn"
    BOX_MOVED = "BoxMoved"
    BOX_DELETED = "BoxDeleted"
    BOX_RECLASSIFIED = "BoxReclassified"
    FRAME_VISITED = "FrameVisited"
    UNDO = "Undo"
    TIME_TICK = "TimeTick"
    SUBMIT = "Submit"
    DELETE = "Delete"


@dataclass(frozen=True)
class SubmissionEvent:
    sequence_no: int
    kind: EventKind
    payload: dict
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {
            "sequence_no": self.sequence_no,
            "kind": self.kind.value,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubmissionEvent":
        return cls(
            sequence_no=int(d["sequence_no"]),
            kind=EventKind(d["kind"]),
            payload=d.get("payload", {}),
            timestamp=float(d.get("timestamp", 0.0)),
        )


@dataclass
class Submission:
    submission_id: str
    video_segment_id: str
    labeler_id: str
    mode: SubmissionMode
    frame_width: int
    frame_height: int
    first_frame: int
    last_frame: int
    reviewed_submission_id: Optional[str] = None
    min_box_size: int = DEFAULT_MIN_BOX_SIZE
    status: SubmissionStatus = SubmissionStatus.IN_PROGRESS
    frames: dict[int, list[BoundingBox]] = field(default_factory=dict)
    visited: set[int] = field(default_factory=set)
    entry_snapshots: dict[int, tuple[BoundingBox, ...]] = field(default_factory=dict)
    time_log: list[tuple[int, float]] = field(default_factory=list)
    next_sequence_no: int = 0
    submitted_at: Optional[float] = None

    def boxes_on(self, frame: int) -> list[BoundingBox]:
        return list(self.frames.get(frame, []))

    def all_box_ids(self) -> set[str]:
        return {b.box_id for boxes in self.frames.values() for b in boxes}

    def total_seconds(self) -> float:
        return sum(seconds for _, seconds in self.time_log)

    def label_count(self) -> int:
        return sum(len(boxes) for boxes in self.frames.values())

    def to_dict(self) -> dict:
        return {
            "submission_id": self.submission_id,
            "video_segment_id": self.video_segment_id,
            "labeler_id": self.labeler_id,
            "mode": self.mode.value,
            "frame_width": self.frame_width,
            "frame_height": self.frame_height,
            "first_frame": self.first_frame,
            "last_frame": self.last_frame,
            "reviewed_submission_id": self.reviewed_submission_id,
            "min_box_size": self.min_box_size,
            "status": self.status.value,
            "frames": {
                str(f): [b.to_dict() for b in boxes]
                for f, boxes in sorted(self.frames.items())
            },
            "visited": sorted(self.visited),
            "entry_snapshots": {
                str(f): [b.to_dict() for b in snap]
                for f, snap in sorted(self.entry_snapshots.items())
            },
            "time_log": [[f, s] for f, s in self.time_log],
            "next_sequence_no": self.next_sequence_no,
            "submitted_at": self.submitted_at,
        }


def new_submission(
    submission_id: str,
    video_segment_id: str,
    labeler_id: str,
    mode: SubmissionMode,
    frame_width: int,
    frame_height: int,
    first_frame: int,
    last_frame: int,
    reviewed_submission_id: Optional[str] = None,
    seed_frames: Optional[dict[int, list[BoundingBox]]] = None,
    min_box_size: int = DEFAULT_MIN_BOX_SIZE,
) -> Submission:
    """Fresh submission positioned on its first frame.

    Review submissions are seeded with the reviewed submission's boxes
    (seed_frames); the first frame counts as visited with its seeded content
    as the entry snapshot.
    """
    if mode is SubmissionMode.REVIEW and reviewed_submission_id is None:
        raise DomainError("review submissions must reference a reviewed submission")
    if first_frame > last_frame:
        raise DomainError("first_frame must be <= last_frame")
    sub = Submission(
        submission_id=submission_id,
        video_segment_id=video_segment_id,
        labeler_id=labeler_id,
        mode=mode,
        frame_width=frame_width,
        frame_height=frame_height,
        first_frame=first_frame,
        last_frame=last_frame,
        reviewed_submission_id=reviewed_submission_id,
        min_box_size=min_box_size,
    )
    if seed_frames:
        sub.frames = {f: list(boxes) for f, boxes in seed_frames.items() if boxes}
    sub.visited.add(first_frame)
    sub.entry_snapshots[first_frame] = tuple(sub.frames.get(first_frame, []))
    return sub


# --- event application -----------------------------------------------------

def apply_event(sub: Submission, event: SubmissionEvent) -> Submission:
    """Apply one event in place; the single transition function for folds."""
    if sub.status is not SubmissionStatus.IN_PROGRESS:
        raise StateError(
            f"submission {sub.submission_id} is {sub.status.value}; no further events"
        )
    if event.sequence_no != sub.next_sequence_no:
        raise ConflictError(
            f"expected sequence {sub.next_sequence_no}, got {event.sequence_no}"
        )
    handler = _HANDLERS[event.kind]
    handler(sub, event)
    sub.next_sequence_no += 1
    return sub


def _require_frame(sub: Submission, frame: int) -> int:
    if not sub.first_frame <= frame <= sub.last_frame:
        raise DomainError(
            f"frame {frame} outside segment range "
            f"[{sub.first_frame}, {sub.last_frame}]"
        )
    return frame


def _find_box(sub: Submission, frame: int, box_id: str) -> tuple[int, BoundingBox]:
    boxes = sub.frames.get(frame, [])
    for i, b in enumerate(boxes):
        if b.box_id == box_id:
            return i, b
    raise DomainError(f"no box {box_id!r} on frame {frame}")


def _apply_box_drawn(sub: Submission, event: SubmissionEvent) -> None:
    frame = _require_frame(sub, int(event.payload["frame"]))
    box = BoundingBox.from_dict(event.payload["box"])
    if box.frame_index != frame:
        raise DomainError("box frame_index does not match event frame")
    if box.box_id in sub.all_box_ids():
        raise DomainError(f"duplicate box id {box.box_id!r}")
    clipped = clamp_and_filter(box, sub.frame_width, sub.frame_height, sub.min_box_size)
    if clipped is None:
        raise DomainError(f"box {box.box_id!r} rejected by the size filter")
    sub.frames.setdefault(frame, []).append(clipped)


def _apply_box_moved(sub: Submission, event: SubmissionEvent) -> None:
    frame = _require_frame(sub, int(event.payload["frame"]))
    i, box = _find_box(sub, frame, event.payload["box_id"])
    moved = replace(
        box,
        x=int(event.payload["x"]),
        y=int(event.payload["y"]),
        width=int(event.payload.get("width", box.width)),
        height=int(event.payload.get("height", box.height)),
    )
    clipped = clamp_and_filter(moved, sub.frame_width, sub.frame_height, sub.min_box_size)
    if clipped is None:
        raise DomainError(f"move of {box.box_id!r} rejected by the size filter")
    if sub.mode is SubmissionMode.REVIEW:
        clipped = replace(clipped, origin=Origin.REVIEW_EDITED)
    sub.frames[frame][i] = clipped


def _apply_box_deleted(sub: Submission, event: SubmissionEvent) -> None:
    frame = _require_frame(sub, int(event.payload["frame"]))
    i, _ = _find_box(sub, frame, event.payload["box_id"])
    del sub.frames[frame][i]


def _apply_box_reclassified(sub: Submission, event: SubmissionEvent) -> None:
    frame = _require_frame(sub, int(event.payload["frame"]))
    i, box = _find_box(sub, frame, event.payload["box_id"])
    updated = replace(box, category=Category(event.payload["category"]))
    if sub.mode is SubmissionMode.REVIEW:
        updated = replace(updated, origin=Origin.REVIEW_EDITED)
    sub.frames[frame][i] = updated


def _apply_frame_visited(sub: Submission, event: SubmissionEvent) -> None:
    from_frame = _require_frame(sub, int(event.payload["from"]))
    to_frame = _require_frame(sub, int(event.payload["to"]))
    boxes = [BoundingBox.from_dict(d) for d in event.payload.get("boxes", [])]
    if boxes and not _propagation_eligible(sub, from_frame, to_frame):
        raise DomainError(
            f"propagated boxes not allowed on visit {from_frame}->{to_frame}"
        )
    existing = sub.all_box_ids()
    for box in boxes:
        if box.frame_index != to_frame:
            raise DomainError("propagated box frame_index does not match target frame")
        if box.box_id in existing:
            raise DomainError(f"duplicate box id {box.box_id!r}")
        existing.add(box.box_id)
        sub.frames.setdefault(to_frame, []).append(box)
    sub.visited.add(to_frame)
    # Each navigation starts a new visit: undo rolls back to this point.
    sub.entry_snapshots[to_frame] = tuple(sub.frames.get(to_frame, []))


def _apply_undo(sub: Submission, event: SubmissionEvent) -> None:
    frame = _require_frame(sub, int(event.payload["frame"]))
    if frame not in sub.visited:
        raise DomainError(f"cannot undo unvisited frame {frame}")
    sub.frames[frame] = list(sub.entry_snapshots.get(frame, ()))


def _apply_time_tick(sub: Submission, event: SubmissionEvent) -> None:
    frame = _require_frame(sub, int(event.payload["frame"]))
    seconds = float(event.payload["seconds"])
    if seconds < 0:
        raise DomainError("active seconds must be >= 0")
    sub.time_log.append((frame, seconds))


def _apply_submit(sub: Submission, event: SubmissionEvent) -> None:
    sub.status = SubmissionStatus.SUBMITTED
    sub.submitted_at = event.timestamp


def _apply_delete(sub: Submission, event: SubmissionEvent) -> None:
    sub.status = SubmissionStatus.DELETED
    sub.frames.clear()
    sub.entry_snapshots.clear()
    sub.visited.clear()


_HANDLERS = {
    EventKind.BOX_DRAWN: _apply_box_drawn,
    EventKind.BOX_MOVED: _apply_box_moved,
    EventKind.BOX_DELETED: _apply_box_deleted,
    EventKind.BOX_RECLASSIFIED: _apply_box_reclassified,
    EventKind.FRAME_VISITED: _apply_frame_visited,
    EventKind.UNDO: _apply_undo,
    EventKind.TIME_TICK: _apply_time_tick,
    EventKind.SUBMIT: _apply_submit,
    EventKind.DELETE: _apply_delete,
}


# --- operations ------------------------------------------------------------

def _propagation_eligible(sub: Submission, from_frame: int, to_frame: int) -> bool:
    return (
        sub.mode is SubmissionMode.LABEL
        and to_frame == from_frame + 1
        and to_frame not in sub.visited
    )


def plan_advance(
    sub: Submission,
    from_frame: int,
    to_frame: int,
    tracker_enabled: bool,
    cfg: TrackerConfig,
    new_frame: Optional[FrameImage] = None,
    timestamp: float = 0.0,
) -> tuple[SubmissionEvent, list[BoundingBox]]:
    """Build the FrameVisited event for a navigation without mutating sub.

    Propagation populates the target frame only on its first visit, only in
    Label mode, and only when stepping forward by one frame. Propagated
    boxes get submission-unique ids derived from their source box.
    """
    if sub.status is not SubmissionStatus.IN_PROGRESS:
        raise StateError(f"submission {sub.submission_id} is {sub.status.value}")
    _require_frame(sub, from_frame)
    _require_frame(sub, to_frame)

    created: list[BoundingBox] = []
    if _propagation_eligible(sub, from_frame, to_frame):
        prev = sub.boxes_on(from_frame)
        if prev:
            if tracker_enabled:
                if new_frame is None:
                    raise DomainError("tracking requires the new frame's pixels")
                if new_frame.frame_index != to_frame:
                    raise DomainError(
                        f"frame image is for frame {new_frame.frame_index}, "
                        f"expected {to_frame}"
                    )
                moved = track_boxes(prev, new_frame, cfg)
            else:
                moved = copy_boxes(prev)
            created = [
                replace(b, box_id=f"{src.box_id}@{to_frame}")
                for src, b in zip(prev, moved)
            ]
    event = SubmissionEvent(
        sequence_no=sub.next_sequence_no,
        kind=EventKind.FRAME_VISITED,
        payload={
            "from": from_frame,
            "to": to_frame,
            "boxes": [b.to_dict() for b in created],
        },
        timestamp=timestamp,
    )
    return event, created


def advance_frame(
    sub: Submission,
    from_frame: int,
    to_frame: int,
    tracker_enabled: bool,
    cfg: TrackerConfig,
    new_frame: Optional[FrameImage] = None,
    timestamp: float = 0.0,
) -> list[BoundingBox]:
    """Navigate from_frame -> to_frame, propagating boxes on first visits."""
    event, created = plan_advance(
        sub, from_frame, to_frame, tracker_enabled, cfg, new_frame, timestamp
    )
    apply_event(sub, event)
    return created


def undo_frame(sub: Submission, frame: int, timestamp: float = 0.0) -> Submission:
    """Restore a frame's boxes to their entry snapshot (visit start state)."""
    if frame not in sub.visited:
        raise DomainError(f"cannot undo unvisited frame {frame}")
    event = SubmissionEvent(
        sequence_no=sub.next_sequence_no,
        kind=EventKind.UNDO,
        payload={"frame": frame},
        timestamp=timestamp,
    )
    return apply_event(sub, event)


def submit(sub: Submission, confirmed: bool = False, timestamp: float = 0.0) -> Submission:
    """Finalize a submission; requires explicit confirmation."""
    if not confirmed:
        raise DomainError("submit requires confirmation")
    if sub.status is not SubmissionStatus.IN_PROGRESS:
        raise StateError(f"cannot submit a {sub.status.value} submission")
    event = SubmissionEvent(
        sequence_no=sub.next_sequence_no,
        kind=EventKind.SUBMIT,
        payload={},
        timestamp=timestamp,
    )
    return apply_event(sub, event)


def delete_progress(
    sub: Submission, confirmed: bool = False, timestamp: float = 0.0
) -> Submission:
    """Discard all progress irreversibly; requires explicit confirmation."""
    if not confirmed:
        raise DomainError("delete requires confirmation")
    if sub.status is not SubmissionStatus.IN_PROGRESS:
        raise StateError(f"cannot delete a {sub.status.value} submission")
    event = SubmissionEvent(
        sequence_no=sub.next_sequence_no,
        kind=EventKind.DELETE,
        payload={},
        timestamp=timestamp,
    )
    return apply_event(sub, event)


# --- segmentation and assignments -------------------------------------------

class AssignmentRole(str, Enum):
    LABEL = "Label"
    REVIEW = "Review"


class AssignmentStatus(str, Enum):
    OPEN = "Open"
    DONE = "Done"
    REASSIGNED = "Reassigned"


@dataclass
class VideoSegment:
    segment_id: str
    video_id: str
    first_frame: int
    last_frame: int
    predecessor_note: str = ""

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "video_id": self.video_id,
            "first_frame": self.first_frame,
            "last_frame": self.last_frame,
            "predecessor_note": self.predecessor_note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VideoSegment":
        return cls(
            segment_id=d["segment_id"],
            video_id=d["video_id"],
            first_frame=int(d["first_frame"]),
            last_frame=int(d["last_frame"]),
            predecessor_note=d.get("predecessor_note", ""),
        )


@dataclass
class Assignment:
    assignment_id: str
    account_id: str
    video_segment_id: str
    role: AssignmentRole
    week: str
    status: AssignmentStatus = AssignmentStatus.OPEN

    def to_dict(self) -> dict:
        return {
            "assignment_id": self.assignment_id,
            "account_id": self.account_id,
            "video_segment_id": self.video_segment_id,
            "role": self.role.value,
            "week": self.week,
            "status": self.status.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Assignment":
        return cls(
            assignment_id=d["assignment_id"],
            account_id=d["account_id"],
            video_segment_id=d["video_segment_id"],
            role=AssignmentRole(d["role"]),
            week=d["week"],
            status=AssignmentStatus(d.get("status", "Open")),
        )


def split_video(
    video_id: str, frame_count: int, max_frames_per_segment: int
) -> list[VideoSegment]:
    """Contiguous disjoint segments covering all frames; only the last may be short."""
    if frame_count < 1:
        raise DomainError("cannot split a video with no frames")
    if max_frames_per_segment < 1:
        raise DomainError("max_frames_per_segment must be >= 1")
    segments = []
    for first in range(0, frame_count, max_frames_per_segment):
        last = min(first + max_frames_per_segment - 1, frame_count - 1)
        segments.append(
            VideoSegment(
                segment_id=f"{video_id}:{first:06d}-{last:06d}",
                video_id=video_id,
                first_frame=first,
                last_frame=last,
            )
        )
    return segments


def create_assignments(
    segments: Iterable[VideoSegment],
    labelers: Iterable[str],
    framework: str,
    week: str,
    panel_size: int = 5,
    existing: Iterable[Assignment] = (),
) -> list[Assignment]:
    """Distribute Label/Review work over labelers.

    MajVote hands each segment to panel_size distinct labelers; LabelReview
    hands each segment one labeler and one (different) reviewer. Balancing is
    round-robin on the number of open assignments an account already holds in
    the role being filled, ties by account id, so roles rotate instead of
    sticking to the lexicographically first account.
    """
    from .consensus import Framework

    fw = Framework(framework)
    accounts = sorted(set(labelers))
    if fw is Framework.MAJ_VOTE and len(accounts) < panel_size:
        raise ConfigurationError(
            f"MajVote needs at least {panel_size} labelers, got {len(accounts)}"
        )
    if fw is Framework.LABEL_REVIEW and len(accounts) < 2:
        raise ConfigurationError("LabelReview needs at least 2 labelers")

    open_counts: dict[tuple[str, AssignmentRole], int] = {}
    next_id = 0
    for a in existing:
        next_id = max(next_id, int(a.assignment_id.lstrip("a")) + 1)
        if a.status is AssignmentStatus.OPEN:
            key = (a.account_id, a.role)
            open_counts[key] = open_counts.get(key, 0) + 1

    def pick(role: AssignmentRole, exclude: set[str]) -> str:
        pool = [a for a in accounts if a not in exclude]
        pool.sort(key=lambda a: (open_counts.get((a, role), 0), a))
        return pool[0]

    def assign(segment: VideoSegment, account: str, role: AssignmentRole) -> Assignment:
        nonlocal next_id
        a = Assignment(
            assignment_id=f"a{next_id:05d}",
            account_id=account,
            video_segment_id=segment.segment_id,
            role=role,
            week=week,
        )
        next_id += 1
        open_counts[(account, role)] = open_counts.get((account, role), 0) + 1
        return a

    out: list[Assignment] = []
    for segment in segments:
        if fw is Framework.MAJ_VOTE:
            taken: set[str] = set()
            for _ in range(panel_size):
                account = pick(AssignmentRole.LABEL, taken)
                taken.add(account)
                out.append(assign(segment, account, AssignmentRole.LABEL))
        else:
            labeler = pick(AssignmentRole.LABEL, set())
            out.append(assign(segment, labeler, AssignmentRole.LABEL))
            reviewer = pick(AssignmentRole.REVIEW, {labeler})
            out.append(assign(segment, reviewer, AssignmentRole.REVIEW))
    return out


ASSIGNMENT_CSV_HEADER = "assignment_id,account,video_segment,role,week,status"


def assignments_to_csv(assignments: Iterable[Assignment]) -> str:
    """The shareable-spreadsheet export."""
    lines = [ASSIGNMENT_CSV_HEADER]
    for a in assignments:
        lines.append(
            f"{a.assignment_id},{a.account_id},{a.video_segment_id},"
            f"{a.role.value},{a.week},{a.status.value}"
        )
    return "\n".join(lines) + "\n"

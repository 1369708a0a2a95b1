"""Final-label production: panel majority voting and label-review merging.

Majority voting walks the panel in index order. Each not-yet-consumed box
becomes an anchor; the anchor is matched against every other panelist's
unconsumed boxes and, when enough distinct panelists agree, a final label is
emitted with the anchor's exact coordinates and the whole cluster is
consumed. Review merging simply promotes the reviewer's resulting box set.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from .errors import ConfigurationError, DomainError, IntegrityError, StateError
from .geometry import BoundingBox, greedy_match

if TYPE_CHECKING:
    from .workflow import Submission

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_QUORUM = 3
DEFAULT_PANEL_SIZE = 5


class Framework(str, Enum):
    MAJ_VOTE = "MajVote"
    LABEL_REVIEW = "LabelReview"


@dataclass(frozen=True)
class ConsensusConfig:
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    quorum: int = DEFAULT_QUORUM
    panel_size: int = DEFAULT_PANEL_SIZE

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigurationError("iou_threshold must be in (0, 1]")
        if not 1 <= self.quorum <= self.panel_size:
            raise ConfigurationError("quorum must satisfy 1 <= quorum <= panel_size")


@dataclass(frozen=True)
class FinalLabel:
    box: BoundingBox
    supporting_labelers: frozenset[str]
    framework: Framework
    reviewer_id: str | None = None

    def to_dict(self) -> dict:
        d = self.box.to_dict()
        d["supporting_labelers"] = sorted(self.supporting_labelers)
        d["framework"] = self.framework.value
        d["reviewer_id"] = self.reviewer_id
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FinalLabel":
        return cls(
            box=BoundingBox.from_dict(d),
            supporting_labelers=frozenset(d["supporting_labelers"]),
            framework=Framework(d["framework"]),
            reviewer_id=d.get("reviewer_id"),
        )


def majority_vote_frame(
    sets: list[list[BoundingBox]],
    cfg: ConsensusConfig,
) -> list[FinalLabel]:
    """Consensus labels for one frame from panel_size labelers' box sets.

    Anchors are tried labeler by labeler (boxes in box_id order within a
    labeler, so the result is invariant to input shuffling). A cluster is
    emitted only when the anchor plus its matches span >= quorum distinct
    panelists; emitted clusters are consumed so a box supports at most one
    final label. Cluster category is the majority category, anchor wins ties.
    """
    if len(sets) != cfg.panel_size:
        raise ConfigurationError(
            f"expected {cfg.panel_size} label sets, got {len(sets)}"
        )
    frames = {b.frame_index for boxes in sets for b in boxes}
    if len(frames) > 1:
        raise DomainError(f"label sets span multiple frames: {sorted(frames)}")

    consumed: set[tuple[int, str]] = set()  # (labeler index, box_id)
    finals: list[FinalLabel] = []

    for i, anchor_set in enumerate(sets):
        for anchor in sorted(anchor_set, key=lambda b: b.box_id):
            if (i, anchor.box_id) in consumed:
                continue
            cluster: list[tuple[int, BoundingBox]] = [(i, anchor)]
            for j, other_set in enumerate(sets):
                if j == i:
                    continue
                available = [b for b in other_set if (j, b.box_id) not in consumed]
                pairs = greedy_match([anchor], available, cfg.iou_threshold)
                if pairs:
                    matched = next(
                        b for b in available if b.box_id == pairs[0].other_box_id
                    )
                    cluster.append((j, matched))
            if len(cluster) < cfg.quorum:
                continue
            counts = Counter(b.category for _, b in cluster)
            top = counts.most_common(1)[0][1]
            leaders = {c for c, n in counts.items() if n == top}
            if anchor.category in leaders:
                category = anchor.category
            else:
                category = min(leaders, key=lambda c: c.value)
            finals.append(
                FinalLabel(
                    box=BoundingBox(
                        box_id=anchor.box_id,
                        frame_index=anchor.frame_index,
                        x=anchor.x,
                        y=anchor.y,
                        width=anchor.width,
                        height=anchor.height,
                        category=category,
                        origin=anchor.origin,
                        author_id=anchor.author_id,
                    ),
                    supporting_labelers=frozenset(b.author_id for _, b in cluster),
                    framework=Framework.MAJ_VOTE,
                )
            )
            consumed.update((j, b.box_id) for j, b in cluster)
    return finals


def majority_vote_video(
    submissions: list["Submission"],
    cfg: ConsensusConfig,
) -> list[FinalLabel]:
    """Per-frame majority voting over a full panel of submitted submissions."""
    from .workflow import SubmissionStatus

    if len(submissions) != cfg.panel_size:
        raise ConfigurationError(
            f"expected {cfg.panel_size} submissions, got {len(submissions)}"
        )
    segments = {s.video_segment_id for s in submissions}
    if len(segments) > 1:
        raise DomainError(f"submissions span multiple segments: {sorted(segments)}")
    for s in submissions:
        if s.status is not SubmissionStatus.SUBMITTED:
            raise StateError(f"submission {s.submission_id} is not submitted")

    all_frames = sorted({f for s in submissions for f in s.frames if s.frames[f]})
    finals: list[FinalLabel] = []
    for frame in all_frames:
        per_labeler = [list(s.frames.get(frame, [])) for s in submissions]
        frame_finals = majority_vote_frame(per_labeler, cfg)
        frame_finals.sort(key=lambda fl: fl.box.box_id)
        finals.extend(frame_finals)
    return finals


def review_merge(original: "Submission", review: "Submission") -> list[FinalLabel]:
    """Promote a reviewer's resulting box set to final labels.

    Every surviving box keeps its creator as author; the reviewer is recorded
    on each label. The output is exactly the review submission's boxes.
    """
    from .workflow import SubmissionMode, SubmissionStatus

    if review.mode is not SubmissionMode.REVIEW:
        raise DomainError("review submission must be in Review mode")
    if review.reviewed_submission_id != original.submission_id:
        raise IntegrityError(
            f"review {review.submission_id} does not reference "
            f"{original.submission_id}"
        )
    if review.status is not SubmissionStatus.SUBMITTED:
        raise StateError(f"review {review.submission_id} is not submitted")

    reviewer = review.labeler_id
    finals: list[FinalLabel] = []
    for frame in sorted(review.frames):
        for box in sorted(review.frames[frame], key=lambda b: b.box_id):
            finals.append(
                FinalLabel(
                    box=box,
                    supporting_labelers=frozenset({box.author_id, reviewer}),
                    framework=Framework.LABEL_REVIEW,
                    reviewer_id=reviewer,
                )
            )
    return finals

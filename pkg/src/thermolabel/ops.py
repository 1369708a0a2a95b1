"""Operator-level operations shared by the admin CLI and the HTTP service:
running consensus over a segment, exporting final labels, and assembling
efficiency reports from the submission store.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .analytics import (
    EfficiencyReport,
    FrameworkRun,
    ParticipantRole,
    TimePerLabelEntry,
    build_report,
    label_density,
)
from .consensus import (
    ConsensusConfig,
    FinalLabel,
    Framework,
    majority_vote_video,
    review_merge,
)
from .errors import StateError
from .store import DataStore
from .workflow import AssignmentRole, Submission, SubmissionMode, SubmissionStatus


def _submitted(subs: list[Submission], mode: SubmissionMode) -> list[Submission]:
    return [
        s
        for s in subs
        if s.mode is mode and s.status is SubmissionStatus.SUBMITTED
    ]


def run_consensus(
    store: DataStore,
    segment_id: str,
    framework: str,
    cfg: Optional[ConsensusConfig] = None,
) -> list[FinalLabel]:
    """Compute and persist final labels for one segment.

    MajVote needs one submitted Label submission per assigned panelist (or,
    without assignments, panel_size submitted Label submissions); the panel
    order follows assignment order so the anchoring "first labeler" is
    well defined. LabelReview needs a submitted review and its original.
    """
    cfg = cfg or ConsensusConfig()
    store.get_segment(segment_id)
    subs = store.list_submissions(segment_id=segment_id)
    fw = Framework(framework)

    if fw is Framework.MAJ_VOTE:
        labeled = _submitted(subs, SubmissionMode.LABEL)
        by_account = {}
        for s in labeled:  # later submissions win (resubmission after reassignment)
            by_account.setdefault(s.labeler_id, s)
        assigned = [
            a.account_id
            for a in store.list_assignments()
            if a.video_segment_id == segment_id and a.role is AssignmentRole.LABEL
        ]
        if assigned:
            missing = [acc for acc in assigned if acc not in by_account]
            if missing:
                raise StateError(
                    f"segment {segment_id}: outstanding label submissions from "
                    + ", ".join(sorted(missing))
                )
            panel = [by_account[acc] for acc in assigned[: cfg.panel_size]]
        else:
            panel = sorted(by_account.values(), key=lambda s: s.submission_id)
        if len(panel) < cfg.panel_size:
            raise StateError(
                f"segment {segment_id}: {len(panel)} of {cfg.panel_size} "
                "label submissions present"
            )
        panel = panel[: cfg.panel_size]
        finals = majority_vote_video(panel, cfg)
        used = [s.submission_id for s in panel]
    else:
        reviews = _submitted(subs, SubmissionMode.REVIEW)
        if not reviews:
            raise StateError(f"segment {segment_id}: no submitted review")
        review = max(reviews, key=lambda s: s.submission_id)
        original = store.load_submission(review.reviewed_submission_id)
        finals = review_merge(original, review)
        used = [original.submission_id, review.submission_id]

    store.save_finals(segment_id, fw.value, finals, used)
    return finals


# --- export -------------------------------------------------------------------

EXPORT_CSV_HEADER = (
    "video_id,frame_index,x,y,width,height,category,framework,"
    "supporting_labelers,reviewer_id"
)


@dataclass(frozen=True)
class ExportRecord:
    video_id: str
    frame_index: int
    x: int
    y: int
    width: int
    height: int
    category: str
    framework: str
    supporting_labelers: tuple[str, ...]
    reviewer_id: Optional[str]

    def csv_line(self) -> str:
        return (
            f"{self.video_id},{self.frame_index},{self.x},{self.y},"
            f"{self.width},{self.height},{self.category},{self.framework},"
            f"{';'.join(self.supporting_labelers)},{self.reviewer_id or ''}"
        )

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "frame_index": self.frame_index,
            "x": self.x,
            "y": self.y,
            "width": self.width,
            "height": self.height,
            "category": self.category,
            "framework": self.framework,
            "supporting_labelers": list(self.supporting_labelers),
            "reviewer_id": self.reviewer_id,
        }


def _segment_video(segment_id: str) -> str:
    return segment_id.rsplit(":", 1)[0]


def export_records(
    store: DataStore, video_ids: Optional[Sequence[str]] = None
) -> list[ExportRecord]:
    """One record per persisted final label, deterministically sorted."""
    records = []
    for rec in store.list_finals():
        video_id = _segment_video(rec["segment_id"])
        if video_ids and video_id not in video_ids:
            continue
        for raw in rec["labels"]:
            fl = FinalLabel.from_dict(raw)
            records.append(
                ExportRecord(
                    video_id=video_id,
                    frame_index=fl.box.frame_index,
                    x=fl.box.x,
                    y=fl.box.y,
                    width=fl.box.width,
                    height=fl.box.height,
                    category=fl.box.category.value,
                    framework=fl.framework.value,
                    supporting_labelers=tuple(sorted(fl.supporting_labelers)),
                    reviewer_id=fl.reviewer_id,
                )
            )
    records.sort(
        key=lambda r: (r.video_id, r.frame_index, r.x, r.y, r.width, r.height, r.category)
    )
    return records


def records_to_csv(records: Sequence[ExportRecord]) -> str:
    lines = [EXPORT_CSV_HEADER]
    lines.extend(r.csv_line() for r in records)
    return "\n".join(lines) + "\n"


def records_to_jsonl(records: Sequence[ExportRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


# --- report assembly -----------------------------------------------------------

def efficiency_inputs(
    store: DataStore,
) -> tuple[list[FrameworkRun], dict, list[TimePerLabelEntry]]:
    """Pull runs, densities and individual time entries out of the store.

    Everything is recomputed from persisted finals and submission logs; there
    is no hidden report state.
    """
    per_video_seconds: dict[str, dict[str, float]] = {}
    per_video_finals: dict[str, int] = {}
    per_video_frameworks: dict[str, set[str]] = {}
    per_video_frame_counts: dict[str, Counter] = {}
    entries: list[TimePerLabelEntry] = []

    for rec in store.list_finals():
        video_id = _segment_video(rec["segment_id"])
        per_video_finals[video_id] = per_video_finals.get(video_id, 0) + len(
            rec["labels"]
        )
        per_video_frameworks.setdefault(video_id, set()).add(rec["framework"])
        counts = per_video_frame_counts.setdefault(video_id, Counter())
        for raw in rec["labels"]:
            counts[int(raw["frame_index"])] += 1
        seconds = per_video_seconds.setdefault(video_id, {})
        for sid in rec["submission_ids"]:
            sub = store.load_submission(sid)
            seconds[sub.labeler_id] = seconds.get(sub.labeler_id, 0.0) + sub.total_seconds()
            role = (
                ParticipantRole.REVIEWER
                if sub.mode is SubmissionMode.REVIEW
                else ParticipantRole.LABELER
            )
            entries.append(
                TimePerLabelEntry(
                    video_id=video_id,
                    account_id=sub.labeler_id,
                    role=role,
                    person_seconds=sub.total_seconds(),
                    label_count=sub.label_count(),
                )
            )

    runs = []
    densities = {}
    for video_id in sorted(per_video_finals):
        frame_count = store.get_video(video_id).frame_count
        runs.append(
            FrameworkRun(
                video_id=video_id,
                framework="+".join(sorted(per_video_frameworks[video_id])),
                participant_seconds=per_video_seconds[video_id],
                final_label_count=per_video_finals[video_id],
            )
        )
        densities[video_id] = label_density(
            per_video_frame_counts[video_id], frame_count
        )
    return runs, densities, entries


def efficiency_report(
    store: DataStore, trim: bool = True, per_group_trim: bool = True
) -> EfficiencyReport:
    runs, densities, entries = efficiency_inputs(store)
    return build_report(
        runs, densities, entries, trim=trim, per_group_trim=per_group_trim
    )

"""Labeling-efficiency and label-density metrics.

Overall efficiency is total person-seconds across every participant on a
video divided by final-label count; individual efficiency is one person's
seconds over the labels they produced or checked. Videos group into four
density bands by average labels per frame, and per-label time entries can be
trimmed by 5% at each tail before averaging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DomainError

TRIM_FRACTION = 0.05


class ParticipantRole(str, Enum):
    LABELER = "Labeler"
    REVIEWER = "Reviewer"


class DensityGroup(str, Enum):
    G1 = "G1"  # (0, 1)
    G2 = "G2"  # [1, 2)
    G3 = "G3"  # [2, 3)
    G4 = "G4"  # [3, inf)
    EMPTY = "Empty"  # exactly zero labels


@dataclass(frozen=True)
class TimePerLabelEntry:
    video_id: str
    account_id: str
    role: ParticipantRole
    person_seconds: float
    label_count: int

    def seconds_per_label(self) -> Optional[float]:
        if self.label_count < 1:
            return None
        return self.person_seconds / self.label_count


@dataclass(frozen=True)
class FrameworkRun:
    """One video labeled end to end under one framework."""

    video_id: str
    framework: str
    participant_seconds: Mapping[str, float]  # account -> person seconds
    final_label_count: int


def label_density(
    frame_label_counts: Mapping[int, int], frame_count: int
) -> tuple[float, Optional[float]]:
    """(average labels per frame, average labels per labeled frame).

    The second average counts only frames holding at least one label and is
    None when the video has no labeled frames.
    """
    if frame_count < 1:
        raise DomainError("frame_count must be >= 1")
    total = sum(frame_label_counts.values())
    labeled = sum(1 for n in frame_label_counts.values() if n > 0)
    per_frame = total / frame_count
    per_labeled = total / labeled if labeled else None
    return per_frame, per_labeled


def density_group(avg_per_frame: float) -> DensityGroup:
    """Density band with half-open boundaries at 1, 2 and 3."""
    if avg_per_frame < 0:
        raise DomainError("average labels per frame cannot be negative")
    if avg_per_frame == 0:
        return DensityGroup.EMPTY
    if avg_per_frame < 1:
        return DensityGroup.G1
    if avg_per_frame < 2:
        return DensityGroup.G2
    if avg_per_frame < 3:
        return DensityGroup.G3
    return DensityGroup.G4


def trim_outliers(entries: Sequence[TimePerLabelEntry]) -> list[TimePerLabelEntry]:
    """Drop the floor(5% of n) fastest and slowest per-label entries.

    Entries sort by seconds per label; the sort is stable, so ties keep
    their input order. Returns the surviving entries in sorted order.
    """
    for e in entries:
        if e.label_count < 1:
            raise DomainError(
                f"entry for {e.account_id} on {e.video_id} has no labels"
            )
    n = len(entries)
    k = math.floor(TRIM_FRACTION * n)
    ordered = sorted(entries, key=lambda e: e.person_seconds / e.label_count)
    return ordered[k : n - k] if k else ordered


def overall_efficiency(run: FrameworkRun) -> Optional[float]:
    """Person-seconds per final label for one video, all participants summed.

    None when the run produced no final labels (the video is then excluded
    from efficiency reporting rather than dividing by zero).
    """
    if run.final_label_count < 1:
        return None
    return sum(run.participant_seconds.values()) / run.final_label_count


def individual_efficiency(entry: TimePerLabelEntry) -> Optional[float]:
    """Seconds per label for one participant; None when they made no labels."""
    return entry.seconds_per_label()


@dataclass(frozen=True)
class HistogramBin:
    bin_low: int
    bin_high: int
    count: int


def _bin_values(values: Iterable[float], min_bins: int) -> list[HistogramBin]:
    values = list(values)
    top = max([min_bins] + [math.floor(v) + 1 for v in values])
    counts = [0] * top
    for v in values:
        counts[min(math.floor(v), top - 1)] += 1
    return [HistogramBin(i, i + 1, c) for i, c in enumerate(counts)]


def density_histogram(
    densities: Sequence[tuple[float, Optional[float]]],
    min_bins: int = 4,
) -> tuple[list[HistogramBin], list[HistogramBin]]:
    """Video counts per unit-width density bin.

    Input is one (avg per frame, avg per labeled frame) pair per video; the
    second histogram skips videos without labeled frames. Both tables always
    contain at least min_bins bins so an empty corpus still yields a
    plot-ready all-zero table.
    """
    per_frame = _bin_values((d[0] for d in densities), min_bins)
    per_labeled = _bin_values(
        (d[1] for d in densities if d[1] is not None), min_bins
    )
    return per_frame, per_labeled


def histogram_csv(bins: Sequence[HistogramBin]) -> str:
    lines = ["bin_low,bin_high,count"]
    lines.extend(f"{b.bin_low},{b.bin_high},{b.count}" for b in bins)
    return "\n".join(lines) + "\n"


# --- report assembly ---------------------------------------------------------

@dataclass(frozen=True)
class VideoEfficiency:
    video_id: str
    framework: str
    total_person_seconds: float
    final_label_count: int
    seconds_per_final_label: Optional[float]
    avg_labels_per_frame: float
    avg_labels_per_labeled_frame: Optional[float]
    group: DensityGroup


@dataclass
class EfficiencyReport:
    videos: list[VideoEfficiency]
    entries: list[TimePerLabelEntry]
    surviving_entries: list[TimePerLabelEntry]
    trimmed_entry_count: int
    group_means: dict[str, Optional[float]]  # density group -> mean s/label
    framework_means: dict[str, Optional[float]]  # framework -> mean overall s/label
    per_frame_hist: list[HistogramBin] = field(default_factory=list)
    per_labeled_frame_hist: list[HistogramBin] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "videos": [
                {
                    "video_id": v.video_id,
                    "framework": v.framework,
                    "total_person_seconds": v.total_person_seconds,
                    "final_label_count": v.final_label_count,
                    "seconds_per_final_label": v.seconds_per_final_label,
                    "avg_labels_per_frame": v.avg_labels_per_frame,
                    "avg_labels_per_labeled_frame": v.avg_labels_per_labeled_frame,
                    "density_group": v.group.value,
                }
                for v in self.videos
            ],
            "individual_entries": [
                {
                    "video_id": e.video_id,
                    "account_id": e.account_id,
                    "role": e.role.value,
                    "person_seconds": e.person_seconds,
                    "label_count": e.label_count,
                    "seconds_per_label": e.seconds_per_label(),
                }
                for e in self.entries
            ],
            "trimmed_entry_count": self.trimmed_entry_count,
            "group_mean_seconds_per_label": self.group_means,
            "framework_mean_seconds_per_final_label": self.framework_means,
            "histogram_labels_per_frame": [
                {"bin_low": b.bin_low, "bin_high": b.bin_high, "count": b.count}
                for b in self.per_frame_hist
            ],
            "histogram_labels_per_labeled_frame": [
                {"bin_low": b.bin_low, "bin_high": b.bin_high, "count": b.count}
                for b in self.per_labeled_frame_hist
            ],
        }


def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def build_report(
    runs: Sequence[FrameworkRun],
    densities: Mapping[str, tuple[float, Optional[float]]],
    entries: Sequence[TimePerLabelEntry],
    trim: bool = True,
    per_group_trim: bool = True,
) -> EfficiencyReport:
    """Assemble the full efficiency report.

    Trimming defaults to per density group (the grouping exists to compare
    like with like); per_group_trim=False trims the global entry list once.
    Zero-label videos surface with group Empty and no per-label number
    instead of being dropped silently.
    """
    videos = []
    for run in runs:
        per_frame, per_labeled = densities.get(run.video_id, (0.0, None))
        videos.append(
            VideoEfficiency(
                video_id=run.video_id,
                framework=run.framework,
                total_person_seconds=sum(run.participant_seconds.values()),
                final_label_count=run.final_label_count,
                seconds_per_final_label=overall_efficiency(run),
                avg_labels_per_frame=per_frame,
                avg_labels_per_labeled_frame=per_labeled,
                group=density_group(per_frame),
            )
        )

    entries = [e for e in entries if e.label_count >= 1]
    group_of_video = {v.video_id: v.group for v in videos}
    if trim:
        if per_group_trim:
            surviving = []
            for group in DensityGroup:
                member = [
                    e for e in entries if group_of_video.get(e.video_id) is group
                ]
                surviving.extend(trim_outliers(member))
        else:
            surviving = trim_outliers(entries)
    else:
        surviving = list(entries)

    group_means: dict[str, Optional[float]] = {}
    for group in DensityGroup:
        vals = [
            e.person_seconds / e.label_count
            for e in surviving
            if group_of_video.get(e.video_id) is group
        ]
        group_means[group.value] = _mean(vals)

    framework_means: dict[str, Optional[float]] = {}
    for fw in sorted({v.framework for v in videos}):
        vals = [
            v.seconds_per_final_label
            for v in videos
            if v.framework == fw and v.seconds_per_final_label is not None
        ]
        framework_means[fw] = _mean(vals)

    per_frame_hist, per_labeled_hist = density_histogram(list(densities.values()))
    return EfficiencyReport(
        videos=videos,
        entries=list(entries),
        surviving_entries=surviving,
        trimmed_entry_count=len(entries) - len(surviving),
        group_means=group_means,
        framework_means=framework_means,
        per_frame_hist=per_frame_hist,
        per_labeled_frame_hist=per_labeled_hist,
    )

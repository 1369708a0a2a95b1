"""Brightness-threshold tracking of boxes between consecutive frames.

Per box: expand it by a user-controlled buffer to form a search area in the
new frame, threshold that area, run connected-component analysis, and
re-center the box on the largest bright component. Oversized boxes and
boxes with an empty thresholded region are copied unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .geometry import BoundingBox, Origin

DEFAULT_BUFFER = 10
MAX_BUFFER = 50
DEFAULT_BRIGHTNESS_THRESHOLD = 200
DEFAULT_SIZE_THRESHOLD = 2500


@dataclass(frozen=True)
class FrameImage:
    """Single-channel intensity grid for one video frame.

    pixels is a (height, width) uint8 array; row-major, values 0..255.
    """

    width: int
    height: int
    pixels: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.uint8)
        if arr.shape != (self.height, self.width):
            raise DomainError(
                f"pixel grid shape {arr.shape} != (height={self.height}, width={self.width})"
            )
        object.__setattr__(self, "pixels", arr)

    def inverted(self) -> "FrameImage":
        """Flip polarity (white-hot <-> black-hot)."""
        return replace(self, pixels=255 - self.pixels)


@dataclass(frozen=True)
class TrackerConfig:
    buffer: int = DEFAULT_BUFFER
    brightness_threshold: int = DEFAULT_BRIGHTNESS_THRESHOLD
    size_threshold: int = DEFAULT_SIZE_THRESHOLD
    connectivity: int = 8

    def __post_init__(self):
        if self.buffer < 0:
            raise DomainError("buffer must be >= 0")
        if not 0 <= self.brightness_threshold <= 255:
            raise DomainError("brightness_threshold must be in [0, 255]")
        if self.size_threshold <= 0:
            raise DomainError("size_threshold must be positive")
        if self.connectivity not in (4, 8):
            raise DomainError("connectivity must be 4 or 8")


@dataclass(frozen=True)
class ComponentStats:
    pixel_count: int
    centroid_row: float
    centroid_col: float
    min_row: int
    min_col: int
    max_row: int
    max_col: int


def threshold_region(
    frame: FrameImage,
    rect: BoundingBox,
    buffer: int,
    thresh: int,
) -> tuple[np.ndarray, tuple[int, int]]:
    """Binary mask of the buffered search area around rect in frame.

    The region is rect grown by `buffer` on all four sides, clipped to the
    frame. Returns (mask, (x0, y0)) where mask[r, c] == 1 iff the pixel
    intensity is >= thresh and (x0, y0) is the region's top-left corner in
    frame coordinates.
    """
    if rect.width <= 0 or rect.height <= 0:
        raise DomainError("search rect must have positive area")
    x0 = max(rect.x - buffer, 0)
    y0 = max(rect.y - buffer, 0)
    x1 = min(rect.x + rect.width + buffer, frame.width)
    y1 = min(rect.y + rect.height + buffer, frame.height)
    if x1 <= x0 or y1 <= y0:
        raise DomainError("search region lies entirely outside the frame")
    region = frame.pixels[y0:y1, x0:x1]
    mask = (region >= thresh).astype(np.uint8)
    return mask, (x0, y0)


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[ComponentStats]:
    """Two-pass connected-component labeling with union-find.

    Returns per-component pixel counts, centroids (in mask coordinates) and
    bounding extents, ordered by (min_row, min_col) of the extent.
    """
    if connectivity not in (4, 8):
        raise DomainError("connectivity must be 4 or 8")
    mask = np.asarray(mask)
    if mask.size == 0:
        raise DomainError("mask must be nonempty")
    rows, cols = mask.shape

    labels = np.zeros((rows, cols), dtype=np.int32)
    parent: list[int] = [0]  # parent[label]; label 0 is background

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:  # path compression
            parent[i], i = root, parent[i]
        return root

    if connectivity == 8:
        offsets = ((-1, -1), (-1, 0), (-1, 1), (0, -1))
    else:
        offsets = ((-1, 0), (0, -1))

    next_label = 1
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c]:
                continue
            neighbor_labels = []
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols and labels[rr, cc]:
                    neighbor_labels.append(labels[rr, cc])
            if not neighbor_labels:
                labels[r, c] = next_label
                parent.append(next_label)
                next_label += 1
            else:
                lo = min(find(l) for l in neighbor_labels)
                labels[r, c] = lo
                for l in neighbor_labels:
                    parent[find(l)] = lo

    # Second pass: accumulate stats per root label.
    stats: dict[int, list] = {}  # root -> [count, sum_r, sum_c, min_r, min_c, max_r, max_c]
    for r in range(rows):
        for c in range(cols):
            l = labels[r, c]
            if not l:
                continue
            root = find(l)
            s = stats.get(root)
            if s is None:
                stats[root] = [1, r, c, r, c, r, c]
            else:
                s[0] += 1
                s[1] += r
                s[2] += c
                s[3] = min(s[3], r)
                s[4] = min(s[4], c)
                s[5] = max(s[5], r)
                s[6] = max(s[6], c)

    components = [
        ComponentStats(
            pixel_count=n,
            centroid_row=sr / n,
            centroid_col=sc / n,
            min_row=mnr,
            min_col=mnc,
            max_row=mxr,
            max_col=mxc,
        )
        for n, sr, sc, mnr, mnc, mxr, mxc in stats.values()
    ]
    components.sort(key=lambda s: (s.min_row, s.min_col))
    return components


def select_largest(components: list[ComponentStats]) -> ComponentStats | None:
    """Component with the most pixels; ties go to the earliest by (min_row, min_col)."""
    best = None
    for comp in components:  # input already ordered by (min_row, min_col)
        if best is None or comp.pixel_count > best.pixel_count:
            best = comp
    return best


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def track_boxes(
    prev_boxes: list[BoundingBox],
    new_frame: FrameImage,
    cfg: TrackerConfig,
) -> list[BoundingBox]:
    """Carry boxes from frame k into frame k+1, re-centering on bright blobs.

    Boxes larger than cfg.size_threshold (area, px^2) bypass tracking and are
    copied unchanged, as are boxes whose thresholded search region is empty.
    Tracked boxes keep their width/height and are re-centered on the largest
    component's centroid, clipped to the frame.
    """
    out: list[BoundingBox] = []
    for box in prev_boxes:
        if box.frame_index != new_frame.frame_index - 1:
            raise DomainError(
                f"box on frame {box.frame_index} cannot be tracked into frame "
                f"{new_frame.frame_index}"
            )
        if box.area > cfg.size_threshold:
            out.append(replace(box, frame_index=new_frame.frame_index, origin=Origin.PROPAGATED))
            continue
        mask, (off_x, off_y) = threshold_region(
            new_frame, box, cfg.buffer, cfg.brightness_threshold
        )
        largest = select_largest(connected_components(mask, cfg.connectivity))
        if largest is None:
            out.append(replace(box, frame_index=new_frame.frame_index, origin=Origin.PROPAGATED))
            continue
        center_x = off_x + largest.centroid_col
        center_y = off_y + largest.centroid_row
        new_x = _round_half_up(center_x - (box.width - 1) / 2)
        new_y = _round_half_up(center_y - (box.height - 1) / 2)
        new_x = max(0, min(new_x, new_frame.width - box.width))
        new_y = max(0, min(new_y, new_frame.height - box.height))
        out.append(
            replace(
                box,
                x=new_x,
                y=new_y,
                frame_index=new_frame.frame_index,
                origin=Origin.TRACKED,
            )
        )
    return out


def copy_boxes(prev_boxes: list[BoundingBox]) -> list[BoundingBox]:
    """Plain copy propagation: same coordinates, next frame index."""
    return [
        replace(box, frame_index=box.frame_index + 1, origin=Origin.PROPAGATED)
        for box in prev_boxes
    ]

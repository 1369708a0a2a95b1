"""Box arithmetic: IoU, clamping, minimum-size filtering and greedy matching.

All boxes are axis-aligned integer rectangles in pixel coordinates:
``(x, y)`` is the top-left corner and the box covers the pixel grid
``x .. x+width-1`` by ``y .. y+height-1``, so ``area = width * height``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .errors import DomainError

DEFAULT_MIN_BOX_SIZE = 4


class Category(str, Enum):
    ANIMAL = "Animal"
    HUMAN = "Human"


class Origin(str, Enum):
    DRAWN = "Drawn"
    PROPAGATED = "Propagated"
    TRACKED = "Tracked"
    REVIEW_EDITED = "ReviewEdited"


# Rendering contract consumed by the UI: animals draw red, humans blue.
CATEGORY_COLORS = {Category.ANIMAL: "red", Category.HUMAN: "blue"}


@dataclass(frozen=True, slots=True)
class BoundingBox:
    box_id: str
    frame_index: int
    x: int
    y: int
    width: int
    height: int
    category: Category = Category.ANIMAL
    origin: Origin = Origin.DRAWN
    author_id: str = ""

    @property
    def area(self) -> int:
        return self.width * self.height

    def to_dict(self) -> dict:
        return {
            "box_id": self.box_id,
            "frame_index": self.frame_index,
            "x": self.x,
            "y": self.y,
            "width": self.width,
            "height": self.height,
            "category": self.category.value,
            "origin": self.origin.value,
            "author_id": self.author_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundingBox":
        return cls(
            box_id=str(d["box_id"]),
            frame_index=int(d["frame_index"]),
            x=int(d["x"]),
            y=int(d["y"]),
            width=int(d["width"]),
            height=int(d["height"]),
            category=Category(d.get("category", "Animal")),
            origin=Origin(d.get("origin", "Drawn")),
            author_id=str(d.get("author_id", "")),
        )


@dataclass(frozen=True, slots=True)
class MatchPair:
    anchor_box_id: str
    other_box_id: str
    iou: float


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes.

    Intersection and union areas are computed in exact integer arithmetic;
    the single division happens at the end, so iou(a, a) == 1.0 exactly.
    """
    if a.width <= 0 or a.height <= 0 or b.width <= 0 or b.height <= 0:
        raise DomainError("iou requires boxes with positive area")
    iw = min(a.x + a.width, b.x + b.width) - max(a.x, b.x)
    ih = min(a.y + a.height, b.y + b.height) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def clamp_and_filter(
    box: BoundingBox,
    frame_w: int,
    frame_h: int,
    min_size: int = DEFAULT_MIN_BOX_SIZE,
) -> Optional[BoundingBox]:
    """Clip a box to the frame; drop it if the clipped size falls below min_size.

    Returns the clipped box, or None when the box is rejected (a normal
    outcome for the accidental tiny boxes the size filter exists for).
    """
    if frame_w <= 0 or frame_h <= 0:
        raise DomainError("frame dimensions must be positive")
    x0 = max(box.x, 0)
    y0 = max(box.y, 0)
    x1 = min(box.x + box.width, frame_w)
    y1 = min(box.y + box.height, frame_h)
    w = x1 - x0
    h = y1 - y0
    if w < min_size or h < min_size:
        return None
    if (x0, y0, w, h) == (box.x, box.y, box.width, box.height):
        return box
    return replace(box, x=x0, y=y0, width=w, height=h)


def greedy_match(
    set_a: list[BoundingBox],
    set_b: list[BoundingBox],
    threshold: float,
) -> list[MatchPair]:
    """One-to-one greedy matching between two box sets by descending IoU.

    All cross pairs with iou >= threshold are candidates; pairs are accepted
    in descending IoU order, skipping any pair whose box is already matched.
    Ties break on (anchor box_id, other box_id), so the result does not
    depend on input ordering.
    """
    if not 0.0 < threshold <= 1.0:
        raise DomainError(f"threshold must be in (0, 1], got {threshold}")
    frames = {b.frame_index for b in set_a} | {b.frame_index for b in set_b}
    if len(frames) > 1:
        raise DomainError(f"boxes span multiple frames: {sorted(frames)}")

    candidates = []
    for a in set_a:
        for b in set_b:
            v = iou(a, b)
            if v >= threshold:
                candidates.append((v, a.box_id, b.box_id))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    used_a: set[str] = set()
    used_b: set[str] = set()
    pairs: list[MatchPair] = []
    for v, aid, bid in candidates:
        if aid in used_a or bid in used_b:
            continue
        used_a.add(aid)
        used_b.add(bid)
        pairs.append(MatchPair(anchor_box_id=aid, other_box_id=bid, iou=v))
    return pairs

"""Collaborative bounding-box labeling for thermal UAV frame sequences:
geometry, tracking-assisted propagation, consensus (majority vote and
label review), workflow state machine, analytics, persistence, HTTP
service and an operator CLI.
"""

from .geometry import BoundingBox, Category, MatchPair, Origin, clamp_and_filter, greedy_match, iou
from .consensus import ConsensusConfig, FinalLabel, Framework, majority_vote_frame, majority_vote_video, review_merge
from .tracker import ComponentStats, FrameImage, TrackerConfig, connected_components, copy_boxes, select_largest, threshold_region, track_boxes

__all__ = [
    "BoundingBox",
    "Category",
    "ComponentStats",
    "ConsensusConfig",
    "FinalLabel",
    "FrameImage",
    "Framework",
    "MatchPair",
    "Origin",
    "TrackerConfig",
    "clamp_and_filter",
    "connected_components",
    "copy_boxes",
    "greedy_match",
    "iou",
    "majority_vote_frame",
    "majority_vote_video",
    "review_merge",
    "select_largest",
    "threshold_region",
    "track_boxes",
]

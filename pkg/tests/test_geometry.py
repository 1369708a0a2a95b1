import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import raster_iou
from thermolabel.errors import DomainError
from thermolabel.geometry import (
    CATEGORY_COLORS,
    BoundingBox,
    Category,
    clamp_and_filter,
    greedy_match,
    iou,
)


def box(box_id, x, y, w, h, frame=0, category=Category.ANIMAL, author=""):
    return BoundingBox(
        box_id=box_id,
        frame_index=frame,
        x=x,
        y=y,
        width=w,
        height=h,
        category=category,
        author_id=author,
    )


boxes_st = st.builds(
    box,
    box_id=st.text(alphabet="abcdef0123456789", min_size=1, max_size=8),
    x=st.integers(0, 190),
    y=st.integers(0, 190),
    w=st.integers(1, 60),
    h=st.integers(1, 60),
)


class TestIou:
    def test_identity(self):
        a = box("a", 0, 0, 10, 10)
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        assert iou(box("a", 0, 0, 10, 10), box("b", 20, 20, 5, 5)) == 0.0

    def test_half_overlap(self):
        # 10x10 boxes offset by 5: intersection 50, union 150.
        a = box("a", 0, 0, 10, 10)
        b = box("b", 5, 0, 10, 10)
        assert iou(a, b) == pytest.approx(50 / 150, abs=1e-12)
        assert iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-12)

    def test_zero_area_rejected(self):
        with pytest.raises(DomainError):
            iou(box("a", 0, 0, 0, 5), box("b", 0, 0, 5, 5))

    @given(boxes_st, boxes_st)
    def test_symmetry(self, a, b):
        assert iou(a, b) == iou(b, a)

    @given(boxes_st)
    def test_self_iou_is_one(self, a):
        assert iou(a, a) == 1.0

    @settings(max_examples=300)
    @given(boxes_st, boxes_st)
    def test_matches_rasterized_oracle(self, a, b):
        assert iou(a, b) == pytest.approx(raster_iou(a, b), abs=1e-9)


class TestClampAndFilter:
    def test_clips_left_edge(self):
        got = clamp_and_filter(box("a", -3, 0, 10, 10), 100, 100, 4)
        assert (got.x, got.y, got.width, got.height) == (0, 0, 7, 10)

    def test_rejects_below_min_size(self):
        assert clamp_and_filter(box("a", 0, 0, 2, 2), 100, 100, 4) is None

    def test_clip_then_filter(self):
        # Clipping to 2x2 at the corner drops the box below min size.
        assert clamp_and_filter(box("a", 98, 98, 10, 10), 100, 100, 4) is None

    def test_inside_box_unchanged(self):
        b = box("a", 10, 10, 20, 20)
        assert clamp_and_filter(b, 100, 100, 4) is b

    def test_invalid_frame(self):
        with pytest.raises(DomainError):
            clamp_and_filter(box("a", 0, 0, 10, 10), 0, 100, 4)


class TestGreedyMatch:
    def test_identical_single_boxes(self):
        a = box("a1", 0, 0, 10, 10)
        b = box("b1", 0, 0, 10, 10)
        pairs = greedy_match([a], [b], 0.5)
        assert len(pairs) == 1
        assert pairs[0].iou == 1.0
        assert (pairs[0].anchor_box_id, pairs[0].other_box_id) == ("a1", "b1")

    def test_disjoint_sets(self):
        a = box("a1", 0, 0, 10, 10)
        b = box("b1", 50, 50, 10, 10)
        assert greedy_match([a], [b], 0.5) == []

    def test_greedy_takes_best_then_remainder(self):
        # 10-wide boxes offset by d have iou (10-d)/(10+d):
        # a1-b1 = 9/11, a2-b1 = 5/15, a2-b2 = 2/18, a1-b2 = 0.
        a1, a2 = box("a1", 0, 0, 10, 10), box("a2", 6, 0, 10, 10)
        b1, b2 = box("b1", 1, 0, 10, 10), box("b2", 14, 0, 10, 10)
        pairs = greedy_match([a1, a2], [b1, b2], 0.1)
        got = {(p.anchor_box_id, p.other_box_id) for p in pairs}
        # a2's better partner b1 is taken by a1; greedy leaves a2 the 2/18 pair.
        assert got == {("a1", "b1"), ("a2", "b2")}

    def test_one_to_one(self):
        a1 = box("a1", 0, 0, 10, 10)
        b1 = box("b1", 1, 0, 10, 10)
        b2 = box("b2", 2, 0, 10, 10)
        pairs = greedy_match([a1], [b1, b2], 0.3)
        assert len(pairs) == 1
        assert pairs[0].other_box_id == "b1"

    def test_mixed_frames_rejected(self):
        with pytest.raises(DomainError):
            greedy_match([box("a", 0, 0, 5, 5, frame=0)], [box("b", 0, 0, 5, 5, frame=1)], 0.5)

    def test_threshold_validation(self):
        with pytest.raises(DomainError):
            greedy_match([], [], 0.0)

    @settings(max_examples=150)
    @given(
        st.lists(boxes_st, max_size=6),
        st.lists(boxes_st, max_size=6),
        st.randoms(),
    )
    def test_one_to_one_and_permutation_invariant(self, set_a, set_b, rng):
        # De-duplicate ids within each set (they are identifiers).
        set_a = list({b.box_id: b for b in set_a}.values())
        set_b = list({b.box_id: b for b in set_b}.values())
        pairs = greedy_match(set_a, set_b, 0.3)
        anchors = [p.anchor_box_id for p in pairs]
        others = [p.other_box_id for p in pairs]
        assert len(anchors) == len(set(anchors))
        assert len(others) == len(set(others))

        shuffled_a, shuffled_b = list(set_a), list(set_b)
        rng.shuffle(shuffled_a)
        rng.shuffle(shuffled_b)
        assert greedy_match(shuffled_a, shuffled_b, 0.3) == pairs


def test_category_color_contract():
    assert CATEGORY_COLORS[Category.ANIMAL] == "red"
    assert CATEGORY_COLORS[Category.HUMAN] == "blue"

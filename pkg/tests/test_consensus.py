import random

import pytest

from oracles import brute_force_majority_vote
from thermolabel.consensus import (
    ConsensusConfig,
    Framework,
    majority_vote_frame,
    majority_vote_video,
    review_merge,
)
from thermolabel.errors import ConfigurationError, DomainError, IntegrityError, StateError
from thermolabel.geometry import BoundingBox, Category, Origin
from thermolabel.workflow import Submission, SubmissionMode, SubmissionStatus


def box(box_id, x, y, w=10, h=10, frame=0, category=Category.ANIMAL, author=""):
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


def make_submission(
    frames,
    labeler,
    mode=SubmissionMode.LABEL,
    segment="vid:000000-000009",
    status=SubmissionStatus.SUBMITTED,
    submission_id="s000000",
    reviewed=None,
):
    sub = Submission(
        submission_id=submission_id,
        video_segment_id=segment,
        labeler_id=labeler,
        mode=mode,
        frame_width=200,
        frame_height=200,
        first_frame=0,
        last_frame=9,
        reviewed_submission_id=reviewed,
    )
    sub.frames = {f: list(boxes) for f, boxes in frames.items()}
    sub.status = status
    return sub


def random_instance(rng, panel_size=5, max_boxes=3):
    sets = []
    for i in range(panel_size):
        n = rng.randint(0, max_boxes)
        boxes = []
        for k in range(n):
            boxes.append(
                box(
                    f"l{i}b{k}",
                    rng.randint(0, 40),
                    rng.randint(0, 40),
                    w=rng.randint(4, 16),
                    h=rng.randint(4, 16),
                    category=rng.choice([Category.ANIMAL, Category.HUMAN]),
                    author=f"labeler{i}",
                )
            )
        sets.append(boxes)
    return sets


CFG = ConsensusConfig()


class TestMajorityVoteFrame:
    def test_five_identical_sets(self):
        sets = [[box("b", 5, 5, author=f"l{i}")] for i in range(5)]
        finals = majority_vote_frame(sets, CFG)
        assert len(finals) == 1
        assert len(finals[0].supporting_labelers) == 5
        assert (finals[0].box.x, finals[0].box.y) == (5, 5)
        assert finals[0].framework is Framework.MAJ_VOTE

    def test_pairwise_disjoint_sets_no_consensus(self):
        sets = [[box(f"b{i}", 30 * i, 30 * i, author=f"l{i}")] for i in range(5)]
        assert majority_vote_frame(sets, CFG) == []

    def test_three_agree_first_labeler_coordinates(self):
        # Labelers 0-2 overlap labeler 0's box above 0.5; labelers 3-4 are
        # elsewhere. One final label with labeler 0's exact coordinates.
        shared = [box("a0", 10, 10, author="l0"),
                  box("a1", 11, 10, author="l1"),
                  box("a2", 10, 11, author="l2")]
        sets = [[shared[0]], [shared[1]], [shared[2]],
                [box("a3", 100, 100, author="l3")],
                [box("a4", 150, 150, author="l4")]]
        finals = majority_vote_frame(sets, CFG)
        assert len(finals) == 1
        fl = finals[0]
        assert (fl.box.x, fl.box.y, fl.box.width, fl.box.height) == (10, 10, 10, 10)
        assert fl.box.box_id == "a0"
        assert fl.supporting_labelers == frozenset({"l0", "l1", "l2"})

    def test_quorum_not_met_with_two(self):
        sets = [[box("a0", 10, 10, author="l0")],
                [box("a1", 11, 10, author="l1")],
                [], [], []]
        assert majority_vote_frame(sets, CFG) == []

    def test_anchor_falls_through_to_second_labeler(self):
        # Labeler 0 saw nothing; 1-3 agree. The anchor comes from labeler 1.
        sets = [[],
                [box("a1", 10, 10, author="l1")],
                [box("a2", 11, 10, author="l2")],
                [box("a3", 10, 11, author="l3")],
                []]
        finals = majority_vote_frame(sets, CFG)
        assert len(finals) == 1
        assert finals[0].box.box_id == "a1"

    def test_category_majority_wins(self):
        sets = [[box("a0", 10, 10, category=Category.ANIMAL, author="l0")],
                [box("a1", 11, 10, category=Category.HUMAN, author="l1")],
                [box("a2", 10, 11, category=Category.HUMAN, author="l2")],
                [], []]
        finals = majority_vote_frame(sets, CFG)
        assert finals[0].box.category is Category.HUMAN

    def test_category_tie_resolves_to_anchor(self):
        sets = [[box("a0", 10, 10, category=Category.HUMAN, author="l0")],
                [box("a1", 11, 10, category=Category.ANIMAL, author="l1")],
                [box("a2", 10, 11, category=Category.HUMAN, author="l2")],
                [box("a3", 11, 11, category=Category.ANIMAL, author="l3")],
                []]
        finals = majority_vote_frame(sets, CFG)
        assert finals[0].box.category is Category.HUMAN

    def test_wrong_panel_size(self):
        with pytest.raises(ConfigurationError):
            majority_vote_frame([[], []], CFG)

    def test_mixed_frames_rejected(self):
        sets = [[box("a", 0, 0, frame=0)], [box("b", 0, 0, frame=1)], [], [], []]
        with pytest.raises(DomainError):
            majority_vote_frame(sets, CFG)

    def test_consumed_boxes_support_one_label_only(self):
        # Two overlapping herd boxes per labeler; each input box may back
        # only one final label.
        sets = []
        for i in range(5):
            sets.append([
                box(f"l{i}x", 10, 10, author=f"l{i}"),
                box(f"l{i}y", 14, 10, author=f"l{i}"),
            ])
        finals = majority_vote_frame(sets, CFG)
        assert len(finals) == 2
        used = [fl.box.box_id for fl in finals]
        assert len(used) == len(set(used))

    def test_matches_brute_force_oracle(self):
        rng = random.Random(42)
        for _ in range(200):
            sets = random_instance(rng)
            finals = majority_vote_frame(sets, CFG)
            expected = brute_force_majority_vote(sets, CFG)
            got = [
                ((fl.box.x, fl.box.y, fl.box.width, fl.box.height),
                 fl.box.category, fl.box.box_id)
                for fl in finals
            ]
            want = [(coords, category, anchor_id)
                    for coords, _, category, anchor_id in expected]
            assert got == want
            assert all(len(fl.supporting_labelers) >= CFG.quorum for fl in finals)

    def test_invariant_under_within_labeler_shuffle(self):
        rng = random.Random(99)
        for _ in range(50):
            sets = random_instance(rng)
            finals = majority_vote_frame(sets, CFG)
            shuffled = [list(s) for s in sets]
            for s in shuffled:
                rng.shuffle(s)
            assert majority_vote_frame(shuffled, CFG) == finals


class TestMajorityVoteVideo:
    def make_panel(self, frames_by_labeler):
        return [
            make_submission(frames, f"l{i}", submission_id=f"s{i:06d}")
            for i, frames in enumerate(frames_by_labeler)
        ]

    def test_all_frames_empty(self):
        panel = self.make_panel([{} for _ in range(5)])
        assert majority_vote_video(panel, CFG) == []

    def test_single_consensus_frame(self):
        frames = [
            {3: [box("b", 5, 5, frame=3, author=f"l{i}")]} for i in range(5)
        ]
        panel = self.make_panel(frames)
        finals = majority_vote_video(panel, CFG)
        assert len(finals) == 1
        assert finals[0].box.frame_index == 3

    def test_equals_per_frame_oracle(self):
        rng = random.Random(7)
        for _ in range(30):
            frames_by_labeler = []
            for i in range(5):
                frames = {}
                for f in range(3):
                    boxes = []
                    for k in range(rng.randint(0, 3)):
                        boxes.append(
                            box(f"l{i}f{f}b{k}", rng.randint(0, 40), rng.randint(0, 40),
                                w=rng.randint(4, 12), h=rng.randint(4, 12),
                                frame=f, author=f"l{i}")
                        )
                    if boxes:
                        frames[f] = boxes
                frames_by_labeler.append(frames)
            panel = self.make_panel(frames_by_labeler)
            finals = majority_vote_video(panel, CFG)
            expected = []
            for f in range(3):
                sets = [frames_by_labeler[i].get(f, []) for i in range(5)]
                expected.extend(
                    sorted(majority_vote_frame(sets, CFG), key=lambda fl: fl.box.box_id)
                )
            assert finals == expected

    def test_unsubmitted_rejected(self):
        panel = self.make_panel([{} for _ in range(5)])
        panel[2].status = SubmissionStatus.IN_PROGRESS
        with pytest.raises(StateError):
            majority_vote_video(panel, CFG)

    def test_mismatched_segment_rejected(self):
        panel = self.make_panel([{} for _ in range(5)])
        panel[1].video_segment_id = "other:000000-000009"
        with pytest.raises(DomainError):
            majority_vote_video(panel, CFG)


class TestReviewMerge:
    def original(self):
        frames = {
            0: [box("b0", 10, 10, author="alice"), box("b1", 40, 40, author="alice")],
            2: [box("b2", 60, 60, author="alice")],
        }
        return make_submission(frames, "alice", submission_id="s000000")

    def review_of(self, original, frames):
        return make_submission(
            frames,
            "bob",
            mode=SubmissionMode.REVIEW,
            submission_id="s000001",
            reviewed=original.submission_id,
        )

    def test_identity_review(self):
        orig = self.original()
        review = self.review_of(orig, {f: list(bs) for f, bs in orig.frames.items()})
        finals = review_merge(orig, review)
        assert [fl.box for fl in finals] == [
            b for f in sorted(orig.frames) for b in orig.frames[f]
        ]
        assert all(fl.reviewer_id == "bob" for fl in finals)
        assert all(fl.framework is Framework.LABEL_REVIEW for fl in finals)
        assert all(fl.box.author_id == "alice" for fl in finals)

    def test_reviewer_deletes_everything(self):
        orig = self.original()
        review = self.review_of(orig, {})
        assert review_merge(orig, review) == []

    def test_move_and_add(self):
        orig = self.original()
        moved = BoundingBox(
            box_id="b0", frame_index=0, x=12, y=13, width=10, height=10,
            category=Category.ANIMAL, origin=Origin.REVIEW_EDITED, author_id="alice",
        )
        added = box("r0", 80, 80, author="bob")
        review = self.review_of(
            orig,
            {0: [moved, box("b1", 40, 40, author="alice"), added],
             2: [box("b2", 60, 60, author="alice")]},
        )
        finals = review_merge(orig, review)
        by_id = {fl.box.box_id: fl for fl in finals}
        assert set(by_id) == {"b0", "b1", "b2", "r0"}
        assert by_id["b0"].box.origin is Origin.REVIEW_EDITED
        assert (by_id["b0"].box.x, by_id["b0"].box.y) == (12, 13)
        assert by_id["b0"].box.author_id == "alice"
        assert by_id["r0"].box.author_id == "bob"

    def test_dangling_reference(self):
        orig = self.original()
        review = self.review_of(orig, {})
        review.reviewed_submission_id = "s999999"
        with pytest.raises(IntegrityError):
            review_merge(orig, review)

    def test_wrong_mode(self):
        orig = self.original()
        not_review = make_submission({}, "bob", submission_id="s000001")
        with pytest.raises(DomainError):
            review_merge(orig, not_review)

    def test_unsubmitted_review(self):
        orig = self.original()
        review = self.review_of(orig, {})
        review.status = SubmissionStatus.IN_PROGRESS
        with pytest.raises(StateError):
            review_merge(orig, review)

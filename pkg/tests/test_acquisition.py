import pytest

from mural.acquisition import StaleSelectionError, acquire, object_counter, objects_for_region
from mural.candidates import RegionCandidate
from mural.data import ClassVocabulary, Dataset, DatasetState, GroundTruthObject, ImageRecord, RunConfig
from mural.geometry import BBox, contains
from mural.selection import scale_aware_select

REGION = BBox(0, 0, 100, 100)


def make_dataset():
    objs = (
        GroundTruthObject(1, 1, BBox(10, 10, 20, 20), 0),  # fully inside
        GroundTruthObject(2, 1, BBox(90, 10, 20, 20), 1),  # coverage 0.5
        GroundTruthObject(3, 1, BBox(84, 50, 20, 10), 0),  # coverage 0.8, straddles edge
        GroundTruthObject(4, 1, BBox(150, 150, 10, 10), 1),  # outside
    )
    return Dataset(ClassVocabulary(("a", "b"), (0, 1)), [ImageRecord(1, 200.0, 200.0, objs)])


def region(box=REGION, scale=0):
    return RegionCandidate(1, scale, box, box, (), 1.0)


def test_objects_for_region_coverage_rule():
    ds = make_dataset()
    got = objects_for_region(region(), ds.image(1), RunConfig())
    assert [o.object_id for o, _ in got] == [1, 3]
    assert got[0][1] == BBox(10, 10, 20, 20)
    assert got[1][1] == BBox(84, 50, 16, 10)


def test_objects_for_region_skips_labeled():
    ds = make_dataset()
    got = objects_for_region(region(), ds.image(1), RunConfig(), {1: None})
    assert [o.object_id for o, _ in got] == [3]


def test_iou_rule_is_literal():
    ds = make_dataset()
    # a 20x20 object in a 100x100 region has IoU 0.04
    assert objects_for_region(region(), ds.image(1), RunConfig(overlap_rule="iou")) == []
    tight = BBox(9, 9, 22, 22)
    got = objects_for_region(region(tight), ds.image(1), RunConfig(overlap_rule="iou"))
    assert [o.object_id for o, _ in got] == [1]


def _select(ds, state, regions, budget=100):
    lists = [[r for r in regions if r.scale_index == s] for s in range(3)]
    return scale_aware_select(lists, budget, object_counter(ds, state, RunConfig()), state.cycle_index)


def test_cross_scale_duplicate_charged_once():
    ds = make_dataset()
    state = DatasetState(unlabeled_images={1})
    sel = _select(ds, state, [region(scale=0), region(BBox(0, 0, 100, 120), scale=1)])
    assert sel.object_counts == [2, 0]
    new, report = acquire(sel, state, ds, RunConfig())
    assert report.budget_consumed == sel.budget_consumed == 2
    assert sorted(new.labeled_objects) == [1, 3]
    assert len(new.labeled_regions) == 2
    assert report.annotated_per_scale == [2, 0, 0]
    assert report.annotated_per_class == [2, 0]
    assert new.cycle_index == 1 and state.cycle_index == 0
    assert state.labeled_objects == {}


def test_region_with_only_labeled_objects():
    ds = make_dataset()
    state = DatasetState(unlabeled_images={1})
    state, _ = acquire(_select(ds, state, [region()]), state, ds, RunConfig())
    sel = _select(ds, state, [region()])
    new, report = acquire(sel, state, ds, RunConfig())
    assert report.budget_consumed == 0
    assert len(new.labeled_regions) == 2


def test_clipped_boxes_in_image_coordinates_inside_region():
    ds = make_dataset()
    state = DatasetState(unlabeled_images={1})
    shifted = BBox(50, 5, 100, 100)
    new, _ = acquire(_select(ds, state, [region(shifted)]), state, ds, RunConfig())
    for lo in new.labeled_objects.values():
        assert contains(new.labeled_regions[lo.region_index].box, lo.clipped_box)
    assert new.labeled_objects[2].clipped_box == BBox(90, 10, 20, 20)


def test_image_leaves_pool_when_fully_labeled():
    ds = make_dataset()
    state = DatasetState(unlabeled_images={1})
    new, _ = acquire(_select(ds, state, [region(BBox(0, 0, 200, 200))]), state, ds, RunConfig())
    assert len(new.labeled_objects) == 4
    assert new.unlabeled_images == set()


def test_stale_selection():
    ds = make_dataset()
    state = DatasetState(unlabeled_images={1}, cycle_index=2)
    sel = scale_aware_select([[region()]], 1, lambda c: 1, cycle_index=1)
    with pytest.raises(StaleSelectionError):
        acquire(sel, state, ds, RunConfig())

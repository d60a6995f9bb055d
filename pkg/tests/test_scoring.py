import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cacscore.scoring import (Lesion, RiskCategory, SliceStat, agatston_score, agatston_weight,
                              binarize, connected_components, format_kv, format_report, hu_gate,
                              parse_kv, risk_category, score_pipeline)
from cacscore.volume import CtVolume, MaskVolume, ProbVolume
from oracles import flood_fill_components


def vol_of(hu, spacing=(3.0, 0.7, 0.7)):
    return CtVolume(np.asarray(hu), spacing)


@pytest.mark.parametrize("hu,w", [(130, 1), (199, 1), (200, 2), (299, 2), (300, 3), (399, 3),
                                  (400, 4), (3000, 4)])
def test_weight_table(hu, w):
    assert agatston_weight(hu) == w


def test_weight_below_threshold():
    with pytest.raises(ValueError):
        agatston_weight(129)


@pytest.mark.parametrize("score,cat", [(0, "zero"), (1e-9, "minimal"), (10, "minimal"),
                                       (10.01, "mild"), (100, "mild"), (400, "moderate"),
                                       (400.5, "severe")])
def test_risk_bands(score, cat):
    assert str(risk_category(score)) == cat


def single_lesion(spacing_mm):
    hu = np.full((1, 4, 4), -50)
    hu[0, :2, :] = 250
    hu[0, 2, :2] = 250
    mask = (hu >= 130).astype(np.uint8)
    return vol_of(hu, (spacing_mm, 0.7, 0.7)), MaskVolume(mask)


def test_hand_example_three_mm():
    vol, mask = single_lesion(3.0)
    lesions = connected_components(mask, vol)
    assert len(lesions) == 1 and lesions[0].per_slice[0].n_pixels == 10
    assert agatston_score(lesions, vol).total == pytest.approx(9.8, rel=1e-12)


def test_hand_example_one_mm():
    vol, mask = single_lesion(1.0)
    assert agatston_score(connected_components(mask, vol), vol).total == pytest.approx(9.8 / 3, rel=1e-12)


def test_empty_lesions():
    res = agatston_score([], vol_of(np.zeros((1, 2, 2))))
    assert res.total == 0 and res.risk is RiskCategory.ZERO


def test_binarize_tie_and_empty():
    p = ProbVolume(np.array([[[0.5, 0.49]]]))
    np.testing.assert_array_equal(binarize(p).labels, [[[1, 0]]])
    assert not binarize(ProbVolume(np.zeros((2, 2, 2)))).labels.any()


def test_hu_gate():
    vol = vol_of([[[129, 400, 130]]])
    gated = hu_gate(MaskVolume(np.ones((1, 1, 3))), vol)
    np.testing.assert_array_equal(gated.labels, [[[0, 1, 1]]])
    np.testing.assert_array_equal(hu_gate(gated, vol).labels, gated.labels)


def test_diagonal_voxels_form_one_component():
    m = np.zeros((1, 3, 3), np.uint8)
    m[0, 0, 0] = m[0, 1, 1] = 1
    vol = vol_of(np.full((1, 3, 3), 300))
    assert len(connected_components(MaskVolume(m), vol, min_area_mm2=0)) == 1


def test_gap_gives_two_components():
    m = np.array([[[1, 0, 1]]], np.uint8)
    vol = vol_of(np.full((1, 1, 3), 300))
    lesions = connected_components(MaskVolume(m), vol, min_area_mm2=0)
    assert [les.id for les in lesions] == [1, 2]


def test_size_filter_drops_only_small_everywhere():
    m = np.zeros((2, 6, 6), np.uint8)
    m[0, 0, 0] = 1                       # 0.49 mm^2 on its only slice
    m[0, 5, 5] = m[1, 5, 5] = 1          # tiny on both slices
    m[0, 2, 2] = 1                       # tiny here ...
    m[1, 2:4, 2:4] = 1                   # ... but 4 px = 1.96 mm^2 on the next slice
    vol = vol_of(np.full((2, 6, 6), 300))
    kept = connected_components(MaskVolume(m), vol)
    assert len(kept) == 1 and len(kept[0].voxels) == 5
    assert len(connected_components(MaskVolume(m), vol, min_area_mm2=None)) == 3


def test_two_d_connectivity_splits_across_slices():
    m = np.zeros((2, 2, 2), np.uint8)
    m[0, 0, 0] = m[1, 0, 0] = 1
    vol = vol_of(np.full((2, 2, 2), 300))
    assert len(connected_components(MaskVolume(m), vol, 0, connectivity=26)) == 1
    assert len(connected_components(MaskVolume(m), vol, 0, connectivity=8)) == 2
    with pytest.raises(ValueError):
        connected_components(MaskVolume(m), vol, 0, connectivity=6)


@settings(max_examples=200, deadline=None)
@given(arrays(np.uint8, (6, 6, 6), elements=st.integers(0, 1)))
def test_components_match_flood_fill(mask):
    lesions = connected_components(MaskVolume(mask), vol_of(np.full((6, 6, 6), 300)), None)
    ours = {frozenset(map(tuple, les.voxels.tolist())) for les in lesions}
    assert ours == set(flood_fill_components(mask))


def test_component_invariants():
    rng = np.random.default_rng(0)
    hu = rng.integers(130, 600, (5, 8, 8))
    mask = MaskVolume(rng.random((5, 8, 8)) < 0.3)
    vol = vol_of(hu)
    for les in connected_components(mask, vol, None):
        for st_ in les.per_slice:
            pts = les.voxels[les.voxels[:, 0] == st_.slice_index]
            assert st_.area_mm2 == pytest.approx(len(pts) * 0.49)
            assert st_.peak_hu == hu[st_.slice_index, pts[:, 1], pts[:, 2]].max() >= 130


def random_case(seed):
    rng = np.random.default_rng(seed)
    hu = rng.integers(-100, 900, (4, 10, 10))
    probs = ProbVolume(rng.random((4, 10, 10)))
    return hu, probs


@pytest.mark.parametrize("k", [0.5, 2.0, 4.0, 0.25])
def test_slice_spacing_linearity(k):
    for seed in range(10):
        hu, probs = random_case(seed)
        base = score_pipeline(probs, vol_of(hu, (1.0, 0.5, 0.5))).total
        scaled = score_pipeline(probs, vol_of(hu, (k, 0.5, 0.5))).total
        assert scaled == k * base


def test_scores_monotone_in_hu():
    hu, probs = random_case(3)
    base = score_pipeline(probs, vol_of(hu), min_area_mm2=None)
    raised = score_pipeline(probs, vol_of(hu + 100), min_area_mm2=None)
    assert raised.total >= base.total


def test_pipeline_binarization_idempotent():
    hu, probs = random_case(4)
    vol = vol_of(hu)
    as_probs = ProbVolume(binarize(probs).labels.astype(np.float32))
    assert score_pipeline(probs, vol).total == score_pipeline(as_probs, vol).total


def test_pipeline_zero_probs():
    res = score_pipeline(ProbVolume(np.zeros((2, 3, 3))), vol_of(np.full((2, 3, 3), 500)))
    assert res.total == 0.0 and res.risk is RiskCategory.ZERO


def test_reports_roundtrip():
    hu, probs = random_case(5)
    res = score_pipeline(probs, vol_of(hu))
    assert res.lesions
    back = parse_kv(format_kv(res))
    assert back.total == res.total and back.risk == res.risk
    assert [(s.n_voxels, s.volume_mm3, s.score) for s in back.lesions] == \
        [(s.n_voxels, s.volume_mm3, s.score) for s in res.lesions]
    text = format_report(res)
    assert text.splitlines()[0] == "lesion_id, n_voxels, volume_mm3, score"
    assert text.splitlines()[-1] == f"total_score {res.total!r}, risk {res.risk}"


def test_manual_lesion_score():
    vol = vol_of(np.zeros((1, 1, 1)), (1.5, 1.0, 1.0))
    les = Lesion(1, np.zeros((2, 3), int), [SliceStat(0, 2, 2.0, 450), SliceStat(1, 1, 1.0, 150)], 4.5)
    assert agatston_score([les], vol).total == pytest.approx((4 * 2 + 1) * 0.5)

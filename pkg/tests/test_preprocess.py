import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cacscore.preprocess import (CropSpec, apply_hu_label_floor, make_stack, normalize_hu,
                                 random_crop_resize, random_crop_spec, resize_slice, stack_indices)
from cacscore.volume import CtVolume, MaskVolume
from oracles import bilinear_corner_aligned


def test_constant_image_stays_constant():
    out = resize_slice(np.full((256, 256), 7.0), 512, 512)
    assert out.shape == (512, 512)
    np.testing.assert_allclose(out, 7.0, rtol=0, atol=1e-12)


def test_identity_resize_is_bitwise_equal():
    img = np.random.default_rng(0).normal(size=(64, 64))
    out = resize_slice(img, 64, 64)
    assert out.tobytes() == img.tobytes() and out is not img


def test_bilinear_hand_example():
    out = resize_slice(np.array([[0.0, 1.0], [0.0, 1.0]]), 2, 3)
    np.testing.assert_allclose(out, [[0, 0.5, 1], [0, 0.5, 1]])


@pytest.mark.parametrize("shape,out", [((5, 7), (9, 4)), ((3, 3), (8, 8)), ((10, 4), (1, 6))])
def test_resize_matches_bilinear_oracle(shape, out):
    img = np.random.default_rng(1).normal(size=shape)
    np.testing.assert_allclose(resize_slice(img, *out), bilinear_corner_aligned(img, *out), atol=1e-12)


def test_resize_rejects_empty():
    with pytest.raises(ValueError):
        resize_slice(np.ones((2, 2)), 0, 3)


def test_full_crop_is_identity():
    img = np.random.default_rng(2).normal(size=(32, 32))
    np.testing.assert_array_equal(random_crop_resize(img, CropSpec(0, 0, 32), 32), img)


def test_crop_of_constant_is_constant():
    rng = np.random.default_rng(3)
    spec = random_crop_spec(rng, size=64, min_side=8, max_side=32)
    np.testing.assert_allclose(random_crop_resize(np.full((64, 64), -3.0), spec, 64), -3.0)


def test_checkerboard_quadrant():
    img = (np.indices((512, 512)).sum(axis=0) % 2).astype(float)
    out = random_crop_resize(img, CropSpec(0, 0, 256), 512)
    np.testing.assert_allclose(out, bilinear_corner_aligned(img[:256, :256], 512, 512), atol=1e-12)


def test_crop_outside_image_rejected():
    with pytest.raises(ValueError):
        random_crop_resize(np.ones((10, 10)), CropSpec(5, 5, 6), 10)


def test_crop_spec_ranges():
    rng = np.random.default_rng(4)
    for _ in range(200):
        s = random_crop_spec(rng)
        assert 128 <= s.side <= 256
        s.validate((512, 512))


def test_label_crop_stays_binary():
    lab = (np.random.default_rng(5).random((40, 40)) < 0.3).astype(np.uint8)
    out = random_crop_resize(lab, CropSpec(3, 4, 20), 40, is_label=True)
    assert set(np.unique(out)) <= {0, 1}


def test_normalize_hu_endpoints():
    np.testing.assert_allclose(normalize_hu([-1000, 3000, 130, -2000, 4000]), [0, 1, 0.2825, 0, 1])


def test_label_floor_boundary():
    assert apply_hu_label_floor([1], [129])[0] == 0
    assert apply_hu_label_floor([1], [130])[0] == 1
    assert not apply_hu_label_floor(np.zeros(5), np.full(5, 900)).any()


def test_label_floor_shape_mismatch():
    with pytest.raises(ValueError):
        apply_hu_label_floor(np.ones(3), np.ones(4))


labels = arrays(np.uint8, (6, 6), elements=st.integers(0, 1))
hus = arrays(np.int64, (6, 6), elements=st.integers(-1024, 4095))


@settings(max_examples=200, deadline=None)
@given(labels, hus)
def test_label_floor_idempotent(lab, hu):
    once = apply_hu_label_floor(lab, hu)
    np.testing.assert_array_equal(apply_hu_label_floor(once, hu), once)


@settings(max_examples=200, deadline=None)
@given(labels, hus, arrays(np.int64, (6, 6), elements=st.integers(0, 500)))
def test_label_floor_monotone(lab, hu, bump):
    low = apply_hu_label_floor(lab, hu)
    high = apply_hu_label_floor(lab, hu + bump)
    assert np.all(low <= high)
    assert np.all(low <= lab)


def slice_ids_volume(n, h=4, w=4):
    # every voxel of slice k holds k * 10 HU so channels identify their source slice
    vox = np.broadcast_to((np.arange(n) * 10)[:, None, None], (n, h, w))
    return CtVolume(vox, (3.0, 0.7, 0.7)), MaskVolume(np.zeros((n, h, w)))


def source_slices(stack):
    return [int(round(c[0, 0] * 4000 - 1000)) // 10 for c in stack.channels]


@pytest.mark.parametrize("center,expected", [
    (0, [0, 0, 0, 0, 0, 1, 2, 3, 4]),
    (1, [0, 0, 0, 0, 1, 2, 3, 4, 5]),
    (10, list(range(6, 15))),
    (19, [15, 16, 17, 18, 19, 19, 19, 19, 19]),
])
def test_make_stack_edge_replication(center, expected):
    vol, lab = slice_ids_volume(20)
    stack = make_stack(vol, lab, center, size=4)
    assert stack.channels.shape == (9, 4, 4)
    assert source_slices(stack) == expected
    assert stack_indices(center, 20) == expected


def test_single_slice_volume():
    vol, lab = slice_ids_volume(1)
    stack = make_stack(vol, lab, 0, size=8)
    assert all(np.array_equal(c, stack.channels[0]) for c in stack.channels)


def test_make_stack_applies_floor_and_resizes_label():
    hu = np.zeros((3, 4, 4))
    hu[1, 1, 1], hu[1, 2, 2] = 129, 130
    lab = np.zeros((3, 4, 4))
    lab[1, 1, 1] = lab[1, 2, 2] = 1
    stack = make_stack(CtVolume(hu, (1, 1, 1)), MaskVolume(lab), 1, size=4)
    expected = np.zeros((4, 4), np.uint8)
    expected[2, 2] = 1
    np.testing.assert_array_equal(stack.label, expected)
    big = make_stack(CtVolume(hu, (1, 1, 1)), MaskVolume(lab), 1, size=8)
    assert big.label.shape == (8, 8) and set(np.unique(big.label)) == {0, 1}
    assert np.all((big.channels >= 0) & (big.channels <= 1))


def test_make_stack_bad_center():
    vol, lab = slice_ids_volume(3)
    with pytest.raises(IndexError):
        make_stack(vol, lab, 3, size=4)

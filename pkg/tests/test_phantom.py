import numpy as np
import pytest

from cacscore.phantom import (LesionSpec, PhantomRanges, PhantomSpec, generate, make_training_set,
                              random_spec)
from cacscore.preprocess import apply_hu_label_floor
from cacscore.scoring import connected_components, score_pipeline
from cacscore.volume import ProbVolume


def test_no_lesions():
    vol, mask, expected = generate(PhantomSpec((3, 8, 8)))
    assert expected.total == 0 and not mask.labels.any()
    assert np.all(vol.voxels < 130)


def test_single_voxel_lesion():
    spec = PhantomSpec((3, 5, 5), (3.0, 1.0, 1.0), lesions=(LesionSpec((1, 2, 2), 0, 300),))
    vol, mask, expected = generate(spec, min_area_mm2=None)
    assert mask.labels.sum() == 1
    assert expected.total == 3.0
    assert score_pipeline(ProbVolume(mask.labels), vol, min_area_mm2=None).total == 3.0


def test_two_separated_lesions():
    spec = PhantomSpec((4, 16, 16), lesions=(LesionSpec((1, 3, 3), 2, 250),
                                            LesionSpec((2, 12, 12), 2, 450, 1)))
    vol, mask, expected = generate(spec)
    assert len(connected_components(mask, vol)) == 2
    assert len(expected.lesions) == 2


def test_touching_lesions_rejected():
    spec = PhantomSpec((2, 8, 8), lesions=(LesionSpec((0, 2, 2), 1, 250), LesionSpec((1, 3, 4), 1, 250)))
    with pytest.raises(ValueError):
        generate(spec)


@pytest.mark.parametrize("bad", [
    PhantomSpec((2, 8, 8), lesions=(LesionSpec((0, 2, 2), 1, 120),)),
    PhantomSpec((2, 8, 8), lesions=(LesionSpec((0, 20, 20), 1, 250),)),
    PhantomSpec((2, 8, 8), background_hu=100, noise_sigma=20),
])
def test_invalid_specs(bad):
    with pytest.raises(ValueError):
        generate(bad)


def test_noise_never_reaches_calcium_outside_lesions():
    spec = PhantomSpec((4, 16, 16), background_hu=-50, noise_sigma=50,
                       lesions=(LesionSpec((2, 8, 8), 3, 140),), seed=7)
    vol, mask, _ = generate(spec)
    assert np.all(vol.voxels[mask.labels == 0] < 130)
    assert np.all(vol.voxels[mask.labels == 1] >= 130)


def test_same_seed_same_sets():
    a = make_training_set(3, seed=5)
    b = make_training_set(3, seed=5)
    for (va, ma), (vb, mb) in zip(a, b):
        assert va == vb and ma == mb


def test_empty_training_set():
    with pytest.raises(ValueError):
        make_training_set(0)


def test_masks_survive_label_floor():
    for vol, mask in make_training_set(5, seed=9):
        for s in range(vol.n_slices):
            np.testing.assert_array_equal(apply_hu_label_floor(mask.labels[s], vol.voxels[s]),
                                          mask.labels[s])


def test_random_phantoms_match_pipeline():
    rng = np.random.default_rng(0)
    for _ in range(25):
        spec = random_spec(rng, PhantomRanges(dims=(8, 20, 20)))
        vol, mask, expected = generate(spec)
        got = score_pipeline(ProbVolume(mask.labels), vol)
        assert abs(got.total - expected.total) <= 1e-9
        assert got.risk == expected.risk

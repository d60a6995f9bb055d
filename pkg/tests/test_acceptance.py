"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the PASS/FAIL
lines are printed even when pytest captures output.
"""

import math
import time

import numpy as np
import pytest

from cacscore import gradcheck, nn
from cacscore.loss import BootstrapParams, bootstrap_loss, iou_loss
from cacscore.metrics import CohortResult, ConfusionCounts, cac_rate, f1, f1_from_counts
from cacscore.optim import SgdState, lr_at, phantom_stacks, sgd_step, train_toy
from cacscore.phantom import PhantomRanges, generate, random_spec
from cacscore.preprocess import apply_hu_label_floor, make_stack
from cacscore.scoring import RiskCategory, agatston_weight, connected_components, score_pipeline
from cacscore.tensor import Tensor
from cacscore.volume import (CtVolume, MaskVolume, ProbVolume, read_mask, read_probs, read_volume,
                             write_mask, write_probs, write_volume)
from oracles import flood_fill_components


@pytest.fixture
def verdict(capsys):
    def report(number: int, title: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title}"
                  + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {number} failed: {detail}"
    return report


@pytest.mark.slow
def test_criterion_1_gradient_suite(verdict):
    required = {"conv_dilation_1", "conv_dilation_2", "conv_dilation_4", "conv_dilation_8",
                "conv_transpose", "batchnorm_train", "dense_block", "rau", "scse", "edb",
                "decoder_module", "bootstrap_loss", "iou_loss"}
    start = time.perf_counter()
    summaries = gradcheck.run_suite(seed=0, n_seeds=20, rtol=1e-4, atol=1e-6)
    elapsed = time.perf_counter() - start
    failed = [s.name for s in summaries if not s.passed]
    covered = required <= {s.name for s in summaries}
    worst = max(s.max_abs_err for s in summaries)
    ok = not failed and covered and all(s.n_seeds >= 20 for s in summaries) and elapsed < 300
    verdict(1, "gradient suite, 20 seeds, rtol 1e-4 / atol 1e-6, < 5 min", ok,
            f"{len(summaries)} cases, failed={failed}, max_abs_err={worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_loss_values(verdict):
    p = np.array([0.5, 0.5, 0.05, 0.2, 0.4])
    y = np.array([1, 1, 0, 0, 0])
    boot = bootstrap_loss(Tensor(p), y, BootstrapParams(0.9, 8, 1)).item()
    n = 100
    g = np.zeros(n)
    g[: n // 2] = 1
    iou = iou_loss(Tensor(np.full(n, 0.5)), g).item()
    gp = (np.random.default_rng(0).random(n) < 0.4).astype(float)
    perfect = iou_loss(Tensor(gp), gp).item()
    ok = abs(boot - 3.6289) <= 1e-3 and abs(iou - math.log(3)) <= 1e-6 and perfect <= 1e-6
    verdict(2, "loss values", ok, f"bootstrap={boot:.6f}, iou={iou:.9f}, perfect={abs(perfect):.1e}")


def test_criterion_3_agatston_oracles(verdict):
    rng = np.random.default_rng(2024)
    worst, n_phantoms = 0.0, 500
    for _ in range(n_phantoms):
        spec = random_spec(rng, PhantomRanges())
        vol, mask, expected = generate(spec)
        got = score_pipeline(ProbVolume(mask.labels), vol)
        worst = max(worst, abs(got.total - expected.total))
    mismatches, n_masks = 0, 500
    hu = CtVolume(np.full((6, 6, 6), 300), (3.0, 0.7, 0.7))
    for _ in range(n_masks):
        m = (rng.random((6, 6, 6)) < rng.uniform(0.05, 0.6)).astype(np.uint8)
        ours = {frozenset(map(tuple, les.voxels.tolist()))
                for les in connected_components(MaskVolume(m), hu, None)}
        mismatches += ours != set(flood_fill_components(m))
    ok = worst <= 1e-9 and mismatches == 0
    verdict(3, "Agatston and component oracles", ok,
            f"{n_phantoms} phantoms max |diff|={worst:.2e}; {n_masks} masks, {mismatches} mismatches")


def test_criterion_4_score_structure(verdict):
    rng = np.random.default_rng(4)
    exact = True
    for _ in range(50):
        hu = rng.integers(-100, 900, (4, 10, 10))
        probs = ProbVolume(rng.random((4, 10, 10)))
        base = score_pipeline(probs, CtVolume(hu, (1.0, 0.6, 0.6))).total
        for k in (0.25, 0.5, 2.0, 4.0, 8.0):
            exact &= score_pipeline(probs, CtVolume(hu, (k, 0.6, 0.6))).total == k * base
    weights = [agatston_weight(h) for h in (130, 199, 200, 299, 300, 399, 400)]
    ok = exact and weights == [1, 1, 2, 2, 3, 3, 4]
    verdict(4, "slice-spacing linearity and density weights", ok, f"exact={exact}, weights={weights}")


def test_criterion_5_preprocessing(verdict):
    rng = np.random.default_rng(5)
    idem = mono = True
    for _ in range(500):
        lab = rng.integers(0, 2, (8, 8))
        hu = rng.integers(-1024, 4096, (8, 8))
        once = apply_hu_label_floor(lab, hu)
        idem &= np.array_equal(apply_hu_label_floor(once, hu), once)
        mono &= bool(np.all(once <= apply_hu_label_floor(lab, hu + rng.integers(0, 300, (8, 8)))))
    n = 20
    vox = np.broadcast_to((np.arange(n) * 10)[:, None, None], (n, 4, 4))
    vol, labels = CtVolume(vox, (3.0, 0.7, 0.7)), MaskVolume(np.zeros((n, 4, 4)))
    expected = {0: [0, 0, 0, 0, 0, 1, 2, 3, 4], 1: [0, 0, 0, 0, 1, 2, 3, 4, 5],
                n - 1: [15, 16, 17, 18, 19, 19, 19, 19, 19]}
    stacks_ok = True
    for center, want in expected.items():
        st = make_stack(vol, labels, center, size=4)
        got = [int(round(c[0, 0] * 4000 - 1000)) // 10 for c in st.channels]
        stacks_ok &= st.channels.shape[0] == 9 and got == want
    verdict(5, "label floor properties and 9-slice edge replication", idem and mono and stacks_ok,
            f"idempotent={idem}, monotone={mono}, stacks={stacks_ok}")


def test_criterion_6_optimizer(verdict):
    lrs = (lr_at(0), lr_at(2000), lr_at(4000))
    p = Tensor(np.zeros(1), requires_grad=True)
    p.grad = np.ones(1)
    state = SgdState(lr0=1.0, momentum=0.9)
    sgd_step([p], state)
    sgd_step([p], state)
    ok = lrs == (0.001, 0.00099, 0.0009801) and abs(p.data[0] + 2.9) < 1e-12
    verdict(6, "schedule and momentum", ok, f"lr={lrs}, param after two steps={float(p.data[0])!r}")


@pytest.mark.slow
def test_criterion_7_learnability(verdict):
    start = time.perf_counter()
    data = phantom_stacks(8, size=32, seed=0)
    curves = []
    for _ in range(2):
        model = nn.DenseRAUnet(nn.NetConfig(), seed=0)
        curves.append(train_toy(model, data, BootstrapParams(), epochs=25, seed=0, max_iters=200))
    elapsed = time.perf_counter() - start
    curve = curves[0]
    first = np.mean([r.total for r in curve[:8]])
    last = np.mean([r.total for r in curve[-8:]])
    ok = len(curve) == 200 and last <= 0.5 * first and curves[0] == curves[1] and elapsed < 600
    verdict(7, "toy training halves the loss in 200 iterations, deterministic", ok,
            f"first-epoch mean {first:.3f}, last-epoch mean {last:.3f}, "
            f"ratio {last / first:.3f}, identical={curves[0] == curves[1]}, {elapsed:.0f}s for two runs")


def test_criterion_8_metrics(verdict):
    m = np.array([[[1, 0, 1, 1]]])
    cases = (f1(m, m) == (1.0, 1.0, 1.0),
             f1(np.zeros_like(m), m) == (0.0, 0.0, 0.0),
             np.allclose(f1_from_counts(ConfusionCounts(3, 1, 1, 0)), 0.75))
    raw = round(cac_rate([(RiskCategory.ZERO,) * 2] * 113 + [(RiskCategory.ZERO, RiskCategory.MILD)] * 31), 2)
    filt = round(CohortResult(144, 113, 120).cac_filter_rate, 2)
    ok = all(cases) and raw == 0.78 and filt == 0.83
    verdict(8, "F1 cases and rate arithmetic", ok, f"f1 cases={cases}, 113/144={raw}, 120/144={filt}")


def test_criterion_9_roundtrips(verdict, tmp_path):
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(100):
        shape = tuple(int(v) for v in rng.integers(1, 7, 3))
        spacing = tuple(float(v) for v in rng.uniform(0.1, 5.0, 3))
        vol = CtVolume(rng.integers(-1024, 4096, shape), spacing)
        mask = MaskVolume(rng.integers(0, 2, shape), spacing=spacing)
        probs = ProbVolume(rng.random(shape, dtype=np.float32), spacing)
        write_volume(vol, tmp_path / "v")
        write_mask(mask, tmp_path / "m")
        write_probs(probs, tmp_path / "p")
        back = read_probs(tmp_path / "p")
        bad += not (read_volume(tmp_path / "v") == vol and read_mask(tmp_path / "m") == mask
                    and back.probs.tobytes() == probs.probs.tobytes() and back.spacing == spacing)
    model = nn.DenseRAUnet(seed=9)
    model(Tensor(rng.random((1, 9, 16, 16))))
    nn.save_checkpoint(model, tmp_path / "m.ckpt")
    other = nn.DenseRAUnet(seed=10)
    nn.load_checkpoint(other, tmp_path / "m.ckpt")
    ckpt_ok = all(a.data.tobytes() == b.data.tobytes()
                  for (_, a), (_, b) in zip(model.named_parameters(), other.named_parameters()))
    ckpt_ok &= all(a.tobytes() == b.tobytes()
                   for (_, a), (_, b) in zip(model.named_buffers(), other.named_buffers()))
    verdict(9, "file formats and checkpoint round-trip bit-exactly", bad == 0 and ckpt_ok,
            f"{bad} of 100 instances differ per format set, checkpoint exact={ckpt_ok}")

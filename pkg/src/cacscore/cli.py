"""Command-line entry point: ``cacscore <command> ...``.

Exit codes: 0 success, 2 I/O error, 3 validation error, 4 numeric check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gradcheck, metrics, scoring
from .loss import BootstrapParams
from .volume import (MaskRole, ProbVolume, VolumeFormatError, check_same_shape, read_mask,
                     read_probs, read_volume, write_mask, write_probs, write_volume)

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("cacscore")


@dataclass(frozen=True)
class Config:
    prob_threshold: float = 0.5
    hu_threshold: float = 130
    min_lesion_mm2: float = 1.0
    connectivity: str = "26"
    t: float = 0.9
    alpha: float = 8.0
    beta: float = 1.0
    lr0: float = 0.001
    momentum: float = 0.9
    epochs: int = 25
    seed: int = 0

    def __post_init__(self):
        for name in ("prob_threshold", "hu_threshold", "lr0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_lesion_mm2 < 0:
            raise ValueError("min_lesion_mm2 must be non-negative")
        if self.connectivity not in ("26", "8"):
            raise ValueError("connectivity must be '26' or '8'")

    @property
    def bootstrap(self) -> BootstrapParams:
        return BootstrapParams(self.t, self.alpha, self.beta)

    def show(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in dataclasses.asdict(self).items()) + "\n"


def _config_from(args) -> Config:
    fields = {f.name for f in dataclasses.fields(Config)}
    values = {k: v for k, v in vars(args).items() if k in fields}
    return Config(**values)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for f in dataclasses.fields(Config):
        kind = str if f.name == "connectivity" else type(f.default)
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=argparse.SUPPRESS,
                       help=f"default {f.default}")


def _score_one(vol, probs, cfg: Config, min_area=None) -> scoring.AgatstonResult:
    return scoring.score_pipeline(
        probs, vol, thresh=cfg.prob_threshold, hu_threshold=cfg.hu_threshold,
        min_area_mm2=cfg.min_lesion_mm2 if min_area is None else min_area,
        connectivity=int(cfg.connectivity))


def cmd_score(args, cfg: Config) -> int:
    vol = read_volume(args.volume)
    probs = read_probs(args.probs)
    check_same_shape(vol, probs)
    result = _score_one(vol, probs, cfg)
    text = scoring.format_kv(result) if args.kv else scoring.format_report(result)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def read_manifest(path) -> list[tuple[str, Path, Path, Path, scoring.RiskCategory]]:
    """Tab-separated lines: volume, ground-truth mask, probabilities, true risk.

    Blank lines and ``#`` comments are skipped; relative paths resolve
    against the manifest's directory. The patient id is the volume file stem.
    """
    path = Path(path)
    base = path.parent
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise VolumeFormatError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
        vol_p, gt_p, prob_p, risk = (p.strip() for p in parts)
        try:
            risk_cat = scoring.RiskCategory(risk)
        except ValueError as exc:
            raise VolumeFormatError(f"{path}:{lineno}: unknown risk category {risk!r}") from exc
        paths = [Path(p) if Path(p).is_absolute() else base / p for p in (vol_p, gt_p, prob_p)]
        entries.append((Path(vol_p).stem, *paths, risk_cat))
    if not entries:
        raise VolumeFormatError(f"{path}: manifest lists no patients")
    return entries


def cmd_eval(args, cfg: Config) -> int:
    outcomes = []
    for pid, vol_p, gt_p, prob_p, true_risk in read_manifest(args.manifest):
        vol = read_volume(vol_p)
        gt = read_mask(gt_p, MaskRole.GROUND_TRUTH)
        probs = read_probs(prob_p)
        check_same_shape(vol, gt)
        check_same_shape(vol, probs)
        pred = scoring.binarize(probs, cfg.prob_threshold)
        _, _, f1 = metrics.f1(pred, gt)
        raw = _score_one(vol, probs, cfg, min_area=0.0)
        filtered = _score_one(vol, probs, cfg)
        outcomes.append(metrics.PatientOutcome(pid, true_risk, raw.risk, filtered.risk, f1))
    text = metrics.format_cohort_report(outcomes)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gradcheck(args, cfg: Config) -> int:
    rtol = args.tolerance
    atol = rtol / 100
    summaries = gradcheck.run_suite(seed=cfg.seed, n_seeds=args.seeds, rtol=rtol, atol=atol,
                                    names=args.blocks or None)
    ok = True
    for s in summaries:
        status = "PASS" if s.passed else "FAIL"
        ok &= s.passed
        print(f"{status} {s.name} seeds={s.n_seeds} max_abs_err={s.max_abs_err:.3e}")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_phantom(args, cfg: Config) -> int:
    from .phantom import PhantomRanges, generate, random_spec

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    ranges = PhantomRanges(dims=tuple(args.dims))
    lines = []
    for i in range(args.count):
        spec = random_spec(rng, ranges)
        vol, mask, expected = generate(spec, cfg.min_lesion_mm2)
        stem = out / f"phantom_{i:03d}"
        write_volume(vol, f"{stem}_ct.vol")
        write_mask(mask, f"{stem}_mask.vol")
        write_probs(ProbVolume(mask.labels.astype(np.float32), mask.spacing), f"{stem}_probs.vol")
        Path(f"{stem}_expected.txt").write_text(scoring.format_kv(expected))
        lines.append(f"{stem.name}_ct.vol\t{stem.name}_mask.vol\t{stem.name}_probs.vol\t{expected.risk}")
    (out / "manifest.tsv").write_text("\n".join(lines) + "\n")
    print(f"wrote {args.count} phantoms to {out}")
    return EXIT_OK


def cmd_train_toy(args, cfg: Config) -> int:
    from .nn import DenseRAUnet, NetConfig, save_checkpoint
    from .optim import format_loss_curve, phantom_stacks, train_toy

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = phantom_stacks(args.n_phantoms, size=args.size, seed=cfg.seed)
    model = DenseRAUnet(NetConfig(), seed=cfg.seed)
    curve = train_toy(model, dataset, cfg.bootstrap, epochs=cfg.epochs, seed=cfg.seed,
                      lr0=cfg.lr0, momentum=cfg.momentum, max_iters=args.iters)
    (out / "loss_curve.csv").write_text(format_loss_curve(curve))
    save_checkpoint(model, out / "model.ckpt")
    first = np.mean([r.total for r in curve[:len(dataset)]])
    last = np.mean([r.total for r in curve[-len(dataset):]])
    print(f"iterations {len(curve)}, first-epoch loss {first:.4f}, last-epoch loss {last:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cacscore", description="Coronary calcium scoring toolkit")
    parser.add_argument("--show-config", action="store_true", help="print the effective configuration")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("score", help="score a CT volume against a probability or mask volume")
    p.add_argument("volume")
    p.add_argument("probs")
    p.add_argument("--kv", action="store_true", help="machine-readable key=value output")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="cohort F1 and risk-agreement rates from a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference checks of blocks and losses")
    p.add_argument("--tolerance", type=float, default=gradcheck.RTOL, help="rtol; atol is rtol/100")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--blocks", nargs="*", choices=sorted(gradcheck.CASES))
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("phantom", help="write synthetic phantoms plus a manifest")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--dims", type=int, nargs=3, default=(12, 32, 32))
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("train-toy", help="train the toy network on phantom stacks")
    p.add_argument("out_dir")
    p.add_argument("--n-phantoms", type=int, default=8)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--size", type=int, default=32)
    p.set_defaults(func=cmd_train_toy)

    for sp in sub.choices.values():
        _add_config_flags(sp)
    _add_config_flags(parser)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.show_config:
        sys.stdout.write(cfg.show())
        if args.command is None:
            return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_VALIDATION
    try:
        return args.func(args, cfg)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (VolumeFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FloatingPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

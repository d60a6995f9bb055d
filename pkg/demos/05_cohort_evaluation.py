"""
Evaluating a cohort
===================

Writes a handful of phantoms to disk with the command-line tool, corrupts
one prediction, and runs the cohort evaluation: pixel F1 per patient plus
the fraction of patients placed in the right risk band, with and without
the small-lesion filter.
"""

import tempfile
from pathlib import Path

import numpy as np

from cacscore.cli import main
from cacscore.metrics import cac_rate
from cacscore.scoring import RiskCategory
from cacscore.volume import ProbVolume, read_probs, write_probs

out = Path(tempfile.mkdtemp()) / "cohort"
main(["phantom", str(out), "--count", "5", "--seed", "2"])
print((out / "manifest.tsv").read_text())

# Wipe out the prediction for one patient.
victim = out / "phantom_001_probs.vol"
p = read_probs(victim)
write_probs(ProbVolume(np.zeros(p.shape, np.float32), p.spacing), victim)

main(["eval", str(out / "manifest.tsv")])

# The rate itself is just correct / total.
pairs = [(RiskCategory.MILD, RiskCategory.MILD)] * 113 + [(RiskCategory.ZERO, RiskCategory.MILD)] * 31
print(f"\n113 of 144 correct -> {cac_rate(pairs):.2f}")

"""The command-line pipeline end to end, driven from Python.

Equivalent shell commands::

    disfluency synth --output train.dis --seed 1 --n-sentences 300
    disfluency train --train train.dis --dev dev.dis --output m.ckpt --hidden-dim 16 --batch-size 10
    disfluency tag --checkpoint m.ckpt --input test.dis --decode ilp --output pred.tsv
    disfluency eval --pred pred.tsv --gold test.dis --scheme eight
"""
import tempfile
from pathlib import Path

from disfluency.cli import main

with tempfile.TemporaryDirectory() as tmp:
    d = Path(tmp)
    main(["synth", "--output", str(d / "train.dis"), "--seed", "1", "--n-sentences", "300"])
    main(["synth", "--output", str(d / "dev.dis"), "--seed", "2", "--n-sentences", "60"])
    main(["synth", "--output", str(d / "test.dis"), "--seed", "3", "--n-sentences", "60"])
    main(["train", "--train", str(d / "train.dis"), "--dev", str(d / "dev.dis"),
          "--output", str(d / "m.ckpt"), "--hidden-dim", "16", "--word-dim", "16",
          "--max-epochs", "8", "--batch-size", "10"])
    main(["tag", "--checkpoint", str(d / "m.ckpt"), "--input", str(d / "test.dis"),
          "--decode", "ilp", "--output", str(d / "pred.tsv")])
    print((d / "pred.tsv").read_text().split("\n\n")[0])
    main(["eval", "--pred", str(d / "pred.tsv"), "--gold", str(d / "test.dis"), "--scheme", "eight"])

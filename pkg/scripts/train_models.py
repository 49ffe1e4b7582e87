"""Synthesize a training corpus and train all four color classifiers through the CLI.

Usage: python scripts/train_models.py [--spec configs/training.conf] [--count 8] [--out models]
"""

import argparse
import time
from pathlib import Path

from hiq.cli import main as hiq
from hiq.colorrec import METHODS


def run(argv: list[str]) -> None:
    code = hiq(argv)
    if code != 0:
        raise SystemExit(f"hiq {' '.join(argv)} exited with {code}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default="configs/training.conf")
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--per-image", type=int, default=3000)
    ap.add_argument("--augment", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="models")
    args = ap.parse_args()
    out = Path(args.out)
    corpus = out / "training-corpus"
    run(["corpus", "--spec", args.spec, "--count", str(args.count), "--seed", str(args.seed),
         "-o", str(corpus)])
    for method in METHODS:
        t0 = time.time()
        run(["train", str(corpus), "--algo", method, "--augment", str(args.augment),
             "--per-image", str(args.per_image), "--seed", str(args.seed),
             "-o", str(out / f"{method}.model")])
        print(f"{method:>9}: {time.time() - t0:6.1f} s -> {out / f'{method}.model'}", flush=True)


if __name__ == "__main__":
    main()

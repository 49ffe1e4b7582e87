"""CMI benefit: BER of QDA/LSVM with and without the learned mixing vector on the CMI-heavy corpus.

Usage: python scripts/cmi_benefit.py [--seeds 0 1 2] [--train 12] [--test 8] [--per-image 1000]
"""

import argparse
import time

import numpy as np

from hiq.cli import corpus_spec_from_config, read_config
from hiq.colorrec import METHODS, TrainConfig, collect_samples, train
from hiq.pipeline import DecodeOptions, compute_metrics, decode_frame
from hiq.raster import synth_corpus


def corpus_ber(items, model) -> float:
    results = [decode_frame(it.image, model, None, DecodeOptions(seed=it.symbol.seed)) for it in items]
    return compute_metrics(results, [it.symbol for it in items]).ber


def run_seed(spec, seed: int, n_train: int, n_test: int, per_image: int, augment: int,
             methods=METHODS) -> dict:
    """Mean test BER per method for one seed; train and test corpora never share a seed."""
    train_items = synth_corpus(spec, n_train, seed=seed)
    test_items = synth_corpus(spec, n_test, seed=10_000 + seed)
    X, y = collect_samples(train_items, augment_count=augment, per_image=per_image, seed=seed)
    n = spec.n_layers
    out = {}
    for method in methods:
        model = train(method, X, y, n, TrainConfig(max_iters=50, tol=1e-6))
        out[method] = corpus_ber(test_items, model)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default="configs/cmi_heavy.conf")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--train", type=int, default=12)
    ap.add_argument("--test", type=int, default=8)
    ap.add_argument("--per-image", type=int, default=1000)
    ap.add_argument("--augment", type=int, default=2)
    args = ap.parse_args()
    spec = corpus_spec_from_config(read_config(args.spec))
    print("seed " + " ".join(f"{m:>9}" for m in METHODS) + "  lsvm-cmi/lsvm  qda-cmi/qda  seconds")
    for seed in args.seeds:
        t0 = time.time()
        ber = run_seed(spec, seed, args.train, args.test, args.per_image, args.augment)
        print(f"{seed:>4} " + " ".join(f"{ber[m]:9.5f}" for m in METHODS)
              + f"  {ber['lsvm-cmi'] / ber['lsvm']:13.3f}  {ber['qda-cmi'] / ber['qda']:11.3f}"
              + f"  {time.time() - t0:7.1f}", flush=True)


if __name__ == "__main__":
    main()

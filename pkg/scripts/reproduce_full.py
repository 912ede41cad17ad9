#!/usr/bin/env python3
"""Long-running full-scale protocol on a local DOCKSTRING copy (not run in CI).

Drives the ``exactfp`` CLI for every target and encoding:

* collision statistics over 10,000 random pairs;
* GP regression, 10 trials of 10,000 training molecules, fixed and
  optimized hyperparameters, exact / folded / Sort&Slice at 512-4096;
* BO over the whole pool (init 1,000 from the worst 80%, budget 1,000,
  5 trials), exact and folded fingerprints.

    python scripts/reproduce_full.py --data dockstring.tsv --split cluster_split.tsv \
        --vocab-corpus zinc250k.smi --output-dir runs/

Expect days of CPU time and tens of GB of memory for the BO runs.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from exactfp import cli

TARGETS = ["PARP1", "F2", "KIT", "ESR2", "PGR"]
DIMS = [512, 1024, 2048, 4096]

log = logging.getLogger("reproduce_full")


def step(*argv: str) -> None:
    log.info("exactfp %s", " ".join(argv))
    code = cli.main(list(argv))
    if code != 0:
        sys.exit(code)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", required=True, help="DOCKSTRING table with smiles and target columns")
    ap.add_argument("--split", required=True, help="record_id,split file with the cluster split")
    ap.add_argument("--vocab-corpus", help="corpus for Sort&Slice vocabularies (default: --data)")
    ap.add_argument("--targets", default=",".join(TARGETS))
    ap.add_argument("--output-dir", required=True)
    ap.add_argument("--skip-bo", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.output_dir)
    targets = [t for t in args.targets.split(",") if t]
    step("collisions", "--input", args.data, "--pairs", "10000", "--per-pair", "--output-dir", str(out / "collisions"))

    vocab_dir = out / "vocab"
    vocab_dir.mkdir(parents=True, exist_ok=True)
    encodings = ["exact"] + [f"folded:{d}" for d in DIMS]
    for d in DIMS:
        path = vocab_dir / f"sortslice{d}.txt"
        step("fit-vocab", "--input", args.vocab_corpus or args.data, "--dim", str(d), "--output", str(path))
        encodings.append(f"sortslice:{path}")

    for target in targets:
        for enc in encodings:
            tag = Path(enc.split(":", 1)[1]).stem if enc.startswith("sortslice:") else enc.replace(":", "")
            for hyper in ("fixed", "optimized"):
                step("regress", "--input", args.data, "--split", args.split, "--target", target,
                     "--encoding", enc, "--hyper", hyper, "--trials", "10", "--train-size", "10000",
                     "--output-dir", str(out / "regress" / target / f"{tag}_{hyper}"))
        if args.skip_bo:
            continue
        for enc in ["exact"] + [f"folded:{d}" for d in DIMS]:
            step("bo", "--input", args.data, "--target", target, "--encoding", enc, "--trials", "5",
                 "--init-size", "1000", "--budget", "1000", "--init-fraction", "0.8", "--direction", "min",
                 "--output-dir", str(out / "bo" / target / enc.replace(":", "")))


if __name__ == "__main__":
    main()

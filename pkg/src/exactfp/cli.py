"""Command-line entry point.

Subcommands::

    exactfp fingerprint  --input mols.csv --encoding exact --output-dir out/
    exactfp fit-vocab    --input corpus.csv --dim 1024 --output vocab.txt
    exactfp collisions   --input mols.csv --dims 512,1024,2048,4096 --pairs 10000 --output-dir out/
    exactfp regress      --train train.csv --test test.csv --target ESR2 --encoding folded:1024 --output-dir out/
    exactfp bo           --input pool.csv --target ESR2 --encoding exact --output-dir out/

Exit codes: 0 success, 2 usage error, 3 input error (unreadable or malformed
files, unusable records), 4 numerical failure (factorization or likelihood).

Every command writes ``manifest.json`` next to its outputs. Only the manifest
carries timestamps and durations, so re-running a command with the same
arguments reproduces the other files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import pair_statistics, regression_metrics, summarize_pairs
from .bo import BoConfig, run_bo
from .data import Dataset, apply_split, load_dataset, subsample
from .fingerprints import SparseFingerprint, dump_line, morgan_sparse, parse_encoding, save_vocabulary, sortslice_fit
from .gp import GpFitError, OptimizerConfig, default_hyperparams, fit_gram, optimize_hyperparams_gram, predict_gram
from .kernel import TanimotoIndex, tanimoto_matrix
from .rng import SplitMix64, derive_seeds
from .smiles import SmilesError, parse_smiles

log = logging.getLogger("exactfp")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


class InputError(Exception):
    pass


# -- helpers -----------------------------------------------------------------


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), sd


class _Manifest:
    def __init__(self, command: str, args: argparse.Namespace, inputs: Sequence[str | None]) -> None:
        self.start = time.perf_counter()
        self.data = {
            "command": command,
            "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
            "inputs": {str(p): _sha256(p) for p in inputs if p},
            "toolkit_version": __version__,
            "started_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }

    def write(self, out_dir: Path, **extra) -> None:
        self.data.update(extra)
        self.data["wall_clock_seconds"] = round(time.perf_counter() - self.start, 3)
        _write_atomic(out_dir / "manifest.json", _json(self.data))


def _output_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_molecules(path: str, smiles_column: str) -> list[tuple[str, str]]:
    """``(record_id, smiles)`` pairs from a delimited table or a ``.smi`` file."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"input file not found: {path}")
    if p.suffix.lower() in (".smi", ".smiles"):
        out = []
        for line_no, line in enumerate(p.read_text().splitlines()):
            parts = line.split()
            if parts:
                out.append((parts[1] if len(parts) > 1 else str(line_no), parts[0]))
        return out
    ds = load_dataset(p, None, smiles_column=smiles_column, validate=False)
    return [(r.record_id, r.smiles) for r in ds.records]


def _parseable(records: list[tuple[str, str]]) -> tuple[list[tuple[str, str]], list[dict]]:
    """Split records into those whose SMILES parse and per-record failures."""
    ok, failed = [], []
    for rid, smi in records:
        try:
            parse_smiles(smi)
        except SmilesError as exc:
            failed.append({"record_id": rid, "error": str(exc)})
            continue
        ok.append((rid, smi))
    return ok, failed


def _fingerprints(smiles: Sequence[str], radius: int) -> list[SparseFingerprint]:
    return [morgan_sparse(parse_smiles(s), radius) for s in smiles]


def _load_target_table(path: str, target: str, smiles_column: str) -> Dataset:
    if not Path(path).exists():
        raise InputError(f"input file not found: {path}")
    return load_dataset(path, target, smiles_column=smiles_column)


# -- commands ----------------------------------------------------------------


def cmd_fingerprint(args: argparse.Namespace) -> int:
    manifest = _Manifest("fingerprint", args, [args.input])
    label, encoder = parse_encoding(args.encoding)
    records = _read_molecules(args.input, args.smiles_column)
    if not records:
        raise InputError(f"{args.input}: no molecules")
    lines, failed = [], []
    for rid, smi in records:
        try:
            fp = morgan_sparse(parse_smiles(smi), args.radius)
        except SmilesError as exc:
            failed.append({"record_id": rid, "error": str(exc)})
            continue
        lines.append(dump_line(encoder(fp)))
    if not lines:
        raise InputError(f"{args.input}: no SMILES could be parsed")
    out = _output_dir(args.output_dir)
    _write_atomic(out / "fingerprints.txt", "\n".join(lines) + "\n")
    manifest.write(out, encoding=label, molecules=len(lines), failed_records=failed)
    return EXIT_OK


def cmd_fit_vocab(args: argparse.Namespace) -> int:
    records, _ = _parseable(_read_molecules(args.input, args.smiles_column))
    fps = _fingerprints([smi for _, smi in records], args.radius)
    if not fps:
        raise InputError(f"{args.input}: no SMILES could be parsed")
    desc = args.description or f"{Path(args.input).name} radius={args.radius}"
    vocab = sortslice_fit(fps, args.dim, desc)
    save_vocabulary(vocab, args.output)
    return EXIT_OK


def _sample_pairs(n: int, count: int, seed: int) -> list[tuple[int, int]]:
    if n < 2:
        raise InputError("need at least two molecules to form pairs")
    gen = SplitMix64(seed)
    pairs = []
    for _ in range(count):
        i = gen.below(n)
        j = gen.below(n - 1)
        if j >= i:
            j += 1
        pairs.append((i, j))
    return pairs


def cmd_collisions(args: argparse.Namespace) -> int:
    manifest = _Manifest("collisions", args, [args.input])
    dims = [int(d) for d in args.dims.split(",") if d.strip()]
    if not dims or min(dims) < 1:
        raise InputError(f"bad --dims {args.dims!r}")
    if args.pairs < 1:
        raise InputError("--pairs must be positive")
    records, failed = _parseable(_read_molecules(args.input, args.smiles_column))
    pairs = _sample_pairs(len(records), args.pairs, args.seed)
    cache: dict[int, SparseFingerprint] = {}
    for i, j in pairs:
        for k in (i, j):
            if k not in cache:
                cache[k] = morgan_sparse(parse_smiles(records[k][1]), args.radius)
    stats = pair_statistics([(cache[i], cache[j]) for i, j in pairs], dims)
    reports = summarize_pairs(stats)

    out = _output_dir(args.output_dir)
    header = ["dim", "mean_pairwise_collisions", "mean_exact_tanimoto", "mean_folded_tanimoto", "mean_overestimation", "pair_count"]
    rows = [[_fmt(getattr(r, h)) for h in header] for r in reports]
    _write_atomic(out / "collisions.csv", _csv_text(header, rows))
    if args.per_pair:
        prow = [
            [s.pair, records[pairs[s.pair][0]][0], records[pairs[s.pair][1]][0], s.dim, s.collisions, _fmt(s.exact_tanimoto), _fmt(s.folded_tanimoto)]
            for s in stats
        ]
        _write_atomic(
            out / "pairs.csv",
            _csv_text(["pair", "record_a", "record_b", "dim", "collisions", "exact_tanimoto", "folded_tanimoto"], prow),
        )
    manifest.write(out, seeds={"master": args.seed}, molecules=len(records), failed_records=failed, collision_definition="unordered pairs of distinct identifiers in the union support sharing a folded slot")
    return EXIT_OK


def cmd_regress(args: argparse.Namespace) -> int:
    inputs = [args.train, args.test, args.input, args.split]
    for p in inputs:
        if p and not Path(p).exists():
            raise InputError(f"input file not found: {p}")
    manifest = _Manifest("regress", args, inputs)
    if args.input:
        if not args.split:
            raise InputError("--input needs --split (or pass --train and --test)")
        ds = apply_split(load_dataset(args.input, args.target, smiles_column=args.smiles_column), args.split)
        train_ds, test_ds = ds.select(ds.partition("train")), ds.select(ds.partition("test"))
    elif args.train and args.test:
        train_ds = load_dataset(args.train, args.target, smiles_column=args.smiles_column)
        test_ds = load_dataset(args.test, args.target, smiles_column=args.smiles_column)
    else:
        raise InputError("pass --train and --test, or --input with --split")
    if len(train_ds) < 2 or len(test_ds) < 2:
        raise InputError(f"need at least 2 train and 2 test records, got {len(train_ds)} and {len(test_ds)}")

    label, encoder = parse_encoding(args.encoding)
    y_train_all = np.array(train_ds.values)
    y_test_all = np.array(test_ds.values)
    train_cache: dict[int, SparseFingerprint] = {}
    test_cache: dict[int, SparseFingerprint] = {}

    def encoded(ds: Dataset, cache, idx):
        for i in idx:
            if i not in cache:
                cache[i] = morgan_sparse(parse_smiles(ds.records[i].smiles), args.radius)
        return [encoder(cache[i]) for i in idx]

    seeds = derive_seeds(args.seed, args.trials)
    opt_cfg = OptimizerConfig(max_iters=args.max_iters)
    rows, trial_meta, metrics_by_trial = [], [], []
    n_train = min(args.train_size, len(train_ds))
    n_test = len(test_ds) if args.test_size is None else min(args.test_size, len(test_ds))
    for t, seed in enumerate(seeds):
        tr = subsample(range(len(train_ds)), n_train, seed)
        te = sorted(subsample(range(len(test_ds)), n_test, derive_seeds(seed, 1)[0])) if n_test < len(test_ds) else list(range(len(test_ds)))
        X_tr = encoded(train_ds, train_cache, tr)
        X_te = encoded(test_ds, test_cache, te)
        y_tr, y_te = y_train_all[tr], y_test_all[te]
        T = tanimoto_matrix(X_tr)
        h = default_hyperparams(y_tr)
        meta = {"trial": t, "seed": seed, "fixed_hyperparams": _hyper_dict(h)}
        if args.hyper == "optimized":
            h, report = optimize_hyperparams_gram(T, y_tr, h, opt_cfg, seed)
            meta["optimizer"] = {k: _jsonable(v) for k, v in vars(report).items()}
        meta["hyperparams"] = _hyper_dict(h)
        L, alpha, jitter = fit_gram(T, y_tr, h)
        meta["jitter"] = jitter
        mean, _ = predict_gram(L, alpha, h, tanimoto_matrix(X_te, X_tr))
        m = regression_metrics(y_te, mean)
        metrics_by_trial.append(m)
        trial_meta.append(meta)
        rows.append([t, seed, len(tr), len(te), _fmt(m["r2"]), _fmt(m["mse"]), _fmt(m["mae"]), "", "", "", _fmt(h.amplitude_sq), _fmt(h.noise_sq), _fmt(h.mean_const)])
        log.info("trial %d: r2=%.4f mse=%.4f mae=%.4f", t, m["r2"], m["mse"], m["mae"])

    summary = {"encoding": label, "hyper": args.hyper, "target": args.target, "trials": args.trials}
    srow = ["summary", "", n_train, n_test]
    sds = []
    for key in ("r2", "mse", "mae"):
        mu, sd = _mean_sd([m[key] for m in metrics_by_trial])
        summary[f"{key}_mean"], summary[f"{key}_sd"] = mu, sd
        srow.append(_fmt(mu))
        sds.append(_fmt(sd))
    rows.append(srow + sds + ["", "", ""])
    out = _output_dir(args.output_dir)
    header = ["trial", "seed", "n_train", "n_test", "r2", "mse", "mae", "r2_sd", "mse_sd", "mae_sd", "amplitude_sq", "noise_sq", "mean_const"]
    _write_atomic(out / "metrics.csv", _csv_text(header, rows))
    _write_atomic(out / "summary.json", _json(summary))
    dropped = {"train": train_ds.dropped, "test": test_ds.dropped}
    manifest.write(out, seeds={"master": args.seed, "trials": seeds}, trials=trial_meta, dropped_records=dropped)
    return EXIT_OK


def _hyper_dict(h) -> dict:
    return {"amplitude_sq": h.amplitude_sq, "noise_sq": h.noise_sq, "mean_const": h.mean_const}


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def cmd_bo(args: argparse.Namespace) -> int:
    manifest = _Manifest("bo", args, [args.input])
    ds = _load_target_table(args.input, args.target, args.smiles_column)
    label, encoder = parse_encoding(args.encoding)
    fps = [encoder(fp) for fp in _fingerprints(ds.smiles, args.radius)]
    values = np.array(ds.values)
    index = TanimotoIndex(fps)
    seeds = derive_seeds(args.seed, args.trials)
    out = _output_dir(args.output_dir)
    aucs, trials = [], []
    for t, seed in enumerate(seeds):
        cfg = BoConfig(
            init_size=args.init_size,
            budget=args.budget,
            init_percentile=args.init_fraction,
            direction=args.direction,
            refit_hyperparams=args.refit_hyperparams,
            seed=seed,
        )
        traj = run_bo(fps, values, cfg, index=index)
        rows = [[it, j, _fmt(v), _fmt(float(b))] for (it, j, v), b in zip(traj.acquired, traj.best_curve)]
        _write_atomic(out / f"trajectory_trial{t}.csv", _csv_text(["iteration", "acquired_index", "observed_value", "best_so_far"], rows))
        aucs.append(traj.auc)
        trials.append({"trial": t, "seed": seed, "auc": traj.auc, "hyperparams": _hyper_dict(traj.hyper), "final_best": float(traj.best_curve[-1])})
        log.info("trial %d: auc=%.4f best=%.4f", t, traj.auc, traj.best_curve[-1])
    mu, sd = _mean_sd(aucs)
    summary = {
        "encoding": label,
        "target": args.target,
        "direction": cfg.direction,
        "auc_mean": mu,
        "auc_sd": sd,
        "trials": trials,
        "seed": args.seed,
        "config": {"init_size": args.init_size, "budget": args.budget, "init_fraction": args.init_fraction, "refit_hyperparams": args.refit_hyperparams},
        "pool_size": len(ds),
        "auc_definition": "mean over iterations of (best_so_far - pool_worst) / (pool_best - pool_worst)",
    }
    _write_atomic(out / "summary.json", _json(summary))
    manifest.write(out, seeds={"master": args.seed, "trials": seeds}, dropped_records=ds.dropped)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exactfp", description="Exact vs compressed Morgan fingerprints with Tanimoto GPs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, encoding=True):
        p.add_argument("--radius", type=int, default=2, help="Morgan radius (default 2)")
        p.add_argument("--smiles-column", default="smiles", help="name of the SMILES column (default 'smiles')")
        if encoding:
            p.add_argument("--encoding", default="exact", help="exact | folded:<dim> | sortslice:<vocabfile>")

    p = sub.add_parser("fingerprint", help="write a fingerprint dump, one line of id:count pairs per molecule")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", required=True)
    common(p)
    p.set_defaults(func=cmd_fingerprint)

    p = sub.add_parser("fit-vocab", help="fit a Sort&Slice vocabulary on a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--output", required=True, help="vocabulary file to write")
    p.add_argument("--description", default="", help="corpus description stored in the file header")
    common(p, encoding=False)
    p.set_defaults(func=cmd_fit_vocab)

    p = sub.add_parser("collisions", help="hash-collision statistics over random molecule pairs")
    p.add_argument("--input", required=True)
    p.add_argument("--dims", default="512,1024,2048,4096")
    p.add_argument("--pairs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-pair", action="store_true", help="also write pairs.csv with one row per pair and dim")
    p.add_argument("--output-dir", required=True)
    common(p, encoding=False)
    p.set_defaults(func=cmd_collisions)

    p = sub.add_parser("regress", help="GP regression trials with R2/MSE/MAE")
    p.add_argument("--train", help="training table")
    p.add_argument("--test", help="test table")
    p.add_argument("--input", help="single table to split with --split")
    p.add_argument("--split", help="record_id,label file (labels train/test)")
    p.add_argument("--target", required=True)
    p.add_argument("--hyper", choices=("fixed", "optimized"), default="fixed")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-size", type=int, default=10_000)
    p.add_argument("--test-size", type=int, default=None, help="subsample the test set (default: use all)")
    p.add_argument("--max-iters", type=int, default=10_000, help="optimizer iteration cap")
    p.add_argument("--output-dir", required=True)
    common(p)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("bo", help="simulated Bayesian optimization over a candidate pool")
    p.add_argument("--input", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--init-size", type=int, default=1000)
    p.add_argument("--init-fraction", type=float, default=0.8)
    p.add_argument("--direction", choices=("min", "max", "minimize", "maximize"), default="min")
    p.add_argument("--refit-hyperparams", action="store_true", help="recompute the fixed heuristic after every acquisition")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    common(p)
    p.set_defaults(func=cmd_bo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be positive")
    try:
        return args.func(args)
    except (InputError, SmilesError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GpFitError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

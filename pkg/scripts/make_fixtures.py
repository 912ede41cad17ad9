#!/usr/bin/env python3
"""Regenerate the bundled test corpus.

Writes ``tests/fixtures/molecules.csv`` with columns ``id,smiles,target``:
5,000 unique drug-like SMILES assembled from ring, linker and substituent
fragments, and a smooth synthetic target drawn from a GP prior with the
exact-fingerprint Tanimoto kernel (amplitude 1) plus Gaussian noise
(variance 0.01). Deterministic for a given ``--seed``.

    python scripts/make_fixtures.py
"""

from __future__ import annotations

import argparse
import csv
import random
from pathlib import Path

import numpy as np

from exactfp.fingerprints import morgan_sparse
from exactfp.kernel import tanimoto_matrix
from exactfp.smiles import parse_smiles

# "{s}" marks an optional substituent; the chain continues from the last atom
# outside parentheses, "#" is replaced by a fresh ring-closure digit.
RINGS = [
    "c#cc{s}c(c{s}c#)",
    "c#c{s}c(cc{s}c#)",
    "c#cc{s}ccc#",
    "c#ccc(cc#{s})",
    "c#cnc(cc#)",
    "c#ccnc(c#)",
    "c#ncc(cn#)",
    "c#ccc(s#)",
    "c#ccc(o#)",
    "c#cc(c{s}s#)",
    "C#CCC(CC#)",
    "C#CCN(CC#)",
    "N#CCN(CC#)",
    "C#CCC(C#)",
    "C#CC#",
    "C#CCOC(C#)",
    "c#ccc%ncc(ccc%nc#)",
    "c#ccc%n[nH]c(cc%nc#)",
    "c#ccc%n[nH]c(nc%nc#)",
    "c#ccc%nc(c#)OCO%n",
    "C#CN(C)C(=O)C(C#)",
]
TERMINAL_RINGS = [
    "N#CCOCC#",
    "N#CCCCC#",
    "N#CCN(C)CC#",
    "c#cc[nH]c#",
    "c#ccncc#",
    "C#CC#",
    "c#ccccc#",
    "n#ccnc#",
]
LINKERS = ["", "C", "CC", "C(=O)N", "NC(=O)", "O", "N", "S(=O)(=O)N", "C(=O)O", "OC", "CN", "C=C", "C(=O)", "NC(=O)N", "CC(=O)N", "C(C)N", "S"]
SUBSTITUENTS = ["", "", "", "", "F", "Cl", "C", "OC", "O", "N", "C#N", "C(F)(F)F", "Br", "C(C)C", "N(C)C"]
START_CAPS = ["", "C", "CC", "N#C", "FC(F)(F)", "CO", "CC(C)", "CN(C)", "O=C(O)", "CS(=O)(=O)", "Cl", "F", "CCO", "NC(=O)", "CC(=O)N"]
END_CAPS = ["", "C", "CC", "C#N", "C(F)(F)F", "OC", "F", "Cl", "C(=O)O", "N", "O", "C(C)C", "C(=O)N", "CO", "Br"]


def _ring(template: str, digits: list[int], rng: random.Random) -> str:
    out = template
    d1 = digits.pop(0)
    out = out.replace("#", str(d1))
    if "%n" in out:
        d2 = digits.pop(0)
        out = out.replace("%n", str(d2))
    while "{s}" in out:
        s = rng.choice(SUBSTITUENTS)
        out = out.replace("{s}", f"({s})" if s else "", 1)
    return out


def random_smiles(rng: random.Random) -> str:
    digits = list(range(1, 10))
    parts = [rng.choice(START_CAPS)]
    n_units = rng.choices([1, 2, 3, 4], weights=[2, 5, 4, 1])[0]
    for u in range(n_units):
        if u:
            parts.append(rng.choice(LINKERS))
        parts.append(_ring(rng.choice(RINGS), digits, rng))
    if rng.random() < 0.35:
        parts.append(rng.choice(LINKERS[1:]))
        parts.append(_ring(rng.choice(TERMINAL_RINGS), digits, rng))
    else:
        parts.append(rng.choice(END_CAPS))
    return "".join(parts)


def generate(n: int, seed: int) -> list[str]:
    rng = random.Random(seed)
    seen: dict[str, None] = {}
    while len(seen) < n:
        smi = random_smiles(rng)
        if smi in seen:
            continue
        parse_smiles(smi)  # every fixture must parse
        seen[smi] = None
    return list(seen)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--noise-var", type=float, default=0.01)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "molecules.csv"))
    args = ap.parse_args()

    smiles = generate(args.n, args.seed)
    fps = [morgan_sparse(parse_smiles(s), 2) for s in smiles]
    T = tanimoto_matrix(fps)
    nrng = np.random.default_rng(args.seed)
    L = np.linalg.cholesky(T + 1e-8 * np.eye(len(fps)))
    f = L @ nrng.standard_normal(len(fps))
    y = f + np.sqrt(args.noise_var) * nrng.standard_normal(len(fps))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "smiles", "target"])
        for i, (s, v) in enumerate(zip(smiles, y)):
            w.writerow([f"mol{i:05d}", s, f"{v:.6f}"])
    print(f"wrote {len(smiles)} molecules to {out}")


if __name__ == "__main__":
    main()

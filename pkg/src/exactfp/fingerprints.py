"""Morgan count fingerprints and their three encodings.

``morgan_sparse`` produces the exact fingerprint, a map from 64-bit
substructure identifier to count. It can be used as is, folded into a fixed
number of slots by ``id mod dim``, or projected onto a Sort&Slice vocabulary
of the most common identifiers in a reference corpus.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .hashing import MASK64, hash_words
from .smiles import MolGraph, initial_atom_invariants

__all__ = [
    "DenseFingerprint",
    "Fingerprint",
    "SortSliceVocabulary",
    "SparseFingerprint",
    "fold",
    "load_vocabulary",
    "morgan_sparse",
    "parse_encoding",
    "save_vocabulary",
    "sortslice_encode",
    "sortslice_fit",
]

MAX_RADIUS = 10


@dataclass(frozen=True)
class SparseFingerprint:
    """Exact count fingerprint: identifier -> positive count."""

    counts: Mapping[int, int]
    total: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        counts = dict(self.counts)
        for k, v in counts.items():
            if not 0 <= k <= MASK64:
                raise ValueError(f"identifier {k} is not an unsigned 64-bit integer")
            if v < 1:
                raise ValueError(f"count for identifier {k} must be positive, got {v}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", sum(counts.values()))

    def __len__(self) -> int:
        return len(self.counts)

    def __hash__(self) -> int:
        return hash(frozenset(self.counts.items()))

    def items(self):
        return self.counts.items()


@dataclass(frozen=True, eq=False)
class DenseFingerprint:
    """Fixed-length count vector (folded or Sort&Slice encoded)."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.counts, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("dense fingerprint must be a non-empty 1-D vector")
        if (arr < 0).any():
            raise ValueError("dense fingerprint counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def dim(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseFingerprint):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.counts, other.counts))

    def __hash__(self) -> int:
        return hash(self.counts.tobytes())


Fingerprint = Union[SparseFingerprint, DenseFingerprint]


def morgan_sparse(mol: MolGraph, radius: int = 2) -> SparseFingerprint:
    """Count-based Morgan (ECFP-style) fingerprint of ``mol``.

    Iteration 0 uses :func:`initial_atom_invariants`. At iteration ``r`` each
    atom's identifier becomes ``hash_words([r, own_id, n, code_1, id_1, ...,
    code_n, id_n])`` where the ``(bond code, neighbour id)`` pairs are sorted.

    Every radius-0 environment is counted. For ``r >= 1`` an environment is
    keyed by the set of bonds it covers; empty sets are skipped and, among all
    environments sharing a bond set (any atom, any iteration), only the one
    with the smallest identifier is counted.
    """
    if not 0 <= radius <= MAX_RADIUS:
        raise ValueError(f"radius must be in [0, {MAX_RADIUS}], got {radius}")
    ids = initial_atom_invariants(mol)
    counts = Counter(ids)
    n = mol.num_atoms
    codes = [int(b.order) for b in mol.bonds]
    nbrs = mol.neighbors
    bond_sets: list[frozenset[int]] = [frozenset()] * n
    best_by_bonds: dict[frozenset[int], int] = {}

    for r in range(1, radius + 1):
        new_ids = []
        new_sets = []
        for i in range(n):
            pairs = sorted((codes[k], ids[j]) for j, k in nbrs[i])
            words = [r, ids[i], len(pairs)]
            for code, nid in pairs:
                words.append(code)
                words.append(nid)
            new_ids.append(hash_words(words))
            covered = set(bond_sets[i])
            for j, k in nbrs[i]:
                covered.add(k)
                covered.update(bond_sets[j])
            new_sets.append(frozenset(covered))
        for env_id, env_bonds in zip(new_ids, new_sets):
            if not env_bonds:
                continue
            prev = best_by_bonds.get(env_bonds)
            if prev is None or env_id < prev:
                best_by_bonds[env_bonds] = env_id
        ids, bond_sets = new_ids, new_sets

    counts.update(best_by_bonds.values())
    return SparseFingerprint(counts)


def fold(fp: SparseFingerprint, dim: int) -> DenseFingerprint:
    """Fold by ``index = id mod dim``, summing counts that collide."""
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    out = np.zeros(dim, dtype=np.int64)
    for ident, c in fp.counts.items():
        out[ident % dim] += c
    return DenseFingerprint(out)


@dataclass(frozen=True)
class SortSliceVocabulary:
    ordered_ids: tuple[int, ...]
    provenance: str = ""
    _index: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = tuple(int(i) for i in self.ordered_ids)
        if not ids:
            raise ValueError("vocabulary must contain at least one identifier")
        index = {ident: slot for slot, ident in enumerate(ids)}
        if len(index) != len(ids):
            raise ValueError("vocabulary contains duplicate identifiers")
        object.__setattr__(self, "ordered_ids", ids)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return len(self.ordered_ids)

    def slot(self, ident: int) -> int | None:
        return self._index.get(ident)


def sortslice_fit(corpus: Sequence[SparseFingerprint], dim: int, description: str = "") -> SortSliceVocabulary:
    """Pick the ``dim`` identifiers present in the most corpus fingerprints.

    Support counts presence per fingerprint, not summed counts. Ties go to the
    smaller identifier. If the corpus has fewer than ``dim`` distinct
    identifiers, the vocabulary shrinks and the provenance says so.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    if len(corpus) == 0:
        raise ValueError("cannot fit a Sort&Slice vocabulary on an empty corpus")
    support: Counter[int] = Counter()
    for fp in corpus:
        support.update(fp.counts.keys())
    if not support:
        raise ValueError("corpus fingerprints contain no identifiers")
    ranked = sorted(support.items(), key=lambda kv: (-kv[1], kv[0]))
    chosen = [ident for ident, _ in ranked[:dim]]
    parts = [description] if description else []
    parts.append(f"n_fingerprints={len(corpus)}")
    if len(chosen) < dim:
        parts.append(f"requested_dim={dim} shrunk_to={len(chosen)}")
    return SortSliceVocabulary(tuple(chosen), provenance="; ".join(parts))


def sortslice_encode(fp: SparseFingerprint, vocab: SortSliceVocabulary) -> DenseFingerprint:
    """Slot ``i`` holds the count of ``vocab.ordered_ids[i]``; other ids are dropped."""
    out = np.zeros(vocab.dim, dtype=np.int64)
    for ident, c in fp.counts.items():
        slot = vocab.slot(ident)
        if slot is not None:
            out[slot] = c
    return DenseFingerprint(out)


def save_vocabulary(vocab: SortSliceVocabulary, path: str | Path) -> None:
    corpus = vocab.provenance.replace("\n", " ")
    lines = [f"dim={vocab.dim}", f"corpus={corpus}", *map(str, vocab.ordered_ids)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_vocabulary(path: str | Path) -> SortSliceVocabulary:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if len(lines) < 2 or not lines[0].startswith("dim=") or not lines[1].startswith("corpus="):
        raise ValueError(f"{path}: expected 'dim=<n>' and 'corpus=<string>' header lines")
    try:
        dim = int(lines[0][4:])
        ids = [int(s) for s in lines[2:] if s.strip()]
    except ValueError as exc:
        raise ValueError(f"{path}: malformed vocabulary file ({exc})") from None
    if len(ids) != dim:
        raise ValueError(f"{path}: header says dim={dim} but {len(ids)} identifiers follow")
    return SortSliceVocabulary(tuple(ids), provenance=lines[1][7:])


def parse_encoding(spec: str) -> tuple[str, Callable[[SparseFingerprint], Fingerprint]]:
    """Turn ``exact``, ``folded:<dim>`` or ``sortslice:<vocabfile>`` into an encoder.

    Returns a ``(label, encoder)`` pair; the label is suitable for reports.
    """
    if spec == "exact":
        return "exact", lambda fp: fp
    kind, sep, arg = spec.partition(":")
    if kind == "folded" and sep:
        try:
            dim = int(arg)
        except ValueError:
            raise ValueError(f"bad folded dimension in encoding {spec!r}") from None
        if dim < 1:
            raise ValueError(f"folded dimension must be positive in {spec!r}")
        return f"folded{dim}", lambda fp: fold(fp, dim)
    if kind == "sortslice" and sep and arg:
        vocab = load_vocabulary(arg)
        return f"sortslice{vocab.dim}", lambda fp: sortslice_encode(fp, vocab)
    raise ValueError(f"unknown encoding {spec!r}; expected exact, folded:<dim> or sortslice:<vocabfile>")


def encode_all(fps: Iterable[SparseFingerprint], encoder: Callable[[SparseFingerprint], Fingerprint]) -> list[Fingerprint]:
    return [encoder(fp) for fp in fps]


def dump_line(fp: Fingerprint) -> str:
    """``id:count`` pairs, ascending id; dense vectors list their non-zero slots."""
    if isinstance(fp, SparseFingerprint):
        items = sorted(fp.counts.items())
    else:
        nz = np.flatnonzero(fp.counts)
        items = [(int(i), int(fp.counts[i])) for i in nz]
    return " ".join(f"{k}:{v}" for k, v in items)

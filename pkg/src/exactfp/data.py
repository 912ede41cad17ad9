"""Dataset loading, splits and seeded subsampling."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .rng import SplitMix64
from .smiles import SmilesError, parse_smiles

__all__ = [
    "DataWarning",
    "Dataset",
    "Record",
    "apply_split",
    "bottom_fraction",
    "load_dataset",
    "normalize_direction",
    "read_table",
    "subsample",
]

log = logging.getLogger(__name__)

ID_COLUMNS = ("record_id", "id", "inchikey", "name", "mol_id", "compound_id")
SPLIT_LABELS = ("train", "test")


class DataWarning(UserWarning):
    """Records were dropped or ignored while reading input files."""


@dataclass(frozen=True)
class Record:
    record_id: str
    smiles: str
    value: float
    split: str | None = None


@dataclass(frozen=True)
class Dataset:
    records: tuple[Record, ...]
    target: str
    dropped: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def smiles(self) -> list[str]:
        return [r.smiles for r in self.records]

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.records]

    def partition(self, label: str) -> list[int]:
        return [i for i, r in enumerate(self.records) if r.split == label]

    def select(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices), self.target, dict(self.dropped))


def _sniff_delimiter(header: str) -> str:
    return "\t" if header.count("\t") >= header.count(",") and "\t" in header else ","


def read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a comma- or tab-separated file (delimiter from the header line)."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                raise ValueError(f"{path}: empty file")
            delim = _sniff_delimiter(header_line)
            fh.seek(0)
            reader = csv.reader(fh, delimiter=delim)
            header = [h.strip() for h in next(reader)]
            rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    return header, rows


def _find_column(header: list[str], candidates: Sequence[str]) -> int | None:
    lowered = [h.lower() for h in header]
    for name in candidates:
        if name in lowered:
            return lowered.index(name)
    return None


def load_dataset(path: str | Path, target_name: str | None, smiles_column: str = "smiles", validate: bool = True) -> Dataset:
    """Read a delimited table with a SMILES column and a target column.

    Rows whose target is missing or non-finite, and rows whose SMILES does
    not parse, are dropped; each category emits one :class:`DataWarning`
    with its count. ``target_name=None`` loads SMILES only (values are NaN).
    Record ids come from the first recognised id column, else the row number.
    """
    header, rows = read_table(path)
    smi_col = _find_column(header, (smiles_column.lower(),))
    if smi_col is None:
        raise ValueError(f"{path}: no {smiles_column!r} column; available columns: {', '.join(header)}")
    tgt_col = None
    if target_name is not None:
        if target_name not in header:
            raise ValueError(f"{path}: no target column {target_name!r}; available columns: {', '.join(header)}")
        tgt_col = header.index(target_name)
    id_col = _find_column(header, ID_COLUMNS)

    records = []
    seen_ids: set[str] = set()
    missing, invalid = [], []
    for row_no, row in enumerate(rows):
        rid = row[id_col].strip() if id_col is not None and id_col < len(row) else str(row_no)
        if rid in seen_ids:
            raise ValueError(f"{path}: duplicate record id {rid!r}")
        seen_ids.add(rid)
        smi = row[smi_col].strip() if smi_col < len(row) else ""
        value = math.nan
        if tgt_col is not None:
            raw = row[tgt_col].strip() if tgt_col < len(row) else ""
            try:
                value = float(raw)
            except ValueError:
                value = math.nan
            if not math.isfinite(value):
                missing.append(rid)
                continue
        if validate:
            try:
                parse_smiles(smi)
            except SmilesError as exc:
                log.debug("dropping %s: %s", rid, exc)
                invalid.append(rid)
                continue
        records.append(Record(rid, smi, value))

    if missing:
        warnings.warn(f"{path}: dropped {len(missing)} record(s) with missing or non-finite {target_name!r}", DataWarning, stacklevel=2)
    if invalid:
        warnings.warn(f"{path}: dropped {len(invalid)} record(s) whose SMILES failed to parse", DataWarning, stacklevel=2)
    if not records:
        raise ValueError(f"{path}: no usable records")
    return Dataset(tuple(records), target_name or "", {"missing_target": missing, "invalid_smiles": invalid})


def apply_split(dataset: Dataset, split_path: str | Path) -> Dataset:
    """Attach train/test labels from a two-column ``record_id, label`` file.

    A header row is optional. If a header names a ``split`` or ``label``
    column, that column is used with the recognised id column; otherwise the
    first and last columns are id and label. Records without a label are
    excluded; labelled ids absent from the dataset are ignored with a warning.
    """
    header, rows = read_table(split_path)
    lowered = [h.lower() for h in header]
    if lowered[-1] in SPLIT_LABELS or len(header) < 2:
        # no header: the first line is data
        rows = [header] + rows
        id_col, label_col = 0, len(header) - 1
    else:
        label_col = _find_column(header, ("split", "label"))
        if label_col is None:
            label_col = len(header) - 1
        id_col = _find_column(header, ID_COLUMNS)
        if id_col is None:
            id_col = 0
    if id_col == label_col:
        raise ValueError(f"{split_path}: need separate id and label columns")

    labels: dict[str, str] = {}
    for line_no, row in enumerate(rows, start=1):
        if len(row) <= max(id_col, label_col):
            raise ValueError(f"{split_path}: row {line_no} has too few columns")
        label = row[label_col].strip().lower()
        if label not in SPLIT_LABELS:
            raise ValueError(f"{split_path}: row {line_no} has label {row[label_col]!r}, expected train or test")
        labels[row[id_col].strip()] = label

    known = {r.record_id for r in dataset.records}
    unknown = [rid for rid in labels if rid not in known]
    if unknown:
        warnings.warn(f"{split_path}: ignored {len(unknown)} id(s) not present in the dataset", DataWarning, stacklevel=2)
    kept = tuple(replace(r, split=labels[r.record_id]) for r in dataset.records if r.record_id in labels)
    return Dataset(kept, dataset.target, dict(dataset.dropped))


def subsample(indices: Sequence[int], n: int, seed: int) -> list[int]:
    """``n`` items drawn uniformly without replacement, in draw order (SplitMix64)."""
    if n > len(indices):
        raise ValueError(f"cannot draw {n} samples from {len(indices)} indices")
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    return SplitMix64(seed).sample(indices, n)


def normalize_direction(direction: str) -> str:
    d = direction.lower()
    if d in ("min", "minimize", "minimise"):
        return "minimize"
    if d in ("max", "maximize", "maximise"):
        return "maximize"
    raise ValueError(f"direction must be minimize or maximize, got {direction!r}")


def bottom_fraction(values: Sequence[float], fraction: float, direction: str = "minimize") -> list[int]:
    """Indices of the worst ``ceil(fraction * n)`` values, in ascending index order.

    "Worst" means largest when minimizing and smallest when maximizing; ties
    prefer the lower index.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    k = math.ceil(round(fraction * n, 9))
    sign = -1.0 if normalize_direction(direction) == "minimize" else 1.0
    order = sorted(range(n), key=lambda i: (sign * values[i], i))
    return sorted(order[:k])

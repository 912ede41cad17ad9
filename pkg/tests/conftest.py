import csv
from pathlib import Path

import numpy as np
import pytest

from exactfp.fingerprints import morgan_sparse
from exactfp.smiles import parse_smiles

FIXTURES = Path(__file__).parent / "fixtures"
MOLECULES = FIXTURES / "molecules.csv"


def _read_corpus():
    with MOLECULES.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [r["id"] for r in rows], [r["smiles"] for r in rows], np.array([float(r["target"]) for r in rows])


@pytest.fixture(scope="session")
def corpus():
    """Ids, SMILES and targets of the bundled 5,000-molecule fixture."""
    return _read_corpus()


@pytest.fixture(scope="session")
def corpus_fps(corpus):
    """Radius-2 exact fingerprints for the whole fixture, computed once per session."""
    _, smiles, _ = corpus
    return [morgan_sparse(parse_smiles(s), 2) for s in smiles]


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


# acceptance lines collected by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

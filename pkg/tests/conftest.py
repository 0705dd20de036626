"""Shared fixtures: code files and their parsed graphs."""

from pathlib import Path

import pytest

from eqml.code_model import load_alist, nullspace_basis

ROOT = Path(__file__).resolve().parent.parent
CODES = ROOT / "codes"

HAMMING = CODES / "hamming_7_4.alist"
HAMMING_PADDED = CODES / "hamming_7_4_padded.alist"
LDPC_96 = CODES / "ldpc_96_48.alist"


@pytest.fixture(scope="session")
def hamming_path() -> Path:
    return HAMMING


@pytest.fixture(scope="session")
def ldpc96_path() -> Path:
    return LDPC_96


@pytest.fixture(scope="session")
def hamming():
    return load_alist(HAMMING)


@pytest.fixture(scope="session")
def ldpc96():
    return load_alist(LDPC_96)


@pytest.fixture(scope="session")
def hamming_basis(hamming):
    return nullspace_basis(hamming)


@pytest.fixture(scope="session")
def ldpc96_basis(ldpc96):
    return nullspace_basis(ldpc96)

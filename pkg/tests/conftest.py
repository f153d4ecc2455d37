import json
from pathlib import Path

import pytest

from spoilkit.corpus import load_corpus

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def fixture_path() -> Path:
    return FIXTURES / "corpus_20.jsonl"


@pytest.fixture(scope="session")
def bad_fixture_path() -> Path:
    return FIXTURES / "corpus_bad.jsonl"


@pytest.fixture(scope="session")
def corpus20(fixture_path):
    return load_corpus(fixture_path, "validation")


@pytest.fixture
def write_jsonl(tmp_path):
    """Factory: write a list of dicts (or raw strings) as a JSONL file."""

    def _write(records, name="data.jsonl"):
        path = tmp_path / name
        with path.open("w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(rec if isinstance(rec, str) else json.dumps(rec, ensure_ascii=False))
                fh.write("\n")
        return path

    return _write

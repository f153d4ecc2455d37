import json
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
FIXTURE_CORPUS = REPO_ROOT / "tests" / "fixtures" / "corpus_20.jsonl"


def _run_spoilkit(*argv):
    """The pipeline CLI is an external interface; call it as a subprocess."""
    proc = subprocess.run([sys.executable, "-m", "spoilkit", *map(str, argv)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def run_spoilkit():
    return _run_spoilkit


@pytest.fixture(scope="session")
def corpus_path():
    assert FIXTURE_CORPUS.exists(), "pipeline fixture corpus missing"
    return FIXTURE_CORPUS


@pytest.fixture(scope="session")
def windows_path(corpus_path, tmp_path_factory):
    """Windows JSONL produced by the pipeline's generate command."""
    out = tmp_path_factory.mktemp("prep")
    _run_spoilkit("generate", "--input", corpus_path, "--scorer", "stub:1",
                  "--no-reduce", "--out", out)
    return out / "windows.jsonl"


@pytest.fixture(scope="session")
def split_windows(windows_path, tmp_path_factory):
    """The fixture windows split 14/6 by post id for train/validation."""
    out = tmp_path_factory.mktemp("split")
    records = [json.loads(line) for line in windows_path.read_text().splitlines()]
    ids = sorted({r["post_id"] for r in records})
    train_ids = set(ids[:14])
    train, val = out / "train_windows.jsonl", out / "val_windows.jsonl"
    with train.open("w") as t, val.open("w") as v:
        for rec in records:
            target = t if rec["post_id"] in train_ids else v
            target.write(json.dumps(rec) + "\n")
    return train, val

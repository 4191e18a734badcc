import json

import pytest

from quadcert.engine import certify_range


@pytest.fixture(scope="session")
def cert_2k(tmp_path_factory):
    """A genuine certificate for 0..2000 (max-q), written once per session."""
    path = tmp_path_factory.mktemp("certs") / "genuine_2k.jsonl"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        result = certify_range(2000, sink=fh)
    return {"path": str(path), "limit": 2000, "stats": result.stats}


@pytest.fixture()
def write_cert(tmp_path):
    """Write raw step dicts as a JSON-lines file (independent of the
    package's serializer, so tests control the exact bytes)."""

    def _write(rows, name="cert.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        return str(path)

    return _write


def base_rows(upto: int = 20):
    return [{"n": i, "just": {"type": "base"}, "prereqs": []}
            for i in range(upto + 1)]


@pytest.fixture()
def bases():
    return base_rows

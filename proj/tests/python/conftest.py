import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture(scope="session")
def schema():
    import json

    path = os.environ.get("SPIRO_SCHEMA", ROOT / "schema" / "report.schema.json")
    return json.loads(pathlib.Path(path).read_text())


@pytest.fixture(scope="session")
def cli_binary():
    path = os.environ.get("SPIRO_CLI")
    if not path or not pathlib.Path(path).exists():
        pytest.skip("SPIRO_CLI not set")
    return path

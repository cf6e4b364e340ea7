"""Tests for run artifacts written by the workspace."""

import json
import os

import pytest

from parapost.config import RunConfig
from parapost.constants import RESOLVED_CONFIG_FILENAME
from parapost.exceptions import DataFormatError
from parapost.workspace import REPORT_SCHEMAS, Workspace


@pytest.fixture
def workspace(tmp_path):
    return Workspace(str(tmp_path / "run"))


def test_creates_directory(tmp_path):
    Workspace(str(tmp_path / "a" / "b"))
    assert (tmp_path / "a" / "b").is_dir()


def test_resolve(workspace, tmp_path):
    assert workspace.resolve("x.csv") == os.path.join(
        workspace.out_dir, "x.csv"
    )
    assert workspace.resolve(str(tmp_path / "y.csv")) == str(
        tmp_path / "y.csv"
    )


def test_report_keys_are_sorted(workspace):
    path = workspace.write_report("r.json", {"b": 1, "a": [1.5, 2]})

    with open(path) as f:
        text = f.read()

    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [1.5, 2], "b": 1}


def test_report_schema(workspace):
    document = {key: 0 for key in REPORT_SCHEMAS["predictive-summary"]}
    workspace.write_report("ok.json", document, schema="predictive-summary")

    del document["seed"]
    document["extra"] = 1
    with pytest.raises(DataFormatError, match="missing: \\['seed'\\]"):
        workspace.write_report(
            "bad.json", document, schema="predictive-summary"
        )


def test_table_format(workspace):
    path = workspace.write_table(
        "t.csv", ["name", "count", "value"], [["a", 3, 1.0 / 3.0]]
    )

    with open(path) as f:
        assert f.read() == "name,count,value\na,3,0.3333333333\n"


def test_write_config(workspace):
    path = workspace.write_config(RunConfig({"rng": {"seed": 5}}))

    assert os.path.basename(path) == RESOLVED_CONFIG_FILENAME
    with open(path) as f:
        assert json.load(f)["rng"]["seed"] == 5

import json

import numpy as np
import pandas as pd
import pytest

from src import config
from src.core.errors import PreconditionError, SchemaError
from src.storage.artifacts import render_csv, render_json, write_artifact
from src.utils.helpers import apply_overrides, load_document, parse_float_list


def test_render_json_handles_numpy():
    doc = json.loads(render_json({"b": np.float64(0.5), "a": np.arange(3), "n": np.int64(7)}))
    assert doc == {"a": [0, 1, 2], "b": 0.5, "n": 7}


def test_render_csv_shapes():
    assert render_csv({"x": 1, "y": {"z": 2}}).splitlines() == ["x,y.z", "1,2"]
    assert render_csv([{"n": 1}, {"n": 2}]).splitlines() == ["n", "1", "2"]
    assert render_csv(pd.DataFrame({"a": [1.5]})).splitlines() == ["a", "1.5"]


def test_write_artifact_replaces_file(tmp_path):
    target = tmp_path / "nested" / "out.json"
    assert write_artifact({"v": 1}, str(target)) == str(target)
    write_artifact({"v": 2}, str(target))
    assert json.loads(target.read_text(encoding="utf-8")) == {"v": 2}
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]


def test_write_artifact_unknown_format(tmp_path):
    with pytest.raises(PreconditionError):
        write_artifact({}, str(tmp_path / "x"), "xml")


def test_load_document_yaml_and_errors(tmp_path):
    path = tmp_path / "doc.yaml"
    path.write_text("a: 1\nb: [2, 3]\n", encoding="utf-8")
    assert load_document(path) == {"a": 1, "b": [2, 3]}
    with pytest.raises(PreconditionError):
        load_document(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(SchemaError) as info:
        load_document(broken, "params")
    assert info.value.field == "params"


def test_parse_float_list():
    assert parse_float_list(None, "eps") is None
    assert parse_float_list("0.5, 0.25", "eps") == [0.5, 0.25]
    assert parse_float_list("[1, 2]", "eps") == [1.0, 2.0]
    with pytest.raises(SchemaError):
        parse_float_list("a,b", "eps")


def test_apply_overrides_returns_previous():
    previous = apply_overrides({"L_FACTOR": 0.25})
    try:
        assert config.L_FACTOR == 0.25
        assert previous == {"L_FACTOR": 0.5}
    finally:
        config.L_FACTOR = previous["L_FACTOR"]


def test_apply_overrides_is_all_or_nothing():
    with pytest.raises(SchemaError) as info:
        apply_overrides({"L_FACTOR": 0.25, "TORUS_HORIZON": -1})
    assert info.value.field == "config.TORUS_HORIZON"
    assert config.L_FACTOR == 0.5

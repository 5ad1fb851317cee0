import json
import math

import numpy as np
import pandas as pd
import pytest

from utils.errors import ConfigError
from utils.exporters import VERSION, envelope, to_csv, to_json
from utils.logging_setup import set_correlation_id
from utils.params import PotentialKind
from utils.result_cache import ResultCache, hash_point
from utils.sweeps import map_points, sweep_values


def _square(x):
    return x * x


def test_csv_uses_scientific_floats_and_lf(tmp_path):
    path = to_csv(tmp_path / "sub" / "a.csv", pd.DataFrame({"x": [0.5, 2.0], "y": [1, 2]}))
    raw = open(path, "rb").read()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == "x,y"
    assert lines[1].startswith("5.00000000000e-01,")


def test_json_coerces_numeric_types(tmp_path):
    payload = {"c": 1 + 2j, "arr": np.arange(3), "nan": math.nan, "kind": PotentialKind.VDW, "n": np.int64(4)}
    data = json.loads(open(to_json(tmp_path / "a.json", payload), encoding="utf-8").read())
    assert data["c"] == {"re": 1.0, "im": 2.0}
    assert data["arr"] == [0, 1, 2]
    assert data["nan"] is None
    assert data["kind"] == PotentialKind.VDW.value
    assert data["n"] == 4


def test_envelope_carries_run_id():
    set_correlation_id("abc12345")
    env = envelope({"jobs": 1}, {"v_up": 1.0}, extra=3)
    assert env["run_id"] == "abc12345"
    assert env["config"] == {"jobs": 1} and env["derived"] == {"v_up": 1.0} and env["extra"] == 3


def test_hash_point_ignores_key_order():
    assert hash_point({"a": 1, "b": [1, 2]}) == hash_point({"b": [1, 2], "a": 1})
    assert hash_point({"a": 1}) != hash_point({"a": 2})


def test_hash_point_changes_with_code_version():
    assert hash_point({"od_c": 35.0}, version="1.1.0") != hash_point({"od_c": 35.0}, version="1.2.0")
    assert hash_point({"od_c": 35.0}) == hash_point({"od_c": 35.0}, version=VERSION)


def test_result_cache_roundtrip_and_disable(tmp_path):
    cache = ResultCache(str(tmp_path / "cache"), ttl_hours=1)
    key = hash_point({"od_c": 35.0})
    assert cache.get(key) is None
    cache.set(key, {"t2": 0.5})
    assert cache.get(key) == {"t2": 0.5}
    off = ResultCache(str(tmp_path / "cache"), enabled=False)
    assert off.get(key) is None
    cache.close()
    off.close()


def test_sweep_values_linear_and_log():
    assert np.allclose(sweep_values({"min": 0, "max": 1, "points": 3}), [0.0, 0.5, 1.0])
    assert np.allclose(sweep_values({"min": 1, "max": 100, "points": 3, "scale": "log"}), [1.0, 10.0, 100.0])


@pytest.mark.parametrize("bad", [
    {"min": 1, "max": 1, "points": 3},
    {"min": 0, "max": 1, "points": 1},
    {"min": 0, "max": 1, "points": 3, "scale": "log"},
    {"min": 0, "max": 1, "points": 3, "scale": "cubic"},
])
def test_sweep_values_rejects(bad):
    with pytest.raises(ConfigError):
        sweep_values(bad)


def test_map_points_keeps_order_in_pool():
    assert map_points(_square, [3, 1, 2], jobs=1) == [9, 1, 4]
    assert map_points(_square, [3, 1, 2], jobs=2) == [9, 1, 4]

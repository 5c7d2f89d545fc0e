import json
import math

import numpy as np

from bearing_swarm.engine import run
from bearing_swarm.io import (jsonable, read_records_csv, record_columns, write_json,
                              write_records_csv, write_sweep_csv)
from test_engine import small


def test_columns():
    assert record_columns(2) == [
        "t", "p_0_x", "p_0_y", "valid_0", "RMSE_0", "MSCE_0",
        "p_1_x", "p_1_y", "valid_1", "RMSE_1", "MSCE_1",
        "pstar_x", "pstar_y", "ptrue_x", "ptrue_y", "xtilde_norm", "conservation_residual"]


def test_csv_round_trip_is_exact(tmp_path):
    res = run(small())
    data = read_records_csv(write_records_csv(res, tmp_path / "r.csv"))
    np.testing.assert_array_equal(data["t"], res.t)
    for i in range(3):
        np.testing.assert_array_equal(data[f"p_{i}_x"], res.p_hat[:, i, 0])
        np.testing.assert_array_equal(data[f"RMSE_{i}"], res.rmse[:, i])
        np.testing.assert_array_equal(data[f"valid_{i}"], res.valid[:, i])
    np.testing.assert_array_equal(data["conservation_residual"], res.conservation)


def test_json_is_strict(tmp_path):
    path = write_json({"a": np.float64(math.inf), "b": np.arange(3), "c": np.bool_(True),
                       "d": (np.int64(2), float("nan"))}, tmp_path / "s.json")
    assert json.loads(path.read_text()) == {"a": None, "b": [0, 1, 2], "c": True, "d": [2, None]}
    assert jsonable({1: 2.5}) == {"1": 2.5}


def test_sweep_csv(tmp_path):
    rows = [{"param": "h", "value": 0.1, "status": "completed", "converged": True, "beta": 2.0},
            {"param": "h", "value": 0.2, "status": "invalid", "error": "bad"}]
    lines = write_sweep_csv(rows, tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].startswith("param,value,status,beta")
    assert lines[1].split(",")[:5] == ["h", "0.10000000000000001", "completed", "2", ""]
    assert lines[2].endswith("bad")

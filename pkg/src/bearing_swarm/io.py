"""Record streams (CSV) and run summaries (JSON)."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def record_columns(n: int) -> list[str]:
    cols = ["t"]
    for i in range(n):
        cols += [f"p_{i}_x", f"p_{i}_y", f"valid_{i}", f"RMSE_{i}", f"MSCE_{i}"]
    cols += ["pstar_x", "pstar_y", "ptrue_x", "ptrue_y", "xtilde_norm", "conservation_residual"]
    return cols


def _f(v) -> str:
    return FLOAT_FMT % v


def write_records_csv(result, path) -> Path:
    path = Path(path)
    n = result.rmse.shape[1]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(record_columns(n))
        for k in range(len(result.t)):
            row = [_f(result.t[k])]
            for i in range(n):
                row += [_f(result.p_hat[k, i, 0]), _f(result.p_hat[k, i, 1]),
                        "1" if result.valid[k, i] else "0",
                        _f(result.rmse[k, i]), _f(result.msce[k, i])]
            row += [_f(v) for v in (result.p_star[k, 0], result.p_star[k, 1],
                                    result.p_true[k, 0], result.p_true[k, 1],
                                    result.x_tilde_norm[k], result.conservation[k])]
            writer.writerow(row)
    return path


def read_records_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def jsonable(obj):
    """Convert numpy types and non-finite floats (to None) for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(data, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_sweep_csv(rows, path) -> Path:
    path = Path(path)
    cols = ["param", "value", "status", "beta", "h", "t_star", "convergence_time", "converged",
            "steady_state_rmse", "steady_state_msce", "max_conservation_residual", "error"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in rows:
            out = []
            for c in cols:
                v = r.get(c)
                if isinstance(v, bool):
                    out.append("1" if v else "0")
                elif isinstance(v, float):
                    out.append(_f(v))
                else:
                    out.append("" if v is None else str(v))
            writer.writerow(out)
    return path

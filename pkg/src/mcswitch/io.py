"""Model files (JSON) and series files (CSV).

Regime labels in files are 1-based; the Python API uses 0-based labels.
"""

import json

import numpy as np
import pandas as pd

from .exceptions import MCSwitchError, ShapeError
from .model import RegimeModel

FORMAT_VERSION = 1
REGIME_COLUMN = "regime"


class DataFileError(MCSwitchError, ValueError):
    """A data or model file could not be read or is malformed."""


def model_to_dict(model):
    d, G = model.d, model.G
    out = {
        "format_version": FORMAT_VERSION,
        "n_regimes": G,
        "n_variables": d,
        "orders": model.orders.tolist(),
        "margins": None,
        "pacf": [[model.pacf[i, g, :model.orders[i, g]].tolist() for g in range(G)] for i in range(d)],
        "contemporaneous_lower": [
            model.contemp[g][np.tril_indices(d, -1)].tolist() for g in range(G)
        ],
        "switch_rho": model.switch_rho.tolist(),
        "initial_probabilities": model.p_init.tolist(),
        "transition_matrix": model.transition.tolist(),
    }
    if model.margins is not None:
        keys = ("location", "scale", "left_tailweight", "right_tailweight")
        out["margins"] = [
            [dict(zip(keys, model.margins[i, g].tolist())) for g in range(G)] for i in range(d)
        ]
    return out


def model_from_dict(doc):
    try:
        if doc.get("format_version") != FORMAT_VERSION:
            raise DataFileError(f"unsupported model format version {doc.get('format_version')!r}")
        d, G = int(doc["n_variables"]), int(doc["n_regimes"])
        orders = np.asarray(doc["orders"], dtype=int)
        if orders.shape != (d, G):
            raise DataFileError("orders do not match n_variables x n_regimes")
        pacf = np.zeros((d, G, max(int(orders.max()), 1)))
        for i in range(d):
            for g in range(G):
                vals = np.asarray(doc["pacf"][i][g], dtype=float)
                if vals.size != orders[i, g]:
                    raise DataFileError(f"pacf of variable {i + 1}, regime {g + 1} has wrong length")
                pacf[i, g, :vals.size] = vals
        contemp = np.empty((G, d, d))
        low = np.tril_indices(d, -1)
        for g in range(G):
            C = np.eye(d)
            C[low] = np.asarray(doc["contemporaneous_lower"][g], dtype=float)
            contemp[g] = C + np.tril(C, -1).T
        margins = None
        if doc.get("margins") is not None:
            keys = ("location", "scale", "left_tailweight", "right_tailweight")
            margins = np.array([[[m[key] for key in keys] for m in row] for row in doc["margins"]], dtype=float)
        return RegimeModel(
            margins, pacf, contemp, doc["switch_rho"], doc["initial_probabilities"],
            doc["transition_matrix"], orders=orders,
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise DataFileError(f"malformed model document: {exc}") from exc


def save_model(path, model):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFileError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(doc)


def read_series(path):
    """Read a CSV series. Returns ``(x, names, regimes)`` with 0-based regimes or None."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataFileError(f"cannot read series file {path}: {exc}") from exc
    regimes = None
    if REGIME_COLUMN in frame.columns:
        regimes = _regime_values(frame[REGIME_COLUMN], path)
        frame = frame.drop(columns=[REGIME_COLUMN])
    if frame.shape[1] == 0 or frame.shape[0] == 0:
        raise DataFileError(f"{path} has no data columns or rows")
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataFileError(
            f"{path}: non-numeric or missing value at row {r + 1}, column {frame.columns[c]!r}"
        )
    return numeric.to_numpy(dtype=float), list(frame.columns), regimes


def _regime_values(col, path):
    vals = pd.to_numeric(col, errors="coerce")
    if vals.isna().any() or np.any(vals % 1 != 0) or np.any(vals < 1):
        raise DataFileError(f"{path}: regime labels must be positive integers (1-based)")
    return vals.to_numpy(dtype=int) - 1


def read_regimes(path):
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataFileError(f"cannot read regime file {path}: {exc}") from exc
    col = frame[REGIME_COLUMN] if REGIME_COLUMN in frame.columns else frame.iloc[:, 0]
    return _regime_values(col, path)


def write_series(path, x, names=None, regimes=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    names = names or [f"x{i + 1}" for i in range(x.shape[1])]
    if len(names) != x.shape[1]:
        raise ShapeError("one name per column is required")
    frame = pd.DataFrame(x, columns=names)
    if regimes is not None:
        frame[REGIME_COLUMN] = np.asarray(regimes, dtype=int) + 1
    frame.to_csv(path, index=False, float_format="%.17g")


def write_regimes(path, regimes):
    pd.DataFrame({REGIME_COLUMN: np.asarray(regimes, dtype=int) + 1}).to_csv(path, index=False)


def transform_series(x, names=None, mode="diff-log"):
    """First difference of natural logs (``diff-log``) or plain first difference (``diff``)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DataFileError("need at least two rows to difference")
    if mode == "diff-log":
        bad = np.argwhere(x <= 0)
        if bad.size:
            r, c = bad[0]
            col = names[c] if names else f"column {c + 1}"
            raise DataFileError(f"non-positive value {x[r, c]} at row {r + 1}, {col!r}; cannot take logs")
        return np.diff(np.log(x), axis=0)
    if mode == "diff":
        return np.diff(x, axis=0)
    raise DataFileError(f"unknown transform mode {mode!r}")

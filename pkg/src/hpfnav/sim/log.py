"""Trajectory logs: fixed column layout, CSV + JSON summary on disk.

Column order (``m`` = local-state names, ``c`` = control names)::

    t, x, y, z, m..., c..., P_dot_r_{x,y,z}, P_dot_e_{x,y,z},
    lam_dot_e_{m...}, E_p, E_lambda, eta_lambda, eta_P
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

AXES = ("x", "y", "z")


def column_names(lambda_names, u_names):
    return (
        ["t", *AXES, *lambda_names, *u_names]
        + [f"P_dot_r_{a}" for a in AXES]
        + [f"P_dot_e_{a}" for a in AXES]
        + [f"lam_dot_e_{n}" for n in lambda_names]
        + ["E_p", "E_lambda", "eta_lambda", "eta_P"]
    )


class TrajectoryLog:
    def __init__(self, lambda_names, u_names, capacity=16, summary=None):
        self.lambda_names = tuple(lambda_names)
        self.u_names = tuple(u_names)
        self.columns = column_names(self.lambda_names, self.u_names)
        self._index = {c: i for i, c in enumerate(self.columns)}
        self._data = np.zeros((max(int(capacity), 1), len(self.columns)))
        self._n = 0
        self.summary = dict(summary or {})

    @classmethod
    def for_model(cls, model, capacity=16):
        return cls(model.lambda_names, model.u_names, capacity)

    @classmethod
    def from_array(cls, lambda_names, u_names, data, summary=None):
        tl = cls(lambda_names, u_names, capacity=len(data), summary=summary)
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(tl.columns):
            raise ValueError("array does not match the log column layout")
        tl._data = data.copy()
        tl._n = len(data)
        return tl

    def append(self, state, obs):
        if self._n == len(self._data):
            self._data = np.concatenate([self._data, np.zeros_like(self._data)])
        row = np.concatenate([
            [state.t], state.P, state.lam, state.u,
            obs["P_dot_r"], obs["P_dot_e"], obs["lam_dot_e"],
            [obs["E_p"], obs["E_lambda"], obs["eta_lambda"], obs["eta_P"]],
        ])
        self._data[self._n] = row
        self._n += 1

    def finish(self):
        self._data = self._data[: self._n].copy()

    @property
    def data(self) -> np.ndarray:
        return self._data[: self._n]

    def __len__(self):
        return self._n

    def __getitem__(self, column) -> np.ndarray:
        try:
            return self.data[:, self._index[column]]
        except KeyError:
            raise KeyError(f"unknown column {column!r}; have {self.columns}") from None

    def block(self, prefix) -> np.ndarray:
        cols = [i for c, i in self._index.items() if c.startswith(prefix + "_")]
        return self.data[:, cols]

    def positions(self) -> np.ndarray:
        return self.data[:, 1:4]

    def local_states(self) -> np.ndarray:
        return self.data[:, 4:4 + len(self.lambda_names)]

    def controls(self) -> np.ndarray:
        a = 4 + len(self.lambda_names)
        return self.data[:, a:a + len(self.u_names)]

    def row(self, i) -> dict:
        return dict(zip(self.columns, self.data[i].tolist()))

    # -- files ---------------------------------------------------------
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.data.tolist():
            w.writerow([repr(x) for x in r])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def write(self, csv_path) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and the ``<stem>.summary.json`` sidecar."""
        csv_path = Path(csv_path)
        self.to_csv(csv_path)
        summary_path = csv_path.with_suffix(".summary.json")
        meta = dict(self.summary)
        meta["lambda_names"] = list(self.lambda_names)
        meta["u_names"] = list(self.u_names)
        summary_path.write_text(json.dumps(meta, indent=1, sort_keys=True, default=_jsonable) + "\n")
        return csv_path, summary_path

    @classmethod
    def read(cls, csv_path) -> "TrajectoryLog":
        csv_path = Path(csv_path)
        summary_path = csv_path.with_suffix(".summary.json")
        summary = json.loads(summary_path.read_text()) if summary_path.exists() else {}
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ValueError(f"{csv_path}: empty log")
        header = rows[0]
        if "lambda_names" in summary:
            lam, un = summary["lambda_names"], summary["u_names"]
        else:
            # infer from the layout: names between z and P_dot_r_x
            body = header[4:header.index("P_dot_r_x")]
            nl = sum(1 for c in header if c.startswith("lam_dot_e_"))
            lam, un = body[:nl], body[nl:]
        data = np.array([[float(x) for x in r] for r in rows[1:]]).reshape(-1, len(header))
        tl = cls.from_array(lam, un, data, summary)
        if tl.columns != header:
            raise ValueError(f"{csv_path}: unexpected column layout")
        return tl


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not JSON serialisable: {type(x)}")

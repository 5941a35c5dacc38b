"""Per-iteration records and their CSV form."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

BASE_COLUMNS = [
    "iter",
    "window",
    "loss",
    "loss_f",
    "loss_b",
    "loss_i",
    "kappa",
    "alpha",
    "grad_norm",
    "boosted_norm",
    "step_norm",
    "R",
]


@dataclass
class MetricsRow:
    iter: int
    window: int
    loss: float
    loss_f: float | None = None
    loss_b: float | None = None
    loss_i: float | None = None
    kappa: float | None = None
    alpha: float | None = None
    grad_norm: float | None = None
    boosted_norm: float | None = None
    step_norm: float | None = None
    R: float | None = None
    rel_l2: dict | None = None
    linf: dict | None = None
    flags: list = field(default_factory=list)


def columns(outputs) -> list[str]:
    return BASE_COLUMNS + [f"rel_l2_{c}" for c in outputs] + [f"linf_{c}" for c in outputs] + ["flags"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


class MetricsWriter:
    """Append-only CSV; flush() is called by the trainer once per eval period."""

    def __init__(self, path, outputs):
        self.outputs = tuple(outputs)
        self.fh = open(path, "w", newline="")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(columns(self.outputs))

    def write(self, row: MetricsRow):
        vals = [getattr(row, c) for c in BASE_COLUMNS]
        for d in (row.rel_l2, row.linf):
            vals += [None if d is None else d.get(c) for c in self.outputs]
        vals.append(";".join(row.flags))
        self.w.writerow([_fmt(v) for v in vals])

    def flush(self):
        self.fh.flush()

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))

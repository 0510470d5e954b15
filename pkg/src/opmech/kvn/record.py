"""Time series of expectation values."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TrajectoryRecord:
    names: list[str]
    times: list[float] = field(default_factory=list)
    rows: list[list[float]] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)

    def append(self, t: float, values, norm: float = 1.0):
        if self.times and t <= self.times[-1]:
            raise ValueError("trajectory times must increase")
        self.times.append(float(t))
        self.rows.append([float(x) for x in values])
        self.norms.append(float(norm))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t(self) -> np.ndarray:
        return np.array(self.times)

    def column(self, name: str) -> np.ndarray:
        if name == "norm":
            return np.array(self.norms)
        i = self.names.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["t", *self.names, "norm"]) + "\n")
        for t, row, n in zip(self.times, self.rows, self.norms):
            buf.write(",".join("%.17g" % x for x in (t, *row, n)) + "\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

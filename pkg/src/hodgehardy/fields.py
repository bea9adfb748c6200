"""Logarithmic time grids and space-time fields."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .complex import MetricMeasureComplex
from .exceptions import HodgeHardyError

__all__ = ["TimeGrid", "SpaceTimeField", "load_field", "save_field"]


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Log-spaced times with trapezoid weights for the measure ``dt/t``.

    ``weights.sum() == log(t_max / t_min)``.
    """

    points: np.ndarray
    weights: np.ndarray
    t_min: float
    t_max: float
    points_per_decade: float

    @classmethod
    def log_spaced(cls, t_min: float, t_max: float, points_per_decade: float = 40) -> "TimeGrid":
        if not (0 < t_min <= t_max) or not math.isfinite(t_max):
            raise HodgeHardyError("time grid needs 0 < t_min <= t_max < inf")
        if t_max == t_min:
            return cls(np.array([t_min]), np.array([0.0]), t_min, t_max, points_per_decade)
        m = int(math.ceil(points_per_decade * math.log10(t_max / t_min))) + 1
        u = np.linspace(math.log(t_min), math.log(t_max), m)
        h = u[1] - u[0]
        w = np.full(m, h)
        w[0] = w[-1] = h / 2
        pts = np.exp(u)
        pts[0], pts[-1] = t_min, t_max
        return cls(pts, w, float(t_min), float(t_max), float(points_per_decade))

    @classmethod
    def from_dict(cls, data: dict) -> "TimeGrid":
        if "points" in data:
            return cls(
                np.asarray(data["points"], float),
                np.asarray(data["weights"], float),
                float(data["t_min"]),
                float(data["t_max"]),
                float(data.get("points_per_decade", 0)),
            )
        return cls.log_spaced(float(data["t_min"]), float(data["t_max"]), float(data.get("points_per_decade", 40)))

    def to_dict(self) -> dict:
        return {
            "t_min": self.t_min,
            "t_max": self.t_max,
            "points_per_decade": self.points_per_decade,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def fingerprint(self) -> str:
        return f"log[{self.t_min:.6g},{self.t_max:.6g}]x{self.size}@{self.points_per_decade:g}/dec"

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (
            self.size == other.size
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """A family ``F(., t_j)`` of graded forms sampled on a :class:`TimeGrid`.

    ``values`` has shape ``(graded_dim, grid.size)``; row blocks follow the
    degree offsets of the complex.
    """

    complex: MetricMeasureComplex
    values: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.complex.graded_dim, self.grid.size):
            raise HodgeHardyError(f"field shape {v.shape} does not match complex/grid")
        if not np.all(np.isfinite(v)):
            raise HodgeHardyError("field has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, X: MetricMeasureComplex, grid: TimeGrid, dtype=float) -> "SpaceTimeField":
        return cls(X, np.zeros((X.graded_dim, grid.size), dtype=dtype), grid)

    def degree(self, k: int) -> np.ndarray:
        o = self.complex.offsets
        return self.values[o[k] : o[k + 1]]

    def density(self) -> np.ndarray:
        """Vertex density of ``|F(y, t_j)|^2``, shape ``(n_vertices, grid.size)``."""
        X = self.complex
        return (X.spread @ (X.mass[:, None] * np.abs(self.values) ** 2)) / X.measure[:, None]

    def h_norm(self) -> float:
        """``(sum_j w_j ||F(., t_j)||^2)^(1/2)``, the discrete ``L2(dt/t; L2)`` norm."""
        sq = (self.complex.mass[:, None] * np.abs(self.values) ** 2).sum(axis=0)
        return float(np.sqrt(np.dot(self.grid.weights, sq)))

    def check_compatible(self, other: "SpaceTimeField") -> None:
        if other.complex is not self.complex:
            raise HodgeHardyError("fields live on different complexes")
        if not self.grid.same_as(other.grid):
            raise HodgeHardyError("mismatched grids")

    def __add__(self, other):
        self.check_compatible(other)
        return SpaceTimeField(self.complex, self.values + other.values, self.grid)

    def __sub__(self, other):
        self.check_compatible(other)
        return SpaceTimeField(self.complex, self.values - other.values, self.grid)

    def __mul__(self, scalar):
        return SpaceTimeField(self.complex, self.values * scalar, self.grid)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpaceTimeField({self.complex.name}, {self.grid.fingerprint}, H={self.h_norm():.6g})"


def field_to_dict(F: SpaceTimeField) -> dict:
    vals = {}
    for k in range(F.complex.dimension + 1):
        v = F.degree(k)
        vals[f"degree_{k}"] = {"re": v.real.tolist(), "im": v.imag.tolist()} if np.iscomplexobj(v) else v.tolist()
    return {"grid": F.grid.to_dict(), "values": vals}


def field_from_dict(X: MetricMeasureComplex, data: dict) -> SpaceTimeField:
    grid = TimeGrid.from_dict(data["grid"])
    dtype = complex if any(isinstance(v, dict) for v in data["values"].values()) else float
    values = np.zeros((X.graded_dim, grid.size), dtype=dtype)
    for key, v in data["values"].items():
        k = int(key.split("_", 1)[1])
        arr = np.asarray(v["re"], float) + 1j * np.asarray(v["im"], float) if isinstance(v, dict) else np.asarray(v, float)
        arr = arr.reshape(X.n_cells(k), grid.size)
        values[X.offsets[k] : X.offsets[k + 1]] = arr
    return SpaceTimeField(X, values, grid)


def load_field(X: MetricMeasureComplex, path) -> SpaceTimeField:
    return field_from_dict(X, json.loads(Path(path).read_text()))


def save_field(F: SpaceTimeField, path) -> None:
    Path(path).write_text(json.dumps(field_to_dict(F)))

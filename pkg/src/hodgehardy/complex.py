"""Finite metric measure complexes: cells, measure, geodesic metric, balls.

A :class:`MetricMeasureComplex` is a weighted simplicial complex whose
vertices carry a positive measure and whose 1-skeleton carries positive edge
lengths.  The geodesic distance is the weighted shortest-path metric of the
1-skeleton.  Balls are open: ``B(x, r) = {y : rho(x, y) < r}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .exceptions import ComplexError

__all__ = [
    "Ball",
    "DoublingCertificate",
    "MetricMeasureComplex",
    "ball",
    "volume",
    "estimate_doubling",
    "whitney_decompose",
    "generate_complex",
    "load_complex",
    "save_complex",
    "complex_to_dict",
    "complex_from_dict",
]


class Ball(NamedTuple):
    """Open geodesic ball ``B(center, radius)``; ``center`` is a vertex index."""

    center: int
    radius: float

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True, eq=False)
class MetricMeasureComplex:
    """Weighted simplicial complex with vertex measure and geodesic metric.

    Attributes:
        vertex_ids: identifiers of the vertices, in index order.
        cells: ``cells[k]`` is an integer array of shape ``(n_k, k + 1)`` whose
            rows are sorted vertex tuples; ``cells[0]`` is the column of vertex
            indices.
        weights: ``weights[k]`` holds the inner-product weight of every
            k-cell.  ``weights[0]`` is the vertex measure.
        edge_lengths: length of every 1-cell (aligned with ``cells[1]``).
        distance: symmetric matrix of geodesic distances between vertices.
    """

    vertex_ids: tuple[str, ...]
    cells: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]
    edge_lengths: np.ndarray
    distance: np.ndarray
    name: str = "complex"
    _index: dict = field(default_factory=dict, repr=False)

    # ------------------------------------------------------------------ build
    @classmethod
    def build(
        cls,
        vertex_ids: Sequence[str],
        measure: Sequence[float],
        cells_by_degree: dict[int, Sequence[Sequence[int]]],
        weights_by_degree: dict[int, Sequence[float]] | None = None,
        edge_lengths: Sequence[float] | None = None,
        distances: np.ndarray | None = None,
        dimension: int | None = None,
        name: str = "complex",
    ) -> "MetricMeasureComplex":
        """Validate raw data and assemble a complex.

        Cells are given as vertex-index tuples for degrees ``k >= 1``; they are
        sorted internally.  Missing weights and lengths default to 1.

        Raises:
            ComplexError: on non-positive measure/weight/length, malformed or
                duplicated cells, a disconnected 1-skeleton, or an explicit
                distance matrix that is not a metric.
        """
        ids = tuple(str(v) for v in vertex_ids)
        n0 = len(ids)
        if n0 == 0:
            raise ComplexError("complex has no vertices")
        if len(set(ids)) != n0:
            raise ComplexError("duplicate vertex identifiers")
        mu = np.asarray(measure, dtype=float)
        if mu.shape != (n0,):
            raise ComplexError("measure must have one entry per vertex")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ComplexError("non-positive measure")

        weights_by_degree = dict(weights_by_degree or {})
        top = max([k for k, c in cells_by_degree.items() if len(c)] + [0])
        if dimension is not None:
            if dimension < top:
                raise ComplexError(f"declared dimension {dimension} < top cell degree {top}")
            top = dimension

        cells = [np.arange(n0, dtype=np.int64)[:, None]]
        weights = [mu.copy()]
        for k in range(1, top + 1):
            raw = list(cells_by_degree.get(k, []))
            arr = np.array([sorted(int(v) for v in c) for c in raw], dtype=np.int64).reshape(-1, k + 1)
            if arr.size and (arr.min() < 0 or arr.max() >= n0):
                raise ComplexError(f"{k}-cell references an unknown vertex")
            if arr.size and np.any(np.diff(arr, axis=1) == 0):
                raise ComplexError(f"{k}-cell with repeated vertex")
            if len({tuple(r) for r in arr}) != len(arr):
                raise ComplexError(f"duplicate {k}-cell")
            w = weights_by_degree.get(k)
            w = np.ones(len(arr)) if w is None else np.asarray(w, dtype=float)
            if w.shape != (len(arr),):
                raise ComplexError(f"weights for degree {k} do not match the cells")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ComplexError(f"non-positive weight in degree {k}")
            # keep a canonical (lexicographic) order so assembly is deterministic
            order = np.lexsort(arr.T[::-1]) if len(arr) else np.arange(0)
            cells.append(arr[order])
            weights.append(w[order])
            if k == 1:
                lengths_order = order

        n1 = len(cells[1]) if top >= 1 else 0
        if n1:
            lengths = np.ones(n1) if edge_lengths is None else np.asarray(edge_lengths, dtype=float)
            if lengths.shape != (n1,):
                raise ComplexError("edge_lengths must have one entry per 1-cell")
            if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
                raise ComplexError("non-positive edge length")
            lengths = lengths[lengths_order]
        else:
            lengths = np.zeros(0)

        if distances is None:
            dist = _geodesic_distance(n0, cells[1] if n1 else np.zeros((0, 2), int), lengths)
        else:
            dist = np.asarray(distances, dtype=float)
            _check_metric(dist, n0)
        if not np.all(np.isfinite(dist)):
            raise ComplexError("disconnected complex")

        index = {v: i for i, v in enumerate(ids)}
        return cls(ids, tuple(cells), tuple(weights), lengths, dist, name, index)

    # ------------------------------------------------------------ properties
    @property
    def dimension(self) -> int:
        return len(self.cells) - 1

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_ids)

    @property
    def measure(self) -> np.ndarray:
        return self.weights[0]

    def n_cells(self, k: int) -> int:
        return len(self.cells[k]) if 0 <= k <= self.dimension else 0

    @cached_property
    def offsets(self) -> np.ndarray:
        """Start index of each degree inside the flat graded coefficient vector."""
        return np.concatenate([[0], np.cumsum([len(c) for c in self.cells])])

    @property
    def graded_dim(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def mass(self) -> np.ndarray:
        """Weights of all cells concatenated over degrees (diagonal of the inner product)."""
        return np.concatenate(self.weights)

    @cached_property
    def cell_degree(self) -> np.ndarray:
        return np.repeat(np.arange(self.dimension + 1), [len(c) for c in self.cells])

    @cached_property
    def diameter(self) -> float:
        return float(self.distance.max())

    @cached_property
    def min_edge_length(self) -> float:
        return float(self.edge_lengths.min()) if len(self.edge_lengths) else 1.0

    @cached_property
    def incidence(self):
        """Sparse (graded_dim x n_vertices) 0/1 matrix: cell contains vertex."""
        rows, cols = [], []
        for k, c in enumerate(self.cells):
            off = self.offsets[k]
            rows.append(np.repeat(np.arange(len(c)) + off, k + 1))
            cols.append(c.ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        return coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.graded_dim, self.n_vertices)).tocsr()

    @cached_property
    def spread(self):
        """Sparse (n_vertices x graded_dim) map distributing cell mass to vertices.

        ``spread @ (mass * |f|^2) / measure`` is the vertex density of
        ``|f|^2``.  A k-cell hands an equal share ``1/(k+1)`` of its mass to
        each of its vertices, so summing the density against the measure gives
        back the weighted L2 norm exactly.
        """
        inc = self.incidence.tocoo()
        share = 1.0 / (self.cell_degree[inc.row] + 1)
        return coo_matrix((share, (inc.col, inc.row)), shape=(self.n_vertices, self.graded_dim)).tocsr()

    @cached_property
    def doubling(self) -> "DoublingCertificate":
        """Exhaustive doubling certificate (cached)."""
        return estimate_doubling(self)

    # ---------------------------------------------------------------- lookup
    def vertex_index(self, v) -> int:
        """Resolve a vertex given by index or identifier."""
        if isinstance(v, (int, np.integer)):
            if not 0 <= int(v) < self.n_vertices:
                raise ComplexError(f"unknown vertex {v!r}")
            return int(v)
        try:
            return self._index[str(v)]
        except KeyError:
            raise ComplexError(f"unknown vertex {v!r}") from None

    def vertex_set(self, vs) -> np.ndarray:
        return np.unique(np.array([self.vertex_index(v) for v in vs], dtype=np.int64))

    def ball_mask(self, b: Ball) -> np.ndarray:
        return self.distance[self.vertex_index(b.center)] < b.radius

    def cells_inside(self, vertex_mask: np.ndarray) -> np.ndarray:
        """Boolean mask over all graded cells whose vertices all lie in ``vertex_mask``."""
        return np.concatenate([vertex_mask[c].all(axis=1) for c in self.cells])

    def cell_distance(self) -> np.ndarray:
        """Distance between cells: minimum over their vertex pairs."""
        blocks = []
        for c in self.cells:
            blocks.append(self.distance[c].min(axis=1))  # (n_k, n0)
        per_vertex = np.concatenate(blocks)  # (N, n0)
        rows = []
        for c in self.cells:
            rows.append(per_vertex[:, c].min(axis=2))
        return np.concatenate(rows, axis=1)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(repr(self.vertex_ids).encode())
        for c, w in zip(self.cells, self.weights):
            h.update(c.tobytes())
            h.update(np.round(w, 12).tobytes())
        h.update(np.round(self.distance, 12).tobytes())
        return h.hexdigest()[:16]


def _geodesic_distance(n0: int, edges: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    if n0 == 1:
        return np.zeros((1, 1))
    g = coo_matrix((lengths, (edges[:, 0], edges[:, 1])), shape=(n0, n0)).tocsr()
    return shortest_path(g, method="D", directed=False)


def _check_metric(d: np.ndarray, n0: int) -> None:
    if d.shape != (n0, n0):
        raise ComplexError("distance matrix must be square with one row per vertex")
    if not np.all(np.isfinite(d)):
        raise ComplexError("disconnected complex")
    if np.any(np.diag(d) != 0):
        raise ComplexError("non-metric distances: nonzero diagonal")
    if not np.allclose(d, d.T, rtol=0, atol=1e-12):
        raise ComplexError("non-metric distances: not symmetric")
    off = d[~np.eye(n0, dtype=bool)]
    if np.any(off <= 0):
        raise ComplexError("non-metric distances: non-positive off-diagonal entry")
    tol = 1e-12 * max(1.0, float(d.max()))
    for k in range(n0):
        if np.any(d > d[:, [k]] + d[[k], :] + tol):
            raise ComplexError("non-metric distances: triangle inequality violated")


# ------------------------------------------------------------------- balls
def ball(X: MetricMeasureComplex, x, r: float) -> np.ndarray:
    """Vertex indices of the open ball ``B(x, r)``."""
    if not r > 0:
        raise ComplexError("radius must be positive")
    return np.flatnonzero(X.distance[X.vertex_index(x)] < r)


def volume(X: MetricMeasureComplex, x, r: float) -> float:
    """Measure ``V(x, r)`` of the open ball ``B(x, r)``."""
    return float(X.measure[ball(X, x, r)].sum())


def _volume_table(X: MetricMeasureComplex, radii: np.ndarray) -> np.ndarray:
    """``V(x, r)`` for every vertex x and every radius in ``radii``."""
    order = np.argsort(X.distance, axis=1, kind="stable")
    sorted_d = np.take_along_axis(X.distance, order, axis=1)
    cum = np.concatenate([np.zeros((X.n_vertices, 1)), np.cumsum(X.measure[order], axis=1)], axis=1)
    out = np.empty((X.n_vertices, len(radii)))
    for x in range(X.n_vertices):
        out[x] = cum[x, np.searchsorted(sorted_d[x], radii, side="left")]
    return out


# ---------------------------------------------------------------- doubling
@dataclass(frozen=True)
class DoublingCertificate:
    """Measured doubling data.

    Attributes:
        C_D: max of ``V(x, 2r) / V(x, r)`` over the sampled centers and radii.
        kappa: max of ``log(V(x, theta r) / V(x, r)) / log(theta)``.
        beta: smallest integer strictly larger than ``kappa / 2``.
        samples: witnesses ``(x, r, theta, ratio)`` realising the maxima.
        n_samples: number of (x, r) pairs examined.
    """

    C_D: float
    kappa: float
    beta: int
    samples: tuple[tuple[int, float, float, float], ...]
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "C_D": self.C_D,
            "kappa": self.kappa,
            "beta": self.beta,
            "samples": [list(s) for s in self.samples],
            "n_samples": self.n_samples,
        }


def _beta_from_kappa(kappa: float) -> int:
    return int(math.floor(kappa / 2)) + 1


def estimate_doubling(
    X: MetricMeasureComplex,
    radius_grid: Sequence[float] | None = None,
    thetas: Sequence[float] = (2.0, 4.0, 8.0),
) -> DoublingCertificate:
    """Fit the doubling constant and the volume-growth exponent.

    With ``radius_grid=None`` every breakpoint of the step functions
    ``r -> V(x, theta r)`` is sampled, so the maxima are the exact suprema over
    all ``r > 0``.

    Raises:
        ComplexError: if an explicit ``radius_grid`` is empty.
    """
    if radius_grid is None:
        d = np.unique(X.distance)
        d = d[d > 0]
        radii = np.unique(np.concatenate([d] + [d / th for th in thetas])) if len(d) else np.zeros(0)
    else:
        radii = np.unique(np.asarray(radius_grid, dtype=float))
        if radii.size == 0:
            raise ComplexError("empty radius grid")
        if np.any(radii <= 0):
            raise ComplexError("radii must be positive")
    if radii.size == 0:
        return DoublingCertificate(1.0, 0.0, 1, (), 0)

    base = _volume_table(X, radii)
    witnesses = []
    ratio2 = _volume_table(X, 2 * radii) / base
    i, j = np.unravel_index(np.argmax(ratio2), ratio2.shape)
    C_D = float(ratio2[i, j])
    witnesses.append((int(i), float(radii[j]), 2.0, C_D))
    kappa = 0.0
    for th in thetas:
        ratio = _volume_table(X, th * radii) / base
        expo = np.log(ratio) / np.log(th)
        i, j = np.unravel_index(np.argmax(expo), expo.shape)
        witnesses.append((int(i), float(radii[j]), float(th), float(ratio[i, j])))
        kappa = max(kappa, float(expo[i, j]))
    return DoublingCertificate(C_D, kappa, _beta_from_kappa(kappa), tuple(witnesses), base.size)


# ----------------------------------------------------------------- whitney
def whitney_decompose(X: MetricMeasureComplex, O) -> list[Ball]:
    """Greedy Whitney-type cover of a proper vertex subset ``O`` by balls.

    Vertices of ``O`` are visited by decreasing distance ``delta(x)`` to the
    complement; each still-uncovered vertex emits ``B(x, delta(x) / 2)``.  With
    open balls this radius is the largest for which ``2B`` stays inside ``O``,
    and it makes ``4B`` reach the complement.

    Raises:
        ComplexError: if ``O`` is empty or is the whole vertex set.
    """
    mask = np.zeros(X.n_vertices, dtype=bool)
    idx = np.asarray(O)
    if idx.dtype == bool:
        mask = idx.copy()
    else:
        mask[X.vertex_set(list(O))] = True
    if not mask.any():
        raise ComplexError("Whitney decomposition of an empty set")
    if mask.all():
        raise ComplexError("Whitney decomposition needs a proper subset")
    delta = X.distance[:, ~mask].min(axis=1)
    members = np.flatnonzero(mask)
    order = members[np.argsort(-delta[members], kind="stable")]
    covered = np.zeros(X.n_vertices, dtype=bool)
    balls = []
    for x in order:
        if covered[x]:
            continue
        b = Ball(int(x), float(delta[x]) / 2)
        balls.append(b)
        covered |= X.ball_mask(b)
    return balls


def whitney_overlap(X: MetricMeasureComplex, balls: Sequence[Ball]) -> np.ndarray:
    """Number of balls containing each vertex."""
    count = np.zeros(X.n_vertices, dtype=int)
    for b in balls:
        count += X.ball_mask(b)
    return count


def whitney_overlap_bound(cert: DoublingCertificate) -> int:
    """Overlap bound for :func:`whitney_decompose` covers.

    Centres of balls through a common vertex y are ``delta(y)/3``-separated and
    lie in ``B(y, delta(y))``; packing ``B(c, delta/6)`` inside ``B(c, 7 delta/3)``
    costs at most four doublings.
    """
    return int(math.floor(cert.C_D**4 + 1e-9))


# --------------------------------------------------------------- generators
def _grid_complex(rows: int, cols: int, periodic: bool, prefix: str = ""):
    def vid(i, j):
        return (i % rows) * cols + (j % cols)

    ids = [f"{prefix}v{i}_{j}" for i in range(rows) for j in range(cols)]
    edges, lengths, tris = [], [], []
    ri = range(rows) if periodic else range(rows)
    for i in ri:
        for j in range(cols):
            if periodic or j + 1 < cols:
                edges.append((vid(i, j), vid(i, j + 1)))
                lengths.append(1.0)
            if periodic or i + 1 < rows:
                edges.append((vid(i, j), vid(i + 1, j)))
                lengths.append(1.0)
            if periodic or (i + 1 < rows and j + 1 < cols):
                # diagonal carries its taxicab length so the metric is the grid metric
                edges.append((vid(i, j), vid(i + 1, j + 1)))
                lengths.append(2.0)
                tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
                tris.append((vid(i, j), vid(i, j + 1), vid(i + 1, j + 1)))
    return ids, edges, lengths, tris


_ICOSA_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def _sphere(level: int):
    faces = list(_ICOSA_FACES)
    nv = 12
    for _ in range(level):
        mid: dict[tuple[int, int], int] = {}
        new = []

        def m(a, b):
            nonlocal nv
            key = (min(a, b), max(a, b))
            if key not in mid:
                mid[key] = nv
                nv += 1
            return mid[key]

        for a, b, c in faces:
            ab, bc, ca = m(a, b), m(b, c), m(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    edges = sorted({tuple(sorted(e)) for f in faces for e in combinations(f, 2)})
    return [f"v{i}" for i in range(nv)], edges, [1.0] * len(edges), faces


def generate_complex(
    kind: str,
    size: Sequence[int] | int,
    seed: int = 0,
    random_weights: bool = False,
) -> MetricMeasureComplex:
    """Build a complex from the generator catalog.

    Args:
        kind: one of ``path``, ``cycle``, ``torus_grid``,
            ``sphere_triangulation``, ``dumbbell``.
        size: ``path``/``cycle``: vertex count; ``torus_grid``: ``(rows, cols)``
            or a single side; ``sphere_triangulation``: one plus the number
            of midpoint subdivisions of the icosahedron; ``dumbbell``: ``(patch, tube)`` or
            ``(patch_rows, patch_cols, tube)``.
        seed: seeds the random weights; irrelevant for unit data.
        random_weights: draw measures, cell weights and edge lengths
            uniformly from [0.5, 1.5] instead of using unit data.

    Raises:
        ComplexError: unknown kind or sizes too small.
    """
    size = [int(s) for s in np.atleast_1d(size)]
    if any(s <= 0 for s in size):
        raise ComplexError("size parameters must be positive")
    cells: dict[int, list] = {}
    if kind == "path":
        n = size[0]
        ids = [f"v{i}" for i in range(n)]
        cells[1] = [(i, i + 1) for i in range(n - 1)]
        lengths = [1.0] * (n - 1)
        name = f"P{n}"
    elif kind == "cycle":
        n = size[0]
        if n < 3:
            raise ComplexError("a cycle needs at least 3 vertices")
        ids = [f"v{i}" for i in range(n)]
        cells[1] = [(i, (i + 1) % n) for i in range(n)]
        lengths = [1.0] * n
        name = f"C{n}"
    elif kind == "torus_grid":
        r, c = (size[0], size[0]) if len(size) == 1 else size[:2]
        if r < 3 or c < 3:
            raise ComplexError("torus_grid needs at least 3x3 vertices to form 2-cells")
        ids, cells[1], lengths, cells[2] = _grid_complex(r, c, periodic=True)
        name = f"T{r}x{c}"
    elif kind == "sphere_triangulation":
        ids, cells[1], lengths, cells[2] = _sphere(size[0] - 1)
        name = f"S2_{size[0]}"
    elif kind == "dumbbell":
        if len(size) == 2:
            pr = pc = size[0]
            tube = size[1]
        elif len(size) == 3:
            pr, pc, tube = size
        else:
            raise ComplexError("dumbbell size is (patch, tube) or (rows, cols, tube)")
        if pr < 2 or pc < 2:
            raise ComplexError("dumbbell patches need at least 2x2 vertices")
        ida, ea, la, ta = _grid_complex(pr, pc, periodic=False, prefix="a")
        idb, eb, lb, tb = _grid_complex(pr, pc, periodic=False, prefix="b")
        na = len(ida)
        ids = ida + idb
        e1 = ea + [(u + na, v + na) for u, v in eb]
        lengths = la + lb
        tris = ta + [(u + na, v + na, w + na) for u, v, w in tb]
        start = (pr // 2) * pc + (pc - 1)
        end = na + (pr // 2) * pc
        chain = [start]
        for s in range(tube - 1):
            ids.append(f"t{s}")
            chain.append(len(ids) - 1)
        chain.append(end)
        e1 += list(zip(chain[:-1], chain[1:]))
        lengths += [1.0] * tube
        cells[1], cells[2] = e1, tris
        name = f"DB{pr}x{pc}_{tube}"
    else:
        raise ComplexError(f"unknown kind {kind!r}")

    n0 = len(ids)
    measure = np.ones(n0)
    weights = {k: np.ones(len(v)) for k, v in cells.items()}
    lengths = np.asarray(lengths, dtype=float)
    if random_weights:
        rng = np.random.default_rng(seed)
        measure = rng.uniform(0.5, 1.5, n0)
        weights = {k: rng.uniform(0.5, 1.5, len(v)) for k, v in sorted(cells.items())}
        lengths = lengths * rng.uniform(0.5, 1.5, len(lengths))
    return MetricMeasureComplex.build(ids, measure, cells, weights, lengths if len(lengths) else None, name=name)


# ---------------------------------------------------------------------- io
def complex_to_dict(X: MetricMeasureComplex, include_distances: bool = False) -> dict:
    out = {
        "dimension": X.dimension,
        "vertices": [{"id": v, "measure": float(m)} for v, m in zip(X.vertex_ids, X.measure)],
        "cells": {},
    }
    for k in range(1, X.dimension + 1):
        rows = []
        for i, c in enumerate(X.cells[k]):
            entry = {"verts": [X.vertex_ids[v] for v in c], "weight": float(X.weights[k][i])}
            if k == 1:
                entry["length"] = float(X.edge_lengths[i])
            rows.append(entry)
        out["cells"][str(k)] = rows
    if include_distances:
        out["distances"] = X.distance.tolist()
    return out


def complex_from_dict(data: dict, name: str = "complex") -> MetricMeasureComplex:
    """Build a complex from its JSON mapping.

    Raises:
        ComplexError: on any schema violation or invariant failure.
    """
    if not isinstance(data, dict):
        raise ComplexError("complex file must hold a JSON object")
    try:
        verts = data["vertices"]
        ids = [str(v["id"]) for v in verts]
        measure = [float(v["measure"]) for v in verts]
    except (KeyError, TypeError, ValueError) as exc:
        raise ComplexError(f"schema violation in vertices: {exc}") from None
    index = {v: i for i, v in enumerate(ids)}
    cells: dict[int, list] = {}
    weights: dict[int, list] = {}
    lengths = None
    raw_cells = data.get("cells", {})
    if not isinstance(raw_cells, dict):
        raise ComplexError("schema violation: 'cells' must map degrees to lists")
    try:
        for key, rows in raw_cells.items():
            k = int(key)
            if k < 1:
                raise ComplexError("cell degrees start at 1; vertices are listed separately")
            cells[k] = []
            weights[k] = []
            for row in rows:
                verts_k = row["verts"]
                if len(verts_k) != k + 1:
                    raise ComplexError(f"a {k}-cell needs {k + 1} vertices")
                cells[k].append([index[str(v)] for v in verts_k])
                weights[k].append(float(row.get("weight", 1.0)))
            if k == 1:
                lengths = [float(row.get("length", 1.0)) for row in rows]
    except KeyError as exc:
        raise ComplexError(f"schema violation: unknown vertex or missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ComplexError(f"schema violation: {exc}") from None
    dist = data.get("distances")
    return MetricMeasureComplex.build(
        ids,
        measure,
        cells,
        weights,
        lengths,
        distances=None if dist is None else np.asarray(dist, dtype=float),
        dimension=data.get("dimension"),
        name=name,
    )


def load_complex(path) -> MetricMeasureComplex:
    """Read and validate a complex file (JSON)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ComplexError(f"{path}: not valid JSON ({exc})") from None
    return complex_from_dict(data, name=path.stem)


def save_complex(X: MetricMeasureComplex, path, include_distances: bool = False) -> None:
    Path(path).write_text(json.dumps(complex_to_dict(X, include_distances), indent=1))

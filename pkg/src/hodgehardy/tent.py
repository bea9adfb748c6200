"""Discrete tent spaces over a complex times a logarithmic time grid.

Pointwise values ``|F(y, t)|^2`` are read through the vertex density of the
field (each cell spreads its weighted mass evenly over its vertices), so
``sum_y mu(y) |F(y, t)|^2 = ||F(., t)||^2`` exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .complex import Ball, MetricMeasureComplex, whitney_decompose
from .exceptions import HodgeHardyError
from .fields import SpaceTimeField, TimeGrid, field_from_dict, field_to_dict, load_field, save_field

__all__ = [
    "SpaceTimeField",
    "TimeGrid",
    "cone",
    "area_functional",
    "carleson_functional",
    "tent_norm",
    "tent_region",
    "box_region",
    "TentAtom",
    "TentAtomCertificate",
    "AtomicDecomposition",
    "atomic_decompose",
    "validate_atom",
    "DualityReport",
    "duality_pairing",
    "load_field",
    "save_field",
    "field_to_dict",
    "field_from_dict",
]


def cone(X: MetricMeasureComplex, x, alpha: float, grid: TimeGrid) -> np.ndarray:
    """Boolean mask ``(n_vertices, grid.size)`` of ``{(y, j): rho(x, y) < alpha t_j}``."""
    if not alpha > 0:
        raise HodgeHardyError("aperture must be positive")
    rho = X.distance[X.vertex_index(x)]
    return rho[:, None] < alpha * grid.points[None, :]


def _ball_volumes(X: MetricMeasureComplex, radii: np.ndarray) -> np.ndarray:
    from .complex import _volume_table

    return _volume_table(X, np.asarray(radii, float))


def area_functional(F: SpaceTimeField, alpha: float = 1.0) -> np.ndarray:
    """Lusin area function ``S_alpha F`` at every vertex.

    ``S F(x)^2 = sum_j w_j sum_{rho(x,y) < alpha t_j} mu(y) |F(y,t_j)|^2 / V(x, t_j)``.
    """
    if not alpha > 0:
        raise HodgeHardyError("aperture must be positive")
    X, grid = F.complex, F.grid
    dens = F.density() * X.measure[:, None]  # mu(y) |F(y, t_j)|^2
    vol = _ball_volumes(X, grid.points)  # V(x, t_j)
    out = np.zeros(X.n_vertices)
    for j, t in enumerate(grid.points):
        if grid.weights[j] == 0:
            continue
        near = X.distance < alpha * t
        out += grid.weights[j] * (near @ dens[:, j]) / vol[:, j]
    return np.sqrt(out)


def tent_norm(F: SpaceTimeField, p: float = 1.0, alpha: float = 1.0) -> float:
    """``|| S_alpha F ||_{L^p}``."""
    if p < 1:
        raise HodgeHardyError("p must be >= 1")
    s = area_functional(F, alpha)
    if math.isinf(p):
        return float(s.max())
    return float(np.sum(F.complex.measure * s**p) ** (1.0 / p))


def tent_region(X: MetricMeasureComplex, vertex_mask: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Tent ``T(B) = {(y, t): t <= rho(y, B^c)}`` as a vertex-time mask."""
    vertex_mask = np.asarray(vertex_mask, bool)
    if vertex_mask.all():
        return np.ones((X.n_vertices, grid.size), dtype=bool)
    reach = np.where(vertex_mask, X.distance[:, ~vertex_mask].min(axis=1), -np.inf)
    return grid.points[None, :] <= reach[:, None]


def box_region(X: MetricMeasureComplex, b: Ball, grid: TimeGrid) -> np.ndarray:
    """Carleson box ``B x (0, r(B)]`` as a vertex-time mask."""
    return X.ball_mask(b)[:, None] & (grid.points[None, :] <= b.radius)


def _distinct_balls(X: MetricMeasureComplex) -> np.ndarray:
    """Vertex masks of all distinct open balls, shape ``(n_balls, n_vertices)``."""
    masks = []
    for x in range(X.n_vertices):
        radii = np.unique(X.distance[x])
        # B(x, r) for r just above each distance value
        masks.append(X.distance[x][None, :] <= radii[:, None])
    return np.unique(np.concatenate(masks), axis=0)


def carleson_functional(F: SpaceTimeField) -> np.ndarray:
    """``C F(x) = sup_{B ni x} (V(B)^-1 sum_{T(B)} mu |F|^2 w)^(1/2)``.

    The supremum runs over every distinct ball vertex set of the complex.
    """
    X, grid = F.complex, F.grid
    dens = F.density() * X.measure[:, None] * grid.weights[None, :]
    cum = np.concatenate([np.zeros((X.n_vertices, 1)), np.cumsum(dens, axis=1)], axis=1)
    out = np.zeros(X.n_vertices)
    for B in _distinct_balls(X):
        if B.all():
            reach = np.full(X.n_vertices, np.inf)
        else:
            reach = X.distance[:, ~B].min(axis=1)
        idx = np.searchsorted(grid.points, reach, side="right")
        mass = cum[np.flatnonzero(B), idx[B]].sum()
        val = mass / X.measure[B].sum()
        out[B] = np.maximum(out[B], val)
    return np.sqrt(out)


# ---------------------------------------------------------------- atoms
@dataclass(frozen=True, eq=False)
class TentAtom:
    """Sparse field supported in a Carleson box.

    ``rows`` are flat cell indices, ``cols`` time indices.
    """

    ball: Ball
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def to_field(self, X: MetricMeasureComplex, grid: TimeGrid) -> SpaceTimeField:
        v = np.zeros((X.graded_dim, grid.size), dtype=self.values.dtype)
        v[self.rows, self.cols] = self.values
        return SpaceTimeField(X, v, grid)


@dataclass(frozen=True)
class TentAtomCertificate:
    """Outcome of :func:`validate_atom`."""

    ball: Ball
    support_ok: bool
    offending: tuple[int, int] | None
    normalization: float
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "ball": {"center": self.ball.center, "radius": self.ball.radius},
            "support_ok": self.support_ok,
            "offending": self.offending,
            "normalization": self.normalization,
            "bound": self.bound,
            "passed": self.passed,
        }


def validate_atom(
    A: SpaceTimeField | TentAtom, b: Ball, X: MetricMeasureComplex | None = None, grid: TimeGrid | None = None
) -> TentAtomCertificate:
    """Check support in the Carleson box of ``b`` and ``H``-norm squared ``<= 1/V(b)``.

    A cell lies over the ball when all of its vertices do.  Failures are
    reported in the certificate; nothing is raised.
    """
    if isinstance(A, TentAtom):
        if X is None or grid is None:
            raise HodgeHardyError("sparse atoms need the complex and grid")
        rows, cols, vals = A.rows, A.cols, A.values
    else:
        X, grid = A.complex, A.grid
        rows, cols = np.nonzero(A.values)
        vals = A.values[rows, cols]
    inside = X.cells_inside(X.ball_mask(b))
    ok = inside[rows] & (grid.points[cols] <= b.radius)
    offending = None
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        offending = (int(rows[i]), int(cols[i]))
    norm = float(np.sum(grid.weights[cols] * X.mass[rows] * np.abs(vals) ** 2))
    bound = 1.0 / float(X.measure[X.ball_mask(b)].sum())
    passed = bool(ok.all()) and norm <= bound * (1 + 1e-12)
    return TentAtomCertificate(b, bool(ok.all()), offending, norm, bound, passed)


@dataclass(frozen=True, eq=False)
class AtomicDecomposition:
    """``F = sum_j lambdas[j] * atoms[j]`` with every atom certified."""

    complex: MetricMeasureComplex
    grid: TimeGrid
    lambdas: np.ndarray
    atoms: list[TentAtom]
    certificates: list[TentAtomCertificate]
    levels: np.ndarray
    tent_norm_1: float

    @property
    def sum_abs(self) -> float:
        return float(np.abs(self.lambdas).sum())

    @property
    def ratio(self) -> float:
        """Measured ``sum |lambda_j| / ||F||_{T^1}``."""
        return self.sum_abs / self.tent_norm_1 if self.tent_norm_1 > 0 else 0.0

    @property
    def all_valid(self) -> bool:
        return all(c.passed for c in self.certificates)

    def outside_tent_fraction(self) -> float:
        """Share of atom mass lying outside the exact tent ``T(B)`` of its ball.

        Atoms are certified in Carleson boxes; this reports the box-vs-tent
        difference without asserting anything about it.
        """
        X, grid = self.complex, self.grid
        total = outside = 0.0
        for lam, a in zip(self.lambdas, self.atoms):
            T = tent_region(X, X.ball_mask(a.ball), grid)
            m = abs(lam) ** 2 * grid.weights[a.cols] * X.mass[a.rows] * np.abs(a.values) ** 2
            inside = np.zeros(a.rows.size, dtype=bool)
            for j in np.unique(a.cols):
                sel = a.cols == j
                inside[sel] = X.cells_inside(T[:, j])[a.rows[sel]]
            total += float(m.sum())
            outside += float(m[~inside].sum())
        return outside / total if total > 0 else 0.0

    def reconstruct(self) -> SpaceTimeField:
        v = None
        for lam, a in zip(self.lambdas, self.atoms):
            if v is None:
                v = np.zeros((self.complex.graded_dim, self.grid.size), dtype=np.result_type(a.values, float))
            v[a.rows, a.cols] += lam * a.values
        return SpaceTimeField(self.complex, v, self.grid)

    def to_dict(self) -> dict:
        return {
            "n_atoms": len(self.atoms),
            "sum_abs_lambda": self.sum_abs,
            "tent_norm_1": self.tent_norm_1,
            "ratio": self.ratio,
            "all_valid": self.all_valid,
            "grid": self.grid.fingerprint,
            "atoms": [
                {"lambda": float(lam), "level": int(k), "certificate": c.to_dict()}
                for lam, k, c in zip(self.lambdas, self.levels, self.certificates)
            ],
        }


def _pow2_ceil(x: float) -> float:
    return float(2.0 ** math.ceil(math.log2(x)))


def atomic_decompose(F: SpaceTimeField, alpha: float = 1.0) -> AtomicDecomposition:
    """Split ``F`` into Carleson-box atoms along dyadic level sets of ``S F``.

    Levels ``O_k = {S F > 2^k}`` are visited from the top.  Each proper level
    set is covered by Whitney balls; a nonzero entry ``(cell, t_j)`` joins the
    first ball ``B`` with the cell inside ``4B`` and ``t_j <= 4 r(B)``.  Entries
    left over (or met once ``O_k`` is the whole complex) go to one ball that
    contains the whole complex.  Each group becomes ``lambda * A`` with
    ``lambda`` the power of two just above ``(V(4B) ||piece||^2)^(1/2)``, so
    reconstruction is exact in floating point.

    Raises:
        HodgeHardyError: for the zero field.
    """
    X, grid = F.complex, F.grid
    rows, cols = np.nonzero(F.values)
    if rows.size == 0:
        raise HodgeHardyError("cannot decompose the zero field")
    S = area_functional(F, alpha)
    t1 = float(np.sum(X.measure * S))
    free = np.ones(rows.size, dtype=bool)
    groups: list[tuple[Ball, np.ndarray, int]] = []

    k = math.floor(math.log2(S.max())) if S.max() > 0 else 0
    floor_k = k - 80
    while free.any() and k >= floor_k:
        O = S > 2.0**k
        if O.all():
            break
        if O.any():
            for b in whitney_decompose(X, O):
                b4 = b.dilate(4)
                inside = X.cells_inside(X.ball_mask(b4))
                take = free & inside[rows] & (grid.points[cols] <= b4.radius)
                if take.any():
                    groups.append((b4, np.flatnonzero(take), k))
                    free &= ~take
        k -= 1
    if free.any():
        radius = max(X.diameter * (1 + 1e-9) + 1e-12, grid.t_max)
        groups.append((Ball(0, radius), np.flatnonzero(free), k))

    lambdas, atoms, certs, levels = [], [], [], []
    for b, sel, lev in groups:
        r, c = rows[sel], cols[sel]
        vals = F.values[r, c]
        mass = float(np.sum(grid.weights[c] * X.mass[r] * np.abs(vals) ** 2))
        vol = float(X.measure[X.ball_mask(b)].sum())
        if mass == 0:
            # only zero-weight times: any scale reconstructs exactly
            lam = 1.0
        else:
            lam = _pow2_ceil(math.sqrt(vol * mass))
        atom = TentAtom(b, r, c, vals / lam)
        lambdas.append(lam)
        atoms.append(atom)
        certs.append(validate_atom(atom, b, X, grid))
        levels.append(lev)
    return AtomicDecomposition(X, grid, np.array(lambdas), atoms, certs, np.array(levels), t1)


# --------------------------------------------------------------- duality
@dataclass(frozen=True)
class DualityReport:
    pairing: complex | float
    bound: float
    ratio: float


def duality_pairing(F: SpaceTimeField, G: SpaceTimeField) -> DualityReport:
    """``|sum w <F, G>|`` against ``int S F * C G``."""
    F.check_compatible(G)
    X = F.complex
    pair = np.sum(F.grid.weights[None, :] * X.mass[:, None] * F.values * np.conj(G.values))
    if np.iscomplexobj(pair) and pair.imag == 0:
        pair = pair.real
    pair = complex(pair) if np.iscomplexobj(pair) else float(pair)
    bound = float(np.sum(X.measure * area_functional(F) * carleson_functional(G)))
    ratio = abs(pair) / bound if bound > 0 else 0.0
    return DualityReport(pair, bound, ratio)


def decomposition_to_json(dec: AtomicDecomposition, path) -> None:
    Path(path).write_text(json.dumps(dec.to_dict(), indent=2))

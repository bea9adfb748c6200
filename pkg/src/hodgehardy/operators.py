"""Graded cochains and the Hodge-Dirac operator calculus on a complex.

Forms are stored as one flat coefficient vector over all cells of all
degrees (degree blocks in increasing order).  The inner product is
``<f, g> = sum_c w(c) f(c) conj(g(c))`` with the cell weights of the complex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .complex import MetricMeasureComplex
from .exceptions import ComplexError, HodgeHardyError

__all__ = [
    "GradedForm",
    "GradedOperator",
    "assemble_exterior_derivative",
    "assemble_codifferential",
    "assemble_dirac",
    "assemble_laplacian",
    "hodge_decompose",
    "load_form",
    "save_form",
]


@dataclass(frozen=True, eq=False)
class GradedForm:
    """A discrete differential form of mixed degree on a complex."""

    complex: MetricMeasureComplex
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.shape != (self.complex.graded_dim,):
            raise HodgeHardyError(
                f"form has {c.shape} coefficients, complex needs ({self.complex.graded_dim},)"
            )
        if not np.issubdtype(c.dtype, np.complexfloating):
            c = c.astype(float)
        object.__setattr__(self, "coefficients", c)

    # constructors
    @classmethod
    def zeros(cls, X: MetricMeasureComplex, dtype=float) -> "GradedForm":
        return cls(X, np.zeros(X.graded_dim, dtype=dtype))

    @classmethod
    def from_degrees(cls, X: MetricMeasureComplex, parts: dict[int, np.ndarray]) -> "GradedForm":
        dtype = complex if any(np.iscomplexobj(v) for v in parts.values()) else float
        c = np.zeros(X.graded_dim, dtype=dtype)
        for k, v in parts.items():
            k = int(k)
            if not 0 <= k <= X.dimension:
                raise HodgeHardyError(f"degree {k} not present in the complex")
            v = np.asarray(v)
            if v.shape != (X.n_cells(k),):
                raise HodgeHardyError(f"degree {k} needs {X.n_cells(k)} values, got {v.shape}")
            c[X.offsets[k] : X.offsets[k + 1]] = v
        return cls(X, c)

    # views
    def degree(self, k: int) -> np.ndarray:
        o = self.complex.offsets
        return self.coefficients[o[k] : o[k + 1]]

    @property
    def degree_mask(self) -> tuple[bool, ...]:
        return tuple(bool(np.any(self.degree(k) != 0)) for k in range(self.complex.dimension + 1))

    def restrict_degree(self, k: int) -> "GradedForm":
        return GradedForm.from_degrees(self.complex, {k: self.degree(k)})

    # geometry
    def inner(self, other: "GradedForm") -> complex | float:
        val = np.sum(self.complex.mass * self.coefficients * np.conj(other.coefficients))
        return val if np.iscomplexobj(val) else float(val)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.complex.mass * np.abs(self.coefficients) ** 2)))

    def density(self) -> np.ndarray:
        """Vertex density of ``|f|^2``; ``sum(measure * density) == norm()**2``."""
        X = self.complex
        return X.spread @ (X.mass * np.abs(self.coefficients) ** 2) / X.measure

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(self.density())

    def lp_norm(self, p: float) -> float:
        """``(sum_x mu(x) |f|(x)^p)^(1/p)`` with the vertex pointwise norm."""
        if p < 1:
            raise HodgeHardyError("p must be >= 1")
        w = self.pointwise_norm()
        if np.isinf(p):
            return float(w.max())
        return float(np.sum(self.complex.measure * w**p) ** (1.0 / p))

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, GradedForm):
            if other.complex is not self.complex:
                raise HodgeHardyError("forms live on different complexes")
            return other.coefficients
        return other

    def __add__(self, other):
        return GradedForm(self.complex, self.coefficients + self._coerce(other))

    def __sub__(self, other):
        return GradedForm(self.complex, self.coefficients - self._coerce(other))

    def __neg__(self):
        return GradedForm(self.complex, -self.coefficients)

    def __mul__(self, scalar):
        return GradedForm(self.complex, self.coefficients * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return GradedForm(self.complex, self.coefficients / scalar)

    def __repr__(self):
        return f"GradedForm({self.complex.name}, degrees={self.degree_mask}, norm={self.norm():.6g})"


@dataclass(frozen=True, eq=False)
class GradedOperator:
    """Sparse linear operator on the full graded space of a complex.

    Attributes:
        matrix: sparse ``(N, N)`` matrix acting on flat coefficient vectors.
        self_adjoint: whether the operator is self-adjoint for the weighted
            inner product.
        degree_shift: ``+1`` for d, ``-1`` for d*, ``None`` if mixed, ``0`` if
            degree preserving.
        name: short label.
    """

    complex: MetricMeasureComplex
    matrix: sp.csr_matrix
    self_adjoint: bool
    degree_shift: int | None
    name: str

    def block(self, k_from: int, k_to: int) -> sp.csr_matrix:
        o = self.complex.offsets
        return self.matrix[o[k_to] : o[k_to + 1], o[k_from] : o[k_from + 1]]

    @property
    def blocks(self) -> dict[tuple[int, int], sp.csr_matrix]:
        n = self.complex.dimension
        out = {}
        for a in range(n + 1):
            for b in range(n + 1):
                blk = self.block(a, b)
                if blk.nnz:
                    out[(a, b)] = blk
        return out

    def __call__(self, f: GradedForm) -> GradedForm:
        if f.complex is not self.complex:
            raise HodgeHardyError("operator and form live on different complexes")
        return GradedForm(self.complex, self.matrix @ f.coefficients)

    def __matmul__(self, other):
        if isinstance(other, GradedForm):
            return self(other)
        if isinstance(other, GradedOperator):
            shift = None
            if self.degree_shift is not None and other.degree_shift is not None:
                shift = self.degree_shift + other.degree_shift
            return GradedOperator(
                self.complex, (self.matrix @ other.matrix).tocsr(), False, shift, f"{self.name}{other.name}"
            )
        return NotImplemented

    def power(self, n: int) -> "GradedOperator":
        m = sp.identity(self.complex.graded_dim, format="csr")
        for _ in range(n):
            m = (self.matrix @ m).tocsr()
        return GradedOperator(self.complex, m, self.self_adjoint, None, f"{self.name}^{n}")

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def assemble_exterior_derivative(X: MetricMeasureComplex) -> GradedOperator:
    """Signed incidence (coboundary) operator ``d``.

    ``(d f)(c) = sum_i (-1)^i f(c minus its i-th vertex)`` for a sorted vertex
    tuple ``c``.

    Raises:
        ComplexError: if a face of some k-cell is missing from the complex.
    """
    rows, cols, vals = [], [], []
    o = X.offsets
    for k in range(1, X.dimension + 1):
        lookup = {tuple(c): i for i, c in enumerate(X.cells[k - 1].tolist())}
        for ci, c in enumerate(X.cells[k].tolist()):
            for i in range(k + 1):
                face = tuple(c[:i] + c[i + 1 :])
                j = lookup.get(face)
                if j is None:
                    raise ComplexError(f"{k}-cell {c} has a missing face {face}")
                rows.append(o[k] + ci)
                cols.append(o[k - 1] + j)
                vals.append(-1.0 if i % 2 else 1.0)
    # the 1-cell (u, v) yields f(v) - f(u)
    N = X.graded_dim
    m = sp.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    return GradedOperator(X, m, False, 1, "d")


def assemble_codifferential(X: MetricMeasureComplex, d: GradedOperator | None = None) -> GradedOperator:
    """Adjoint ``d* = M^-1 d^T M`` of ``d`` for the weighted inner product."""
    d = assemble_exterior_derivative(X) if d is None else d
    w = X.mass
    m = (sp.diags(1.0 / w) @ d.matrix.T @ sp.diags(w)).tocsr()
    return GradedOperator(X, m, False, -1, "d*")


def assemble_dirac(X: MetricMeasureComplex) -> GradedOperator:
    """Hodge-Dirac operator ``D = d + d*``."""
    d = assemble_exterior_derivative(X)
    ds = assemble_codifferential(X, d)
    return GradedOperator(X, (d.matrix + ds.matrix).tocsr(), True, None, "D")


def assemble_laplacian(X: MetricMeasureComplex) -> GradedOperator:
    """Hodge-de Rham Laplacian ``Delta = D^2 = d d* + d* d`` (degree preserving)."""
    D = assemble_dirac(X)
    m = (D.matrix @ D.matrix).tocsr()
    m.eliminate_zeros()
    return GradedOperator(X, m, True, 0, "Delta")


def hodge_decompose(f: GradedForm, spectral=None) -> tuple[GradedForm, GradedForm, GradedForm]:
    """Split ``f`` into exact, coexact and harmonic parts.

    The harmonic part is the projection on the null eigenspace of ``D``; the
    exact and coexact parts are ``d D^-1`` and ``d* D^-1`` applied to the rest.

    Args:
        f: the form to split.
        spectral: optional :class:`~hodgehardy.calculus.SpectralDecomposition`
            of the same complex, reused if given.
    """
    from .calculus import spectral_decomposition

    X = f.complex
    S = spectral_decomposition(X) if spectral is None else spectral
    c = S.coefficients(f)
    null = S.null_mask
    harmonic = S.synthesize(np.where(null, c, 0))
    inv = np.zeros_like(c)
    inv[~null] = c[~null] / S.eigenvalues[~null]
    u = S.synthesize(inv)
    exact = S.d(u)
    coexact = S.dstar(u)
    return exact, coexact, harmonic


# ---------------------------------------------------------------------- io
def form_to_dict(f: GradedForm) -> dict:
    out = {}
    for k in range(f.complex.dimension + 1):
        v = f.degree(k)
        if np.iscomplexobj(v):
            out[f"degree_{k}"] = {"re": v.real.tolist(), "im": v.imag.tolist()}
        else:
            out[f"degree_{k}"] = v.tolist()
    return out


def form_from_dict(X: MetricMeasureComplex, data: dict) -> GradedForm:
    parts = {}
    for key, v in data.items():
        if not key.startswith("degree_"):
            raise HodgeHardyError(f"unexpected key {key!r} in form file")
        k = int(key.split("_", 1)[1])
        if isinstance(v, dict):
            parts[k] = np.asarray(v["re"], float) + 1j * np.asarray(v["im"], float)
        else:
            parts[k] = np.asarray(v, dtype=float)
    return GradedForm.from_degrees(X, parts)


def load_form(X: MetricMeasureComplex, path) -> GradedForm:
    return form_from_dict(X, json.loads(Path(path).read_text()))


def save_form(f: GradedForm, path) -> None:
    Path(path).write_text(json.dumps(form_to_dict(f)))

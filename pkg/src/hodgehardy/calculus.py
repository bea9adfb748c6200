"""Spectral functional calculus for the Hodge-Dirac operator.

``D`` is self-adjoint for the weighted inner product, so ``M^1/2 D M^-1/2``
is a real symmetric matrix.  One dense ``eigh`` gives every ``psi(tD)``,
the quadratic transforms ``Q_psi`` and ``S_psi``, and the Riesz transforms.
"""

from __future__ import annotations

import math
import re
import weakref
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy import integrate

from .complex import MetricMeasureComplex
from .exceptions import HodgeHardyError, SymbolError
from .fields import SpaceTimeField, TimeGrid
from .operators import (
    GradedForm,
    GradedOperator,
    assemble_codifferential,
    assemble_dirac,
    assemble_exterior_derivative,
)

__all__ = [
    "SymbolFunction",
    "parse_symbol",
    "symbol_heat",
    "symbol_zexp",
    "symbol_resolvent",
    "symbol_rational",
    "symbol_sign",
    "signed",
    "default_symbol",
    "SpectralDecomposition",
    "spectral_decomposition",
    "TimeGrid",
    "apply_function",
    "heat_semigroup",
    "operator_matrix",
    "q_transform",
    "s_transform",
    "CalderonPair",
    "calderon_normalize",
    "riesz_transform",
    "lanczos_apply_function",
]


# ---------------------------------------------------------------- symbols
@dataclass(frozen=True, eq=False)
class SymbolFunction:
    """A symbol ``psi`` evaluated on the real spectrum of ``D``.

    Attributes:
        evaluator: vectorized function of a real or complex array.
        sigma: decay order at zero (0 if ``psi(0) != 0``).
        tau: decay order at infinity (``inf`` for Gaussian-type symbols).
        theta: sector half-angle; metadata only.
        name: canonical identifier, parseable by :func:`parse_symbol`.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    sigma: float
    tau: float
    name: str
    theta: float = math.pi / 4

    def __call__(self, z):
        z = np.asarray(z)
        with np.errstate(all="ignore"):
            return np.asarray(self.evaluator(z))

    @property
    def in_psi_class(self) -> bool:
        return self.sigma > 0 and self.tau > 0

    @property
    def value_at_zero(self) -> complex:
        return complex(self(np.zeros(1))[0])

    @cached_property
    def sup_norm(self) -> float:
        """``max |psi|`` on the real axis (log grid on both half-axes plus 0)."""
        x = np.logspace(-6, 6, 4001)
        x = np.concatenate([-x[::-1], [0.0], x])
        return float(np.nanmax(np.abs(self(x))))

    def decay_constant(self, lo: float = 1e-4, hi: float = 1e4, n: int = 2001) -> float:
        """Fitted ``C`` in ``|psi(x)| <= C min(|x|^sigma, |x|^-tau)`` on a log grid.

        Infinite ``tau`` is checked with exponent 10.
        """
        x = np.logspace(math.log10(lo), math.log10(hi), n)
        tau = min(self.tau, 10.0)
        bound = np.minimum(x**self.sigma, x ** (-tau))
        vals = np.maximum(np.abs(self(x)), np.abs(self(-x)))
        return float(np.max(vals / bound))

    def scaled(self, c_plus: complex, c_minus: complex | None = None, name: str | None = None) -> "SymbolFunction":
        """``psi / c_plus`` on ``Re z >= 0`` and ``psi / c_minus`` on ``Re z < 0``."""
        c_minus = c_plus if c_minus is None else c_minus
        f = self.evaluator

        def ev(z):
            z = np.asarray(z)
            return f(z) / np.where(np.real(z) >= 0, c_plus, c_minus)

        return SymbolFunction(ev, self.sigma, self.tau, name or f"({self.name})/c", self.theta)

    def conjugate(self) -> "SymbolFunction":
        """``z -> conj(psi(conj z))``; equals ``conj(psi)`` on the real axis."""
        f = self.evaluator
        return SymbolFunction(lambda z: np.conj(f(np.conj(z))), self.sigma, self.tau, f"conj({self.name})", self.theta)

    def __repr__(self):
        return f"SymbolFunction({self.name!r}, sigma={self.sigma}, tau={self.tau})"


def _zpow(z, N):
    return np.ones_like(z, dtype=float if not np.iscomplexobj(z) else complex) if N == 0 else z**N


def symbol_heat() -> SymbolFunction:
    """``exp(-z^2)``; ``psi_t(D) = exp(-t^2 Delta)``."""
    return SymbolFunction(lambda z: np.exp(-(z**2)), 0.0, math.inf, "heat")


def symbol_zexp(N: int = 1) -> SymbolFunction:
    """``z^N exp(-z^2)``."""
    name = "zexp" if N == 1 else f"zexp:{N}"
    return SymbolFunction(lambda z: _zpow(z, N) * np.exp(-(z**2)), float(N), math.inf, name)


def symbol_resolvent(N: int, alpha: float, sign: int = 1) -> SymbolFunction:
    """``z^N (1 + sign*i z)^-alpha``, class ``(N, alpha - N)``."""
    s = 1j if sign > 0 else -1j
    name = f"res:{N}:{alpha:g}" if sign > 0 else f"res-:{N}:{alpha:g}"
    return SymbolFunction(lambda z: _zpow(z, N) * (1 + s * z) ** (-alpha), float(N), float(alpha - N), name)


def symbol_rational(N: int, beta: float) -> SymbolFunction:
    """``z^N (1 + z^2)^-beta``, class ``(N, 2 beta - N)``."""
    return SymbolFunction(lambda z: _zpow(z, N) * (1 + z**2) ** (-beta), float(N), float(2 * beta - N), f"rat:{N}:{beta:g}")


def symbol_sign() -> SymbolFunction:
    """``sign(Re z)``, with value 0 at 0."""
    return SymbolFunction(lambda z: np.sign(np.real(z)), 0.0, 0.0, "sign")


def symbol_one() -> SymbolFunction:
    return SymbolFunction(lambda z: np.ones_like(np.real(z)), 0.0, 0.0, "one")


def signed(psi: SymbolFunction) -> SymbolFunction:
    """``sign(Re z) psi(z)``."""
    f = psi.evaluator
    return SymbolFunction(lambda z: np.sign(np.real(z)) * f(z), psi.sigma, psi.tau, f"sign*{psi.name}", psi.theta)


_NUM = r"([0-9]+(?:\.[0-9]*)?)"


def parse_symbol(name: str | SymbolFunction) -> SymbolFunction:
    """Build a symbol from its canonical name.

    Accepted: ``heat``, ``zexp``, ``zexp:N``, ``res:N:alpha``, ``res-:N:alpha``,
    ``rat:N:beta``, ``sign``, ``one`` and ``sign*<name>``.
    """
    if isinstance(name, SymbolFunction):
        return name
    s = name.strip()
    if s.startswith("sign*"):
        return signed(parse_symbol(s[5:]))
    if s == "heat":
        return symbol_heat()
    if s == "sign":
        return symbol_sign()
    if s == "one":
        return symbol_one()
    if s == "zexp":
        return symbol_zexp(1)
    m = re.fullmatch(r"zexp:([0-9]+)", s)
    if m:
        return symbol_zexp(int(m.group(1)))
    m = re.fullmatch(r"(res-?):([0-9]+):" + _NUM, s)
    if m:
        return symbol_resolvent(int(m.group(2)), float(m.group(3)), -1 if m.group(1) == "res-" else 1)
    m = re.fullmatch(r"rat:([0-9]+):" + _NUM, s)
    if m:
        return symbol_rational(int(m.group(1)), float(m.group(2)))
    raise SymbolError(f"unknown symbol {name!r}")


def default_symbol(p: float, beta: int) -> SymbolFunction:
    """Default quadratic-functional symbol for exponent ``p``.

    ``z (1+z^2)^-N`` for ``p <= 2`` and ``z^beta (1+z^2)^-N`` for ``p > 2``,
    with ``N = ceil(beta/2) + 1``.
    """
    N = math.ceil(beta / 2) + 1
    return symbol_rational(1, N) if p <= 2 else symbol_rational(int(beta), N)


# ---------------------------------------------------- spectral decomposition
@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigen-decomposition of ``D`` in the weighted inner product.

    Columns of ``eigenforms`` are orthonormal for ``<f, g> = sum mass f g``.
    Eigenvalues are sorted ascending; those with ``|lambda| <= null_threshold``
    form the harmonic space.
    """

    complex: MetricMeasureComplex
    eigenvalues: np.ndarray
    eigenforms: np.ndarray
    null_threshold: float
    d: GradedOperator = field(repr=False)
    dstar: GradedOperator = field(repr=False)
    D: GradedOperator = field(repr=False)

    @property
    def null_mask(self) -> np.ndarray:
        return np.abs(self.eigenvalues) <= self.null_threshold

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues with the numerically null ones set to exactly 0."""
        return np.where(self.null_mask, 0.0, self.eigenvalues)

    @cached_property
    def symmetric_eigenvectors(self) -> np.ndarray:
        """Orthonormal eigenvectors of ``M^1/2 D M^-1/2``."""
        return np.sqrt(self.complex.mass)[:, None] * self.eigenforms

    @property
    def lambda_max(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def lambda_min_positive(self) -> float:
        nz = np.abs(self.eigenvalues[~self.null_mask])
        if nz.size == 0:
            raise HodgeHardyError("D has no nonzero eigenvalue")
        return float(nz.min())

    @property
    def nullity(self) -> int:
        return int(self.null_mask.sum())

    def coefficients(self, f: GradedForm | np.ndarray) -> np.ndarray:
        """``<f, v_i>`` for every eigenform ``v_i``."""
        if isinstance(f, GradedForm):
            if f.complex is not self.complex:
                raise HodgeHardyError("form and decomposition live on different complexes")
            f = f.coefficients
        return self.eigenforms.T @ (self.complex.mass[:, None] * f if np.ndim(f) == 2 else self.complex.mass * f)

    def synthesize(self, c: np.ndarray) -> GradedForm:
        return GradedForm(self.complex, self.eigenforms @ c)

    def symbol_values(self, psi: SymbolFunction | Callable, t: float | np.ndarray = 1.0) -> np.ndarray:
        """``psi(t lambda_i)``; a 2-D array ``(n_eig, len(t))`` for array ``t``."""
        psi = _as_symbol(psi)
        lam = self.spectrum
        arg = np.multiply.outer(lam, t) if np.ndim(t) else lam * t
        with np.errstate(all="ignore"):
            vals = np.asarray(psi(arg))
        if vals.shape != np.shape(arg):
            vals = np.broadcast_to(vals, np.shape(arg)).copy()
        if not np.all(np.isfinite(vals)):
            raise SymbolError(f"symbol {getattr(psi, 'name', psi)!r} is undefined on the spectrum")
        return vals

    def reconstruction_error(self) -> float:
        """``|| D - sum lambda v v* ||_2`` in the symmetric frame."""
        w = np.sqrt(self.complex.mass)
        Dsym = (w[:, None] * self.D.dense()) / w[None, :]
        U = self.symmetric_eigenvectors
        return float(np.linalg.norm(Dsym - (U * self.eigenvalues) @ U.T, 2))

    def orthonormality_error(self) -> float:
        U = self.symmetric_eigenvectors
        return float(np.max(np.abs(U.T @ U - np.eye(U.shape[1]))))


_CACHE: "weakref.WeakKeyDictionary[MetricMeasureComplex, SpectralDecomposition]" = weakref.WeakKeyDictionary()


def spectral_decomposition(X: MetricMeasureComplex, null_rtol: float = 1e-10) -> SpectralDecomposition:
    """Dense eigendecomposition of ``D`` (cached per complex)."""
    cached = _CACHE.get(X)
    if cached is not None and null_rtol == 1e-10:
        return cached
    d = assemble_exterior_derivative(X)
    ds = assemble_codifferential(X, d)
    D = assemble_dirac(X)
    w = np.sqrt(X.mass)
    Dsym = (w[:, None] * D.dense()) / w[None, :]
    Dsym = 0.5 * (Dsym + Dsym.T)
    lam, U = np.linalg.eigh(Dsym)
    V = U / w[:, None]
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    thr = null_rtol * scale if scale > 0 else 1e-12
    S = SpectralDecomposition(X, lam, V, thr, d, ds, D)
    if null_rtol == 1e-10:
        _CACHE[X] = S
    return S


def _as_symbol(psi) -> SymbolFunction | Callable:
    return parse_symbol(psi) if isinstance(psi, str) else psi


# -------------------------------------------------------------- operations
def apply_function(psi, S: SpectralDecomposition, f: GradedForm, t: float = 1.0) -> GradedForm:
    """``psi(tD) f`` by spectral synthesis.

    Bounded symbols act on the harmonic part by ``psi(0)``; for symbols with
    ``psi(0) = 0`` it is annihilated.
    """
    if t <= 0:
        raise HodgeHardyError("t must be positive")
    psi = _as_symbol(psi)
    return S.synthesize(S.symbol_values(psi, t) * S.coefficients(f))


def heat_semigroup(S: SpectralDecomposition, f: GradedForm, s: float) -> GradedForm:
    """``exp(-s Delta) f``."""
    if s < 0:
        raise HodgeHardyError("s must be non-negative")
    return S.synthesize(np.exp(-s * S.spectrum**2) * S.coefficients(f))


def operator_matrix(psi, S: SpectralDecomposition, t: float = 1.0, symmetric: bool = True) -> np.ndarray:
    """Dense matrix of ``psi(tD)``.

    With ``symmetric=True`` the matrix acts in the orthonormal frame
    ``M^1/2 f``, so its spectral norm is the operator norm on forms.
    """
    vals = S.symbol_values(_as_symbol(psi), t)
    if symmetric:
        U = S.symmetric_eigenvectors
        return (U * vals) @ U.T
    V = S.eigenforms
    return (V * vals) @ (V.T * S.complex.mass[None, :])


def q_transform(psi, S: SpectralDecomposition, f: GradedForm, grid: TimeGrid) -> SpaceTimeField:
    """``F(., t_j) = psi(t_j D) f`` on every grid time."""
    psi = _as_symbol(psi)
    if grid.size == 0:
        raise HodgeHardyError("empty time grid")
    if isinstance(psi, SymbolFunction) and abs(psi.value_at_zero) > 0:
        raise SymbolError(f"q_transform needs psi(0) = 0, got {psi.name}")
    c = S.coefficients(f)
    vals = S.symbol_values(psi, grid.points)
    return SpaceTimeField(S.complex, S.eigenforms @ (vals * c[:, None]), grid)


def s_transform(psi, S: SpectralDecomposition, F: SpaceTimeField) -> GradedForm:
    """``sum_j w_j psi(t_j D) F(., t_j)``."""
    psi = _as_symbol(psi)
    if F.complex is not S.complex:
        raise HodgeHardyError("field and decomposition live on different complexes")
    C = S.coefficients(F.values)
    vals = S.symbol_values(psi, F.grid.points)
    return S.synthesize((vals * C) @ F.grid.weights)


@dataclass(frozen=True)
class CalderonPair:
    """Normalized pair with ``int_0^inf psi(+-t) psi_tilde(+-t) dt/t = 1``."""

    psi: SymbolFunction
    psi_tilde: SymbolFunction
    c_plus: complex
    c_minus: complex


def _half_line_integral(g: Callable[[float], complex]) -> complex:
    def part(fun):
        opts = dict(limit=400, epsabs=1e-15, epsrel=1e-12)
        a = integrate.quad(fun, 0.0, 1.0, **opts)[0]
        b = integrate.quad(fun, 1.0, np.inf, **opts)[0]
        return a + b

    re_ = part(lambda t: float(np.real(g(t))) / t)
    im_ = part(lambda t: float(np.imag(g(t))) / t)
    return complex(re_, im_)


def calderon_normalize(psi, psi_tilde=None) -> CalderonPair:
    """Compute ``c_+-`` and rescale ``psi_tilde`` so both equal 1.

    ``psi_tilde`` defaults to the conjugate ``conj(psi)``.

    Raises:
        SymbolError: if a constant vanishes or the integral diverges.
    """
    psi = _as_symbol(psi)
    pt = psi.conjugate() if psi_tilde is None else _as_symbol(psi_tilde)
    for s in (psi, pt):
        if not s.in_psi_class:
            raise SymbolError(f"{s.name} is not in a decaying class")
    cs = []
    for sgn in (1.0, -1.0):
        c = _half_line_integral(lambda t: complex(psi(np.array(sgn * t)) * pt(np.array(sgn * t))))
        if not np.isfinite(c) or abs(c) < 1e-14:
            raise SymbolError(f"degenerate normalization integral {c}")
        cs.append(c.real if abs(c.imag) <= 1e-14 * abs(c) else c)
    scaled = pt.scaled(cs[0], cs[1], name=f"{pt.name}/c")
    return CalderonPair(psi, scaled, cs[0], cs[1])


def riesz_transform(
    S: SpectralDecomposition, f: GradedForm, variant: str = "full", return_dropped: bool = False
):
    """Riesz transforms ``sign(D)``, ``d Delta^-1/2`` and ``d* Delta^-1/2``.

    The harmonic component of ``f`` is dropped; with ``return_dropped`` its
    norm is returned alongside the result.
    """
    c = S.coefficients(f)
    null = S.null_mask
    lam = S.eigenvalues
    if variant == "full":
        out = S.synthesize(np.where(null, 0.0, np.sign(lam)) * c)
    elif variant in ("d_side", "dstar_side"):
        inv = np.zeros_like(c)
        inv[~null] = c[~null] / np.abs(lam[~null])
        u = S.synthesize(inv)
        out = S.d(u) if variant == "d_side" else S.dstar(u)
    else:
        raise HodgeHardyError(f"unknown Riesz variant {variant!r}")
    if return_dropped:
        dropped = float(np.sqrt(np.sum(np.abs(c[null]) ** 2)))
        return out, dropped
    return out


# ------------------------------------------------------------------ Lanczos
def lanczos_apply_function(
    psi, X: MetricMeasureComplex, f: GradedForm, t: float = 1.0, krylov_dim: int | None = None
) -> GradedForm:
    """``psi(tD) f`` from a Krylov space of the sparse symmetric ``D``.

    Uses full reorthogonalization; intended for smooth symbols on complexes
    too large for a dense eigendecomposition.
    """
    psi = _as_symbol(psi)
    w = np.sqrt(X.mass)
    D = assemble_dirac(X).matrix
    A = (sp.diags(w) @ D @ sp.diags(1.0 / w)).tocsr()
    A = 0.5 * (A + A.T)
    b = w * f.coefficients
    if np.iscomplexobj(b):
        re_ = lanczos_apply_function(psi, X, GradedForm(X, f.coefficients.real), t, krylov_dim)
        im_ = lanczos_apply_function(psi, X, GradedForm(X, f.coefficients.imag), t, krylov_dim)
        return re_ + 1j * im_.coefficients
    n = len(b)
    k = min(n, krylov_dim or min(n, 300))
    beta0 = np.linalg.norm(b)
    if beta0 == 0:
        return GradedForm.zeros(X)
    Q = np.zeros((n, k))
    alpha = np.zeros(k)
    beta = np.zeros(k)
    Q[:, 0] = b / beta0
    m = k
    for j in range(k):
        v = A @ Q[:, j]
        alpha[j] = Q[:, j] @ v
        v -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ v)
        v -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ v)
        if j + 1 == k:
            break
        beta[j] = np.linalg.norm(v)
        if beta[j] <= 1e-12 * max(1.0, abs(alpha[j])):
            m = j + 1
            break
        Q[:, j + 1] = v / beta[j]
    T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    theta, W = np.linalg.eigh(T)
    thr = 1e-10 * max(np.max(np.abs(theta)), 1e-300)
    theta = np.where(np.abs(theta) <= thr, 0.0, theta)
    vals = np.asarray(psi(theta * t))
    y = beta0 * (Q[:, :m] @ (W @ (vals * W[0, :])))
    return GradedForm(X, y / w)

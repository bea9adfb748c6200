"""Hardy norms, molecules, maximal functions and Coifman-Weiss atoms.

Annulus and ``L^p`` quantities use the vertex density of a form, so a
cutoff ``chi`` acts through ``||chi f||^2 = sum_x mu(x) chi(x)^2 |f|^2(x)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .calculus import (
    SpectralDecomposition,
    SymbolFunction,
    calderon_normalize,
    default_symbol,
    parse_symbol,
    q_transform,
    spectral_decomposition,
    symbol_resolvent,
)
from .complex import Ball, MetricMeasureComplex
from .exceptions import AdmissibilityError, HodgeHardyError
from .fields import SpaceTimeField, TimeGrid
from .operators import GradedForm
from .tent import AtomicDecomposition, atomic_decompose, tent_norm

__all__ = [
    "HarmonicComponentWarning",
    "default_grid",
    "check_admissible",
    "hardy_norm",
    "hardy_report",
    "AdaptedCutoffs",
    "MoleculeCertificate",
    "validate_molecule",
    "Molecule",
    "MolecularDecomposition",
    "molecular_decompose",
    "default_molecule_order",
    "maximal_function",
    "maximal_norm",
    "CWAtomCertificate",
    "validate_cw_atom",
    "cw_molecule_quantity",
]


class HarmonicComponentWarning(UserWarning):
    """The form has a harmonic part, which carries no Hardy norm."""


def default_grid(S: SpectralDecomposition, points_per_decade: float = 40) -> TimeGrid:
    """``[0.01 / lambda_max, 100 / lambda_min+]`` at the given density."""
    return TimeGrid.log_spaced(0.01 / S.lambda_max, 100.0 / S.lambda_min_positive, points_per_decade)


def check_admissible(psi: SymbolFunction, p: float, beta: int) -> None:
    """Raise unless the decay class of ``psi`` suits the exponent ``p``.

    ``p < 2`` needs ``sigma >= 1`` and ``tau >= beta + 1``; ``p > 2`` needs
    ``sigma >= beta``; ``p = 2`` accepts any decaying class.
    """
    if not psi.in_psi_class:
        raise AdmissibilityError(f"{psi.name} has no decay at 0 or infinity")
    if p < 2 and not (psi.sigma >= 1 and psi.tau >= beta + 1):
        raise AdmissibilityError(f"{psi.name} (sigma={psi.sigma}, tau={psi.tau}) too weak for p={p}, beta={beta}")
    if p > 2 and psi.sigma < beta:
        raise AdmissibilityError(f"{psi.name} (sigma={psi.sigma}) too weak for p={p}, beta={beta}")


def _split_harmonic(S: SpectralDecomposition, f: GradedForm) -> tuple[GradedForm, float]:
    c = S.coefficients(f)
    null = S.null_mask
    harmonic = float(np.sqrt(np.sum(np.abs(c[null]) ** 2)))
    return S.synthesize(np.where(null, 0, c)), harmonic


def hardy_report(
    f: GradedForm,
    p: float = 1.0,
    psi: SymbolFunction | str | None = None,
    grid: TimeGrid | None = None,
    alpha: float = 1.0,
    S: SpectralDecomposition | None = None,
) -> dict:
    """:func:`hardy_norm` with the symbol, grid fingerprint and harmonic part."""
    if p < 1 or math.isinf(p):
        raise HodgeHardyError("p must lie in [1, inf)")
    X = f.complex
    S = spectral_decomposition(X) if S is None else S
    beta = X.doubling.beta
    psi = default_symbol(p, beta) if psi in (None, "default") else parse_symbol(psi)
    check_admissible(psi, p, beta)
    h, harmonic = _split_harmonic(S, f)
    if harmonic > 1e-10 * max(f.norm(), 1e-300):
        warnings.warn(f"harmonic component of norm {harmonic:.3g} ignored", HarmonicComponentWarning, stacklevel=3)
    if S.nullity == S.eigenvalues.size:
        return {"norm": 0.0, "p": p, "psi": psi.name, "grid": None, "harmonic_norm": harmonic}
    grid = default_grid(S) if grid is None else grid
    value = tent_norm(q_transform(psi, S, h, grid), p, alpha) if h.norm() > 0 else 0.0
    return {"norm": value, "p": p, "psi": psi.name, "grid": grid.fingerprint, "harmonic_norm": harmonic}


def hardy_norm(
    f: GradedForm,
    p: float = 1.0,
    psi: SymbolFunction | str | None = None,
    grid: TimeGrid | None = None,
    alpha: float = 1.0,
    S: SpectralDecomposition | None = None,
) -> float:
    """``|| S_alpha Q_psi f ||_{L^p}`` for the range part of ``f``.

    Emits :class:`HarmonicComponentWarning` when ``f`` has a harmonic part.

    Raises:
        AdmissibilityError: if ``psi`` decays too slowly for ``p``.
    """
    return hardy_report(f, p, psi, grid, alpha, S)["norm"]


# -------------------------------------------------------------- cutoffs
@dataclass(frozen=True, eq=False)
class AdaptedCutoffs:
    """Partition of unity ``chi_0, ..., chi_K`` adapted to dyadic dilates of a ball.

    With ``g_k = clip(2 - rho / (2^k r), 0, 1)``, ``chi_0 = g_1`` and
    ``chi_k = g_{k+1} - g_k``.
    """

    ball: Ball
    chi: np.ndarray  # (K + 1, n_vertices)

    @classmethod
    def build(cls, X: MetricMeasureComplex, b: Ball) -> "AdaptedCutoffs":
        r = b.radius
        if not r > 0:
            raise HodgeHardyError("ball radius must be positive")
        rho = X.distance[X.vertex_index(b.center)]
        K = max(2, math.ceil(math.log2(max(X.diameter, r) / r)) + 2)
        g = np.array([np.clip(2.0 - rho / (2.0**k * r), 0.0, 1.0) for k in range(K + 2)])
        chi = np.empty((K + 1, X.n_vertices))
        chi[0] = g[1]
        chi[1:] = g[2 : K + 2] - g[1 : K + 1]
        return cls(Ball(X.vertex_index(b.center), float(r)), chi)

    @property
    def K(self) -> int:
        return self.chi.shape[0] - 1

    def lipschitz_constant(self, X: MetricMeasureComplex) -> float:
        """Max of ``|chi_k(x) - chi_k(y)| 2^k r / rho(x, y)`` over edges."""
        e = X.cells[1] if X.dimension >= 1 else np.zeros((0, 2), int)
        if len(e) == 0:
            return 0.0
        ln = X.edge_lengths
        scale = 2.0 ** np.arange(self.K + 1) * self.ball.radius
        diff = np.abs(self.chi[:, e[:, 0]] - self.chi[:, e[:, 1]])
        return float(np.max(diff * scale[:, None] / ln[None, :]))

    def annulus_norms(self, f: GradedForm) -> np.ndarray:
        """``||chi_k f||`` for every ``k``."""
        dens = f.density() * f.complex.measure
        return np.sqrt(np.maximum(self.chi**2 @ dens, 0.0))


@dataclass(frozen=True)
class MoleculeCertificate:
    """Measured molecule bounds for a pair ``a = Op^N b`` over a ball."""

    ball: Ball
    order: int
    operator: str
    identity_error: float
    identity_ok: bool
    norms_a: np.ndarray
    norms_b: np.ndarray
    required_a: np.ndarray
    required_b: np.ndarray
    slack: float
    l1_norm: float
    l1_bound: float
    lipschitz: float
    tolerance: float
    atom: bool = False
    support_ok: bool = True

    @property
    def passed(self) -> bool:
        return self.passes(self.tolerance)

    def passes(self, slack: float) -> bool:
        return self.identity_ok and self.support_ok and self.slack <= slack * (1 + 1e-12)

    def to_dict(self) -> dict:
        return {
            "ball": {"center": self.ball.center, "radius": self.ball.radius},
            "order": self.order,
            "operator": self.operator,
            "identity_error": self.identity_error,
            "identity_ok": self.identity_ok,
            "annulus_a": self.norms_a.tolist(),
            "annulus_b": self.norms_b.tolist(),
            "required_a": self.required_a.tolist(),
            "required_b": self.required_b.tolist(),
            "slack": self.slack,
            "l1_norm": self.l1_norm,
            "l1_bound": self.l1_bound,
            "lipschitz": self.lipschitz,
            "atom": self.atom,
            "support_ok": self.support_ok,
            "passed": self.passed,
        }


def _apply_power(S: SpectralDecomposition, op: str, N: int, b: GradedForm) -> GradedForm:
    D = S.D
    if op == "D":
        out = b
        for _ in range(N):
            out = D(out)
        return out
    if op == "Delta":
        out = b
        for _ in range(2 * N):
            out = D(out)
        return out
    if op in ("d", "dstar"):
        out = b
        for _ in range(N - 1):
            out = D(out)
        return S.d(out) if op == "d" else S.dstar(out)
    raise HodgeHardyError(f"unknown molecule operator {op!r}")


def validate_molecule(
    a: GradedForm,
    b: GradedForm,
    ball: Ball,
    N: int,
    operator: str = "D",
    slack: float = 1.0,
    atom: bool = False,
    S: SpectralDecomposition | None = None,
) -> MoleculeCertificate:
    """Check ``a = Op^N b`` and the dyadic annulus bounds around ``ball``.

    Required bounds are ``2^-k V(2^k B)^-1/2`` for ``a`` and
    ``2^-k r^N V(2^k B)^-1/2`` for ``b`` (``r^2N`` for ``Delta``).  With
    ``atom=True`` ``b`` must live on cells inside ``B`` and only the global
    norms are compared with ``V(B)^-1/2`` and ``r^N V(B)^-1/2``.
    """
    X = a.complex
    if b.complex is not X:
        raise HodgeHardyError("a and b live on different complexes")
    S = spectral_decomposition(X) if S is None else S
    ball = Ball(X.vertex_index(ball.center), float(ball.radius))
    opb = _apply_power(S, operator, N, b)
    err = (a - opb).norm() / max(a.norm(), opb.norm(), 1e-300)
    ident_ok = bool(err <= 1e-9) or (a.norm() == 0 and opb.norm() == 0)
    r = ball.radius
    rN = r ** (2 * N if operator == "Delta" else N)
    cut = AdaptedCutoffs.build(X, ball)
    C_D = X.doubling.C_D
    support_ok = True
    if atom:
        inside = X.cells_inside(X.ball_mask(ball))
        support_ok = not np.any(b.coefficients[~inside] != 0)
        vb = float(X.measure[X.ball_mask(ball)].sum())
        na, nb = np.array([a.norm()]), np.array([b.norm()])
        ra, rb = np.array([vb**-0.5]), np.array([rN * vb**-0.5])
    else:
        K = cut.K
        vols = np.array([X.measure[X.distance[ball.center] < 2.0**k * r].sum() for k in range(K + 1)])
        ra = 2.0 ** -np.arange(K + 1) / np.sqrt(vols)
        rb = rN * ra
        na, nb = cut.annulus_norms(a), cut.annulus_norms(b)
    s = float(max(np.max(na / ra), np.max(nb / rb)))
    l1 = a.lp_norm(1)
    return MoleculeCertificate(
        ball, N, operator, float(err), ident_ok, na, nb, ra, rb, s, l1, 2 * C_D * max(s, 1e-300),
        cut.lipschitz_constant(X), slack, atom, bool(support_ok),
    )


# -------------------------------------------------------------- molecules
def default_molecule_order(X: MetricMeasureComplex) -> int:
    """Smallest integer ``N > kappa/2 + 1``."""
    return math.floor(X.doubling.kappa / 2) + 2


@dataclass(frozen=True, eq=False)
class Molecule:
    a: GradedForm
    b: GradedForm
    ball: Ball
    certificate: MoleculeCertificate


@dataclass(frozen=True, eq=False)
class MolecularDecomposition:
    """``f ~ sum_j lambdas[j] molecules[j].a``."""

    lambdas: np.ndarray
    molecules: list[Molecule]
    order: int
    psi_name: str
    tent: AtomicDecomposition
    residual: float
    hardy_norm_1: float | None = None
    experimental: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def sum_abs(self) -> float:
        return float(np.abs(self.lambdas).sum())

    @property
    def certified_sum(self) -> float:
        """``sum |lambda_j| * slack_j``: coefficients of molecules rescaled to slack 1."""
        return float(sum(abs(l) * m.certificate.slack for l, m in zip(self.lambdas, self.molecules)))

    @property
    def max_slack(self) -> float:
        return max(m.certificate.slack for m in self.molecules)

    def reconstruct(self) -> GradedForm:
        X = self.molecules[0].a.complex
        out = np.zeros(X.graded_dim, dtype=complex)
        for lam, m in zip(self.lambdas, self.molecules):
            out += lam * m.a.coefficients
        return GradedForm(X, out)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "psi": self.psi_name,
            "n_molecules": len(self.molecules),
            "sum_abs_lambda": self.sum_abs,
            "certified_sum": self.certified_sum,
            "max_slack": self.max_slack,
            "residual": self.residual,
            "experimental": self.experimental,
            **self.meta,
            "molecules": [
                {"lambda": float(l), "certificate": m.certificate.to_dict()} for l, m in zip(self.lambdas, self.molecules)
            ],
        }


def _atom_coefficients(S: SpectralDecomposition, rows, cols, vals, m: int) -> np.ndarray:
    """Spectral coefficients ``<A(., t_j), v_i>`` of a sparse atom, shape ``(n_eig, m)``."""
    mv = S.complex.mass[rows] * vals
    onehot = sp.csr_matrix((np.ones(len(cols)), (np.arange(len(cols)), cols)), shape=(len(cols), m))
    return np.asarray((onehot.T @ (S.eigenforms[rows] * mv[:, None])).T)


def molecular_decompose(
    f: GradedForm,
    N: int | None = None,
    grid: TimeGrid | None = None,
    gaussian_mode: bool = False,
    slack: float | None = None,
    S: SpectralDecomposition | None = None,
) -> MolecularDecomposition:
    """Molecules ``a_j = D^N g_j`` from a tent atomic decomposition of ``Q f``.

    With ``psi = z^M (1+iz)^-(M+2)`` (``M = max(beta, N)``) and its
    Calderon partner ``psi~``, ``F = Q_psi~ f`` is split into tent atoms
    ``A_j``; then ``a_j = S_psi A_j`` and
    ``g_j = sum_i w_i t_i^N phi(t_i D) A_j(t_i)`` where ``psi = z^N phi``.

    Raises:
        HodgeHardyError: if ``f`` has a harmonic part, or ``N`` is too small
            outside ``gaussian_mode``.
    """
    X = f.complex
    S = spectral_decomposition(X) if S is None else S
    cert = X.doubling
    if gaussian_mode:
        N = 1 if N is None else N
    else:
        N = default_molecule_order(X) if N is None else int(N)
        if not N > cert.kappa / 2 + 1:
            raise HodgeHardyError(f"order N={N} must exceed kappa/2 + 1 = {cert.kappa / 2 + 1:.3f}")
    _, harmonic = _split_harmonic(S, f)
    if harmonic > 1e-8 * max(f.norm(), 1e-300):
        raise HodgeHardyError(f"form has a harmonic component of norm {harmonic:.3g}")
    M = max(cert.beta, N)
    psi = symbol_resolvent(M, M + 2)
    pair = calderon_normalize(psi)
    grid = default_grid(S) if grid is None else grid
    F = q_transform(pair.psi_tilde, S, f, grid)
    tdec = atomic_decompose(F)

    lam = S.spectrum
    t = grid.points
    arg = np.multiply.outer(lam, t)
    with np.errstate(all="ignore"):
        psi_vals = psi(arg)
        # t^N phi(t lam) with phi = z^(M-N) (1+iz)^-(M+2)
        phi_vals = (t[None, :] ** N) * (arg ** (M - N) if M > N else 1.0) * (1 + 1j * arg) ** (-(M + 2))
    w = grid.weights
    mols, lambdas = [], []
    total = np.zeros(X.graded_dim, dtype=complex)
    for lam_j, atom in zip(tdec.lambdas, tdec.atoms):
        C = _atom_coefficients(S, atom.rows, atom.cols, atom.values, grid.size)
        a = S.synthesize((psi_vals * C) @ w)
        g = S.synthesize((phi_vals * C) @ w)
        c = validate_molecule(a, g, atom.ball, N, "D", slack=slack or np.inf, S=S)
        mols.append(Molecule(a, g, atom.ball, c))
        lambdas.append(lam_j)
        total += lam_j * a.coefficients
    residual = float(GradedForm(X, total - f.coefficients).norm() / max(f.norm(), 1e-300))
    experimental = bool(gaussian_mode)
    return MolecularDecomposition(
        np.array(lambdas), mols, N, psi.name, tdec, residual, None, experimental,
        {"grid": grid.fingerprint, "M": M, "c_plus": abs(pair.c_plus), "c_minus": abs(pair.c_minus)},
    )


# ---------------------------------------------------------- maximal functions
def maximal_function(
    f: GradedForm,
    alpha: float = 1.0,
    c: float | None = None,
    grid: TimeGrid | None = None,
    variant: str = "plain",
    S: SpectralDecomposition | None = None,
) -> np.ndarray:
    """Non-tangential maximal function of the heat extension ``u(s) = exp(-s^2 Delta) f``.

    ``f*(x)^2 = sup_{rho(x,y) < alpha t} (t V(y,t))^-1 sum mu(z) ds |u(z,s)|^2``
    with the sum over ``rho(y,z) < c t`` and ``|s - t| < c t``.  The tilde
    variant adds ``|s d/ds u|^2``, computed spectrally.

    Raises:
        HodgeHardyError: if ``c > alpha / (1 + 2 alpha)`` or the variant is unknown.
    """
    if not alpha > 0:
        raise HodgeHardyError("aperture must be positive")
    cmax = alpha / (1 + 2 * alpha)
    c = cmax if c is None else c
    if not 0 < c <= cmax * (1 + 1e-12):
        raise HodgeHardyError(f"c must lie in (0, alpha/(1+2 alpha)] = (0, {cmax:.6g}]")
    if variant not in ("plain", "tilde"):
        raise HodgeHardyError(f"unknown variant {variant!r}")
    X = f.complex
    S = spectral_decomposition(X) if S is None else S
    if grid is None:
        grid = default_grid(S) if S.nullity < S.eigenvalues.size else TimeGrid.log_spaced(0.01, 100.0, 40)
    coef = S.coefficients(f)
    x2 = np.multiply.outer(S.spectrum, grid.points) ** 2
    heat = np.exp(-x2)
    U = S.eigenforms @ (heat * coef[:, None])
    dens = SpaceTimeField(X, U, grid).density()
    if variant == "tilde":
        dU = S.eigenforms @ (-2 * x2 * heat * coef[:, None])
        dens = dens + SpaceTimeField(X, dU, grid).density()
    ds = grid.points * grid.weights
    weighted = dens * X.measure[:, None] * ds[None, :]
    out = np.zeros(X.n_vertices)
    s = grid.points
    for j, t in enumerate(s):
        win = np.abs(s - t) < c * t
        T = weighted[:, win].sum(axis=1)
        near_c = X.distance < c * t
        Vyt = (X.distance < t) @ X.measure
        A = (near_c @ T) / (t * Vyt)
        cone = X.distance < alpha * t
        out = np.maximum(out, np.max(np.where(cone, A[None, :], 0.0), axis=1))
    return np.sqrt(out)


def maximal_norm(
    f: GradedForm,
    alpha: float = 1.0,
    c: float | None = None,
    grid: TimeGrid | None = None,
    variant: str = "plain",
    S: SpectralDecomposition | None = None,
) -> float:
    """``sum_x mu(x) f*(x)``."""
    return float(np.sum(f.complex.measure * maximal_function(f, alpha, c, grid, variant, S)))


# ------------------------------------------------------------- CW atoms
@dataclass(frozen=True)
class CWAtomCertificate:
    ball: Ball
    support_ok: bool
    integral: float
    integral_ok: bool
    l2_norm: float
    l2_bound: float
    l2_ok: bool

    @property
    def passed(self) -> bool:
        return self.support_ok and self.integral_ok and self.l2_ok

    def to_dict(self) -> dict:
        return {
            "ball": {"center": self.ball.center, "radius": self.ball.radius},
            "support_ok": self.support_ok,
            "integral": self.integral,
            "integral_ok": self.integral_ok,
            "l2_norm": self.l2_norm,
            "l2_bound": self.l2_bound,
            "l2_ok": self.l2_ok,
            "passed": self.passed,
        }


def _zero_form_values(a) -> tuple[MetricMeasureComplex | None, np.ndarray]:
    if isinstance(a, GradedForm):
        X = a.complex
        if any(np.any(a.degree(k) != 0) for k in range(1, X.dimension + 1)):
            raise HodgeHardyError("expected a 0-form")
        return X, a.degree(0)
    return None, np.asarray(a)


def validate_cw_atom(a, ball: Ball, X: MetricMeasureComplex | None = None) -> CWAtomCertificate:
    """Support in ``ball``, zero integral and ``||a||_2 <= V(B)^-1/2``."""
    Xa, v = _zero_form_values(a)
    X = Xa if Xa is not None else X
    if X is None:
        raise HodgeHardyError("a complex is needed for raw vertex arrays")
    mask = X.ball_mask(ball)
    support_ok = not np.any(v[~mask] != 0)
    mu = X.measure
    integral = complex(np.sum(mu * v))
    integral = integral.real if integral.imag == 0 else abs(integral)
    integral_ok = abs(integral) <= 1e-12 * max(float(np.sum(mu * np.abs(v))), 1e-300) or not np.any(v)
    l2 = float(np.sqrt(np.sum(mu * np.abs(v) ** 2)))
    bound = float(mu[mask].sum()) ** -0.5
    return CWAtomCertificate(ball, bool(support_ok), float(integral), bool(integral_ok), l2, bound, l2 <= bound * (1 + 1e-12))


def _min_ball_measure(X: MetricMeasureComplex, x0: int) -> np.ndarray:
    """``m(x, x0)``: least measure of a ball containing both ``x`` and ``x0``."""
    rho = X.distance
    mu = X.measure
    out = np.full(X.n_vertices, np.inf)
    for z in range(X.n_vertices):
        R = np.maximum(rho[z], rho[z, x0])  # closed radius needed for each x
        order = np.argsort(rho[z], kind="stable")
        sd = rho[z][order]
        cum = np.cumsum(mu[order])
        vol = cum[np.searchsorted(sd, R, side="right") - 1]
        out = np.minimum(out, vol)
    return out


def cw_molecule_quantity(a, eps: float = 1.0, x0=None, X: MetricMeasureComplex | None = None) -> dict:
    """Integral and ``||a||^2 (sum mu |a|^2 m(x, x0)^(1+eps))^(1/eps)``.

    With ``x0=None`` the quantity is minimized over all base points.
    """
    Xa, v = _zero_form_values(a)
    X = Xa if Xa is not None else X
    if X is None:
        raise HodgeHardyError("a complex is needed for raw vertex arrays")
    mu = X.measure
    sq = mu * np.abs(v) ** 2
    bases = range(X.n_vertices) if x0 is None else [X.vertex_index(x0)]
    best, arg = np.inf, None
    for b in bases:
        q = float(sq.sum() * np.sum(sq * _min_ball_measure(X, b) ** (1 + eps)) ** (1 / eps))
        if q < best:
            best, arg = q, b
    return {"integral": float(np.real(np.sum(mu * v))), "quantity": best, "x0": arg, "eps": eps}

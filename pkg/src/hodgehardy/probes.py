"""Empirical measurement of decay estimates and boundedness constants.

Block norms ``||chi_F T chi_E||`` are taken in the weighted inner product:
``T`` is moved to the orthonormal frame ``M^1/2 T M^-1/2`` and the largest
singular value of the compressed block is returned.  A cell belongs to a
vertex set when all of its vertices do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calculus import (
    SpectralDecomposition,
    SymbolFunction,
    parse_symbol,
    spectral_decomposition,
)
from .complex import MetricMeasureComplex
from .exceptions import ProbeError
from .operators import GradedForm

__all__ = [
    "ProbeReport",
    "block_norm",
    "offdiag_probe",
    "gaffney_probe",
    "composition_decay_probe",
    "gaussian_kernel_probe",
    "heat_kernel",
    "boundedness_probe",
]


@dataclass
class ProbeReport:
    """Raw samples, fit and verdict of one probe run."""

    family: str
    parameter: str
    params: np.ndarray
    norms: np.ndarray
    global_norms: np.ndarray | None = None
    E: tuple[int, ...] = ()
    F: tuple[int, ...] = ()
    rho: float | None = None
    fit: dict = field(default_factory=dict)
    requested: dict = field(default_factory=dict)
    tolerance: float = 0.2
    verdict: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {
            "family": self.family,
            "parameter": self.parameter,
            "params": clean(self.params),
            "norms": clean(self.norms),
            "global_norms": clean(self.global_norms),
            "E": list(self.E),
            "F": list(self.F),
            "rho": self.rho,
            "fit": {k: clean(v) for k, v in self.fit.items()},
            "requested": {k: clean(v) for k, v in self.requested.items()},
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "notes": self.notes,
        }


def _vertex_sets(X: MetricMeasureComplex, E, F) -> tuple[np.ndarray, np.ndarray, float]:
    e = X.vertex_set(E) if not isinstance(E, np.ndarray) or E.dtype != bool else np.flatnonzero(E)
    f = X.vertex_set(F) if not isinstance(F, np.ndarray) or F.dtype != bool else np.flatnonzero(F)
    if e.size == 0 or f.size == 0:
        raise ProbeError("E and F must be nonempty")
    if np.intersect1d(e, f).size:
        raise ProbeError("E and F must be disjoint")
    rho = float(X.distance[np.ix_(e, f)].min())
    if not rho > 0:
        raise ProbeError("rho(E, F) must be positive")
    return e, f, rho


def _cell_masks(X: MetricMeasureComplex, e: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    me = np.zeros(X.n_vertices, bool)
    mf = np.zeros(X.n_vertices, bool)
    me[e] = True
    mf[f] = True
    return X.cells_inside(me), X.cells_inside(mf)


def block_norm(S: SpectralDecomposition, values: np.ndarray, cells_E: np.ndarray, cells_F: np.ndarray) -> float:
    """``||chi_F T chi_E||`` for ``T = sum values_i v_i v_i*``."""
    U = S.symmetric_eigenvectors
    blk = (U[cells_F] * values) @ U[cells_E].T
    return float(np.linalg.norm(blk, 2)) if blk.size else 0.0


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least squares ``y ~ a + b x``; returns ``(a, b, sqrt(1 - R^2))``."""
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss if ss > 0 else 1.0
    return float(coef[0]), float(coef[1]), math.sqrt(max(0.0, 1.0 - r2))


def _select(norms: np.ndarray, glob: np.ndarray, regime: np.ndarray, floor: float) -> np.ndarray:
    return regime & (norms > floor * np.maximum(glob, 1e-300))


# --------------------------------------------------------------- off-diagonal
def offdiag_probe(
    S: SpectralDecomposition,
    family: SymbolFunction | str,
    E,
    F,
    z_grid: Sequence[float] | None = None,
    requested_order: float = 1.0,
    regime: float = 0.25,
    tolerance: float = 0.2,
    noise_floor: float = 1e-12,
) -> ProbeReport:
    """Measure ``||chi_F psi(zD) chi_E||`` and fit its power decay in ``z / rho``.

    The fit uses samples with ``z / rho <= regime`` whose norm exceeds
    ``noise_floor`` times the global norm ``max |psi(z lambda)|``.
    """
    X = S.complex
    psi = parse_symbol(family)
    e, f, rho = _vertex_sets(X, E, F)
    cE, cF = _cell_masks(X, e, f)
    z = np.logspace(-3, 1, 81) * rho if z_grid is None else np.asarray(z_grid, float)
    norms, glob = np.empty(z.size), np.empty(z.size)
    for i, zi in enumerate(z):
        vals = S.symbol_values(psi, zi)
        norms[i] = block_norm(S, vals, cE, cF)
        glob[i] = float(np.max(np.abs(vals)))
    rep = ProbeReport(psi.name, "z", z, norms, glob, tuple(e), tuple(f), rho, tolerance=tolerance)
    rep.requested = {"order": requested_order}
    sel = _select(norms, glob, z / rho <= regime, noise_floor)
    if sel.sum() < 2:
        rep.notes.append("fewer than two informative samples in the fit regime")
        rep.fit = {"slope": float("nan"), "constant": float("nan"), "residual": float("nan"), "n": int(sel.sum())}
        rep.verdict = False
        return rep
    a, b, res = _linfit(np.log(z[sel] / rho), np.log(norms[sel]))
    rep.fit = {"slope": b, "constant": math.exp(a), "residual": res, "n": int(sel.sum()), "regime": regime}
    rep.verdict = bool(b >= requested_order - tolerance)
    return rep


_GAFFNEY = {
    "heat": lambda x: np.exp(-(x**2)),
    "tD_heat": lambda x: x * np.exp(-(x**2)),
}


def _gaffney_operator(S: SpectralDecomposition, family: str, t: float) -> np.ndarray:
    """Dense symmetric-frame matrix of the Gaffney family at time ``t``."""
    lam = S.spectrum
    U = S.symmetric_eigenvectors
    if family in _GAFFNEY:
        return (U * _GAFFNEY[family](t * lam)) @ U.T
    if family.startswith("powers:"):
        N = int(family.split(":")[1])
        x2 = (t * lam) ** 2
        return (U * (x2**N * np.exp(-x2))) @ U.T
    if family in ("t_d_heat", "t_dstar_heat"):
        heat = (U * np.exp(-((t * lam) ** 2))) @ U.T
        w = np.sqrt(S.complex.mass)
        op = S.d if family == "t_d_heat" else S.dstar
        Dm = (w[:, None] * op.dense()) / w[None, :]
        return t * Dm @ heat
    raise ProbeError(f"unknown Gaffney family {family!r}")


def gaffney_probe(
    S: SpectralDecomposition,
    E,
    F,
    t_grid: Sequence[float] | None = None,
    family: str = "heat",
    regime: float = 0.25,
    exclude_harmonic: bool = False,
    noise_floor: float = 1e-12,
) -> ProbeReport:
    """Fit ``log ||chi_F T_t chi_E|| ~ log C - alpha rho^2 / t^2`` for ``t <= regime * rho``.

    The residual is ``sqrt(1 - R^2)`` of the linear fit.
    """
    X = S.complex
    e, f, rho = _vertex_sets(X, E, F)
    cE, cF = _cell_masks(X, e, f)
    t = np.logspace(-2, 1, 61) * rho if t_grid is None else np.asarray(t_grid, float)
    if exclude_harmonic:
        Uh = S.symmetric_eigenvectors[:, S.null_mask]
        P = Uh @ Uh.T
    norms, glob = np.empty(t.size), np.empty(t.size)
    for i, ti in enumerate(t):
        T = _gaffney_operator(S, family, ti)
        if exclude_harmonic:
            T = T - P @ T @ P
        blk = T[np.ix_(cF, cE)]
        norms[i] = float(np.linalg.norm(blk, 2)) if blk.size else 0.0
        glob[i] = float(np.linalg.norm(T, 2))
    rep = ProbeReport(family, "t", t, norms, glob, tuple(e), tuple(f), rho, tolerance=0.0)
    sel = _select(norms, glob, t <= regime * rho, noise_floor)
    if sel.sum() < 2:
        rep.notes.append("fewer than two informative samples in the fit regime")
        rep.fit = {"alpha": float("nan"), "constant": float("nan"), "residual": float("nan"), "n": int(sel.sum())}
        return rep
    u = rho**2 / t[sel] ** 2
    a, b, res = _linfit(u, np.log(norms[sel]))
    rep.fit = {"alpha": -b, "constant": math.exp(a), "residual": res, "n": int(sel.sum()), "regime": regime}
    rep.verdict = bool(-b > 0)
    return rep


# ---------------------------------------------------------------- composition
def composition_decay_probe(
    psi: SymbolFunction | str,
    psi_tilde: SymbolFunction | str,
    f_sym: SymbolFunction | str | Callable = "one",
    s_grid: Sequence[float] | None = None,
    t_grid: Sequence[float] | None = None,
    a: float = 1.0,
    b: float = 1.0,
    S: SpectralDecomposition | None = None,
    tolerance: float = 0.2,
    regime: float = 0.25,
) -> ProbeReport:
    """Fit ``||psi(sD) f(D) psi~(tD)|| <= C min(u^a, u^-b)`` with ``u = s/t``.

    The norm is ``max_lambda |psi(s lambda) f(lambda) psi~(t lambda)|`` over
    the spectrum of ``S``, or over a dense log grid of the real line when
    ``S`` is omitted.  ``u <= regime`` gives ``a``, ``u >= 1/regime`` gives ``b``.

    Raises:
        ProbeError: if ``a`` or ``b`` exceeds what the decay classes allow.
    """
    psi, pt = parse_symbol(psi), parse_symbol(psi_tilde)
    fs = parse_symbol(f_sym) if isinstance(f_sym, str) else f_sym
    if a > min(psi.sigma, pt.tau - 1) + 1e-12 or b > min(pt.sigma, psi.tau - 1) + 1e-12:
        raise ProbeError(f"inadmissible request a={a}, b={b} for {psi.name}, {pt.name}")
    if S is not None:
        lam = S.spectrum[~S.null_mask]
    else:
        x = np.logspace(-8, 8, 8001)
        lam = np.concatenate([-x[::-1], x])
    s = np.logspace(-3, 3, 49) if s_grid is None else np.asarray(s_grid, float)
    t = np.array([1.0]) if t_grid is None else np.asarray(t_grid, float)
    fv = np.abs(np.asarray(fs(lam)))
    ss, tt = np.meshgrid(s, t, indexing="ij")
    ss, tt = ss.ravel(), tt.ravel()
    norms = np.array([np.max(np.abs(psi(si * lam)) * fv * np.abs(pt(ti * lam))) for si, ti in zip(ss, tt)])
    u = ss / tt
    bound = psi.sup_norm * float(np.max(fv)) * pt.sup_norm
    rep = ProbeReport(f"{psi.name}|{getattr(fs, 'name', 'f')}|{pt.name}", "s/t", u, norms, np.full(u.size, bound))
    rep.requested = {"a": a, "b": b}
    rep.tolerance = tolerance
    fit = {}
    ok = True
    for key, sel, sign in (("a", u <= regime, 1), ("b", u >= 1 / regime, -1)):
        sel = sel & (norms > 1e-14 * bound)
        if sel.sum() < 2:
            fit[key] = float("nan")
            rep.notes.append(f"no informative samples for {key}")
            ok = False
            continue
        c0, slope, res = _linfit(np.log(u[sel]), np.log(norms[sel]))
        fit[key] = sign * slope
        fit[f"residual_{key}"] = res
        fit[f"constant_{key}"] = math.exp(c0)
        ok &= sign * slope >= rep.requested[key] - tolerance
    rep.fit = fit
    rep.verdict = bool(ok)
    return rep


# ----------------------------------------------------------------- Gaussian
def heat_kernel(S: SpectralDecomposition, k: int, t: float) -> np.ndarray:
    """Kernel ``p_t(x, y)`` of ``exp(-t Delta_k)`` against the cell weights."""
    X = S.complex
    o = X.offsets
    sl = slice(o[k], o[k + 1])
    V = S.eigenforms[sl]
    # the operator matrix is (V e V^T M); dividing column y by w(y) leaves V e V^T
    return (V * np.exp(-t * S.spectrum**2)) @ V.T


def gaussian_kernel_probe(
    X: MetricMeasureComplex,
    k: int = 0,
    t_grid: Sequence[float] | None = None,
    C: float | None = None,
    c: float | None = None,
    S: SpectralDecomposition | None = None,
    floor: float = 1e-13,
) -> ProbeReport:
    """Fit ``|p_t(x,y)| V(x, sqrt t) <= C exp(-c rho^2 / t)`` over ``(x, y, t)``.

    ``c`` is fitted by least squares of ``log(|p| V)`` against ``rho^2 / t``;
    ``C`` is the smallest constant making that envelope hold.  With requested
    ``(C, c)`` the envelope is checked at those values instead.
    """
    if not 0 <= k <= X.dimension:
        raise ProbeError(f"degree {k} not present")
    S = spectral_decomposition(X) if S is None else S
    if t_grid is None:
        t_grid = np.logspace(0, math.log10(max(4.0, X.diameter**2)), 25) * X.min_edge_length**2
    t = np.asarray(t_grid, float)
    if k == 0:
        rho = X.distance
        vol_of = lambda r: (X.distance < r) @ X.measure  # noqa: E731
    else:
        rho = X.cell_distance()[X.offsets[k] : X.offsets[k + 1], X.offsets[k] : X.offsets[k + 1]]
        cells = X.cells[k]

        def vol_of(r):
            v = (X.distance < r) @ X.measure
            return v[cells].min(axis=1)

    xs, ys, ps = [], [], []
    diag_min = np.inf
    for ti in t:
        p = heat_kernel(S, k, ti)
        if k == 0:
            diag_min = min(diag_min, float(np.min(np.diag(p))))
        V = vol_of(math.sqrt(ti))
        xs.append((rho**2 / ti).ravel())
        ys.append((np.abs(p) * V[:, None]).ravel())
        ps.append(np.abs(p).ravel())
    Xv, Yv = np.concatenate(xs), np.concatenate(ys)
    keep = Yv > floor * Yv.max()
    logY = np.log(Yv[keep])
    a0, slope, res = _linfit(Xv[keep], logY)
    c_hat = -slope
    C_hat = float(np.exp(np.max(logY + c_hat * Xv[keep])))
    rep = ProbeReport(f"heat_kernel_degree_{k}", "t", t, np.array([float(np.max(q)) for q in ps]))
    rep.fit = {"c": c_hat, "C": C_hat, "residual": res, "n": int(keep.sum()), "diag_min": diag_min}
    if C is not None and c is not None:
        rep.requested = {"C": C, "c": c}
        env = np.log(C) - c * Xv
        ok = bool(np.all(np.log(np.maximum(Yv, 1e-300)) <= env + 1e-12))
    else:
        ok = c_hat > 0 and math.isfinite(C_hat)
    if k == 0 and not diag_min > 0:
        ok = False
        rep.notes.append("non-positive diagonal")
    rep.verdict = bool(ok)
    return rep


# --------------------------------------------------------------- boundedness
def boundedness_probe(
    operator: Callable[[GradedForm], GradedForm],
    norm_in: Callable[[GradedForm], float],
    norm_out: Callable[[GradedForm], float],
    battery: Sequence[GradedForm],
    name: str = "T",
    bound: float | None = None,
) -> ProbeReport:
    """Largest ``norm_out(T f) / norm_in(f)`` over a battery.

    Inputs with ``norm_in < 1e-12`` are skipped.  The verdict holds when a
    requested ``bound`` is respected (always, if none is given).
    """
    battery = list(battery)
    if not battery:
        raise ProbeError("empty battery")
    ratios = np.full(len(battery), np.nan)
    for i, f in enumerate(battery):
        ni = norm_in(f)
        if ni < 1e-12:
            continue
        ratios[i] = norm_out(operator(f)) / ni
    valid = np.isfinite(ratios)
    rep = ProbeReport(name, "battery index", np.arange(len(battery)), ratios)
    if not valid.any():
        rep.notes.append("every input was numerically zero")
        rep.fit = {"max": float("nan"), "median": float("nan"), "argmax": None}
        return rep
    arg = int(np.nanargmax(ratios))
    rep.fit = {"max": float(ratios[arg]), "median": float(np.nanmedian(ratios)), "argmax": arg, "min": float(np.nanmin(ratios))}
    rep.requested = {} if bound is None else {"bound": bound}
    rep.verdict = bool(bound is None or ratios[arg] <= bound)
    return rep

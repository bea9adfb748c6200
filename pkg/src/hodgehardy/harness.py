"""Experiment configuration, seeded batteries, regression store and reports."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import calculus, complex as cx, hardy, probes, tent
from .calculus import SpectralDecomposition, spectral_decomposition
from .exceptions import HodgeHardyError
from .operators import GradedForm, assemble_codifferential, assemble_exterior_derivative, hodge_decompose

__all__ = [
    "REGRESSION_ENV",
    "ExperimentConfig",
    "RegressionStore",
    "ExperimentError",
    "generate_battery",
    "run_experiment",
    "EXPERIMENTS",
]

REGRESSION_ENV = "HODGEHARDY_REGRESSION_STORE"


class ExperimentError(HodgeHardyError):
    """A pipeline failed; carries the experiment id and stage."""

    def __init__(self, experiment: str, stage: str, cause: Exception):
        super().__init__(f"[{experiment}/{stage}] {cause}")
        self.experiment = experiment
        self.stage = stage
        self.cause = cause


# ------------------------------------------------------------------ battery
def generate_battery(S: SpectralDecomposition, count: int, seed: int = 0, constraint: str = "range_D") -> list[GradedForm]:
    """Seeded unit-Gaussian forms projected by a Hodge projector, unit ``L2`` norm.

    ``constraint`` is one of ``range_D``, ``range_d``, ``range_dstar``, ``any``.

    Raises:
        HodgeHardyError: if ``count < 1`` or the constrained space is trivial.
    """
    if count < 1:
        raise HodgeHardyError("count must be >= 1")
    if constraint not in ("range_D", "range_d", "range_dstar", "any"):
        raise HodgeHardyError(f"unknown constraint {constraint!r}")
    X = S.complex
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        f = GradedForm(X, rng.standard_normal(X.graded_dim))
        if constraint != "any":
            exact, coexact, _ = hodge_decompose(f, S)
            f = {"range_D": exact + coexact, "range_d": exact, "range_dstar": coexact}[constraint]
        n = f.norm()
        if n < 1e-10:
            raise HodgeHardyError(f"constraint space {constraint} is trivial on {X.name}")
        out.append(f / n)
    return out


# --------------------------------------------------------------- regression
class RegressionStore:
    """JSON map from ``(fingerprint, experiment id)`` to frozen constants.

    The first certified run of a constant freezes it; later runs compare the
    measured value against the frozen one within ``rtol``.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        path = path if path is not None else os.environ.get(REGRESSION_ENV)
        self.path = Path(path) if path else None
        self.data: dict = {}
        if self.path is not None and self.path.exists():
            self.data = json.loads(self.path.read_text())

    @staticmethod
    def key(fingerprint: str, experiment: str, name: str) -> str:
        return f"{fingerprint}:{experiment}:{name}"

    def check(self, fingerprint: str, experiment: str, name: str, value: float, rtol: float, freeze: bool = True) -> dict:
        """Compare ``value`` with its frozen counterpart, freezing it if absent."""
        k = self.key(fingerprint, experiment, name)
        entry = self.data.get(k)
        if entry is None:
            if freeze and self.path is not None and math.isfinite(value):
                self.data[k] = {"value": value, "rtol": rtol}
                self.save()
            return {"value": value, "tolerance": rtol, "provenance": "measured", "pass": True}
        ref = entry["value"]
        ok = abs(value - ref) <= entry["rtol"] * abs(ref)
        return {"value": value, "frozen": ref, "tolerance": entry["rtol"], "provenance": "frozen", "pass": bool(ok)}

    def save(self) -> None:
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True))


# ------------------------------------------------------------------- config
@dataclass
class ExperimentConfig:
    """Everything needed to replay a run.

    ``complex`` is either ``{"file": path}`` or ``{"kind": ..., "size": [...],
    "seed": ...}``.
    """

    complex: dict
    experiments: list[str]
    p_values: list[float] = field(default_factory=lambda: [1.0, 2.0])
    psi: str = "default"
    grid: dict = field(default_factory=dict)
    battery: dict = field(default_factory=lambda: {"count": 5, "seed": 0, "constraint": "range_D"})
    probes: dict = field(default_factory=dict)
    output: str | None = None
    regression_store: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise HodgeHardyError(f"unknown config keys {sorted(unknown)}")
        if "complex" not in data:
            raise HodgeHardyError("config needs a 'complex' entry")
        return cls(**{**data, "experiments": list(data.get("experiments", []))})

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def build_complex(self) -> cx.MetricMeasureComplex:
        desc = self.complex
        if "file" in desc:
            return cx.load_complex(desc["file"])
        return cx.generate_complex(desc["kind"], desc["size"], seed=desc.get("seed", 0), random_weights=desc.get("random_weights", False))

    def build_grid(self, S: SpectralDecomposition) -> calculus.TimeGrid:
        g = self.grid
        ppd = g.get("points_per_decade", 40)
        t_min = g.get("t_min", "auto")
        t_max = g.get("t_max", "auto")
        t_min = 0.01 / S.lambda_max if t_min == "auto" else float(t_min)
        t_max = 100.0 / S.lambda_min_positive if t_max == "auto" else float(t_max)
        return calculus.TimeGrid.log_spaced(t_min, t_max, ppd)


# -------------------------------------------------------------- experiments
@dataclass
class _Context:
    config: ExperimentConfig
    X: cx.MetricMeasureComplex
    S: SpectralDecomposition
    store: RegressionStore
    _battery: list | None = None
    _grid: calculus.TimeGrid | None = None

    @property
    def grid(self):
        if self._grid is None:
            self._grid = self.config.build_grid(self.S)
        return self._grid

    @property
    def battery(self):
        if self._battery is None:
            b = self.config.battery
            self._battery = generate_battery(self.S, b.get("count", 5), b.get("seed", 0), b.get("constraint", "range_D"))
        return self._battery

    def constant(self, experiment: str, name: str, value: float, rtol: float = 0.3) -> dict:
        return self.store.check(self.X.fingerprint(), experiment, name, float(value), rtol)


def _exp_spectrum(ctx: _Context) -> dict:
    S = ctx.S
    return {
        "eigenvalues": S.eigenvalues.tolist(),
        "null_threshold": S.null_threshold,
        "nullity": S.nullity,
        "reconstruction_error": S.reconstruction_error(),
        "orthonormality_error": S.orthonormality_error(),
        "verdict": S.reconstruction_error() <= 1e-10 * max(S.lambda_max, 1e-300) and S.orthonormality_error() <= 1e-12,
    }


def _exp_exactness(ctx: _Context) -> dict:
    X = ctx.X
    d = assemble_exterior_derivative(X)
    ds = assemble_codifferential(X, d)
    dd = float(abs((d.matrix @ d.matrix)).max()) if (d.matrix @ d.matrix).nnz else 0.0
    rng = np.random.default_rng(ctx.config.battery.get("seed", 0))
    f = GradedForm(X, rng.standard_normal(X.graded_dim))
    g = GradedForm(X, rng.standard_normal(X.graded_dim))
    adj = abs(d(f).inner(g) - f.inner(ds(g))) / (f.norm() * g.norm())
    e, c, h = hodge_decompose(f, ctx.S)
    pyth = abs(e.norm() ** 2 + c.norm() ** 2 + h.norm() ** 2 - f.norm() ** 2) / f.norm() ** 2
    return {"dd_max": dd, "adjointness": adj, "pythagoras": pyth, "verdict": dd == 0 and adj <= 1e-12 and pyth <= 1e-10}


def _exp_calderon(ctx: _Context) -> dict:
    out = {}
    ok = True
    for name in ("zexp", "rat:1:3"):
        pair = calculus.calderon_normalize(name)
        errs = []
        for f in ctx.battery:
            F = calculus.q_transform(pair.psi, ctx.S, f, ctx.grid)
            back = calculus.s_transform(pair.psi_tilde, ctx.S, F)
            errs.append((back - f).norm() / f.norm())
        out[name] = {"c_plus": abs(pair.c_plus), "c_minus": abs(pair.c_minus), "max_rel_error": max(errs)}
        ok &= max(errs) <= 1e-3
    out["verdict"] = ok
    return out


def _exp_hardy_norms(ctx: _Context) -> dict:
    out = {"grid": ctx.grid.fingerprint}
    for p in ctx.config.p_values:
        vals = [hardy.hardy_norm(f, p, ctx.config.psi, ctx.grid, S=ctx.S) for f in ctx.battery]
        out[f"p={p:g}"] = vals
    out["verdict"] = True
    return out


def _exp_tent_atoms(ctx: _Context) -> dict:
    ratios, outside, ok = [], [], True
    psi = calculus.parse_symbol("zexp")
    for f in ctx.battery:
        F = calculus.q_transform(psi, ctx.S, f, ctx.grid)
        dec = tent.atomic_decompose(F)
        ok &= dec.all_valid and float(np.abs(dec.reconstruct().values - F.values).max()) == 0.0
        ratios.append(dec.ratio)
        outside.append(dec.outside_tent_fraction())
    const = ctx.constant("tent_atoms", "max_ratio", max(ratios))
    # reported only: mass of box atoms falling outside the exact tent
    return {"ratios": ratios, "max_ratio": const, "outside_tent_fraction": outside, "verdict": bool(ok and const["pass"])}


def _exp_molecules(ctx: _Context) -> dict:
    rows, ok = [], True
    for f in ctx.battery:
        md = hardy.molecular_decompose(f, grid=ctx.grid, S=ctx.S)
        l1ok = all(m.certificate.l1_norm <= m.certificate.l1_bound for m in md.molecules)
        idok = all(m.certificate.identity_ok for m in md.molecules)
        rows.append({"sum_abs": md.sum_abs, "certified_sum": md.certified_sum, "max_slack": md.max_slack, "residual": md.residual})
        ok &= l1ok and idok and md.residual <= 2e-3
    const = ctx.constant("molecules", "max_slack", max(r["max_slack"] for r in rows))
    return {"forms": rows, "max_slack": const, "verdict": bool(ok and const["pass"])}


def _exp_norm_equivalence(ctx: _Context) -> dict:
    h, m, mx = [], [], []
    for f in ctx.battery:
        h.append(hardy.hardy_norm(f, 1, grid=ctx.grid, S=ctx.S))
        m.append(hardy.molecular_decompose(f, grid=ctx.grid, S=ctx.S).certified_sum)
        mx.append(hardy.maximal_norm(f, 1.0, None, ctx.grid, "plain", ctx.S))
    h, m, mx = map(np.array, (h, m, mx))
    out = {"hardy": h.tolist(), "molecular": m.tolist(), "maximal": mx.tolist()}
    ok = True
    for name, r in (("mol/hardy", m / h), ("max/hardy", mx / h), ("mol/max", m / mx)):
        lo = ctx.constant("norm_equivalence", f"{name}:min", float(r.min()))
        hi = ctx.constant("norm_equivalence", f"{name}:max", float(r.max()))
        out[name] = {"min": lo, "max": hi}
        ok &= lo["pass"] and hi["pass"]
    out["verdict"] = bool(ok)
    return out


def _exp_riesz(ctx: _Context) -> dict:
    S = ctx.S
    iso, inv = [], []
    for f in ctx.battery:
        r = calculus.riesz_transform(S, f)
        iso.append(abs(r.norm() - f.norm()) / f.norm())
        inv.append((calculus.riesz_transform(S, r) - f).norm() / f.norm())
    rep = probes.boundedness_probe(
        lambda g: calculus.riesz_transform(S, g),
        lambda g: hardy.hardy_norm(g, 1, grid=ctx.grid, S=S),
        lambda g: g.lp_norm(1),
        ctx.battery,
        "riesz H1->L1",
    )
    const = ctx.constant("riesz", "h1_l1", rep.fit["max"])
    ok = max(iso) <= 1e-10 and max(inv) <= 1e-10 and const["pass"]
    return {"isometry": max(iso), "involution": max(inv), "h1_l1": const, "verdict": bool(ok)}


def _probe_sets(ctx: _Context) -> tuple[list, list]:
    p = ctx.config.probes
    if "E" in p and "F" in p:
        return p["E"], p["F"]
    X = ctx.X
    i, j = np.unravel_index(np.argmax(X.distance), X.distance.shape)
    return [int(i)], [int(j)]


def _exp_probe_offdiag(ctx: _Context) -> dict:
    E, F = _probe_sets(ctx)
    p = ctx.config.probes
    rep = probes.offdiag_probe(ctx.S, p.get("family", "res:1:2"), E, F, requested_order=p.get("order", 1.0))
    return {**rep.to_dict(), "verdict": rep.verdict}


def _exp_probe_gaffney(ctx: _Context) -> dict:
    E, F = _probe_sets(ctx)
    rep = probes.gaffney_probe(ctx.S, E, F, family=ctx.config.probes.get("gaffney_family", "heat"))
    ok = rep.verdict and rep.fit.get("residual", np.inf) < 0.1
    return {**rep.to_dict(), "verdict": bool(ok)}


def _exp_probe_composition(ctx: _Context) -> dict:
    rep = probes.composition_decay_probe("zexp", "zexp", "one")
    return {**rep.to_dict(), "verdict": rep.verdict}


def _exp_probe_gaussian(ctx: _Context) -> dict:
    rep = probes.gaussian_kernel_probe(ctx.X, ctx.config.probes.get("degree", 0), S=ctx.S)
    c = ctx.constant("probe_gaussian", "c", rep.fit["c"])
    return {**rep.to_dict(), "c_regression": c, "verdict": bool(rep.verdict and c["pass"])}


def _exp_boundedness(ctx: _Context) -> dict:
    out, ok = {}, True
    for sym in ("sign", "res:0:1", "res-:0:1", "heat"):
        for p in ctx.config.p_values:
            rep = probes.boundedness_probe(
                lambda g, s=sym: calculus.apply_function(s, ctx.S, g),
                lambda g, p=p: hardy.hardy_norm(g, p, grid=ctx.grid, S=ctx.S),
                lambda g, p=p: hardy.hardy_norm(g, p, grid=ctx.grid, S=ctx.S),
                ctx.battery,
                f"{sym} on H^{p:g}",
            )
            const = ctx.constant("boundedness", f"{sym}:p={p:g}", rep.fit["max"])
            out[f"{sym}:p={p:g}"] = const
            ok &= const["pass"]
    out["verdict"] = bool(ok)
    return out


EXPERIMENTS: dict[str, Callable[[_Context], dict]] = {
    "spectrum": _exp_spectrum,
    "exactness": _exp_exactness,
    "calderon": _exp_calderon,
    "hardy_norms": _exp_hardy_norms,
    "tent_atoms": _exp_tent_atoms,
    "molecules": _exp_molecules,
    "norm_equivalence": _exp_norm_equivalence,
    "riesz": _exp_riesz,
    "probe_offdiag": _exp_probe_offdiag,
    "probe_gaffney": _exp_probe_gaffney,
    "probe_composition": _exp_probe_composition,
    "probe_gaussian": _exp_probe_gaussian,
    "boundedness": _exp_boundedness,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def run_experiment(config: ExperimentConfig | dict) -> tuple[dict, int]:
    """Run every selected experiment and return ``(report, exit_code)``.

    The report is also written to ``config.output`` when set.  The exit code
    is 0 iff every verdict passes.

    Raises:
        HodgeHardyError: ``"nothing to run"`` for an empty experiment list.
        ExperimentError: wrapping any failure with its experiment and stage.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    if not config.experiments:
        raise HodgeHardyError("nothing to run")
    unknown = [e for e in config.experiments if e not in EXPERIMENTS]
    if unknown:
        raise HodgeHardyError(f"unknown experiments {unknown}")
    try:
        X = config.build_complex()
        S = spectral_decomposition(X)
    except HodgeHardyError as exc:
        raise ExperimentError("setup", "complex", exc) from exc
    ctx = _Context(config, X, S, RegressionStore(config.regression_store))
    report = {
        "complex": {"name": X.name, "fingerprint": X.fingerprint(), "graded_dim": X.graded_dim, "doubling": X.doubling.to_dict()},
        "config": {"experiments": config.experiments, "p_values": config.p_values, "psi": config.psi, "battery": config.battery},
        "results": {},
    }
    for name in config.experiments:
        try:
            report["results"][name] = EXPERIMENTS[name](ctx)
        except HodgeHardyError as exc:
            raise ExperimentError(name, "run", exc) from exc
    verdicts = {k: bool(v.get("verdict", False)) for k, v in report["results"].items()}
    report["verdicts"] = verdicts
    report["passed"] = all(verdicts.values())
    report = _jsonable(report)
    if config.output:
        Path(config.output).write_text(json.dumps(report, indent=2))
    return report, 0 if report["passed"] else 1

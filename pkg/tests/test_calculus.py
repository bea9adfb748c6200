import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgehardy import GradedForm, HodgeHardyError, SymbolError, generate_complex, spectral_decomposition
from hodgehardy.calculus import (
    apply_function,
    calderon_normalize,
    default_symbol,
    heat_semigroup,
    lanczos_apply_function,
    operator_matrix,
    parse_symbol,
    q_transform,
    riesz_transform,
    s_transform,
)
from hodgehardy.fields import SpaceTimeField, TimeGrid, field_from_dict, field_to_dict
from hodgehardy.hardy import default_grid
from hodgehardy.operators import assemble_laplacian


def range_D(S, rng, complex_=False):
    c = rng.standard_normal(S.eigenvalues.size)
    if complex_:
        c = c + 1j * rng.standard_normal(c.size)
    c[S.null_mask] = 0
    return S.synthesize(c)


def test_p2_spectrum(P2):
    S = spectral_decomposition(P2)
    assert np.allclose(np.sort(S.spectrum), [-math.sqrt(2), 0, math.sqrt(2)], atol=1e-12)
    assert S.reconstruction_error() < 1e-13 and S.orthonormality_error() < 1e-13
    assert S.nullity == 1


def test_p2_heat_oracle(P2):
    S = spectral_decomposition(P2)
    f = GradedForm.from_degrees(P2, {0: np.array([1.0, 0.0])})
    u = heat_semigroup(S, f, 1.0)
    e = math.exp(-2.0)
    assert np.allclose(u.coefficients, [(1 + e) / 2, (1 - e) / 2, 0.0], atol=1e-14)


def test_heat_semigroup_property(T8, rng):
    S = spectral_decomposition(T8)
    f = GradedForm(T8, rng.standard_normal(T8.graded_dim))
    a = heat_semigroup(S, heat_semigroup(S, f, 0.3), 0.5)
    b = heat_semigroup(S, f, 0.8)
    assert (a - b).norm() < 1e-12 * f.norm()
    assert (heat_semigroup(S, f, 0) - f).norm() < 1e-12 * f.norm()


def test_even_symbol_matches_laplacian(C16, rng):
    # exp(-D^2) must equal expm(-Delta) computed independently
    S = spectral_decomposition(C16)
    from scipy.linalg import expm

    L = assemble_laplacian(C16).dense()
    f = GradedForm(C16, rng.standard_normal(C16.graded_dim))
    ref = expm(-0.7 * L) @ f.coefficients
    got = apply_function("heat", S, f, math.sqrt(0.7))
    assert np.allclose(got.coefficients, ref, atol=1e-12)


def test_operator_matrix_frames(C4):
    S = spectral_decomposition(C4)
    A = operator_matrix("zexp", S, 0.5, symmetric=False)
    B = operator_matrix("zexp", S, 0.5, symmetric=True)
    w = np.sqrt(C4.mass)
    assert np.allclose(B, (w[:, None] * A) / w[None, :], atol=1e-13)
    assert np.allclose(B, B.T, atol=1e-13)


def test_lanczos_matches_dense(T8, rng):
    S = spectral_decomposition(T8)
    f = GradedForm(T8, rng.standard_normal(T8.graded_dim))
    for name, t in [("heat", 0.5), ("zexp", 1.0), ("rat:1:2", 2.0)]:
        a = lanczos_apply_function(name, T8, f, t)
        b = apply_function(name, S, f, t)
        assert (a - b).norm() <= 1e-8 * f.norm()


def test_lanczos_complex_and_zero(C4):
    S = spectral_decomposition(C4)
    f = GradedForm(C4, np.arange(8) * (1 + 1j))
    assert (lanczos_apply_function("heat", C4, f) - apply_function("heat", S, f)).norm() < 1e-10
    assert lanczos_apply_function("heat", C4, GradedForm.zeros(C4)).norm() == 0


@pytest.mark.parametrize("name,c", [("zexp", 0.25), ("rat:1:2", 1 / 6), ("res:3:5", None)])
def test_calderon_constants(name, c):
    pair = calderon_normalize(name)
    if c is None:
        # |z^3 (1+iz)^-5|^2 = x^6 (1+x^2)^-5; int x^5/(1+x^2)^5 dx = B(3,2)/2 = 1/24
        c = 1 / 24
    assert pair.c_plus == pytest.approx(c, rel=1e-9)
    assert pair.c_minus == pytest.approx(c, rel=1e-9)


def test_calderon_rejects_non_decaying():
    with pytest.raises(SymbolError):
        calderon_normalize("heat")
    with pytest.raises(SymbolError):
        calderon_normalize("one")


@pytest.mark.parametrize("name", ["zexp", "rat:1:3"])
def test_calderon_roundtrip(C16, rng, name):
    S = spectral_decomposition(C16)
    pair = calderon_normalize(name)
    grid = default_grid(S)
    f = range_D(S, rng)
    g = s_transform(pair.psi_tilde, S, q_transform(pair.psi, S, f, grid))
    assert (g - f).norm() <= 1e-3 * f.norm()


def test_q_transform_requires_vanishing(C4, rng):
    S = spectral_decomposition(C4)
    grid = default_grid(S)
    with pytest.raises(SymbolError):
        q_transform("heat", S, range_D(S, rng), grid)


def test_riesz_p2_oracle(P2):
    S = spectral_decomposition(P2)
    f = GradedForm.from_degrees(P2, {1: np.array([1.0])})
    out = riesz_transform(S, f)
    assert np.allclose(out.coefficients, [-1 / math.sqrt(2), 1 / math.sqrt(2), 0], atol=1e-14)


def test_riesz_isometry_involution(T8, rng):
    S = spectral_decomposition(T8)
    f = range_D(S, rng)
    r = riesz_transform(S, f)
    assert abs(r.norm() - f.norm()) <= 1e-10 * f.norm()
    assert (riesz_transform(S, r) - f).norm() <= 1e-10 * f.norm()


def test_riesz_hodge_pieces_inverse(T8, rng):
    S = spectral_decomposition(T8)
    # range(d): d of a random form
    u = GradedForm(T8, rng.standard_normal(T8.graded_dim))
    f = S.d(u)
    back = riesz_transform(S, riesz_transform(S, f, "dstar_side"), "d_side")
    assert (back - f).norm() <= 1e-9 * f.norm()


def test_riesz_drops_harmonic(C4):
    S = spectral_decomposition(C4)
    f = GradedForm.from_degrees(C4, {0: np.ones(4)})
    out, dropped = riesz_transform(S, f, return_dropped=True)
    assert out.norm() < 1e-12 and dropped == pytest.approx(2.0)
    with pytest.raises(HodgeHardyError):
        riesz_transform(S, f, "bogus")


def test_parse_symbol_roundtrip():
    for name in ["heat", "zexp", "zexp:3", "res:1:2", "res-:1:2", "rat:2:3", "sign", "one", "sign*zexp"]:
        assert parse_symbol(name).name == name
    with pytest.raises(SymbolError):
        parse_symbol("cosh")


def test_symbol_classes():
    s = parse_symbol("res:1:3")
    assert (s.sigma, s.tau) == (1.0, 2.0) and s.in_psi_class
    assert not parse_symbol("heat").in_psi_class
    assert parse_symbol("zexp").sup_norm == pytest.approx(math.exp(-0.5) / math.sqrt(2), rel=1e-5)
    assert parse_symbol("rat:1:2").decay_constant() <= 1.0 + 1e-12


def test_default_symbol():
    assert default_symbol(1, 1).name == "rat:1:2"
    assert default_symbol(4, 2).name == "rat:2:2"


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 20), st.floats(-3, 3))
def test_apply_function_linear(t, a):
    X = generate_complex("cycle", 6)
    S = spectral_decomposition(X)
    rng = np.random.default_rng(1)
    f = GradedForm(X, rng.standard_normal(X.graded_dim))
    g = GradedForm(X, rng.standard_normal(X.graded_dim))
    lhs = apply_function("rat:1:2", S, a * f + g, t)
    rhs = a * apply_function("rat:1:2", S, f, t) + apply_function("rat:1:2", S, g, t)
    assert (lhs - rhs).norm() <= 1e-10 * (abs(a) * f.norm() + g.norm())


def test_apply_function_errors(C4):
    S = spectral_decomposition(C4)
    with pytest.raises(HodgeHardyError):
        apply_function("heat", S, GradedForm.zeros(C4), 0.0)
    with pytest.raises(HodgeHardyError):
        heat_semigroup(S, GradedForm.zeros(C4), -1)


def test_time_grid():
    g = TimeGrid.log_spaced(0.01, 100, 40)
    assert g.size == 161
    assert g.weights.sum() == pytest.approx(math.log(1e4), rel=1e-12)
    assert TimeGrid.from_dict(g.to_dict()).same_as(g)
    with pytest.raises(HodgeHardyError):
        TimeGrid.log_spaced(1, 0.5)


def test_field_roundtrip(C4, rng):
    S = spectral_decomposition(C4)
    grid = TimeGrid.log_spaced(0.1, 10, 5)
    F = q_transform("zexp", S, range_D(S, rng, True), grid)
    G = field_from_dict(C4, field_to_dict(F))
    assert np.array_equal(F.values, G.values) and G.grid.same_as(grid)
    assert (F + G - G * 1.0).h_norm() == pytest.approx(F.h_norm())
    assert isinstance(F, SpaceTimeField)

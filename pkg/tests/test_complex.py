import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgehardy import ComplexError, generate_complex
from hodgehardy.complex import (
    Ball,
    ball,
    complex_from_dict,
    complex_to_dict,
    estimate_doubling,
    load_complex,
    save_complex,
    volume,
    whitney_decompose,
    whitney_overlap,
    whitney_overlap_bound,
)


def floyd_warshall(n, edges, lengths):
    d = [[0.0 if i == j else float("inf") for j in range(n)] for i in range(n)]
    for (u, v), w in zip(edges, lengths):
        d[u][v] = d[v][u] = min(d[u][v], w)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return np.array(d)


def p2_dict(mu_u=1.0):
    return {
        "dimension": 1,
        "vertices": [{"id": "u", "measure": mu_u}, {"id": "v", "measure": 1.0}],
        "cells": {"1": [{"verts": ["u", "v"], "weight": 1.0, "length": 1.0}]},
    }


def test_load_p2(tmp_path):
    path = tmp_path / "p2.json"
    path.write_text(json.dumps(p2_dict()))
    X = load_complex(path)
    assert X.distance[0, 1] == 1.0
    assert np.all(X.measure == 1.0)


def test_zero_measure_rejected():
    with pytest.raises(ComplexError, match="non-positive measure"):
        complex_from_dict(p2_dict(0.0))


def test_disconnected_rejected():
    data = {
        "dimension": 1,
        "vertices": [{"id": str(i), "measure": 1.0} for i in range(4)],
        "cells": {"1": [{"verts": ["0", "1"], "weight": 1, "length": 1}, {"verts": ["2", "3"], "weight": 1, "length": 1}]},
    }
    with pytest.raises(ComplexError, match="disconnected"):
        complex_from_dict(data)


def test_non_metric_distances_rejected():
    data = p2_dict()
    data["vertices"].append({"id": "w", "measure": 1.0})
    data["cells"]["1"].append({"verts": ["v", "w"], "weight": 1.0, "length": 1.0})
    data["distances"] = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    with pytest.raises(ComplexError, match="triangle"):
        complex_from_dict(data)


def test_schema_errors():
    with pytest.raises(ComplexError):
        complex_from_dict({"vertices": []})
    bad = p2_dict()
    bad["cells"]["1"][0]["verts"] = ["u", "nope"]
    with pytest.raises(ComplexError):
        complex_from_dict(bad)


def test_c4_distance(C4):
    assert C4.distance[0, 2] == 2.0


def test_roundtrip(tmp_path, T8):
    save_complex(T8, tmp_path / "t.json")
    Y = load_complex(tmp_path / "t.json")
    assert Y.fingerprint() == T8.fingerprint()
    assert complex_to_dict(Y) == complex_to_dict(T8)


def test_generator_path():
    X = generate_complex("path", 8)
    assert X.n_vertices == 8 and X.n_cells(1) == 7 and X.dimension == 1


def test_generator_c4_laplacian_spectrum(C4):
    d0 = np.zeros((4, 4))
    for i, (u, v) in enumerate(C4.cells[1]):
        d0[i, u], d0[i, v] = -1, 1
    assert np.allclose(np.linalg.eigvalsh(d0.T @ d0), [0, 2, 2, 4], atol=1e-12)


def test_dumbbell_connected_and_long():
    X = generate_complex("dumbbell", (5, 6))
    assert np.all(np.isfinite(X.distance))
    assert X.diameter >= 6


@pytest.mark.parametrize("kind,size", [("cycle", 2), ("torus_grid", (2, 5)), ("dumbbell", (1, 3)), ("klein", 3)])
def test_generator_errors(kind, size):
    with pytest.raises(ComplexError):
        generate_complex(kind, size)


def test_generator_deterministic():
    a = generate_complex("torus_grid", (5, 5), seed=3, random_weights=True)
    b = generate_complex("torus_grid", (5, 5), seed=3, random_weights=True)
    c = generate_complex("torus_grid", (5, 5), seed=4, random_weights=True)
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()


def test_metric_axioms_and_oracle(catalog_complex):
    X = catalog_complex
    oracle = floyd_warshall(X.n_vertices, X.cells[1].tolist(), X.edge_lengths.tolist())
    assert np.allclose(X.distance, oracle, rtol=0, atol=1e-12)
    d = X.distance
    assert np.all(np.diag(d) == 0) and np.array_equal(d, d.T)
    for k in range(X.n_vertices):
        assert np.all(d <= d[:, [k]] + d[[k], :] + 1e-12)


def test_random_weight_metric():
    X = generate_complex("sphere_triangulation", 2, seed=1, random_weights=True)
    oracle = floyd_warshall(X.n_vertices, X.cells[1].tolist(), X.edge_lengths.tolist())
    assert np.allclose(X.distance, oracle, atol=1e-12)


def test_balls_p2(P2):
    assert list(ball(P2, "v0", 0.5)) == [0] and volume(P2, 0, 0.5) == 1
    assert volume(P2, 0, 1.5) == 2
    with pytest.raises(ComplexError):
        ball(P2, 0, 0)
    with pytest.raises(ComplexError):
        ball(P2, "nope", 1)


def test_volume_c4(C4):
    assert volume(C4, 0, 1.5) == 3


def test_volume_monotone(catalog_complex):
    X = catalog_complex
    radii = np.linspace(0.1, X.diameter + 1, 40)
    for x in range(X.n_vertices):
        v = [volume(X, x, r) for r in radii]
        assert np.all(np.diff(v) >= 0) and v[0] >= X.measure[x]


def test_doubling_p2(P2):
    assert estimate_doubling(P2).kappa <= 1 + 1e-12


def test_doubling_single_vertex():
    X = generate_complex("path", 1)
    c = estimate_doubling(X)
    assert c.kappa == 0 and c.C_D == 1


def test_doubling_torus16():
    X = generate_complex("torus_grid", (16, 16))
    c = X.doubling
    assert 1.5 <= c.kappa <= 2.5
    assert c.beta == int(np.floor(c.kappa / 2)) + 1


def test_doubling_exhaustive_oracle(C16):
    c = C16.doubling
    radii = np.unique(np.concatenate([np.unique(C16.distance)[1:] * s for s in (0.5, 0.25, 0.125, 1.0, 1.01)]))
    worst_cd, worst_k = 1.0, 0.0
    for x in range(C16.n_vertices):
        for r in radii:
            v = volume(C16, x, r)
            worst_cd = max(worst_cd, volume(C16, x, 2 * r) / v)
            for th in (2, 4, 8):
                worst_k = max(worst_k, np.log(volume(C16, x, th * r) / v) / np.log(th))
    assert c.C_D == pytest.approx(worst_cd) and c.kappa == pytest.approx(worst_k)
    for x, r, th, ratio in c.samples:
        assert ratio <= c.C_D * th ** c.kappa + 1e-12


def test_doubling_reproducible(T8):
    a = estimate_doubling(T8)
    b = estimate_doubling(T8)
    assert a.to_dict() == b.to_dict()


def test_doubling_empty_grid(P2):
    with pytest.raises(ComplexError, match="empty radius grid"):
        estimate_doubling(P2, radius_grid=[])


def test_beta_even_kappa():
    from hodgehardy.complex import _beta_from_kappa

    assert _beta_from_kappa(2.0) == 2
    assert _beta_from_kappa(2.32) == 2
    assert _beta_from_kappa(1.58) == 1


def test_whitney_singleton():
    X = generate_complex("path", 8)
    balls = whitney_decompose(X, ["v3"])
    assert len(balls) == 1 and balls[0].center == 3 and balls[0].radius <= 0.5


def test_whitney_errors(P16):
    with pytest.raises(ComplexError):
        whitney_decompose(P16, [])
    with pytest.raises(ComplexError):
        whitney_decompose(P16, np.ones(16, bool))


def check_whitney(X, mask):
    balls = whitney_decompose(X, mask)
    covered = np.zeros(X.n_vertices, bool)
    for b in balls:
        covered |= X.ball_mask(b)
        assert np.all(mask[X.ball_mask(b.dilate(2))])
        assert np.any(~mask[X.ball_mask(b.dilate(4))])
    assert np.array_equal(covered, mask)
    assert whitney_overlap(X, balls).max() <= whitney_overlap_bound(X.doubling)


def test_whitney_block_p8():
    X = generate_complex("path", 8)
    mask = np.isin(np.arange(8), [2, 3, 4])
    check_whitney(X, mask)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.booleans(), min_size=36, max_size=36))
def test_whitney_random_sets(bits):
    X = generate_complex("torus_grid", (6, 6))
    mask = np.array(bits)
    if mask.all() or not mask.any():
        return
    check_whitney(X, mask)


def test_ball_dilate():
    assert Ball(3, 1.5).dilate(4) == Ball(3, 6.0)


def test_cells_inside(T8):
    mask = T8.ball_mask(Ball(0, 1.5))
    inside = T8.cells_inside(mask)
    for k, cells in enumerate(T8.cells):
        sl = inside[T8.offsets[k] : T8.offsets[k + 1]]
        for c, flag in zip(cells, sl):
            assert flag == all(mask[v] for v in c)


def test_spread_preserves_mass(catalog_complex, rng):
    X = catalog_complex
    m = rng.random(X.graded_dim)
    assert np.sum(X.spread @ m) == pytest.approx(m.sum())

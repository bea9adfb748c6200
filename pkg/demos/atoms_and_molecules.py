"""Tent-space atoms, molecules and the three equivalent H^1 quantities.

Run with ``python3 demos/atoms_and_molecules.py``.
"""

from hodgehardy import generate_complex, spectral_decomposition
from hodgehardy.calculus import q_transform
from hodgehardy.hardy import default_grid, hardy_norm, maximal_norm, molecular_decompose
from hodgehardy.harness import generate_battery
from hodgehardy.tent import atomic_decompose

X = generate_complex("cycle", 16)
S = spectral_decomposition(X)
grid = default_grid(S)
f = generate_battery(S, 1, seed=3)[0]

F = q_transform("zexp", S, f, grid)
dec = atomic_decompose(F)
print(f"tent decomposition: {len(dec.atoms)} atoms, all certified: {dec.all_valid}")
print(f"  sum |lambda| = {dec.sum_abs:.3f}, tent norm = {dec.tent_norm_1:.3f}, ratio {dec.ratio:.2f}")
print(f"  reconstruction exact: {(dec.reconstruct() - F).h_norm() == 0}")

md = molecular_decompose(f, S=S)
print(f"molecules of order {md.order}: {len(md.molecules)}, roundtrip residual {md.residual:.1e}")
for lam, m in zip(md.lambdas, md.molecules):
    c = m.certificate
    print(f"  ball ({X.vertex_ids[c.ball.center]}, r={c.ball.radius:.3g})  lambda {lam:.3g}  slack {c.slack:.3f}  "
          f"L1 {c.l1_norm:.3f} <= {c.l1_bound:.3f}")

h = hardy_norm(f, 1, S=S)
print(f"H1 norm {h:.4f}  molecular {md.certified_sum:.4f}  maximal {maximal_norm(f, S=S):.4f}")

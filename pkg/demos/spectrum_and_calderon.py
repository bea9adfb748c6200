"""Spectrum of the Hodge-Dirac operator and the Calderon reproducing formula.

Run with ``python3 demos/spectrum_and_calderon.py``.
"""

import numpy as np

from hodgehardy import generate_complex, spectral_decomposition
from hodgehardy.calculus import calderon_normalize, q_transform, s_transform
from hodgehardy.hardy import default_grid
from hodgehardy.harness import generate_battery

X = generate_complex("torus_grid", (8, 8))
print(f"{X.name}: {X.graded_dim} cells, doubling C_D={X.doubling.C_D:g}, kappa={X.doubling.kappa:.3f}")

S = spectral_decomposition(X)
print(f"spectrum in [{S.spectrum.min():.3f}, {S.spectrum.max():.3f}], {S.nullity} harmonic forms (b0 + b1 + b2 = 4)")
print(f"eigendecomposition reconstruction error {S.reconstruction_error():.1e}")

# the spectrum of D is symmetric: d + d* anticommutes with the degree parity
lam = np.sort(S.spectrum[~S.null_mask])
print(f"symmetry defect {np.abs(lam + lam[::-1]).max():.1e}")

grid = default_grid(S)
f = generate_battery(S, 1, seed=0)[0]
for name in ("zexp", "rat:1:3"):
    pair = calderon_normalize(name)
    F = q_transform(pair.psi, S, f, grid)
    g = s_transform(pair.psi_tilde, S, F)
    print(f"{name:8s} c = {pair.c_plus:.6f}  relative reconstruction error {(g - f).norm():.1e}  ({grid.size} times)")

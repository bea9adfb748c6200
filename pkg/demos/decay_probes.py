"""Off-diagonal decay, Gaffney estimates and Gaussian heat-kernel envelopes.

Run with ``python3 demos/decay_probes.py``.  The Gaffney fit on short paths
sits in the discrete Poisson regime; longer paths approach the Gaussian
constant 1/4.
"""

from hodgehardy import generate_complex, spectral_decomposition
from hodgehardy.probes import composition_decay_probe, gaffney_probe, gaussian_kernel_probe, offdiag_probe

P16 = spectral_decomposition(generate_complex("path", 16))
rep = offdiag_probe(P16, "res:1:2", ["v0"], ["v15"], requested_order=1)
print(f"resolvent on path16: slope {rep.fit['slope']:.2f} over {rep.fit['n']} samples, verdict {rep.verdict}")

for n in (16, 32, 64):
    S = spectral_decomposition(generate_complex("path", n))
    g = gaffney_probe(S, ["v0"], [f"v{n - 1}"])
    print(f"Gaffney heat on path{n}: alpha {g.fit['alpha']:.3f}  residual {g.fit['residual']:.3f}")

c = composition_decay_probe("zexp", "zexp", "one")
print(f"composition zexp|zexp: a {c.fit['a']:.3f}  b {c.fit['b']:.3f}")

for X in (generate_complex("torus_grid", (8, 8)), generate_complex("dumbbell", (4, 6))):
    r = gaussian_kernel_probe(X)
    print(f"Gaussian envelope on {X.name}: c {r.fit['c']:.3f}  C {r.fit['C']:.3g}  verdict {r.verdict}")

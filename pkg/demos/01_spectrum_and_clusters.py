#!/usr/bin/env python3
"""Eigenvalues of the linearized Benjamin generator and their clusters.

The dispersion relation lambda_k = k^3 + 2*mu*k - alpha*k*|k| is an odd,
cubic-like function of the mode index.  For most alpha every mode carries a
distinct eigenvalue, but resonant values group up to three indices onto one
eigenvalue: alpha=1 ties modes {-1, 0, 1} to lambda=0, and alpha=7/3 ties
{1, 2} (and, by antisymmetry, {-2, -1}).  The minimum spacing gamma between
distinct eigenvalues controls how hard the moment problem is over a short
time window.
"""

from fractions import Fraction

import benctrl.spectrum as spectrum


def describe(alpha, n=8, mu=0):
    spec = spectrum.analyze(n, alpha, mu)
    grouped = [g for g in spec.clusters if len(g) > 1]
    print(f"alpha = {alpha!s:>6}, mu = {mu}: "
          f"{len(spec.clusters)} distinct eigenvalues, "
          f"clusters {grouped if grouped else 'none'}, "
          f"gamma = {spec.gap_gamma:.6g}, window bound = {spec.window_bound}")


print(__doc__)

for alpha in (Fraction(1, 10), Fraction(1), Fraction(7, 3), Fraction(5)):
    describe(alpha)

print()
print("The mu-shifted equation keeps antisymmetry but moves the resonances:")
describe(Fraction(1), mu=Fraction(3, 10))

print()
print("Scanning alpha in [0.1, 10] (step 0.05) at n=128: the largest cluster")
print("ever seen has size:")
worst, worst_alpha = 0, None
alpha = Fraction(2, 20)
while alpha <= 10:
    groups, _ = spectrum.clusters(128, alpha)
    size = max(len(g) for g in groups)
    if size > worst:
        worst, worst_alpha = size, alpha
    alpha += Fraction(1, 20)
print(f"  max cluster size {worst} (first reached at alpha = {worst_alpha})")

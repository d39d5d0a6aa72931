"""Growth of the expected number of groups E[K_n].

For a fixed Beta(1, theta) marginal, the growth rate interpolates between
the Dirichlet process (slowest, harmonic-like) and the Geometric process
(fastest) as the tie probability rises from 0 to 1.  The Dirichlet curve is
also compared against its exact harmonic expression as a sanity check.

Writes demo_output/expected_kn.csv.
"""

import os

import numpy as np

from esbmix import IidBeta, SharedBeta, dsb, expected_kn_curve

N_MAX = 200
REPLICATES = 4_000
THETA = 1.0
rng = np.random.default_rng(2)

curves = {}
for label, spec in (
    ("geometric", SharedBeta(1.0, THETA)),        # tie probability 1
    ("dsb_rho_0.75", dsb(1.0 / 3.0, THETA)),
    ("dsb_rho_0.5", dsb(1.0, THETA)),
    ("dsb_rho_0.25", dsb(3.0, THETA)),
    ("dirichlet", IidBeta(1.0, THETA)),           # tie probability 0
):
    curves[label] = expected_kn_curve(spec, N_MAX, REPLICATES, rng)
    print(f"{label:14s} E[K_200] ~ {curves[label][-1]:.2f}")

harmonic = np.cumsum([THETA / (THETA + i) for i in range(N_MAX)])
print(f"dirichlet exact harmonic value at n=200: {harmonic[-1]:.2f}")

os.makedirs("demo_output", exist_ok=True)
with open("demo_output/expected_kn.csv", "w", newline="") as f:
    labels = list(curves)
    f.write("n," + ",".join(labels) + ",dirichlet_exact\n")
    for n in range(1, N_MAX + 1):
        row = [repr(float(curves[l][n - 1])) for l in labels]
        f.write(f"{n}," + ",".join(row) + f",{harmonic[n - 1]!r}\n")
print("wrote demo_output/expected_kn.csv")

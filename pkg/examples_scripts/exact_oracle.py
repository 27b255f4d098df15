"""Compare a Swendsen-Wang chain with the exact FK law on a 2x2 wired square.

Run: python3 examples_scripts/exact_oracle.py
"""

import numpy as np

from isingloops.fk_ising import FKParams, enumerate_exact, fk_chain, make_rng
from isingloops.lattice import build_rectangle
from isingloops.stats import binomial_3sigma_ok

domain = build_rectangle(2, 2)
table = enumerate_exact(domain, "fk", "wired", FKParams())
n = 100_000
samples = fk_chain(domain, "wired", FKParams(), n, make_rng(5), burnin=100, thin=5)
counts = np.bincount(table.encode(samples), minlength=len(table.probs))

print("state  exact     empirical  within 3 sigma")
for code, p in zip(table.codes, table.probs):
    ok = binomial_3sigma_ok(int(counts[code]), n, float(p))
    print(f"{code:5d}  {p:.5f}  {counts[code] / n:.5f}    {ok}")

"""Sample a critical plus-boundary Ising configuration and draw its loops.

Run: python3 examples_scripts/ising_loops.py [out.svg]
"""

import sys

from isingloops.fk_ising import IsingParams, make_rng, sample_ising
from isingloops.lattice import build_rectangle
from isingloops.loops import classify_ising_levels, extract_ising_loops, render_svg
from isingloops.stats import loop_size_spectrum

domain = build_rectangle(64, 64, mesh=1 / 64)
config = sample_ising(domain, "plus", IsingParams(), steps=100, rng=make_rng(1))

for chirality in ("leftmost", "rightmost"):
    loops = classify_ising_levels(extract_ising_loops(config, chirality), config)
    spectrum = loop_size_spectrum(loops, domain.mesh)
    print(f"{chirality}: {len(loops)} loops, per level {spectrum.level_counts}")
    print("  loops with diameter >= threshold:", dict(zip((round(t, 4) for t in spectrum.thresholds), spectrum.counts_at_least)))

left = classify_ising_levels(extract_ising_loops(config, "leftmost"), config)
level1 = [l for l in left if l.level == 1]
out = sys.argv[1] if len(sys.argv) > 1 else "ising_loops.svg"
with open(out, "w") as fh:
    fh.write(render_svg(domain, level1, spins=config.spins))
print("wrote", out)

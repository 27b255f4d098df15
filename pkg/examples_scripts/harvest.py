"""Recursive harvest of the outermost Ising loops, checked against direct extraction.

Run: python3 examples_scripts/harvest.py
"""

from isingloops.exploration import direct_level1_leftmost, harvest_outermost
from isingloops.fk_ising import FKParams, IsingParams, make_rng, sample_ising
from isingloops.lattice import build_rectangle

domain = build_rectangle(64, 64)
config = sample_ising(domain, "plus", IsingParams(), steps=100, rng=make_rng(2))
eps = 4.0

trace = harvest_outermost(config, FKParams(), eps, make_rng(3))
for it in trace.iterations:
    print(f"generation {it.index}: {len(it.regions)} regions, {len(it.harvested)} loops harvested, {len(it.residual)} residual regions")

harvested = {l.edge_set for l in trace.harvested() if l.diameter() >= eps}
direct = {l.edge_set for l in direct_level1_leftmost(config) if l.diameter() >= eps}
print(f"{len(direct)} level-1 loops of diameter >= {eps}; harvest finds the same set: {harvested == direct}")

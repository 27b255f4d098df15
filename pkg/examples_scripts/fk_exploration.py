"""FK exploration path, its special points, a pinching family and the full level-1 exploration.

Run: python3 examples_scripts/fk_exploration.py
"""

from isingloops.exploration import (
    direct_level1_fk,
    explore_all_fk_level1,
    farthest_boundary_pair,
    fk_exploration_path,
    pinching_family,
    special_points,
)
from isingloops.fk_ising import FKParams, make_rng, sample_fk
from isingloops.lattice import build_rectangle

domain = build_rectangle(32, 32)
config = sample_fk(domain, "wired", FKParams(), steps=100, rng=make_rng(4))

a, b = farthest_boundary_pair(domain)
path = fk_exploration_path(config, a, b)
sp = special_points(path, config)
print(f"path from boundary position {a} to {b}: {len(path.grid_points) - 1} steps")
print(f"{len(sp.boundary_points)} boundary points, {len(sp.double_points)} clockwise double points")

eps = 8.0
fam = pinching_family(path, sp, eps)
print(f"pinching family at epsilon {eps}: {len(fam.times)} special times")

loops = explore_all_fk_level1(config, eps)
big = {l.edge_set for l in loops if l.diameter() >= eps}
direct = {l.edge_set for l in direct_level1_fk(config) if l.diameter() >= eps}
print(f"level-1 FK loops of diameter >= {eps}: {len(direct)}; exploration finds them all: {big == direct}")

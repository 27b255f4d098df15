"""Collection distance between leftmost and rightmost loops, plus two estimators.

Run: python3 examples_scripts/metric_and_estimators.py
"""

from isingloops.fk_ising import IsingParams, make_rng, sample_ising
from isingloops.lattice import build_rectangle
from isingloops.loops import classify_ising_levels, extract_ising_loops
from isingloops.metric import collection_distance
from isingloops.stats import box_counting_dimension, boundary_gap_curve, leftmost_rightmost_closeness

domain = build_rectangle(64, 64, mesh=1 / 64)
config = sample_ising(domain, "plus", IsingParams(), steps=100, rng=make_rng(6))


def level1(chirality):
    return [l for l in classify_ising_levels(extract_ising_loops(config, chirality), config) if l.level == 1]


left, right = level1("leftmost"), level1("rightmost")
res = collection_distance(left, right)
print(f"d(leftmost, rightmost) = {res.value:.4f} with {len(res.matching)} matched pairs")

close = leftmost_rightmost_closeness(config, epsilon=0.25)
print(f"largest symmetric-difference piece among macroscopic pairs: {close.max_diameter:.4f}")

big = max(left, key=lambda l: l.diameter())
print(f"box-counting slope of the largest level-1 loop: {box_counting_dimension(big).slope:.3f}")

h = domain.mesh
for rep in boundary_gap_curve(domain, [8 * h, 4 * h, 2 * h], 0.25 * domain.diameter(), samples=50, rng=7, steps=50):
    print(f"P(E(eta={rep.parameters['eta']:.4f})) ~ {rep.estimate:.3f} +- {rep.stderr:.3f}")

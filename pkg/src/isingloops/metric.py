"""Distances between oriented loops and between finite loop collections.

A loop is compared with another by the supremum distance minimised over
orientation-preserving reparametrizations (a cyclic Fréchet distance). Two
collections are compared by the best partial matching: matched pairs cost
their loop distance, unmatched loops cost their diameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
import shapely
from scipy.optimize import linear_sum_assignment

from .lattice import _point_diameter
from .loops import Loop

__all__ = [
    "MatchingResult",
    "as_polyline",
    "refine",
    "loop_distance",
    "loop_diameter",
    "distance_matrix",
    "is_feasible",
    "collection_distance",
    "is_simple",
    "are_disjoint",
    "are_non_crossing",
]


def as_polyline(loop) -> np.ndarray:
    """Points of a loop (``Loop`` or array-like of shape ``(n, 2)``), closing point dropped."""
    pts = loop.points if isinstance(loop, Loop) else np.asarray(loop, dtype=float).reshape(-1, 2)
    pts = np.asarray(pts, dtype=float)
    if len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    if len(pts) == 0:
        raise ValueError("a loop needs at least one point")
    return pts


def refine(points: np.ndarray, max_segment: float) -> np.ndarray:
    """Subdivide every segment of the closed polyline to length at most ``max_segment``."""
    if not max_segment > 0:
        raise ValueError("max_segment must be positive")
    P = np.asarray(points, dtype=float)
    if len(P) < 2:
        return P.copy()
    Q = np.roll(P, -1, axis=0)
    L = np.hypot(*(Q - P).T)
    k = np.maximum(1, np.ceil(L / max_segment - 1e-12).astype(np.int64))
    out = [P[i] + (Q[i] - P[i]) * (np.arange(k[i])[:, None] / k[i]) for i in range(len(P))]
    return np.concatenate(out)


@numba.njit(cache=True)
def _frechet_anchor(A, B, k, bound):
    """Discrete Fréchet distance of A closed at A[0] and B closed at B[k]."""
    m, n = A.shape[0], B.shape[0]
    prev = np.empty(n + 1)
    cur = np.empty(n + 1)
    for i in range(m + 1):
        a = A[i % m]
        for jj in range(n + 1):
            b = B[(k + jj) % n]
            d = np.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)
            if i == 0 and jj == 0:
                best = d
            elif i == 0:
                best = max(cur[jj - 1], d)
            elif jj == 0:
                best = max(prev[0], d)
            else:
                best = max(min(prev[jj], prev[jj - 1], cur[jj - 1]), d)
            cur[jj] = best
        # early exit: every coupling passes through row i
        row_min = cur[0]
        for jj in range(1, n + 1):
            if cur[jj] < row_min:
                row_min = cur[jj]
        if row_min >= bound:
            return bound
        for jj in range(n + 1):
            prev[jj] = cur[jj]
    return prev[n]


@numba.njit(cache=True)
def _cyclic_frechet(A, B):
    n = B.shape[0]
    best = np.inf
    a0 = A[0]
    for k in range(n):
        b = B[k]
        if np.sqrt((a0[0] - b[0]) ** 2 + (a0[1] - b[1]) ** 2) >= best:
            continue
        d = _frechet_anchor(A, B, k, best)
        if d < best:
            best = d
    return best


def loop_distance(a, b, max_segment: float | None = None) -> float:
    """Cyclic discrete Fréchet distance between two oriented loops.

    Both loops are traversed in their own direction; the distance is
    minimised over the starting alignment. With ``max_segment`` the loops are
    first refined so that the result is within ``max_segment / 2`` of the
    continuous distance. A point loop is at distance ``max |p - b(t)|`` from
    ``b``, and two point loops are at their Euclidean distance.
    """
    A, B = as_polyline(a), as_polyline(b)
    if max_segment is not None:
        A, B = refine(A, max_segment), refine(B, max_segment)
    if len(B) > len(A):
        A, B = B, A
    # shifting the shorter loop is cheaper; the distance is symmetric
    return float(_cyclic_frechet(np.ascontiguousarray(A), np.ascontiguousarray(B)))


def loop_diameter(a) -> float:
    """Euclidean diameter of a loop's points."""
    return _point_diameter(as_polyline(a))


def distance_matrix(A, B, max_segment: float | None = None) -> np.ndarray:
    D = np.empty((len(A), len(B)))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            D[i, j] = loop_distance(a, b, max_segment)
    return D


@dataclass
class MatchingResult:
    """Optimal partial matching between two collections.

    ``matching`` holds index pairs ``(i, j)``; ``unmatched`` is the set of
    ``("a", i)`` / ``("b", j)`` entries left without partner.
    """

    value: float
    matching: list = field(default_factory=list)
    unmatched: set = field(default_factory=set)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "matching": [list(p) for p in self.matching],
            "unmatched": sorted([list(u) for u in self.unmatched]),
        }


def _witness(D, da, db, r):
    """Matching covering every loop of diameter > r with partners at distance <= r, or None."""
    big_a, big_b = da > r, db > r
    if not big_a.any() and not big_b.any():
        return []
    allowed = D <= r
    if D.size == 0:
        return None
    weight = np.where(allowed, big_a[:, None].astype(float) + big_b[None, :], 0.0)
    rows, cols = linear_sum_assignment(weight, maximize=True)
    if weight[rows, cols].sum() < big_a.sum() + big_b.sum():
        return None
    return sorted((int(i), int(j)) for i, j in zip(rows, cols) if weight[i, j] > 0)


def is_feasible(D: np.ndarray, da: np.ndarray, db: np.ndarray, r: float) -> bool:
    """Whether threshold ``r`` admits a partial matching of cost at most ``r``."""
    return _witness(np.asarray(D, dtype=float).reshape(len(da), len(db)), np.asarray(da), np.asarray(db), r) is not None


def collection_distance(A, B, max_segment: float | None = None) -> MatchingResult:
    """Partial-matching distance between two finite loop collections.

    The value is the least ``r`` such that every loop of diameter larger
    than ``r`` is matched to a distinct partner at loop distance at most
    ``r``. It is found by binary search over the candidate values (pairwise
    distances and diameters) with a maximum-weight bipartite matching as the
    feasibility test.
    """
    A, B = list(A), list(B)
    da = np.array([loop_diameter(x) for x in A])
    db = np.array([loop_diameter(x) for x in B])
    D = distance_matrix(A, B, max_segment).reshape(len(A), len(B))
    cand = np.unique(np.concatenate([[0.0], D.ravel(), da, db]))
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _witness(D, da, db, cand[mid]) is not None:
            hi = mid
        else:
            lo = mid + 1
    r = float(cand[lo])
    match = _witness(D, da, db, r)
    ma = {i for i, _ in match}
    mb = {j for _, j in match}
    unmatched = {("a", i) for i in range(len(A)) if i not in ma} | {("b", j) for j in range(len(B)) if j not in mb}
    value = max(
        [float(D[i, j]) for i, j in match]
        + [float(da[i]) for k, i in unmatched if k == "a"]
        + [float(db[j]) for k, j in unmatched if k == "b"]
        + [0.0]
    )
    return MatchingResult(value, match, unmatched)


# -- predicates on finite collections ---------------------------------------------------
def _ring(loop):
    P = as_polyline(loop)
    return shapely.LinearRing(P) if len(P) >= 3 else None


def is_simple(loop) -> bool:
    """No self-intersection (point and two-point loops count as simple)."""
    r = _ring(loop)
    return True if r is None else bool(r.is_simple)


def are_disjoint(loops) -> bool:
    """No two loops share a point."""
    geoms = [_ring(l) or shapely.MultiPoint(as_polyline(l)) for l in loops]
    for i in range(len(geoms)):
        for j in range(i + 1, len(geoms)):
            if geoms[i].intersects(geoms[j]):
                return False
    return True


def are_non_crossing(loops) -> bool:
    """No two loops cross: they may touch, but the regions they bound are nested or disjoint."""
    polys = []
    for l in loops:
        P = as_polyline(l)
        polys.append(shapely.Polygon(P).buffer(0) if len(P) >= 3 else None)
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            a, b = polys[i], polys[j]
            if a is None or b is None or a.is_empty or b.is_empty:
                continue
            inter = a.intersection(b).area
            if inter > 1e-12 and inter < min(a.area, b.area) - 1e-12:
                return False
    return True

"""Recursive explorations: outermost Ising loops and level-one FK loops.

``harvest_outermost`` keeps the spins fixed and repeatedly resamples the FK
edges inside the unexplored regions. Every leftmost Ising loop touching the
boundary cluster of the resampled FK configuration is harvested; what is
left outside the harvested loops becomes the next, smaller, set of regions
with ``+`` boundary conditions.

``explore_all_fk_level1`` runs an exploration path between two far-apart
boundary points of a wired region, reads off the FK loops it runs along and
recurses into the large regions it leaves unexplored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from . import _bimedial as bm
from .fk_ising import FKConfiguration, FKParams, SpinConfiguration, _label_clusters, make_rng
from .lattice import DiscreteDomain, _point_diameter
from .loops import (
    Loop,
    LoopCollection,
    _depths,
    _ising_parents,
    _innermost,
    classify_ising_levels,
    extract_fk_loops,
    extract_ising_loops,
    spin_grid,
)

__all__ = [
    "Iteration",
    "ExplorationTrace",
    "ExplorationPath",
    "SpecialPointSet",
    "PinchingFamily",
    "harvest_outermost",
    "direct_level1_leftmost",
    "fk_exploration_path",
    "dobrushin_interface",
    "special_points",
    "pinching_family",
    "explore_all_fk_level1",
    "direct_level1_fk",
    "farthest_boundary_pair",
]

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return make_rng(int(rng)), int(rng)


# =============================================================================
# Ising harvest
# =============================================================================
@dataclass
class Iteration:
    """One generation of the harvest.

    ``regions`` are vertex-index arrays of the explored regions (their
    ``+`` boundary is implicit), ``open_edges`` the resampled FK state on the
    whole domain (edges away from the regions are set open), ``cut_outs``
    the non-degenerate cut-out domains, ``harvested`` the loops found and
    ``residual`` the regions handed to the next generation.
    """

    index: int
    regions: list
    open_edges: np.ndarray
    cut_outs: list
    harvested: list
    residual: list


@dataclass
class ExplorationTrace:
    iterations: list
    epsilon: float
    seed: int | None
    domain: DiscreteDomain = field(repr=False, default=None)

    def harvested(self) -> LoopCollection:
        out = [l for it in self.iterations for l in it.harvested]
        return LoopCollection(tuple(out), {"source": "harvest_outermost", "epsilon": self.epsilon, "seed": self.seed})

    def fk_loops(self, t: int) -> LoopCollection:
        """FK loops of the configuration resampled at generation ``t`` (0-based)."""
        return extract_fk_loops(FKConfiguration(self.domain, self.iterations[t].open_edges, "wired"))

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)


def _vertex_diameter(domain: DiscreteDomain, idx) -> float:
    pts = domain.vertex_points[np.asarray(idx, dtype=np.int64)]
    return _point_diameter(pts) if len(pts) > 1 else 0.0


def _region_with_boundary(mask: np.ndarray) -> np.ndarray:
    """Region mask grown by its strong neighbours."""
    return ndimage.binary_dilation(mask, structure=_FOUR)


def _fast_diameter(pts: np.ndarray, threshold: float) -> float:
    """Exact diameter, short-circuiting with the bounding box when it is clearly small."""
    if len(pts) < 2:
        return 0.0
    span = pts.max(0) - pts.min(0)
    if float(np.hypot(*span)) < threshold:
        return float(np.hypot(*span))
    return _point_diameter(pts)


def _boundary_cluster(domain: DiscreteDomain, open_edges: np.ndarray) -> np.ndarray:
    group = np.where(domain.boundary_vertex, 0, -1).astype(np.int64)
    label, _ = _label_clusters(domain.n_vertices, domain.edges[:, 0].copy(), domain.edges[:, 1].copy(), open_edges, group)
    b = label[np.argmax(domain.boundary_vertex)]
    return label == b


def _cut_out_labels(domain: DiscreteDomain, open_edges: np.ndarray, in_k: np.ndarray) -> np.ndarray:
    """Label of the cut-out domain of each vertex (``-1`` for vertices of the boundary cluster).

    The cut-out domains are the bounded components of the plane minus the
    boundary cluster (its vertices and open edges), found on a raster of
    doubled resolution.
    """
    i0, j0 = domain.origin
    nx, ny = domain.vertex_mask.shape
    free = np.zeros((2 * nx - 1, 2 * ny - 1), dtype=bool)
    # faces are always free
    fm = domain.face_mask
    free[1::2, 1::2] = fm
    v = domain.vertices
    free[2 * (v[:, 0] - i0), 2 * (v[:, 1] - j0)] = ~in_k
    ec = domain.edge_coords
    e = domain.edges
    blocked_edge = open_edges & in_k[e[:, 0]] & in_k[e[:, 1]]
    ex = 2 * (ec[:, 0] - i0) + (ec[:, 2] == 0)
    ey = 2 * (ec[:, 1] - j0) + (ec[:, 2] == 1)
    free[ex, ey] = ~blocked_edge
    lab, _ = ndimage.label(free, structure=_FOUR)
    out = lab[2 * (v[:, 0] - i0), 2 * (v[:, 1] - j0)] - 1
    out[in_k] = -1
    return out


def _loop_sides(domain, spins, loops):
    """Concatenated ``+`` / ``-`` side vertices of each loop with offsets."""
    plus, minus, offs = [], [], [0]
    e = domain.edges
    for l in loops:
        uv = e[np.asarray(l.edges, dtype=np.int64)]
        pos = spins[uv[:, 0]] > 0
        plus.append(np.where(pos, uv[:, 0], uv[:, 1]))
        minus.append(np.where(pos, uv[:, 1], uv[:, 0]))
        offs.append(offs[-1] + len(uv))
    if not loops:
        z = np.zeros(0, dtype=np.int64)
        return z, z, np.zeros(1, dtype=np.int64)
    return np.concatenate(plus), np.concatenate(minus), np.array(offs, dtype=np.int64)


def _vertex_top_loop(domain, loops, parent, spins):
    """Outermost loop containing each vertex (``-1`` if none)."""
    nx, ny = domain.vertex_mask.shape
    owner = np.full((nx - 1, ny), -1, dtype=np.int64)
    ec = domain.edge_coords
    i0, j0 = domain.origin
    for k, l in enumerate(loops):
        idx = np.asarray(l.edges, dtype=np.int64)
        h = idx[ec[idx, 2] == 0]
        owner[ec[h, 0] - i0, ec[h, 1] - j0] = k
    inner, _ = _innermost(owner, 0, 0)
    top = np.arange(len(loops))
    for k in range(len(loops)):
        j = k
        while parent[j] >= 0:
            j = parent[j]
        top[k] = j
    v = domain.vertices
    inn = inner[v[:, 0] - i0, v[:, 1] - j0]
    return np.where(inn >= 0, top[np.maximum(inn, 0)], -1)


def harvest_outermost(
    config: SpinConfiguration,
    params: FKParams,
    epsilon: float,
    rng,
    max_iterations: int = 100000,
) -> ExplorationTrace:
    """Recursive two-stage exploration of the outermost leftmost Ising loops.

    Parameters
    ----------
    config : SpinConfiguration
        Spins with ``+`` boundary conditions, fixed during the whole run.
    params : FKParams
        FK parameter used for resampling (``p_sd`` at criticality).
    epsilon : float
        Regions whose closure has diameter below ``epsilon`` are not explored.
    rng : numpy Generator or int seed

    Returns
    -------
    ExplorationTrace
        Harvested loops carry their generation as ``harvest_time`` (1-based).
        Every leftmost level-1 loop of diameter at least ``epsilon`` is
        harvested; smaller level-1 loops may be harvested too.
    """
    if config.bc != "plus":
        raise ValueError("harvest_outermost needs plus boundary conditions")
    d = config.domain
    if not epsilon > d.mesh:
        raise ValueError("epsilon must exceed the mesh size")
    rng, seed = _as_rng(rng)
    s = config.spins
    e = d.edges
    agree = s[e[:, 0]] == s[e[:, 1]]
    loops = list(extract_ising_loops(config, "leftmost").loops)
    parent = _ising_parents(loops, config) if loops else np.zeros(0, dtype=np.int64)
    plus_v, minus_v, offs = _loop_sides(d, s, loops)
    first_minus = minus_v[offs[:-1]] if loops else np.zeros(0, dtype=np.int64)
    top = _vertex_top_loop(d, loops, parent, s) if loops else np.full(d.n_vertices, -1)
    harvested_mask = np.zeros(len(loops), dtype=bool)

    i0, j0 = d.origin
    vx, vy = d.vertices[:, 0] - i0, d.vertices[:, 1] - j0
    grid_shape = d.vertex_mask.shape
    pts = d.vertex_points

    def keep(region) -> bool:
        if not (s[region] < 0).any():
            return False
        m = np.zeros(grid_shape, dtype=bool)
        m[vx[region], vy[region]] = True
        grown = _region_with_boundary(m)
        ix, iy = np.nonzero(grown)
        P = d.embed(np.column_stack([ix + i0, iy + j0]))
        return _fast_diameter(P, epsilon) >= epsilon

    regions = [np.nonzero(~d.boundary_vertex)[0]]
    iterations = []
    t = 0
    while True:
        regions = [r for r in regions if len(r) and keep(r)]
        if not regions:
            break
        t += 1
        if t > max_iterations:
            raise RuntimeError("harvest did not terminate")
        in_u = np.zeros(d.n_vertices, dtype=bool)
        for r in regions:
            in_u[r] = True
        incident = in_u[e[:, 0]] | in_u[e[:, 1]]
        u = rng.random(d.n_edges)
        open_edges = np.where(incident, agree & (u < params.p), True)
        in_k = _boundary_cluster(d, open_edges)
        cut = _cut_out_labels(d, open_edges, in_k)
        # candidates: unharvested loops whose minus side lies in a cut-out domain
        touching = np.zeros(len(loops), dtype=bool)
        if loops:
            touching = np.maximum.reduceat(in_k[plus_v], offs[:-1]) > 0
        new = np.nonzero(~harvested_mask & touching & (cut[first_minus] >= 0))[0] if loops else []
        harvested_mask[new] = True
        new_set = np.zeros(len(loops) + 1, dtype=bool)
        new_set[np.asarray(new, dtype=np.int64)] = True
        removed = new_set[np.where(top >= 0, top, len(loops))]
        for k in new:
            removed[plus_v[offs[k]:offs[k + 1]]] = True
        rest = (cut >= 0) & ~removed
        m = np.zeros(grid_shape, dtype=bool)
        m[vx[rest], vy[rest]] = True
        lab, n = ndimage.label(m, structure=_EIGHT)
        vlab = lab[vx, vy]
        order = np.argsort(vlab, kind="stable")
        bounds = np.searchsorted(vlab[order], np.arange(1, n + 2))
        residual = [np.sort(order[bounds[c]:bounds[c + 1]]) for c in range(n)]
        cut_ids = np.unique(cut[cut >= 0])
        cut_outs = [np.nonzero(cut == c)[0] for c in cut_ids]
        harvested = [
            Loop(l.kind, l.grid_points, l.mesh, l.chirality, 1, l.edges, t)
            for l in (loops[k] for k in new)
        ]
        iterations.append(Iteration(t, regions, open_edges, cut_outs, harvested, residual))
        regions = residual
    return ExplorationTrace(iterations, float(epsilon), seed, d)


def direct_level1_leftmost(config: SpinConfiguration, epsilon: float = 0.0) -> LoopCollection:
    """Leftmost level-1 loops of diameter at least ``epsilon`` (direct extraction)."""
    coll = classify_ising_levels(extract_ising_loops(config, "leftmost"), config)
    return LoopCollection(tuple(l for l in coll if l.level == 1 and l.diameter() >= epsilon), coll.provenance)


# =============================================================================
# FK exploration path
# =============================================================================
@dataclass
class ExplorationPath:
    """Bi-medial path ``gamma`` from ``a`` to ``b``.

    ``grid_points`` are quarter-unit coordinates; ``steps[k]`` annotates the
    step from point ``k`` to ``k + 1``: ``"interface"`` when it separates a
    primal cluster from a dual one inside the region, ``"boundary"`` when it
    runs outside or along the boundary arc treated as dual.
    """

    grid_points: np.ndarray
    mesh: float
    region: DiscreteDomain
    a: int
    b: int
    free_edges: np.ndarray  # region edge indices of the counterclockwise arc a -> b
    steps: list

    @property
    def points(self) -> np.ndarray:
        return self.grid_points * (self.mesh / 4.0)

    def __len__(self):
        return len(self.grid_points)

    @property
    def edge_list(self) -> list:
        g = [tuple(map(int, r)) for r in self.grid_points]
        return list(zip(g[:-1], g[1:]))

    def is_simple(self) -> bool:
        g = {tuple(map(int, r)) for r in self.grid_points}
        return len(g) == len(self.grid_points)


def farthest_boundary_pair(region: DiscreteDomain) -> tuple[int, int]:
    """Positions ``(i, j)`` on the boundary walk of the two most distant vertices."""
    verts, _ = region.boundary_walk
    P = region.vertex_points[verts]
    cand = np.arange(len(P))
    if len(P) > 3:
        try:
            cand = np.unique(ConvexHull(P).vertices)
        except QhullError:
            pass
    Q = P[cand]
    dist = ((Q[:, None, :] - Q[None, :, :]) ** 2).sum(-1)
    a, b = np.unravel_index(int(np.argmax(dist)), dist.shape)
    i, j = sorted((int(cand[a]), int(cand[b])))
    return i, j


def _region_states(domain: DiscreteDomain, open_edges: np.ndarray, region: DiscreteDomain) -> np.ndarray:
    """Open state of the region's edges read from a configuration on ``domain``."""
    ec = region.edge_coords
    i0, j0 = domain.origin
    a, b = ec[:, 0] - i0, ec[:, 1] - j0
    idx = np.full(len(ec), -1, dtype=np.int64)
    for o, grid in ((0, domain.hedge_index), (1, domain.vedge_index)):
        sel = (ec[:, 2] == o) & (a >= 0) & (b >= 0) & (a < grid.shape[0]) & (b < grid.shape[1])
        idx[sel] = grid[a[sel], b[sel]]
    if (idx < 0).any():
        raise ValueError("region is not contained in the domain")
    return np.asarray(open_edges, dtype=bool)[idx]


def _corner_points(region: DiscreteDomain, i: int, j: int):
    verts, _ = region.boundary_walk
    n = len(verts)
    V = region.vertices[verts]
    va, va1 = V[i % n], V[(i + 1) % n]
    d = va1 - va
    nrm = np.array([-d[1], d[0]])
    a_pt = 4 * va + d - nrm
    vb, vb0 = V[j % n], V[(j - 1) % n]
    d2 = vb - vb0
    n2 = np.array([-d2[1], d2[0]])
    b_pt = 4 * vb - d2 - n2
    return a_pt, b_pt


def _trace_interface(region, open_r, box, i, j):
    """Follow the interface of the arc-wired / arc-free configuration from ``a`` to ``b``."""
    verts, edges = region.boundary_walk
    n = len(edges)
    if i % n == j % n:
        raise ValueError("a and b must differ")
    free_pos = [(i + k) % n for k in range((j - i) % n)]
    wired_pos = [(j + k) % n for k in range((i - j) % n)]
    over = {int(edges[k]): False for k in free_pos}
    over.update({int(edges[k]): True for k in wired_pos})
    hopen, vopen = bm.edge_state_grids(region, open_r, box, exterior_open=False, overrides=over)
    succ = bm.successor_grid(hopen, vopen)
    GX, GY = box.shape
    a_pt, b_pt = _corner_points(region, i, j)
    ga = box.grid(*a_pt)
    gb = box.grid(*b_pt)
    cur = int(ga[0]) * GY + int(ga[1])
    target = int(gb[0]) * GY + int(gb[1])
    path = [cur]
    limit = GX * GY
    while cur != target:
        cur = int(succ[cur])
        if cur < 0 or len(path) > limit:
            raise RuntimeError("exploration path did not reach b")
        path.append(cur)
    gx, gy = np.divmod(np.array(path, dtype=np.int64), GY)
    X, Y = box.quarter(gx, gy)
    free_edges = np.array(sorted(int(edges[k]) for k in free_pos), dtype=np.int64)
    return np.column_stack([X, Y]), free_edges


def _annotate(region: DiscreteDomain, box, grid_points, free_edges):
    inner = region.interior_edge
    free = set(free_edges.tolist())
    out = []
    for p, q in zip(grid_points[:-1], grid_points[1:]):
        (x, y, o), _ = bm.crossed_edge_grid(box, tuple(box.grid(*p)), tuple(box.grid(*q)))
        e = region.edge_lookup(x, y, o)
        out.append("interface" if e >= 0 and inner[e] and e not in free else "boundary")
    return out


def dobrushin_interface(region: DiscreteDomain, wired_arc, free_arc, config: FKConfiguration) -> ExplorationPath:
    """Interface separating the wired arc from the free arc of a region.

    Parameters
    ----------
    region : DiscreteDomain
        Sub-domain of ``config.domain``.
    wired_arc, free_arc : (int, int)
        Positions ``(start, end)`` on ``region.boundary_walk``; the free arc
        runs counterclockwise from its start to its end, the wired arc covers
        the rest, so ``free_arc = (i, j)`` and ``wired_arc = (j, i)``.
    config : FKConfiguration
        Edge states inside the region are read from here.

    Returns
    -------
    ExplorationPath
        From the junction at ``i`` to the junction at ``j``, primal cluster of
        the wired arc on its left.
    """
    i, j = free_arc
    if tuple(wired_arc) != (j, i):
        raise ValueError("wired and free arcs must partition the boundary")
    n = len(region.boundary_walk[1])
    if (j - i) % n == 0:
        raise ValueError("degenerate arcs: both must be non-empty")
    box = bm.Box.around(config.domain)
    open_r = _region_states(config.domain, config.open_edges, region)
    gp, free_edges = _trace_interface(region, open_r, box, i, j)
    return ExplorationPath(gp, config.domain.mesh, region, i, j, free_edges, _annotate(region, box, gp, free_edges))


def fk_exploration_path(config: FKConfiguration, a: int, b: int) -> ExplorationPath:
    """Exploration path of a wired configuration between boundary positions ``a`` and ``b``.

    ``a`` and ``b`` index ``domain.boundary_walk``. The counterclockwise arc
    from ``a`` to ``b`` is treated as dual, the other arc as wired, so the
    path keeps the boundary cluster on its left and a dual cluster on its
    right, and runs along the arc whenever no dual cluster is available.
    """
    if config.bc != "wired":
        raise ValueError("the exploration path is defined for wired configurations")
    n = len(config.domain.boundary_walk[1])
    if a % n == b % n:
        raise ValueError("a and b must differ")
    return dobrushin_interface(config.domain, (b, a), (a, b), config)


# -- special points -----------------------------------------------------------------
@dataclass
class SpecialPointSet:
    """Special times on a path with their subpaths ``K(x)`` as closed time intervals."""

    boundary_points: list  # times t in P_B
    double_points: list  # (t, s) with s the partner time
    K: dict  # time -> (start, end)
    T: int

    def all_times(self) -> list:
        return sorted(set(self.boundary_points) | {t for t, _ in self.double_points})

    def is_laminar(self) -> bool:
        # subpaths are compared as sets of steps [start, end)
        iv = sorted(set(self.K.values()))
        for x in range(len(iv)):
            for y in range(x + 1, len(iv)):
                (a0, a1), (b0, b1) = iv[x], iv[y]
                disjoint = a1 <= b0 or b1 <= a0
                nested = (a0 <= b0 and b1 <= a1) or (b0 <= a0 and a1 <= b1)
                if not (disjoint or nested):
                    return False
        return True


def _signed_area2(P: np.ndarray) -> float:
    Q = np.roll(P, -1, axis=0)
    return float((P[:, 0] * Q[:, 1] - Q[:, 0] * P[:, 1]).sum())


def special_points(path: ExplorationPath, config: FKConfiguration = None) -> SpecialPointSet:
    """Right boundary points and clockwise double points of an exploration path."""
    g = path.grid_points
    T = len(g) - 1
    index = {tuple(map(int, p)): t for t, p in enumerate(g)}
    region = path.region
    free = set(path.free_edges.tolist())
    inside = _face_square_test(region)
    PB, PD, K = [], [], {}
    steps = ((2, 0), (-2, 0), (0, 2), (0, -2))
    for t in range(T + 1):
        p = g[t]
        if inside(p):
            for dx, dy in steps:
                q = (int(p[0] + dx), int(p[1] + dy))
                if inside(q):
                    continue
                e = _crossed_region_edge(region, tuple(map(int, p)), q)
                if e in free:
                    PB.append(t)
                    K[t] = (0, t)
                    break
        best = None
        for dx, dy in steps:
            q = (int(p[0] + dx), int(p[1] + dy))
            # excursions outside the region only follow the boundary arc
            if not (inside(p) and inside(q)):
                continue
            s = index.get(q)
            if s is None or s >= t - 1:
                continue
            if _signed_area2(g[s:t + 1].astype(float)) < 0 and (best is None or s > best):
                best = s
        if best is not None:
            PD.append((t, best))
            K[t] = (best, t) if t not in K else K[t]
    return SpecialPointSet(PB, PD, K, T)


def _face_square_test(region: DiscreteDomain):
    faces = {tuple(map(int, f)) for f in region.faces}

    def inside(p):
        return (int(p[0]) // 4, int(p[1]) // 4) in faces

    return inside


def _crossed_region_edge(region, p, q):
    e, dual = bm.crossed_edge(region, p, q)
    return e if not dual else -1


# -- pinching families ------------------------------------------------------------------
@dataclass
class PinchingFamily:
    times: list  # special times of the family, always including T (the endpoint b)
    K: dict
    cells: dict  # time -> array of step indices forming P(x)
    waypoints: list


def _diam_of_steps(path, steps_idx) -> float:
    if len(steps_idx) == 0:
        return 0.0
    ts = np.unique(np.concatenate([steps_idx, np.asarray(steps_idx) + 1]))
    return _point_diameter(path.points[ts])


def _steps_of(iv):
    return np.arange(iv[0], iv[1], dtype=np.int64)


def pinching_family(path: ExplorationPath, specials: SpecialPointSet, epsilon: float) -> PinchingFamily:
    """Finite pinching family built from ``epsilon / 4`` waypoints.

    For each waypoint ``w_i`` the first special point after it whose subpath
    contains ``w_i`` and has diameter at least ``epsilon / 2`` starts a chain;
    the chain is extended by the first later special point whose subpath
    contains the previous one and adds a piece of diameter at least
    ``epsilon / 2``. The endpoint ``b`` is always included.
    """
    mesh = path.mesh
    if not epsilon > 4 * mesh:
        raise ValueError("epsilon must exceed four mesh sizes")
    P = path.points
    T = len(P) - 1
    # waypoints: successive first exits from balls of radius epsilon / 4
    s = [0]
    while True:
        w = P[s[-1]]
        dist = np.hypot(*(P[s[-1] + 1:] - w).T) if s[-1] < T else np.zeros(0)
        out = np.nonzero(dist > epsilon / 4)[0]
        if len(out) == 0:
            break
        s.append(s[-1] + 1 + int(out[0]))
    if s[-1] != T:
        s.append(T)
    K = dict(specials.K)
    K[T] = (0, T)
    times = sorted(K)
    diam = {t: _point_diameter(P[K[t][0]:K[t][1] + 1]) for t in times}
    family = {T}
    for si in s[:-1]:
        x = None
        for t in times:
            k0, k1 = K[t]
            if t >= si and k0 <= si <= k1 and diam[t] >= epsilon / 2:
                x = t
                break
        while x is not None:
            family.add(x)
            kx = K[x]
            nxt = None
            for t in times:
                if t <= x:
                    continue
                ky = K[t]
                if ky[0] <= kx[0] and kx[1] <= ky[1] and ky != kx:
                    # steps of K(y) outside K(x): [ky0, kx0) and [kx1, ky1)
                    parts = [P[ky[0]:kx[0] + 1]] if ky[0] < kx[0] else []
                    if kx[1] < ky[1]:
                        parts.append(P[kx[1]:ky[1] + 1])
                    if _point_diameter(np.concatenate(parts)) >= epsilon / 2:
                        nxt = t
                        break
            x = nxt
    fam = sorted(family)
    cells = {}
    for x in fam:
        own = set(_steps_of(K[x]).tolist())
        for y in fam:
            if y != x and K[y] != K[x] and K[x][0] <= K[y][0] and K[y][1] <= K[x][1]:
                own -= set(_steps_of(K[y]).tolist())
        cells[x] = np.array(sorted(own), dtype=np.int64)
    # coincident subpaths share one cell; keep it on the earliest time
    seen = {}
    for x in fam:
        key = K[x]
        if key in seen:
            cells[x] = np.zeros(0, dtype=np.int64)
        else:
            seen[key] = x
    return PinchingFamily(fam, {x: K[x] for x in fam}, cells, [int(t) for t in s])


# =============================================================================
# Recursive exploration of the level-one FK loops
# =============================================================================
def _region_cycles(region: DiscreteDomain, open_r, box):
    """Interface cycles of the region with its boundary wired to the exterior."""
    hopen, vopen = bm.edge_state_grids(region, open_r, box, exterior_open=True)
    succ = bm.successor_grid(hopen, vopen)
    label, order, starts = bm._cycles(succ)
    inside = bm.domain_face_points(region, box).ravel()
    return succ, label, order, starts, inside


def _raster_regions(region: DiscreteDomain, box, barriers, inside_loops):
    """Face groups of ``region`` separated by the given quarter-unit polylines.

    Faces enclosed by any loop of ``inside_loops`` are dropped.
    """
    X0, Y0 = 4 * box.ip0, 4 * box.jp0
    W, H = 4 * box.nx + 1, 4 * box.ny + 1
    free = np.zeros((W, H), dtype=bool)
    f = region.faces
    for dx in range(5):
        for dy in range(5):
            free[4 * f[:, 0] + dx - X0, 4 * f[:, 1] + dy - Y0] = True
    for poly, closed in barriers:
        q = np.asarray(poly, dtype=np.int64)
        nxt = np.roll(q, -1, axis=0) if closed else q[1:]
        cur = q if closed else q[:-1]
        mid = (cur + nxt) // 2
        for arr in (q, mid):
            ok = (arr[:, 0] - X0 >= 0) & (arr[:, 0] - X0 < W) & (arr[:, 1] - Y0 >= 0) & (arr[:, 1] - Y0 < H)
            free[arr[ok, 0] - X0, arr[ok, 1] - Y0] = False
    lab, _ = ndimage.label(free, structure=_FOUR)
    fl = lab[4 * f[:, 0] + 2 - X0, 4 * f[:, 1] + 2 - Y0]
    centers = f + 0.5
    drop = np.zeros(len(f), dtype=bool)
    for loop in inside_loops:
        P = loop.grid_points / 4.0
        drop |= _points_in_polygon(centers, P)
    groups = {}
    for k in np.nonzero(~drop & (fl > 0))[0]:
        groups.setdefault(int(fl[k]), []).append(k)
    return [f[np.array(v)] for _, v in sorted(groups.items())]


def _points_in_polygon(pts, poly):
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    a = poly[None, :, :]
    b = np.roll(poly, -1, axis=0)[None, :, :]
    cond = (a[..., 1] > y) != (b[..., 1] > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[..., 0] + (y - a[..., 1]) * (b[..., 0] - a[..., 0]) / (b[..., 1] - a[..., 1])
    return ((cond & (x < xint)).sum(1) % 2) == 1


def explore_all_fk_level1(config: FKConfiguration, epsilon: float, return_tree: bool = False):
    """Find the level-one FK loops by recursive exploration.

    In every wired region of diameter at least ``epsilon`` an exploration
    path joins the two most distant boundary vertices. Each FK loop the path
    runs along is completed by the interface that separates the region's
    wired boundary from the dual cluster on the path's right (traced in the
    region with wired boundary conditions), and the parts of the region
    outside the completed loops and off the path become new wired regions.

    Returns every level-one FK loop of diameter at least ``epsilon`` (and
    possibly some smaller ones); each loop carries its recursion depth as
    ``harvest_time``.
    """
    if config.bc != "wired":
        raise ValueError("explore_all_fk_level1 needs a wired configuration")
    d = config.domain
    if not epsilon > d.mesh:
        raise ValueError("epsilon must exceed the mesh size")
    box = bm.Box.around(d)
    GX, GY = box.shape
    found = {}
    tree = []
    stack = [(d.faces, 1)]
    while stack:
        faces, depth = stack.pop()
        region = d if faces is d.faces else DiscreteDomain(faces, d.mesh_str, check=False)
        if _point_diameter(region.vertex_points) < epsilon:
            continue
        open_r = _region_states(d, config.open_edges, region)
        i, j = farthest_boundary_pair(region)
        gp, free_edges = _trace_interface(region, open_r, box, i, j)
        succ, label, order, starts, inside = _region_cycles(region, open_r, box)
        gx, gy = box.grid(gp[:, 0], gp[:, 1])
        flat = gx * GY + gy
        hits = set()
        for p, q in zip(flat[:-1], flat[1:]):
            if succ[p] == q and label[p] >= 0:
                hits.add(int(label[p]))
        new_loops = []
        for c in sorted(hits):
            cyc = order[starts[c]:starts[c + 1]]
            if not inside[cyc].any():
                continue
            cx, cy = np.divmod(cyc, GY)
            X, Y = box.quarter(cx, cy)
            loop = Loop("fk", np.column_stack([X, Y]), d.mesh, "plain", 1, (), depth)
            new_loops.append(loop)
            found.setdefault(loop.key(), loop)
        barriers = [(gp, False)] + [(l.grid_points, True) for l in new_loops]
        subs = _raster_regions(region, box, barriers, new_loops)
        tree.append({"depth": depth, "n_faces": len(faces), "a": i, "b": j, "found": len(new_loops), "children": len(subs)})
        for sf in subs:
            if len(sf) == len(faces):
                raise RuntimeError("exploration made no progress")
            stack.append((sf, depth + 1))
    loops = sorted(found.values(), key=lambda l: l.key())
    coll = LoopCollection(tuple(loops), {"source": "explore_all_fk_level1", "epsilon": epsilon})
    return (coll, tree) if return_tree else coll


def direct_level1_fk(config: FKConfiguration, epsilon: float = 0.0) -> LoopCollection:
    """Level-one FK loops of diameter at least ``epsilon`` (direct extraction)."""
    from .loops import fk_loops_with_levels

    coll, _ = fk_loops_with_levels(config)
    return LoopCollection(tuple(l for l in coll if l.level == 1 and l.diameter() >= epsilon), coll.provenance)

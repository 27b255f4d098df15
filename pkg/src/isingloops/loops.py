"""Ising and FK interface loops, their nesting levels and cut-out domains.

Ising loops run on the dual graph with a ``+`` spin on their left; at a
checkerboard face the chirality decides how the two passes are joined.
FK loops run on the bi-medial lattice with the primal cluster on their left.
Nesting is computed by a single left-to-right ray sweep per row, which is
exact because loops of one family never cross.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property

import numba
import numpy as np
from scipy import ndimage

from . import _bimedial as bm
from .fk_ising import FKConfiguration, SpinConfiguration
from .lattice import DiscreteDomain, _point_diameter

__all__ = [
    "Loop",
    "LoopCollection",
    "CutOutDomain",
    "extract_ising_loops",
    "classify_ising_levels",
    "extract_fk_loops",
    "classify_fk_levels",
    "cut_out_domains",
    "fk_loops_with_levels",
    "containment",
    "ising_interface_edges",
    "spin_grid",
    "strong_clusters",
    "loops_to_json",
    "loops_from_json",
    "render_svg",
]

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = ndimage.generate_binary_structure(2, 2)


@dataclass(frozen=True, eq=False)
class Loop:
    """Oriented closed lattice curve.

    ``grid_points`` are integer lattice coordinates of the visited vertices
    (doubled units ``2x`` for Ising loops, quarter units ``4x`` for FK
    loops); ``points`` are the same vertices in physical units. The first
    point is not repeated at the end.
    """

    kind: str
    grid_points: np.ndarray
    mesh: float = 1.0
    chirality: str = "plain"
    level: int | None = None
    edges: tuple = ()
    harvest_time: int | None = None

    def __post_init__(self):
        g = np.asarray(self.grid_points, dtype=np.int64).reshape(-1, 2)
        g.setflags(write=False)
        object.__setattr__(self, "grid_points", g)

    @property
    def scale(self) -> int:
        return 2 if self.kind == "ising" else 4

    @cached_property
    def points(self) -> np.ndarray:
        return self.grid_points * (self.mesh / self.scale)

    def __len__(self):
        return len(self.grid_points)

    @cached_property
    def signed_area(self) -> float:
        p = self.points
        q = np.roll(p, -1, axis=0)
        return 0.5 * float((p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]).sum())

    @property
    def orientation(self) -> str:
        return "counterclockwise" if self.signed_area > 0 else "clockwise"

    @cached_property
    def edge_set(self) -> frozenset:
        """Directed edges as pairs of integer lattice points."""
        g = [tuple(map(int, r)) for r in self.grid_points]
        return frozenset(zip(g, g[1:] + g[:1]))

    def diameter(self) -> float:
        return _point_diameter(self.points)

    def key(self):
        """Rotation-invariant identity of the traversed cycle."""
        g = [tuple(map(int, r)) for r in self.grid_points]
        m = min(g)
        rot = min(tuple(g[k:] + g[:k]) for k, p in enumerate(g) if p == m)
        return self.kind, rot

    def __eq__(self, other):
        return isinstance(other, Loop) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def reversed(self) -> "Loop":
        return replace(self, grid_points=self.grid_points[::-1].copy(), edges=tuple(reversed(self.edges)))

    def with_level(self, level) -> "Loop":
        return replace(self, level=level)


@dataclass(frozen=True)
class LoopCollection:
    loops: tuple
    provenance: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.loops)

    def __len__(self):
        return len(self.loops)

    def __getitem__(self, i):
        return self.loops[i]

    def at_level(self, level: int) -> "LoopCollection":
        return LoopCollection(tuple(l for l in self.loops if l.level == level), self.provenance)

    def edge_set(self) -> frozenset:
        out = set()
        for l in self.loops:
            out |= l.edge_set
        return frozenset(out)


@dataclass(frozen=True, eq=False)
class CutOutDomain:
    """A component of the interior of an outermost FK loop.

    ``vertices`` are the domain vertices strictly inside (where the nested
    model lives, with free boundary conditions); ``faces`` the enclosed faces.
    """

    enclosing_loop: Loop
    faces: np.ndarray
    vertices: np.ndarray
    domain: DiscreteDomain = field(repr=False, default=None)

    @property
    def degenerate(self) -> bool:
        return len(self.vertices) == 0

    @property
    def bc(self) -> str:
        return "free"

    def sub_domain(self) -> DiscreteDomain:
        return DiscreteDomain(self.faces, self.domain.mesh_str, check=False)


# -- shared helpers -------------------------------------------------------------
def spin_grid(config: SpinConfiguration) -> np.ndarray:
    """Spins on the vertex grid ``[x - i0, y - j0]``; zero off the domain."""
    d = config.domain
    S = np.zeros(d.vertex_mask.shape, dtype=np.int8)
    vi = d.vertex_index
    m = vi >= 0
    S[m] = config.spins[vi[m]]
    return S


def strong_clusters(config: SpinConfiguration, sign: int) -> np.ndarray:
    """Labels of 4-connected clusters of ``sign`` spins per vertex (``-1`` elsewhere)."""
    S = spin_grid(config)
    lab, _ = ndimage.label(S == sign, structure=_FOUR)
    d = config.domain
    out = lab[d.vertices[:, 0] - d.origin[0], d.vertices[:, 1] - d.origin[1]] - 1
    return out


def ising_interface_edges(config: SpinConfiguration) -> np.ndarray:
    """Interior primal edges whose endpoints disagree (their duals carry Ising loops)."""
    e = config.domain.edges
    s = config.spins
    return config.domain.interior_edge & (s[e[:, 0]] != s[e[:, 1]])


@numba.njit(cache=True)
def _innermost(owner, start, parent_of_start):
    """Ray sweep: innermost loop containing each cell.

    ``owner[k, r]`` is the loop crossing the ray of row ``r`` between cells
    ``k`` and ``k + 1`` (``-1`` if none). Returns ``inner[c, r]`` for
    ``c = 0 .. K``. Loops must be pairwise non-crossing.
    """
    K, R = owner.shape
    inner = np.full((K + 1, R), -1, np.int64)
    stack = np.empty(K + 1, np.int64)
    bad = 0
    for r in range(R):
        top = 0
        for c in range(K + 1):
            if c > 0:
                l = owner[c - 1, r]
                if l >= 0:
                    if top > 0 and stack[top - 1] == l:
                        top -= 1
                    else:
                        stack[top] = l
                        top += 1
            inner[c, r] = stack[top - 1] if top > 0 else -1
        if top != 0:
            bad += 1
    return inner, bad


def _depths(parent: np.ndarray) -> np.ndarray:
    depth = np.zeros(len(parent), dtype=np.int64)
    for k in range(len(parent)):
        d, j = 1, parent[k]
        while j >= 0:
            d += 1
            j = parent[j]
        depth[k] = d
    return depth


# -- Ising loops -------------------------------------------------------------------
# face sides: 0 bottom, 1 right, 2 top, 3 left
@numba.njit(cache=True)
def _ising_successors(S, fm, hidx, vidx, n_edges, left_turn):
    """Successor (by primal edge index) of every directed Ising interface dual edge."""
    nxv, nyv = S.shape
    nxf, nyf = fm.shape
    succ = np.full(n_edges, -1, np.int64)
    # head face and entry side of each interface edge
    for a in range(nxf):
        for b in range(nyv):
            e = hidx[a, b]
            if e < 0 or b == 0 or b == nyf or not (fm[a, b] and fm[a, b - 1]):
                continue
            s0 = S[a, b]
            s1 = S[a + 1, b]
            if s0 == s1:
                continue
            if s0 > 0:
                i, j, k = a, b, 0  # moving up into face (a, b) through its bottom
            else:
                i, j, k = a, b - 1, 2  # moving down through the top of (a, b-1)
            succ[e] = _exit(S, hidx, vidx, i, j, k, left_turn)
    for a in range(nxv):
        for b in range(nyf):
            e = vidx[a, b]
            if e < 0 or a == 0 or a == nxf or not (fm[a, b] and fm[a - 1, b]):
                continue
            s0 = S[a, b]
            s1 = S[a, b + 1]
            if s0 == s1:
                continue
            if s0 > 0:
                i, j, k = a - 1, b, 1  # moving -x through the right side of (a-1, b)
            else:
                i, j, k = a, b, 3  # moving +x through the left side of (a, b)
            succ[e] = _exit(S, hidx, vidx, i, j, k, left_turn)
    return succ


@numba.njit(cache=True)
def _side_out(S, hidx, vidx, i, j, side):
    """Edge index if the loop can leave face (i, j) through ``side``, else -1."""
    if side == 0:
        ok = S[i, j] < 0 and S[i + 1, j] > 0
        e = hidx[i, j]
    elif side == 1:
        ok = S[i + 1, j] < 0 and S[i + 1, j + 1] > 0
        e = vidx[i + 1, j]
    elif side == 2:
        ok = S[i, j + 1] > 0 and S[i + 1, j + 1] < 0
        e = hidx[i, j + 1]
    else:
        ok = S[i, j] > 0 and S[i, j + 1] < 0
        e = vidx[i, j]
    return e if ok else -1


@numba.njit(cache=True)
def _exit(S, hidx, vidx, i, j, k, left_turn):
    preferred = (k + 3) % 4 if left_turn else (k + 1) % 4
    e = _side_out(S, hidx, vidx, i, j, preferred)
    if e >= 0:
        return e
    for t in range(1, 4):
        side = (k + t) % 4
        e = _side_out(S, hidx, vidx, i, j, side)
        if e >= 0:
            return e
    return -1


def extract_ising_loops(config: SpinConfiguration, chirality: str = "leftmost") -> LoopCollection:
    """Decompose the Ising interface into oriented loops (``+`` on the left).

    Parameters
    ----------
    config : SpinConfiguration
    chirality : {"leftmost", "rightmost"}
        At a checkerboard face a leftmost loop turns left, so that the ``+``
        spins along its left side form a strong path; a rightmost loop turns
        right, keeping a strong path of ``-`` spins on its right.

    Interface arcs that end on the boundary (free boundary conditions) are
    not closed loops and are dropped.
    """
    if chirality not in ("leftmost", "rightmost"):
        raise ValueError("chirality must be 'leftmost' or 'rightmost'")
    d = config.domain
    S = spin_grid(config)
    fm = np.ascontiguousarray(d.face_mask)
    succ = _ising_successors(S, fm, d.hedge_index, d.vedge_index, d.n_edges, chirality == "leftmost")
    i0, j0 = d.origin
    loops = []
    ec = d.edge_coords
    plus_low = S[ec[:, 0] - i0, ec[:, 1] - j0] > 0
    hx = np.where(ec[:, 2] == 0, ec[:, 0], np.where(plus_low, ec[:, 0] - 1, ec[:, 0]))
    hy = np.where(ec[:, 2] == 0, np.where(plus_low, ec[:, 1], ec[:, 1] - 1), ec[:, 1])
    head = np.column_stack([hx, hy])
    for cyc in bm.cycles(succ):
        pts = head[cyc]
        # the loop visits the head face of each edge; rotate so edge k ends at point k
        loops.append(Loop("ising", 2 * pts + 1, d.mesh, chirality, None, tuple(int(e) for e in cyc)))
    loops.sort(key=lambda l: l.key())
    return LoopCollection(tuple(loops), {"source": "ising", "chirality": chirality, "bc": _bc_repr(config.bc)})


def _bc_repr(bc):
    return bc if isinstance(bc, str) else "mixed"


def _ising_parents(loops, config: SpinConfiguration) -> np.ndarray:
    d = config.domain
    nx, ny = d.vertex_mask.shape
    owner = np.full((nx - 1, ny), -1, dtype=np.int64)
    ec = d.edge_coords
    i0, j0 = d.origin
    for k, l in enumerate(loops):
        for e in l.edges:
            x, y, o = ec[e]
            if o == 0:
                owner[x - i0, y - j0] = k
    inner, bad = _innermost(owner, 0, 0)
    if bad:
        raise ValueError("loops cross each other")
    parent = np.full(len(loops), -1, dtype=np.int64)
    s = config.spins
    for k, l in enumerate(loops):
        u, v = d.edges[l.edges[0]]
        plus, minus = (u, v) if s[u] > 0 else (v, u)
        out = plus if l.orientation == "clockwise" else minus
        x, y = d.vertices[out]
        parent[k] = inner[x - i0, y - j0]
    return parent


def classify_ising_levels(collection: LoopCollection, config: SpinConfiguration) -> LoopCollection:
    """Assign nesting levels to Ising loops of a ``+`` boundary configuration.

    A loop is of level 1 when no other loop surrounds it, which for ``+``
    boundary conditions is the same as having its ``+`` side in the strong
    ``+`` cluster of the boundary. Deeper loops get one more than the
    innermost loop surrounding them.
    """
    if config.bc != "plus":
        raise ValueError("levels are defined for plus boundary conditions")
    _check_matches(collection, config)
    loops = list(collection.loops)
    if not loops:
        return collection
    depth = _depths(_ising_parents(loops, config))
    return LoopCollection(tuple(l.with_level(int(k)) for l, k in zip(loops, depth)), collection.provenance)


def _check_matches(collection, config):
    iface = ising_interface_edges(config)
    s = config.spins
    e = config.domain.edges
    for l in collection:
        if l.kind != "ising":
            raise ValueError("not an Ising loop collection")
        idx = np.asarray(l.edges, dtype=np.int64)
        if len(idx) == 0 or idx.max() >= len(iface) or not iface[idx].all():
            raise ValueError("loop collection does not match the configuration")


# -- FK loops -------------------------------------------------------------------------
@dataclass(frozen=True)
class _FKTrace:
    loops: list
    box: bm.Box
    inner: np.ndarray  # innermost loop per cell of the half-shifted grid
    parent: np.ndarray


@numba.njit(cache=True)
def _cycle_geometry(order, starts, GY):
    """Per cycle: twice the signed area, smallest point index and one outer probe cell."""
    n = starts.shape[0] - 1
    area2 = np.zeros(n, np.int64)
    first = np.zeros(n, np.int64)
    probe = np.zeros((n, 2), np.int64)
    for k in range(n):
        a, b = starts[k], starts[k + 1]
        m = order[a]
        for t in range(a, b):
            p = order[t]
            q = order[t + 1] if t + 1 < b else order[a]
            x1, y1 = p // GY, p % GY
            x2, y2 = q // GY, q % GY
            area2[k] += x1 * y2 - x2 * y1
            if p < m:
                m = p
        first[k] = m
        for t in range(a, b):
            p = order[t]
            q = order[t + 1] if t + 1 < b else order[a]
            x1, y1 = p // GY, p % GY
            x2, y2 = q // GY, q % GY
            if x1 == x2:
                up = y2 > y1
                left, right = (x1, x1 + 1) if up else (x1 + 1, x1)
                probe[k, 0] = left if area2[k] < 0 else right
                probe[k, 1] = min(y1, y2)
                break
    return area2, first, probe


@numba.njit(cache=True)
def _vertical_owner(order, starts, pos, GX, GY):
    owner = np.full((GX, GY - 1), -1, np.int64)
    for k in range(starts.shape[0] - 1):
        if pos[k] < 0:
            continue
        a, b = starts[k], starts[k + 1]
        for t in range(a, b):
            p = order[t]
            q = order[t + 1] if t + 1 < b else order[a]
            if p // GY == q // GY:
                owner[p // GY, min(p % GY, q % GY)] = pos[k]
    return owner


def _trace_fk(config: FKConfiguration, overrides=None, exterior_open=None) -> _FKTrace:
    if config.on_dual:
        raise ValueError("FK loops are traced from primal configurations")
    d = config.domain
    box = bm.Box.around(d)
    if exterior_open is None:
        exterior_open = config.bc == "wired"
    hopen, vopen = bm.edge_state_grids(d, config.open_edges, box, exterior_open=exterior_open, overrides=overrides)
    succ = bm.successor_grid(hopen, vopen)
    GX, GY = box.shape
    inside = bm.domain_face_points(d, box).ravel()
    _, order, starts = bm._cycles(succ)
    area2, first, probe = _cycle_geometry(order, starts, GY)
    keep = np.array([inside[order[starts[k]:starts[k + 1]]].any() for k in range(len(first))], dtype=bool)
    # deterministic order: by lowest point, row-major in (y, x)
    fx, fy = np.divmod(first, GY)
    idx = np.nonzero(keep)[0]
    idx = idx[np.lexsort((fx[idx], fy[idx]))]
    pos = np.full(len(first), -1, dtype=np.int64)
    pos[idx] = np.arange(len(idx))
    owner = _vertical_owner(order, starts, pos, GX, GY)
    gx, gy = np.divmod(order, GY)
    XY = np.column_stack(box.quarter(gx, gy))
    loops = [Loop("fk", XY[starts[k]:starts[k + 1]], d.mesh, "plain") for k in idx]
    inner, bad = _innermost(owner, 0, 0)
    if bad:
        raise ValueError("FK loops cross each other")
    pr = probe[idx]
    parent = inner[pr[:, 0], pr[:, 1]] if len(idx) else np.zeros(0, dtype=np.int64)
    return _FKTrace(loops, box, inner, parent)


def _fk_parents(tr: _FKTrace) -> np.ndarray:
    return tr.parent


def extract_fk_loops(config: FKConfiguration) -> LoopCollection:
    """Bi-medial loops separating primal from dual clusters (primal on the left)."""
    if config.bc not in ("wired", "free"):
        raise ValueError("FK loops need wired or free boundary conditions")
    tr = _trace_fk(config)
    return LoopCollection(tuple(tr.loops), {"source": "fk", "bc": config.bc})


def classify_fk_levels(collection: LoopCollection) -> LoopCollection:
    """Levels by nesting depth: level 1 loops are not inside any other loop."""
    loops = list(collection.loops)
    if not loops:
        return collection
    parent = np.full(len(loops), -1, dtype=np.int64)
    for k, l in enumerate(loops):
        probe = _outside_probe(l)
        best = None
        for m, other in enumerate(loops):
            if m != k and _contains_point(other, probe):
                if best is None or _contains_point(loops[best], other.points[0]):
                    best = m
        parent[k] = -1 if best is None else best
    depth = _depths(parent)
    return LoopCollection(tuple(l.with_level(int(d)) for l, d in zip(loops, depth)), collection.provenance)


def fk_loops_with_levels(config: FKConfiguration):
    """Level-annotated FK loops plus the trace used for region queries."""
    tr = _trace_fk(config)
    depth = _depths(_fk_parents(tr)) if tr.loops else np.zeros(0, dtype=np.int64)
    loops = [l.with_level(int(k)) for l, k in zip(tr.loops, depth)]
    return LoopCollection(tuple(loops), {"source": "fk", "bc": config.bc}), tr


def _outside_probe(l: Loop) -> np.ndarray:
    """Point a quarter-cell off the first vertical edge, on the outer side."""
    g = l.grid_points
    g2 = np.roll(g, -1, axis=0)
    j = int(np.nonzero(g[:, 0] == g2[:, 0])[0][0])
    up = g2[j, 1] > g[j, 1]
    step = 1 if l.kind == "fk" else 1
    left = np.array([g[j, 0] - step, (g[j, 1] + g2[j, 1]) / 2])
    right = np.array([g[j, 0] + step, (g[j, 1] + g2[j, 1]) / 2])
    if not up:
        left, right = right, left
    out = left if l.orientation == "clockwise" else right
    return out * (l.mesh / l.scale)


def cut_out_domains(config: FKConfiguration) -> list:
    """Components of the interiors of the outermost FK loops, in loop order."""
    if config.bc != "wired":
        raise ValueError("cut-out domains are defined for wired configurations")
    coll, tr = fk_loops_with_levels(config)
    if not coll.loops:
        return []
    top = _top_ancestor(_fk_parents(tr))
    d = config.domain
    box = tr.box
    f = d.faces
    cf = tr.inner[2 * (f[:, 0] - box.ip0) + 1, 2 * (f[:, 1] - box.jp0)]
    v = d.vertices
    cv = tr.inner[2 * (v[:, 0] - box.ip0), 2 * (v[:, 1] - box.jp0) - 1]
    face_top = np.where(cf >= 0, top[np.maximum(cf, 0)], -1)
    vert_top = np.where(cv >= 0, top[np.maximum(cv, 0)], -1)
    i0, j0 = d.origin
    G = np.full(d.face_mask.shape, -1, dtype=np.int64)
    G[f[:, 0] - i0, f[:, 1] - j0] = face_top
    comp = _equal_label_components(G)
    vtop_faces = []
    for da in (0, -1):
        for db in (0, -1):
            a = v[:, 0] - i0 + da
            b = v[:, 1] - j0 + db
            ok = (a >= 0) & (a < G.shape[0]) & (b >= 0) & (b < G.shape[1])
            a, b = np.where(ok, a, 0), np.where(ok, b, 0)
            vtop_faces.append(np.where(ok & (G[a, b] == vert_top) & (vert_top >= 0), comp[a, b], -1))
    vcomp = np.max(np.stack(vtop_faces), axis=0)
    fcomp = comp[f[:, 0] - i0, f[:, 1] - j0]
    # group faces and vertices by component in one pass
    forder = np.argsort(fcomp, kind="stable")
    fkeys, fstart = np.unique(fcomp[forder], return_index=True)
    fgroups = dict(zip(fkeys.tolist(), np.split(forder, fstart[1:])))
    vorder = np.argsort(vcomp, kind="stable")
    vkeys, vstart = np.unique(vcomp[vorder], return_index=True)
    vgroups = dict(zip(vkeys.tolist(), np.split(vorder, vstart[1:])))
    empty = np.zeros(0, dtype=np.int64)
    out = []
    for k, l in enumerate(coll.loops):
        if l.level != 1:
            continue
        for c in np.unique(fcomp[face_top == k]).tolist():
            out.append(CutOutDomain(l, f[fgroups[c]], vgroups.get(c, empty), d))
    return out


def _equal_label_components(G: np.ndarray) -> np.ndarray:
    """4-connected components of cells sharing the same non-negative label."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    n = G.size
    idx = np.arange(n).reshape(G.shape)
    h = (G[:-1, :] == G[1:, :]) & (G[:-1, :] >= 0)
    v = (G[:, :-1] == G[:, 1:]) & (G[:, :-1] >= 0)
    rows = np.concatenate([idx[:-1, :][h], idx[:, :-1][v]])
    cols = np.concatenate([idx[1:, :][h], idx[:, 1:][v]])
    g = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    return np.where(G >= 0, lab.reshape(G.shape), -1)


def _top_ancestor(parent):
    top = np.arange(len(parent))
    for k in range(len(parent)):
        j = k
        while parent[j] >= 0:
            j = parent[j]
        top[k] = j
    return top


# -- containment ----------------------------------------------------------------------
def _on_segment(p, a, b, tol=1e-12) -> bool:
    ab = b - a
    ap = p - a
    cross = ab[0] * ap[1] - ab[1] * ap[0]
    if abs(cross) > tol:
        return False
    t = np.dot(ap, ab)
    return -tol <= t <= np.dot(ab, ab) + tol


def _winding(poly: np.ndarray, p) -> int:
    x, y = float(p[0]), float(p[1])
    a = poly
    b = np.roll(poly, -1, axis=0)
    up = (a[:, 1] <= y) & (b[:, 1] > y)
    dn = (a[:, 1] > y) & (b[:, 1] <= y)
    cross = (b[:, 0] - a[:, 0]) * (y - a[:, 1]) - (x - a[:, 0]) * (b[:, 1] - a[:, 1])
    return int(((up & (cross > 0)).sum()) - ((dn & (cross < 0)).sum()))


def _contains_point(loop: Loop, p) -> bool:
    return _winding(loop.points, p) % 2 != 0


def _point_on_loop(loop: Loop, p) -> bool:
    poly = loop.points
    nxt = np.roll(poly, -1, axis=0)
    p = np.asarray(p, dtype=float)
    return any(_on_segment(p, a, b) for a, b in zip(poly, nxt))


def containment(loop: Loop, target) -> bool:
    """Odd winding number of a point, or of every off-loop vertex of another loop.

    Raises
    ------
    ValueError
        If the target point (or every vertex of the target loop) lies on ``loop``.
    """
    if isinstance(target, Loop):
        pts = [p for p in target.points if not _point_on_loop(loop, p)]
        if not pts:
            raise ValueError("target loop lies on the loop")
        return all(_contains_point(loop, p) for p in pts)
    p = np.asarray(target, dtype=float)
    if _point_on_loop(loop, p):
        raise ValueError("target point lies on the loop; perturb it by a quarter mesh")
    return _contains_point(loop, p)


# -- serialization / rendering ---------------------------------------------------------
def loops_to_json(collection: LoopCollection) -> list:
    return [
        {
            "kind": l.kind,
            "chirality": l.chirality,
            "level": l.level,
            "orientation": l.orientation,
            "points": [[float(x), float(y)] for x, y in l.points],
        }
        for l in collection
    ]


def loops_from_json(doc: list, mesh: float = 1.0) -> LoopCollection:
    loops = []
    for item in doc:
        scale = 2 if item["kind"] == "ising" else 4
        g = np.rint(np.asarray(item["points"], dtype=float) * scale / mesh).astype(np.int64)
        loops.append(Loop(item["kind"], g, mesh, item.get("chirality", "plain"), item.get("level")))
    return LoopCollection(tuple(loops))


_PALETTE = ["#7b2cbf", "#2a9d8f", "#e76f51", "#264653", "#f4a261", "#1d3557"]


def render_svg(domain: DiscreteDomain, collection: LoopCollection = None, spins=None, open_edges=None, size: int = 600) -> str:
    """Plain SVG drawing of a domain, optional spins / open edges and loops coloured by level."""
    i0, j0 = domain.origin
    nx, ny = domain.face_mask.shape
    s = size / max(nx, ny)

    def X(x):
        return f"{(x - i0) * s + s:.3f}"

    def Y(y):
        return f"{(ny - (y - j0)) * s + s:.3f}"

    w, h = (nx + 2) * s, (ny + 2) * s
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" viewBox="0 0 {w:.3f} {h:.3f}">']
    for i, j in domain.faces:
        out.append(f'<rect x="{X(i)}" y="{Y(j + 1)}" width="{s:.3f}" height="{s:.3f}" fill="#f4f4f4" stroke="#ddd" stroke-width="0.5"/>')
    if open_edges is not None:
        for (u, v), o in zip(domain.edges, open_edges):
            if o:
                (x1, y1), (x2, y2) = domain.vertices[u], domain.vertices[v]
                out.append(f'<line x1="{X(x1)}" y1="{Y(y1)}" x2="{X(x2)}" y2="{Y(y2)}" stroke="#c00" stroke-width="1.5"/>')
    if spins is not None:
        r = s * 0.15
        for (x, y), sp in zip(domain.vertices, spins):
            fill = "#000" if sp < 0 else "#fff"
            out.append(f'<circle cx="{X(x)}" cy="{Y(y)}" r="{r:.3f}" fill="{fill}" stroke="#000" stroke-width="0.4"/>')
    if collection is not None:
        for l in collection:
            g = l.grid_points / l.scale
            col = _PALETTE[((l.level or 1) - 1) % len(_PALETTE)]
            pts = " ".join(f"{X(x)},{Y(y)}" for x, y in g)
            out.append(f'<polygon points="{pts}" fill="none" stroke="{col}" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def dumps(doc) -> str:
    """Deterministic JSON text."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))

"""Discrete domains of the square grid and their derived graphs.

A domain is a finite, simply-connected union of unit faces of the grid of
mesh ``delta``. Face ``(i, j)`` is the cell ``[i, i+1] x [j, j+1]`` (scaled by
the mesh). Vertices, edges and all derived graphs are indexed
deterministically in row-major order (rows are ``y``), horizontal edges
before vertical ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from functools import cached_property
from typing import Sequence

import numpy as np
import shapely
from scipy import ndimage

__all__ = [
    "DiscreteDomain",
    "GraphView",
    "Rectangle",
    "Disk",
    "Ellipse",
    "Polygon",
    "build_rectangle",
    "discretize_shape",
    "derive_dual",
    "derive_medial",
    "derive_bimedial",
    "domain_to_json",
    "domain_from_json",
    "parse_shape",
]

_FOUR = ndimage.generate_binary_structure(2, 1)


class DomainError(ValueError):
    """Raised for invalid or degenerate discrete domains."""


@dataclass(frozen=True)
class GraphView:
    """A derived graph with planar coordinates.

    ``crosses`` gives, for every edge, the index of the primal edge it
    crosses (or ``-1``); ``crosses_dual`` the index of the primal edge whose
    dual it crosses (or ``-1``).
    """

    points: np.ndarray
    edges: np.ndarray
    crosses: np.ndarray
    crosses_dual: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)


def _mesh_str(mesh) -> str:
    return str(Decimal(str(mesh)).normalize()) if not isinstance(mesh, str) else mesh


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Simply-connected union of grid faces at a given mesh.

    Parameters
    ----------
    faces : array_like of shape (n, 2)
        Integer face coordinates ``(i, j)``.
    mesh : float or str
        Mesh size; kept as a decimal string for serialization.
    check : bool
        Validate connectivity and simple connectivity.
    """

    faces: np.ndarray
    mesh_str: str = "1"
    check: bool = field(default=True, repr=False)

    def __init__(self, faces, mesh=1.0, check: bool = True):
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 2)
        if len(faces) == 0:
            raise DomainError("a domain needs at least one face")
        faces = np.unique(faces, axis=0)
        order = np.lexsort((faces[:, 0], faces[:, 1]))
        faces = faces[order]
        faces.setflags(write=False)
        mesh_s = _mesh_str(mesh)
        if not float(mesh_s) > 0:
            raise DomainError("mesh must be positive")
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "mesh_str", mesh_s)
        object.__setattr__(self, "check", check)
        if check:
            self._validate()

    # -- basic geometry --------------------------------------------------
    @property
    def mesh(self) -> float:
        return float(self.mesh_str)

    @cached_property
    def origin(self) -> tuple[int, int]:
        return int(self.faces[:, 0].min()), int(self.faces[:, 1].min())

    @cached_property
    def face_mask(self) -> np.ndarray:
        """Boolean mask indexed ``[i - i0, j - j0]``."""
        i0, j0 = self.origin
        nx = int(self.faces[:, 0].max()) - i0 + 1
        ny = int(self.faces[:, 1].max()) - j0 + 1
        mask = np.zeros((nx, ny), dtype=bool)
        mask[self.faces[:, 0] - i0, self.faces[:, 1] - j0] = True
        mask.setflags(write=False)
        return mask

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def _validate(self):
        mask = self.face_mask
        _, ncomp = ndimage.label(mask, structure=_FOUR)
        if ncomp != 1:
            raise DomainError("faces are not edge-connected")
        padded = np.pad(~mask, 1, constant_values=True)
        _, nout = ndimage.label(padded, structure=_FOUR)
        if nout != 1:
            raise DomainError("domain is not simply connected")

    # -- vertices ----------------------------------------------------------
    @cached_property
    def vertex_mask(self) -> np.ndarray:
        f = self.face_mask
        nx, ny = f.shape
        v = np.zeros((nx + 1, ny + 1), dtype=bool)
        v[:-1, :-1] |= f
        v[1:, :-1] |= f
        v[:-1, 1:] |= f
        v[1:, 1:] |= f
        return v

    @cached_property
    def vertex_index(self) -> np.ndarray:
        """Grid of vertex indices (``-1`` outside), indexed ``[x - i0, y - j0]``."""
        return _rowmajor_index(self.vertex_mask)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Integer vertex coordinates, shape (nv, 2)."""
        i0, j0 = self.origin
        ys, xs = np.nonzero(self.vertex_mask.T)
        return np.column_stack([xs + i0, ys + j0]).astype(np.int64)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    # -- edges ---------------------------------------------------------------
    @cached_property
    def _edge_grids(self):
        f = self.face_mask
        nx, ny = f.shape
        # horizontal edge (x,y)-(x+1,y): faces (x,y) above, (x,y-1) below
        above_h = np.zeros((nx, ny + 1), dtype=bool)
        below_h = np.zeros((nx, ny + 1), dtype=bool)
        above_h[:, :-1] = f
        below_h[:, 1:] = f
        # vertical edge (x,y)-(x,y+1): faces (x,y) right, (x-1,y) left
        right_v = np.zeros((nx + 1, ny), dtype=bool)
        left_v = np.zeros((nx + 1, ny), dtype=bool)
        right_v[:-1, :] = f
        left_v[1:, :] = f
        return above_h, below_h, right_v, left_v

    @cached_property
    def hedge_index(self) -> np.ndarray:
        above, below, _, _ = self._edge_grids
        return _rowmajor_index(above | below)

    @cached_property
    def vedge_index(self) -> np.ndarray:
        _, _, right, left = self._edge_grids
        nh = int((self.hedge_index >= 0).sum())
        return _rowmajor_index(right | left, start=nh)

    @cached_property
    def _edge_tables(self):
        i0, j0 = self.origin
        above, below, right, left = self._edge_grids
        vi = self.vertex_index
        hy, hx = np.nonzero(self.hedge_index.T >= 0)
        vy, vx = np.nonzero(self.vedge_index.T >= 0)
        h_uv = np.column_stack([vi[hx, hy], vi[hx + 1, hy]])
        v_uv = np.column_stack([vi[vx, vy], vi[vx, vy + 1]])
        edges = np.vstack([h_uv, v_uv]).astype(np.int64)
        coords = np.vstack(
            [
                np.column_stack([hx + i0, hy + j0, np.zeros_like(hx)]),
                np.column_stack([vx + i0, vy + j0, np.ones_like(vx)]),
            ]
        ).astype(np.int64)
        nfaces = np.concatenate(
            [
                above[hx, hy].astype(int) + below[hx, hy].astype(int),
                right[vx, vy].astype(int) + left[vx, vy].astype(int),
            ]
        )
        return edges, coords, nfaces

    @property
    def edges(self) -> np.ndarray:
        """Vertex-index pairs, shape (ne, 2)."""
        return self._edge_tables[0]

    @property
    def edge_coords(self) -> np.ndarray:
        """Per edge ``(x, y, orient)``: lower-left endpoint and 0=horizontal, 1=vertical."""
        return self._edge_tables[1]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def interior_edge(self) -> np.ndarray:
        return self._edge_tables[2] == 2

    @cached_property
    def boundary_edge(self) -> np.ndarray:
        return self._edge_tables[2] == 1

    @cached_property
    def boundary_vertex(self) -> np.ndarray:
        bv = np.zeros(self.n_vertices, dtype=bool)
        bv[self.edges[self.boundary_edge].ravel()] = True
        return bv

    @cached_property
    def boundary_pair_edge(self) -> np.ndarray:
        """Edges with both endpoints on the boundary (forced open when wired)."""
        bv = self.boundary_vertex
        return bv[self.edges[:, 0]] & bv[self.edges[:, 1]]

    def edge_lookup(self, x: int, y: int, orient: int) -> int:
        i0, j0 = self.origin
        grid = self.hedge_index if orient == 0 else self.vedge_index
        a, b = x - i0, y - j0
        if 0 <= a < grid.shape[0] and 0 <= b < grid.shape[1]:
            return int(grid[a, b])
        return -1

    def vertex_lookup(self, x: int, y: int) -> int:
        i0, j0 = self.origin
        a, b = x - i0, y - j0
        vi = self.vertex_index
        if 0 <= a < vi.shape[0] and 0 <= b < vi.shape[1]:
            return int(vi[a, b])
        return -1

    def has_face(self, i: int, j: int) -> bool:
        i0, j0 = self.origin
        a, b = i - i0, j - j0
        f = self.face_mask
        return bool(0 <= a < f.shape[0] and 0 <= b < f.shape[1] and f[a, b])

    # -- boundary circuit ----------------------------------------------------
    @cached_property
    def boundary_circuit(self) -> np.ndarray:
        """Boundary vertices in counterclockwise cyclic order (domain on the left)."""
        above, below, right, left = self._edge_grids
        i0, j0 = self.origin
        succ: dict[tuple[int, int], tuple[int, int]] = {}

        def add(a, b):
            if a in succ:
                raise DomainError("boundary circuit is not simple")
            succ[a] = b

        for x, y in zip(*np.nonzero(above ^ below)):
            p, q = (x + i0, y + j0), (x + i0 + 1, y + j0)
            add(p, q) if above[x, y] else add(q, p)
        for x, y in zip(*np.nonzero(right ^ left)):
            p, q = (x + i0, y + j0), (x + i0, y + j0 + 1)
            add(p, q) if left[x, y] else add(q, p)
        start = min(succ, key=lambda v: (v[1], v[0]))
        cycle = [start]
        cur = succ[start]
        while cur != start:
            cycle.append(cur)
            cur = succ[cur]
            if len(cycle) > len(succ):
                raise DomainError("boundary circuit is not a single cycle")
        if len(cycle) != len(succ):
            raise DomainError("boundary has several components")
        return np.array([self.vertex_lookup(x, y) for x, y in cycle], dtype=np.int64)

    @cached_property
    def boundary_walk(self) -> tuple[np.ndarray, np.ndarray]:
        """Counterclockwise boundary walk ``(vertices, edges)`` tolerating pinch points.

        Edge ``k`` joins ``vertices[k]`` to ``vertices[k + 1]`` (cyclically).
        Where two faces touch only at a corner the walk turns right, so the
        vertex is visited twice and the whole outer boundary is one walk.
        """
        above, below, right, left = self._edge_grids
        i0, j0 = self.origin
        out: dict[tuple[int, int], list] = {}
        for x, y in zip(*np.nonzero(above ^ below)):
            p, q = (x + i0, y + j0), (x + i0 + 1, y + j0)
            a, b = (p, q) if above[x, y] else (q, p)
            out.setdefault(a, []).append((b, self.edge_lookup(x + i0, y + j0, 0)))
        for x, y in zip(*np.nonzero(right ^ left)):
            p, q = (x + i0, y + j0), (x + i0, y + j0 + 1)
            a, b = (p, q) if left[x, y] else (q, p)
            out.setdefault(a, []).append((b, self.edge_lookup(x + i0, y + j0, 1)))
        start = min(out, key=lambda v: (v[1], v[0]))
        used = set()
        verts, edges = [], []
        cur, d_in = start, (1, 0)
        while True:
            cand = [c for c in out[cur] if c[1] not in used]
            if not cand:
                break
            if len(cand) > 1:
                # rightmost turn relative to the incoming direction
                def turn(c):
                    d = (c[0][0] - cur[0], c[0][1] - cur[1])
                    cross = d_in[0] * d[1] - d_in[1] * d[0]
                    dot = d_in[0] * d[0] + d_in[1] * d[1]
                    return (cross, -dot)

                cand.sort(key=turn)
            nxt, e = cand[0]
            used.add(e)
            verts.append(self.vertex_lookup(*cur))
            edges.append(e)
            d_in = (nxt[0] - cur[0], nxt[1] - cur[1])
            cur = nxt
            if cur == start and all(c[1] in used for c in out[start]):
                break
        return np.array(verts, dtype=np.int64), np.array(edges, dtype=np.int64)

    # -- embedding -------------------------------------------------------------
    def embed(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) * self.mesh

    @cached_property
    def vertex_points(self) -> np.ndarray:
        return self.embed(self.vertices)

    @cached_property
    def face_centers(self) -> np.ndarray:
        return self.embed(self.faces + 0.5)

    def diameter(self) -> float:
        return _point_diameter(self.vertex_points[self.boundary_circuit])

    def sub_domain(self, faces, check: bool = True) -> "DiscreteDomain":
        return DiscreteDomain(faces, self.mesh_str, check=check)

    def __repr__(self):
        return (
            f"DiscreteDomain(n_faces={self.n_faces}, n_vertices={self.n_vertices}, "
            f"n_edges={self.n_edges}, mesh={self.mesh_str})"
        )

    def __eq__(self, other):
        return (
            isinstance(other, DiscreteDomain)
            and self.mesh_str == other.mesh_str
            and np.array_equal(self.faces, other.faces)
        )

    def __hash__(self):
        return hash((self.mesh_str, self.faces.tobytes()))


def _rowmajor_index(mask, start: int = 0) -> np.ndarray:
    """Index the True cells of an ``[x, y]`` mask in row-major (y, then x) order."""
    t = mask.T
    order = np.cumsum(t.ravel()).reshape(t.shape) - 1 + start
    return np.where(t, order, -1).T.astype(np.int64).copy()


def _point_diameter(pts) -> float:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 3:
        try:
            from scipy.spatial import ConvexHull

            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # degenerate (collinear) input
            pass
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


# -- constructors ---------------------------------------------------------------
def build_rectangle(width_cells: int, height_cells: int, mesh: float = 1.0) -> DiscreteDomain:
    """Rectangle of ``width_cells x height_cells`` faces with lower-left corner at the origin."""
    if int(width_cells) < 1 or int(height_cells) < 1:
        raise DomainError("rectangle dimensions must be >= 1")
    if not float(mesh) > 0:
        raise DomainError("mesh must be positive")
    i, j = np.meshgrid(np.arange(width_cells), np.arange(height_cells), indexing="ij")
    return DiscreteDomain(np.column_stack([i.ravel(), j.ravel()]), mesh)


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    def geometry(self):
        return shapely.box(self.x0, self.y0, self.x1, self.y1)


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    r: float

    def geometry(self):
        return None

    def covers(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.r**2 * (1 + 1e-12)

    def bounds(self):
        return self.cx - self.r, self.cy - self.r, self.cx + self.r, self.cy + self.r


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float
    b: float

    def geometry(self):
        return None

    def covers(self, x, y):
        return ((x - self.cx) / self.a) ** 2 + ((y - self.cy) / self.b) ** 2 <= 1 + 1e-12

    def bounds(self):
        return self.cx - self.a, self.cy - self.b, self.cx + self.a, self.cy + self.b


@dataclass(frozen=True)
class Polygon:
    points: tuple

    def geometry(self):
        return shapely.Polygon(self.points)


def _covers(shape, x, y):
    if hasattr(shape, "covers"):
        return shape.covers(x, y)
    geom = shape.geometry()
    return shapely.covers(geom, shapely.points(x, y)) | (
        shapely.distance(geom, shapely.points(x, y)) < 1e-12
    )


def _bounds(shape):
    if hasattr(shape, "bounds"):
        return shape.bounds()
    return shape.geometry().bounds


def discretize_shape(shape, mesh: float) -> DiscreteDomain:
    """Faces whose four corners lie in the closed shape, largest component kept."""
    mesh = float(mesh)
    if not mesh > 0:
        raise DomainError("mesh must be positive")
    xmin, ymin, xmax, ymax = _bounds(shape)
    i = np.arange(int(np.floor(xmin / mesh)) - 1, int(np.ceil(xmax / mesh)) + 1)
    j = np.arange(int(np.floor(ymin / mesh)) - 1, int(np.ceil(ymax / mesh)) + 1)
    cx, cy = np.meshgrid(np.append(i, i[-1] + 1), np.append(j, j[-1] + 1), indexing="ij")
    inside = np.asarray(_covers(shape, cx.ravel() * mesh, cy.ravel() * mesh)).reshape(cx.shape)
    faces_in = inside[:-1, :-1] & inside[1:, :-1] & inside[:-1, 1:] & inside[1:, 1:]
    if not faces_in.any():
        raise DomainError("empty discretization at this mesh")
    lab, n = ndimage.label(faces_in, structure=_FOUR)
    sizes = np.bincount(lab.ravel())[1:]
    keep = lab == (int(np.argmax(sizes)) + 1)
    a, b = np.nonzero(keep)
    return DiscreteDomain(np.column_stack([i[a], j[b]]), mesh)


def parse_shape(text: str):
    """Parse ``rect:WxH``, ``rectangle:x0,y0,x1,y1``, ``disk:r``, ``ellipse:a,b``, ``polygon:x,y;x,y;...``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "rect":
        w, _, h = arg.lower().partition("x")
        return ("rect", int(w), int(h))
    if kind == "rectangle":
        return Rectangle(*map(float, arg.split(",")))
    if kind == "disk":
        vals = list(map(float, arg.split(",")))
        return Disk(0.0, 0.0, vals[0]) if len(vals) == 1 else Disk(*vals)
    if kind == "ellipse":
        vals = list(map(float, arg.split(",")))
        return Ellipse(0.0, 0.0, *vals) if len(vals) == 2 else Ellipse(*vals)
    if kind == "polygon":
        pts = tuple(tuple(map(float, p.split(","))) for p in arg.split(";"))
        return Polygon(pts)
    raise ValueError(f"unknown shape {text!r}")


# -- derived graphs --------------------------------------------------------------
def derive_dual(domain: DiscreteDomain) -> GraphView:
    """Dual graph: one vertex per face, one edge per interior primal edge."""
    i0, j0 = domain.origin
    fidx = np.full(domain.face_mask.shape, -1, dtype=np.int64)
    fidx[domain.faces[:, 0] - i0, domain.faces[:, 1] - j0] = np.arange(domain.n_faces)
    ec = domain.edge_coords
    inner = np.nonzero(domain.interior_edge)[0]
    x, y, o = ec[inner, 0] - i0, ec[inner, 1] - j0, ec[inner, 2]
    # horizontal edge separates faces (x,y-1),(x,y); vertical separates (x-1,y),(x,y)
    fa = np.where(o == 0, fidx[x, np.maximum(y - 1, 0)], fidx[np.maximum(x - 1, 0), y])
    fb = fidx[np.minimum(x, fidx.shape[0] - 1), np.minimum(y, fidx.shape[1] - 1)]
    edges = np.column_stack([fa, fb]).astype(np.int64)
    return GraphView(
        points=domain.face_centers.copy(),
        edges=edges,
        crosses=inner.astype(np.int64),
        crosses_dual=np.full(len(inner), -1, dtype=np.int64),
    )


def derive_medial(domain: DiscreteDomain) -> GraphView:
    """Medial graph: edge midpoints, adjacent when consecutive around a domain face."""
    ec = domain.edge_coords
    mid = ec[:, :2] + np.where(ec[:, 2:3] == 0, [[0.5, 0.0]], [[0.0, 0.5]])
    pairs = []
    for i, j in domain.faces:
        b = domain.edge_lookup(i, j, 0)
        t = domain.edge_lookup(i, j + 1, 0)
        lft = domain.edge_lookup(i, j, 1)
        r = domain.edge_lookup(i + 1, j, 1)
        pairs += [(b, r), (r, t), (t, lft), (lft, b)]
    edges = np.array(sorted({tuple(sorted(p)) for p in pairs}), dtype=np.int64).reshape(-1, 2)
    return GraphView(
        points=domain.embed(mid),
        edges=edges,
        crosses=np.full(len(edges), -1, dtype=np.int64),
        crosses_dual=np.full(len(edges), -1, dtype=np.int64),
    )


def derive_bimedial(domain: DiscreteDomain) -> GraphView:
    """Bi-medial graph of the domain, embedded on the quarter-offset half lattice.

    Vertices are the four quarter-points of every face; edges are the sides of
    the small squares around faces (crossing dual edges) and around vertices
    (crossing primal edges), kept when both endpoints lie in the domain.
    """
    from . import _bimedial as bm

    pts4 = bm.domain_bimedial_points(domain)
    key = {tuple(p): k for k, p in enumerate(map(tuple, pts4))}
    edges, crosses, crosses_dual = [], [], []
    for k, (X, Y) in enumerate(pts4):
        for dx, dy in ((2, 0), (0, 2)):
            nb = key.get((X + dx, Y + dy))
            if nb is None:
                continue
            eid, is_dual = bm.crossed_edge(domain, (X, Y), (X + dx, Y + dy))
            edges.append((k, nb))
            crosses.append(-1 if is_dual else eid)
            crosses_dual.append(eid if is_dual else -1)
    return GraphView(
        points=domain.embed(pts4 / 4.0),
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        crosses=np.array(crosses, dtype=np.int64),
        crosses_dual=np.array(crosses_dual, dtype=np.int64),
    )


# -- serialization ---------------------------------------------------------------
def domain_to_json(domain: DiscreteDomain) -> dict:
    return {"mesh": domain.mesh_str, "faces": domain.faces.tolist()}


def domain_from_json(doc: dict) -> DiscreteDomain:
    try:
        mesh = doc["mesh"]
        faces = doc["faces"]
    except KeyError as exc:
        raise DomainError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(mesh, str):
        raise DomainError("mesh must be a decimal string")
    return DiscreteDomain(np.asarray(faces, dtype=np.int64), mesh)

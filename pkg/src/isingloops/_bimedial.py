"""Interface tracing on the bi-medial lattice.

Bi-medial points live on ``1/2 Z^2 + (1/4, 1/4)``; internally they are kept
in quarter units, ``X = 4 * x``, so every coordinate is odd. Inside a padded
box with lower-left face ``(ip0, jp0)``, point ``(gx, gy)`` of the point grid
sits at ``X = 4 * ip0 + 1 + 2 * gx``.

Each bi-medial edge crosses exactly one primal or one dual edge. It is an
interface edge iff it crosses a closed primal edge or a closed dual edge
(i.e. an open primal one). On the square lattice every point then has
exactly two interface edges, and orienting them with the primal cluster on
the left depends only on parity: horizontal edges of even rows point to
``-x``, of odd rows to ``+x``; vertical edges of even columns point to
``+y``, of odd columns to ``-y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class Box:
    ip0: int
    jp0: int
    nx: int  # faces
    ny: int

    @classmethod
    def around(cls, domain, pad: int = 1) -> "Box":
        i0, j0 = domain.origin
        nx, ny = domain.face_mask.shape
        return cls(i0 - pad, j0 - pad, nx + 2 * pad, ny + 2 * pad)

    @property
    def shape(self):
        return 2 * self.nx, 2 * self.ny

    def quarter(self, gx, gy):
        return 4 * self.ip0 + 1 + 2 * np.asarray(gx), 4 * self.jp0 + 1 + 2 * np.asarray(gy)

    def grid(self, X, Y):
        return (np.asarray(X) - 4 * self.ip0 - 1) // 2, (np.asarray(Y) - 4 * self.jp0 - 1) // 2


def edge_state_grids(domain, open_edges, box: Box, exterior_open: bool, overrides=None):
    """Open/closed state of every lattice edge in the box.

    Domain edges take ``open_edges``; edges outside the domain take
    ``exterior_open``; ``overrides`` maps domain edge index -> state.
    """
    hopen = np.full((box.nx, box.ny + 1), exterior_open, dtype=bool)
    vopen = np.full((box.nx + 1, box.ny), exterior_open, dtype=bool)
    state = np.asarray(open_edges, dtype=bool).copy()
    if overrides:
        for e, s in overrides.items():
            state[e] = s
    ec = domain.edge_coords
    x = ec[:, 0] - box.ip0
    y = ec[:, 1] - box.jp0
    h = ec[:, 2] == 0
    hopen[x[h], y[h]] = state[h]
    vopen[x[~h], y[~h]] = state[~h]
    return hopen, vopen


def interface_flags(hopen, vopen):
    """Interface indicator for horizontal (gx,gx+1) and vertical (gy,gy+1) bi-medial edges."""
    nx, ny = hopen.shape[0], vopen.shape[1]
    GX, GY = 2 * nx, 2 * ny
    gx = np.arange(GX - 1)[:, None]
    gy = np.arange(GY)[None, :]
    odd = (gx % 2 == 1)
    hint = np.where(
        odd,
        ~vopen[np.minimum((gx + 1) // 2, nx), np.broadcast_to(gy // 2, (GX - 1, GY))],
        hopen[np.broadcast_to(gx // 2, (GX - 1, GY)), (gy + 1) // 2],
    )
    gx = np.arange(GX)[:, None]
    gy = np.arange(GY - 1)[None, :]
    oddy = (gy % 2 == 1)
    vint = np.where(
        oddy,
        ~hopen[np.broadcast_to(gx // 2, (GX, GY - 1)), np.minimum((gy + 1) // 2, ny)],
        vopen[(gx + 1) // 2, np.broadcast_to(gy // 2, (GX, GY - 1))],
    )
    return hint, vint


def successor_grid(hopen, vopen):
    """Flat successor index along interfaces (primal cluster on the left), -1 if none."""
    hint, vint = interface_flags(hopen, vopen)
    GX, GY = hint.shape[0] + 1, hint.shape[1]
    succ = np.full((GX, GY), -1, dtype=np.int64)
    flat = np.arange(GX * GY).reshape(GX, GY)
    gy_even = (np.arange(GY) % 2 == 0)[None, :]
    # horizontal edge between gx and gx+1
    fw = hint & ~gy_even  # +x: from gx to gx+1
    bw = hint & gy_even  # -x: from gx+1 to gx
    a, b = np.nonzero(fw)
    succ[a, b] = flat[a + 1, b]
    a, b = np.nonzero(bw)
    succ[a + 1, b] = flat[a, b]
    gx_even = (np.arange(GX) % 2 == 0)[:, None]
    up = vint & gx_even
    dn = vint & ~gx_even
    a, b = np.nonzero(up)
    succ[a, b] = flat[a, b + 1]
    a, b = np.nonzero(dn)
    succ[a, b + 1] = flat[a, b]
    return succ.ravel()


@numba.njit(cache=True)
def _cycles(succ):
    n = succ.shape[0]
    label = np.full(n, -1, np.int64)
    order = np.empty(n, np.int64)
    starts = []
    pos = 0
    ncyc = 0
    for s in range(n):
        if label[s] != -1 or succ[s] < 0:
            continue
        # walk; mark provisional
        cur = s
        start_pos = pos
        ok = True
        while True:
            if label[cur] != -1:
                ok = label[cur] == -2 and cur == s
                break
            if succ[cur] < 0:
                ok = False
                break
            label[cur] = -2
            order[pos] = cur
            pos += 1
            cur = succ[cur]
        if ok:
            for k in range(start_pos, pos):
                label[order[k]] = ncyc
            starts.append(start_pos)
            ncyc += 1
        else:
            for k in range(start_pos, pos):
                label[order[k]] = -3
            pos = start_pos
    starts.append(pos)
    return label, order[:pos], np.array(starts, np.int64)


def cycles(succ):
    """Decompose a successor map into its cycles (chains are dropped)."""
    label, order, starts = _cycles(np.asarray(succ, dtype=np.int64))
    return [order[starts[k] : starts[k + 1]] for k in range(len(starts) - 1)]


def domain_face_points(domain, box: Box):
    """Boolean grid: point belongs to the square of a domain face."""
    GX, GY = box.shape
    i0, j0 = domain.origin
    fm = np.zeros((box.nx, box.ny), dtype=bool)
    fm[i0 - box.ip0 : i0 - box.ip0 + domain.face_mask.shape[0], j0 - box.jp0 : j0 - box.jp0 + domain.face_mask.shape[1]] = domain.face_mask
    return np.repeat(np.repeat(fm, 2, axis=0), 2, axis=1)


def domain_bimedial_points(domain) -> np.ndarray:
    """Quarter-unit coordinates of the bi-medial points of a domain, row-major."""
    f = domain.faces
    pts = np.concatenate(
        [
            np.column_stack([4 * f[:, 0] + dx, 4 * f[:, 1] + dy])
            for dx in (1, 3)
            for dy in (1, 3)
        ]
    )
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return pts[order]


def crossed_edge(domain, p, q):
    """Primal edge index crossed (directly or through its dual) by the bi-medial edge p-q.

    Returns ``(edge_index, crosses_dual)``; the index is -1 for edges outside
    the domain.
    """
    (X1, Y1), (X2, Y2) = p, q
    if Y1 == Y2:
        L = min(X1, X2) + 1
        if L % 4 == 0:
            return domain.edge_lookup(L // 4, Y1 // 4, 1), False
        return domain.edge_lookup((L - 2) // 4, (Y1 + 1) // 4, 0), True
    M = min(Y1, Y2) + 1
    if M % 4 == 0:
        return domain.edge_lookup(X1 // 4, M // 4, 0), False
    return domain.edge_lookup((X1 + 1) // 4, (M - 2) // 4, 1), True


def crossed_edge_grid(box: Box, g1, g2):
    """Lattice edge ``(x, y, orient)`` and dual flag for a grid-adjacent point pair."""
    (gx1, gy1), (gx2, gy2) = g1, g2
    if gy1 == gy2:
        gx = min(gx1, gx2)
        if gx % 2 == 1:
            return (box.ip0 + (gx + 1) // 2, box.jp0 + gy1 // 2, 1), False
        return (box.ip0 + gx // 2, box.jp0 + (gy1 + 1) // 2, 0), True
    gy = min(gy1, gy2)
    if gy % 2 == 1:
        return (box.ip0 + gx1 // 2, box.jp0 + (gy + 1) // 2, 0), False
    return (box.ip0 + (gx1 + 1) // 2, box.jp0 + gy // 2, 1), True

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isingloops import _bimedial as bm
from isingloops.fk_ising import (
    FKConfiguration,
    FKParams,
    IsingParams,
    SpinConfiguration,
    ising_from_fk,
    make_rng,
    sample_fk,
    sample_ising,
)
from isingloops.lattice import build_rectangle
from isingloops.loops import (
    Loop,
    LoopCollection,
    classify_fk_levels,
    classify_ising_levels,
    containment,
    cut_out_domains,
    extract_fk_loops,
    extract_ising_loops,
    fk_loops_with_levels,
    ising_interface_edges,
    loops_from_json,
    loops_to_json,
    render_svg,
    spin_grid,
    strong_clusters,
)
from isingloops.metric import are_non_crossing, is_simple


def spins_from_minus(d, minus):
    s = np.ones(d.n_vertices, dtype=np.int8)
    for x, y in minus:
        s[d.vertex_lookup(x, y)] = -1
    return s


def plus_config(d, minus):
    return SpinConfiguration(d, spins_from_minus(d, minus), "plus")


def random_plus(d, seed, p_minus=0.5):
    rng = np.random.default_rng(seed)
    s = np.where(rng.random(d.n_vertices) < p_minus, -1, 1).astype(np.int8)
    s[d.boundary_vertex] = 1
    return SpinConfiguration(d, s, "plus")


# -- Ising extraction examples ------------------------------------------------------
def test_all_plus_empty():
    d = build_rectangle(3, 3)
    c = SpinConfiguration(d, np.ones(d.n_vertices), "plus")
    assert len(extract_ising_loops(c, "leftmost")) == 0
    assert len(extract_ising_loops(c, "rightmost")) == 0


def test_single_minus_centre():
    # 3x3 vertices, minus at the centre vertex
    d = build_rectangle(2, 2)
    c = plus_config(d, [(1, 1)])
    left = extract_ising_loops(c, "leftmost")
    right = extract_ising_loops(c, "rightmost")
    assert len(left) == 1 and len(left[0]) == 4
    assert left[0].orientation == "clockwise"
    assert left[0] == right[0]
    lv = classify_ising_levels(left, c)
    assert lv[0].level == 1


def test_diagonal_minus_pair():
    # 4x4 vertices, minus spins sharing a checkerboard face
    d = build_rectangle(3, 3)
    c = plus_config(d, [(1, 1), (2, 2)])
    left = extract_ising_loops(c, "leftmost")
    right = extract_ising_loops(c, "rightmost")
    # the leftmost loop keeps the two plus corners of the checkerboard face on its left
    assert sorted(len(l) for l in left) == [8]
    assert sorted(len(l) for l in right) == [4, 4]
    assert all(l.orientation == "clockwise" for l in list(left) + list(right))


def test_nested_ring_levels():
    # 5x5 vertices: minus ring around a plus centre
    d = build_rectangle(4, 4)
    ring = [(x, y) for x in (1, 2, 3) for y in (1, 2, 3) if (x, y) != (2, 2)]
    c = plus_config(d, ring)
    for chir in ("leftmost", "rightmost"):
        lv = classify_ising_levels(extract_ising_loops(c, chir), c)
        by_level = {l.level: l for l in lv}
        assert sorted(by_level) == [1, 2]
        outer, inner = by_level[1], by_level[2]
        assert outer.orientation == "clockwise"
        assert inner.orientation == "counterclockwise"
        assert containment(outer, inner)
        assert not containment(inner, outer)


def test_levels_reject_wrong_bc_and_mismatch():
    d = build_rectangle(3, 3)
    c = plus_config(d, [(1, 1)])
    coll = extract_ising_loops(c)
    with pytest.raises(ValueError):
        classify_ising_levels(coll, SpinConfiguration(d, c.spins, "free"))
    with pytest.raises(ValueError):
        classify_ising_levels(coll, plus_config(d, [(2, 2)]))
    with pytest.raises(ValueError):
        extract_ising_loops(c, "middle")


# -- Ising invariants ---------------------------------------------------------------
def _left_right_corners(loop, S, i0, j0):
    """Per face visit: spins at the corners left and right of the path."""
    g = loop.grid_points
    n = len(g)
    out = []
    for k in range(n):
        a, o, b = g[k - 1], g[k], g[(k + 1) % n]
        d1, d2 = o - a, b - o
        left, right = [], []
        for cx in (-1, 1):
            for cy in (-1, 1):
                c = np.array([cx, cy])
                l1 = d1[0] * c[1] - d1[1] * c[0] > 0
                l2 = d2[0] * c[1] - d2[1] * c[0] > 0
                turn = d1[0] * d2[1] - d1[1] * d2[0]
                is_left = (l1 and l2) if turn > 0 else (l1 or l2)
                v = (o + c) // 2
                spin = S[v[0] - i0, v[1] - j0]
                (left if is_left else right).append(spin)
        out.append((left, right))
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 6), st.floats(0.2, 0.8))
def test_chirality_strong_paths(seed, n, pm):
    d = build_rectangle(n, n)
    c = random_plus(d, seed, pm)
    S = spin_grid(c)
    i0, j0 = d.origin
    for l in extract_ising_loops(c, "leftmost"):
        for left, right in _left_right_corners(l, S, i0, j0):
            assert all(s > 0 for s in left)
    for l in extract_ising_loops(c, "rightmost"):
        for left, right in _left_right_corners(l, S, i0, j0):
            assert all(s < 0 for s in right)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 6))
def test_ising_loop_invariants(seed, n):
    d = build_rectangle(n, n)
    c = random_plus(d, seed)
    iface = ising_interface_edges(c)
    # every face sees an even number of interface edges
    for i, j in d.faces:
        k = sum(iface[d.edge_lookup(*e)] for e in [(i, j, 0), (i, j + 1, 0), (i, j, 1), (i + 1, j, 1)])
        assert k % 2 == 0
    for chir in ("leftmost", "rightmost"):
        coll = extract_ising_loops(c, chir)
        used = [e for l in coll for e in l.edges]
        assert len(used) == len(set(used)) == int(iface.sum())
        for l in coll:
            # plus on the left of every traversed dual edge
            g = l.grid_points
            nxt = np.roll(g, -1, axis=0)
            for a, b, e in zip(g, nxt, np.roll(l.edges, -1)):
                u, v = d.edges[e]
                mid = (a + b) / 2
                step = b - a
                left = mid + np.array([-step[1], step[0]]) / 2
                pu = d.vertices[u] * 2
                plus = u if c.spins[u] > 0 else v
                assert np.array_equal(d.vertices[plus] * 2, left)
            assert is_simple(l) or len(l) >= 8
            assert len(set(l.edges)) == len(l.edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 6))
def test_chirality_duality(seed, n):
    d = build_rectangle(n, n)
    c = random_plus(d, seed)
    neg = SpinConfiguration(d, -c.spins, "minus")
    right = {l.key() for l in extract_ising_loops(c, "rightmost")}
    left_neg = {l.reversed().key() for l in extract_ising_loops(neg, "leftmost")}
    assert right == left_neg


def _weak_minus_separated(d, c, loop):
    """Level-1 oracle: the left plus vertices reach the boundary strong plus cluster."""
    lab = strong_clusters(c, 1)
    bl = set(lab[d.boundary_vertex]) - {-1}
    for e in loop.edges:
        u, v = d.edges[e]
        plus = u if c.spins[u] > 0 else v
        if lab[plus] in bl:
            return False
    return True


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 6), st.floats(0.2, 0.8))
def test_levels_match_oracles(seed, n, pm):
    d = build_rectangle(n, n)
    c = random_plus(d, seed, pm)
    coll = classify_ising_levels(extract_ising_loops(c, "leftmost"), c)
    loops = list(coll)
    for l in loops:
        assert (l.level == 1) == (not _weak_minus_separated(d, c, l))
        # level-k loops sit directly inside a level-(k-1) loop
        enclosing = [m for m in loops if m is not l and _strictly_inside(l, m)]
        assert l.level == 1 + len(enclosing)


def _inner_probe(l):
    """Point a quarter step off the first edge midpoint, on the enclosed side."""
    p = l.points
    a, b = p[0], p[1]
    step = b - a
    normal = np.array([-step[1], step[0]]) / np.hypot(*step)
    sign = 1 if l.orientation == "counterclockwise" else -1
    return (a + b) / 2 + sign * normal * np.hypot(*step) / 4


def _strictly_inside(l, m):
    """Whether loop ``l`` lies in the region enclosed by ``m`` (touching allowed)."""
    return containment(m, _inner_probe(l))


# -- FK loops ----------------------------------------------------------------------------
def wired_config(d, inner_open):
    w = d.boundary_pair_edge.copy()
    w = w | (d.interior_edge & inner_open)
    return FKConfiguration(d, w, "wired")


def test_fk_all_open_face_loops():
    d = build_rectangle(2, 2)
    c = wired_config(d, np.ones(d.n_edges, bool))
    coll = classify_fk_levels(extract_fk_loops(c))
    assert len(coll) == 4
    assert all(len(l) == 4 and l.level == 1 for l in coll)
    centres = sorted(tuple(np.mean(l.points, axis=0)) for l in coll)
    assert np.allclose(centres, [(0.5, 0.5), (0.5, 1.5), (1.5, 0.5), (1.5, 1.5)])
    cuts = cut_out_domains(c)
    assert len(cuts) == 4
    assert all(len(k.faces) == 1 and k.degenerate for k in cuts)


def test_fk_all_closed():
    d = build_rectangle(2, 2)
    c = wired_config(d, np.zeros(d.n_edges, bool))
    coll, _ = fk_loops_with_levels(c)
    assert sorted(l.level for l in coll) == [1, 2]
    outer = [l for l in coll if l.level == 1][0]
    inner = [l for l in coll if l.level == 2][0]
    assert containment(outer, inner)
    cuts = cut_out_domains(c)
    assert len(cuts) == 1
    assert list(cuts[0].vertices) == [d.vertex_lookup(1, 1)]
    assert len(cuts[0].faces) == 4 and cuts[0].bc == "free"


def test_fk_levels_agree():
    d = build_rectangle(6, 6)
    c = sample_fk(d, "wired", FKParams(), 30, make_rng(4))
    a, _ = fk_loops_with_levels(c)
    b = classify_fk_levels(extract_fk_loops(c))
    assert [l.level for l in a] == [l.level for l in b]


def test_cut_out_requires_wired():
    d = build_rectangle(2, 2)
    with pytest.raises(ValueError):
        cut_out_domains(FKConfiguration(d, np.ones(12, bool), "free"))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 7), st.sampled_from(["wired", "free"]))
def test_fk_loop_invariants(seed, n, bc):
    d = build_rectangle(n, n)
    c = sample_fk(d, bc, FKParams(), 5, make_rng(seed))
    coll = classify_fk_levels(extract_fk_loops(c))
    w = c.open_edges
    seen = set()
    for l in coll:
        g = [tuple(map(int, p)) for p in l.grid_points]
        for p, q in zip(g, g[1:] + g[:1]):
            assert abs(p[0] - q[0]) + abs(p[1] - q[1]) == 2
            eid, dual = bm.crossed_edge(d, p, q)
            if eid >= 0:
                # never crosses an open primal edge nor an open dual edge
                assert (w[eid] if dual else not w[eid]) or (dual and not d.interior_edge[eid])
            e = frozenset((p, q))
            assert e not in seen
            seen.add(e)
    assert are_non_crossing(list(coll))
    # level-1 loops are exactly the maximal ones
    for l in coll:
        outer = [m for m in coll if m is not l and _strictly_inside(l, m)]
        assert (l.level == 1) == (not outer)
        assert l.level == 1 + len(outer)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 7))
def test_ising_loops_inside_dual_fk(seed, n):
    d = build_rectangle(n, n)
    rng = make_rng(seed)
    omega = sample_fk(d, "wired", FKParams(), 5, rng)
    sigma = ising_from_fk(omega, "plus", rng)
    iface = ising_interface_edges(sigma)
    assert not (iface & omega.open_edges).any()
    cuts = cut_out_domains(omega)
    for l in extract_ising_loops(sigma, "leftmost"):
        faces = {tuple(map(int, (p - 1) // 2)) for p in l.grid_points}
        homes = [k for k, cut in enumerate(cuts) if faces <= {tuple(f) for f in cut.faces}]
        assert len(homes) == 1


# -- containment ----------------------------------------------------------------------
def test_containment_examples():
    d = build_rectangle(2, 2)
    sq = extract_ising_loops(plus_config(d, [(1, 1)]))[0]
    assert containment(sq, (1.0, 1.0))
    assert not containment(sq, (10.0, 10.0))
    with pytest.raises(ValueError):
        containment(sq, sq.points[0])
    d = build_rectangle(4, 4)
    big = extract_ising_loops(plus_config(d, [(1, 1), (2, 2), (2, 1), (1, 2)]))[0]
    # 4-edge square of doubled-unit points strictly inside the 8-edge loop
    small = Loop("ising", np.array([[2, 2], [2, 4], [4, 4], [4, 2]]))
    assert len(big) == 8
    assert containment(big, small)


# -- serialization ---------------------------------------------------------------------
def test_loops_json_roundtrip():
    d = build_rectangle(6, 6, 0.5)
    c = sample_ising(d, "plus", IsingParams(), 20, make_rng(2))
    coll = classify_ising_levels(extract_ising_loops(c), c)
    doc = json.loads(json.dumps(loops_to_json(coll)))
    back = loops_from_json(doc, mesh=0.5)
    assert [l.key() for l in back] == [l.key() for l in coll]
    assert [l.level for l in back] == [l.level for l in coll]
    assert all({"kind", "chirality", "level", "points"} <= set(x) for x in doc)


def test_render_svg():
    d = build_rectangle(4, 4)
    c = sample_ising(d, "plus", IsingParams(), 10, make_rng(2))
    svg = render_svg(d, extract_ising_loops(c), spins=c.spins)
    assert svg.lstrip().startswith("<svg") and svg.rstrip().endswith("</svg>")

import numpy as np
import pytest
import shapely
from hypothesis import given, settings, strategies as st

from isingloops.exploration import (
    direct_level1_fk,
    direct_level1_leftmost,
    dobrushin_interface,
    explore_all_fk_level1,
    farthest_boundary_pair,
    fk_exploration_path,
    harvest_outermost,
    pinching_family,
    special_points,
)
from isingloops.fk_ising import (
    FKConfiguration,
    FKParams,
    IsingParams,
    SpinConfiguration,
    fk_chain,
    make_rng,
    sample_fk,
    sample_ising,
)
from isingloops.lattice import build_rectangle


def wired(d, closed=()):
    w = np.ones(d.n_edges, bool)
    for c in closed:
        w[d.edge_lookup(*c)] = False
    return FKConfiguration(d, w | d.boundary_pair_edge, "wired")


def wired_all(d, state):
    return FKConfiguration(d, np.full(d.n_edges, state) | d.boundary_pair_edge, "wired")


def signed_area(P):
    Q = np.roll(P, -1, axis=0)
    return 0.5 * float((P[:, 0] * Q[:, 1] - Q[:, 0] * P[:, 1]).sum())


# -- harvest -------------------------------------------------------------------------
def test_harvest_all_plus():
    d = build_rectangle(8, 8)
    c = SpinConfiguration(d, np.ones(d.n_vertices), "plus")
    tr = harvest_outermost(c, FKParams(), 2.0, 0)
    assert len(tr.harvested()) == 0
    assert tr.n_iterations <= int(np.ceil(np.log2(d.diameter() / 2.0))) + 2


@pytest.mark.parametrize("seed", range(10))
def test_harvest_centre_minus(seed):
    d = build_rectangle(2, 2)
    s = np.ones(d.n_vertices)
    s[d.vertex_lookup(1, 1)] = -1
    c = SpinConfiguration(d, s, "plus")
    h = harvest_outermost(c, FKParams(), 2 * d.mesh, seed).harvested()
    assert len(h) == 1 and len(h[0]) == 4
    assert h[0] == direct_level1_leftmost(c)[0]
    assert h[0].harvest_time >= 1


def test_harvest_rejects():
    d = build_rectangle(3, 3)
    c = SpinConfiguration(d, np.ones(d.n_vertices), "free")
    with pytest.raises(ValueError):
        harvest_outermost(c, FKParams(), 2.0, 0)
    c = SpinConfiguration(d, np.ones(d.n_vertices), "plus")
    with pytest.raises(ValueError):
        harvest_outermost(c, FKParams(), 1.0, 0)


def check_harvest(c, eps, seed):
    tr = harvest_outermost(c, FKParams(), eps, seed)
    H = list(tr.harvested())
    D = set(direct_level1_leftmost(c))
    # every harvested loop is a leftmost level-1 loop, each found once
    assert len(set(H)) == len(H)
    assert set(H) <= D
    # every level-1 loop of diameter >= eps is harvested
    assert {l for l in D if l.diameter() >= eps} <= set(H)
    # loops of distinct harvest times share no edge and no dual vertex
    for i, a in enumerate(H):
        for b in H[i + 1:]:
            assert not set(a.edges) & set(b.edges)
            if a.harvest_time != b.harvest_time:
                pa = {tuple(p) for p in a.grid_points}
                pb = {tuple(p) for p in b.grid_points}
                assert not pa & pb
    # residual regions nest across generations and the last generation is final
    for t in range(1, tr.n_iterations):
        prev = [set(map(int, r)) for r in tr.iterations[t - 1].regions]
        for r in tr.iterations[t].regions:
            assert any(set(map(int, r)) <= p for p in prev)
    # termination: what is left is small or carries no minus spin
    d = c.domain
    for r in (tr.iterations[-1].residual if tr.iterations else []):
        pts = d.vertex_points[r]
        diam = max(np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1)).max(), 0.0)
        assert diam < eps or (c.spins[r] > 0).all()
    return tr


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 10), st.floats(1.5, 6.0))
def test_harvest_property(seed, n, eps):
    d = build_rectangle(n, n)
    c = sample_ising(d, "plus", IsingParams(), 10, make_rng(seed))
    check_harvest(c, eps, seed)


@pytest.mark.parametrize("seed", range(3))
def test_harvest_32(seed):
    d = build_rectangle(32, 32)
    c = sample_ising(d, "plus", IsingParams(), 40, make_rng(seed))
    for eps in (2.5, 8.0):
        check_harvest(c, eps, seed)


# -- exploration path -------------------------------------------------------------------
def test_path_all_open_hugs_free_arc():
    d = build_rectangle(2, 2)
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(wired_all(d, True), a, b)
    assert p.is_simple()
    # every point lies in a face touching the free arc (bottom and right sides) or outside
    for x, y in p.points:
        assert y < 1 or x > 1


def test_path_all_closed_hugs_wired_arc():
    d = build_rectangle(2, 2)
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(wired_all(d, False), a, b)
    assert p.is_simple()
    inside = [(0 < x < 2 and 0 < y < 2) for x, y in p.points[1:-1]]
    assert all(inside)
    # runs a quarter mesh inside the left and top sides
    for x, y in p.points[1:-1]:
        assert min(x, 2 - y) == pytest.approx(0.25)
    assert special_points(p).double_points == []


def test_path_rejects():
    d = build_rectangle(3, 3)
    with pytest.raises(ValueError):
        fk_exploration_path(wired_all(d, True), 2, 2)
    with pytest.raises(ValueError):
        fk_exploration_path(FKConfiguration(d, np.ones(d.n_edges, bool), "free"), 0, 3)


def _endpoint_check(d, p, i, j):
    verts, _ = d.boundary_walk
    va, vb = d.vertex_points[verts[i]], d.vertex_points[verts[j]]
    assert np.hypot(*(p.points[0] - va)) == pytest.approx(np.sqrt(2) / 4 * d.mesh)
    assert np.hypot(*(p.points[-1] - vb)) == pytest.approx(np.sqrt(2) / 4 * d.mesh)


def _interface_check(d, f, p):
    from isingloops import _bimedial as bm

    free = set(p.free_edges.tolist())
    w = f.open_edges
    for (P, Q), kind in zip(p.edge_list, p.steps):
        assert abs(P[0] - Q[0]) + abs(P[1] - Q[1]) == 2
        e, dual = bm.crossed_edge(d, P, Q)
        if kind == "interface" and e >= 0:
            # primal cluster on the left: never crosses an open edge or an open dual edge
            assert w[e] if dual else not w[e]


@pytest.mark.slow
def test_path_contract_many_samples():
    rng = make_rng(12345)
    count = 0
    for n in (4, 6, 8):
        d = build_rectangle(n, n)
        nb = len(d.boundary_walk[1])
        for w in fk_chain(d, "wired", FKParams(), 3334, rng, thin=2):
            f = FKConfiguration(d, w, "wired")
            i, j = sorted(rng.choice(nb, 2, replace=False))
            p = fk_exploration_path(f, int(i), int(j))
            assert p.is_simple()
            _endpoint_check(d, p, i, j)
            count += 1
    assert count >= 10_000


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 8), st.data())
def test_path_contract(seed, n, data):
    d = build_rectangle(n, n)
    f = sample_fk(d, "wired", FKParams(), 5, make_rng(seed))
    nb = len(d.boundary_walk[1])
    i = data.draw(st.integers(0, nb - 1))
    j = data.draw(st.integers(0, nb - 1).filter(lambda x: x != i))
    p = fk_exploration_path(f, i, j)
    assert p.is_simple()
    _endpoint_check(d, p, i, j)
    _interface_check(d, f, p)
    q = fk_exploration_path(f, i, j)
    assert np.array_equal(p.grid_points, q.grid_points)


# -- Dobrushin interface ---------------------------------------------------------------
def test_dobrushin_examples():
    d = build_rectangle(2, 2)
    # single-edge free arc along the bottom of face (0, 0)
    op = dobrushin_interface(d, (1, 0), (0, 1), wired_all(d, True))
    # stays in face (0, 0), next to the free edge
    assert all(0 < x < 1 and y < 1 for x, y in op.points)
    cl = dobrushin_interface(d, (1, 0), (0, 1), wired_all(d, False))
    ring = shapely.LinearRing(d.vertex_points[d.boundary_circuit])
    assert all(ring.distance(shapely.Point(x)) == pytest.approx(0.25) for x in cl.points)
    assert len(cl) > len(op)
    _endpoint_check(d, op, 0, 1)
    _endpoint_check(d, cl, 0, 1)


def test_dobrushin_rejects():
    d = build_rectangle(2, 2)
    f = wired_all(d, True)
    with pytest.raises(ValueError):
        dobrushin_interface(d, (3, 3), (3, 3), f)
    with pytest.raises(ValueError):
        dobrushin_interface(d, (2, 0), (0, 1), f)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 7), st.data())
def test_dobrushin_junctions(seed, n, data):
    d = build_rectangle(n, n)
    f = sample_fk(d, "wired", FKParams(), 5, make_rng(seed))
    nb = len(d.boundary_walk[1])
    i = data.draw(st.integers(0, nb - 1))
    j = data.draw(st.integers(0, nb - 1).filter(lambda x: x != i))
    p = dobrushin_interface(d, (j, i), (i, j), f)
    _endpoint_check(d, p, i, j)
    assert p.is_simple()


# -- special points ----------------------------------------------------------------------
def test_special_points_excursion_around_face():
    # closing the edge between faces (2, 0) and (2, 1) makes the path
    # enter face (2, 1) through face (2, 0) and come back
    d = build_rectangle(4, 4)
    a, b = farthest_boundary_pair(d)
    base = special_points(fk_exploration_path(wired(d), a, b))
    p = fk_exploration_path(wired(d, [(2, 1, 0)]), a, b)
    sp = special_points(p)
    interior = [(t, s) for t, s in sp.double_points if t not in sp.boundary_points]
    assert [(t, s) for t, s in base.double_points if t not in base.boundary_points] == []
    assert interior == [(18, 15), (19, 14)]
    t, s = max(interior, key=lambda x: x[0] - x[1])
    assert sp.K[t] == (s, t)
    loop = p.points[s:t + 1]
    assert signed_area(loop) < 0
    assert shapely.Polygon(loop).contains(shapely.Point(2.5, 1.5))
    assert sp.is_laminar()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 10))
def test_special_point_invariants(seed, n):
    d = build_rectangle(n, n)
    f = sample_fk(d, "wired", FKParams(), 5, make_rng(seed))
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(f, a, b)
    sp = special_points(p, f)
    assert sp.is_laminar()
    for t, s in sp.double_points:
        assert s < t - 1
        assert np.hypot(*(p.points[t] - p.points[s])) == pytest.approx(d.mesh / 2)
        assert signed_area(p.points[s:t + 1]) < 0
    for t in sp.boundary_points:
        assert sp.K[t] == (0, t)


# -- pinching families --------------------------------------------------------------------
def test_pinching_small_path():
    d = build_rectangle(2, 2)
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(wired_all(d, True), a, b)
    fam = pinching_family(p, special_points(p), 20.0)
    T = len(p) - 1
    assert fam.times == [T]
    assert sorted(fam.cells[T].tolist()) == list(range(T))


def test_pinching_rejects_small_epsilon():
    d = build_rectangle(4, 4)
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(wired_all(d, True), a, b)
    with pytest.raises(ValueError):
        pinching_family(p, special_points(p), 4.0)


def _bulb_config():
    # dual bulb [3,9]^2 reached from the bottom through a neck in column 6
    d = build_rectangle(12, 12)
    closed = []
    for i in range(3, 9):
        for j in range(3, 9):
            if i > 3:
                closed.append((i, j, 1))
            if j > 3:
                closed.append((i, j, 0))
    for j in range(1, 4):
        closed.append((6, j, 0))
    return d, wired(d, closed)


def test_pinching_contains_bulb():
    d, f = _bulb_config()
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(f, a, b)
    sp = special_points(p)
    eps = 5.0
    fam = pinching_family(p, sp, eps)
    bulb = shapely.box(3, 3, 9, 9)
    hits = []
    for t in fam.times[:-1]:
        s0, s1 = fam.K[t]
        seg = p.points[s0:s1 + 1]
        if signed_area(seg) < 0 and shapely.Polygon(seg).buffer(0).contains(bulb.buffer(-0.5)):
            hits.append(t)
    assert hits
    t = hits[0]
    cell = fam.cells[t]
    pts = p.points[np.unique(np.concatenate([cell, cell + 1]))]
    assert shapely.MultiPoint(pts).convex_hull.contains(bulb.buffer(-0.5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(4, 12), st.floats(4.01, 10.0))
def test_pinching_partition(seed, n, eps):
    d = build_rectangle(n, n)
    f = sample_fk(d, "wired", FKParams(), 5, make_rng(seed))
    a, b = farthest_boundary_pair(d)
    p = fk_exploration_path(f, a, b)
    fam = pinching_family(p, special_points(p), eps)
    T = len(p) - 1
    assert fam.times[-1] == T
    cells = np.concatenate([fam.cells[t] for t in fam.times])
    assert sorted(cells.tolist()) == list(range(T))


# -- recursive FK exploration --------------------------------------------------------------
def test_explore_all_closed():
    d = build_rectangle(2, 2)
    f = wired_all(d, False)
    found = explore_all_fk_level1(f, 1.5)
    direct = direct_level1_fk(f)
    assert len(found) == 1 and found[0] == direct[0]
    assert found[0].harvest_time == 1


def test_explore_all_open():
    d = build_rectangle(2, 2)
    found = explore_all_fk_level1(wired_all(d, True), 1.01)
    # only face-sized loops exist
    assert all(l.diameter() < 1.01 for l in found)


def test_explore_rejects():
    d = build_rectangle(2, 2)
    with pytest.raises(ValueError):
        explore_all_fk_level1(wired_all(d, True), 1.0)


def check_explore(f, eps):
    E = list(explore_all_fk_level1(f, eps))
    D = set(direct_level1_fk(f))
    assert set(E) <= D
    assert {l for l in D if l.diameter() >= eps} <= set(E)
    for l in E:
        match = [m for m in D if m == l][0]
        assert l.edge_set == match.edge_set


@pytest.mark.parametrize("seed", range(3))
def test_explore_32(seed):
    d = build_rectangle(32, 32)
    f = sample_fk(d, "wired", FKParams(), 40, make_rng(seed))
    for eps in (1.5, 8.0):
        check_explore(f, eps)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 12), st.floats(1.01, 6.0))
def test_explore_property(seed, n, eps):
    d = build_rectangle(n, n)
    f = sample_fk(d, "wired", FKParams(), 5, make_rng(seed))
    check_explore(f, eps)

"""Monte Carlo estimators and checks on top of the samplers and loop extractors.

Every estimator is a deterministic function of its inputs and seed: each
sample gets its own generator spawned from the seed, so results do not
depend on how samples are distributed over workers.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy import stats as sps
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .fk_ising import (
    BETA_C,
    FKParams,
    IsingParams,
    SpinConfiguration,
    _fk_table,
    _label_clusters,
    enumerate_exact,
    fk_chain,
    sample_ising,
)
from .lattice import DiscreteDomain, _point_diameter, domain_from_json, domain_to_json
from .loops import (
    Loop,
    LoopCollection,
    classify_ising_levels,
    containment,
    extract_ising_loops,
)

__all__ = [
    "EstimatorReport",
    "sample_rngs",
    "constant_sampler",
    "binomial_3sigma_ok",
    "weak_edges",
    "boundary_gap_event",
    "boundary_gap_exact",
    "boundary_gap_probability",
    "boundary_gap_curve",
    "ClosenessReport",
    "leftmost_rightmost_closeness",
    "closeness_ensemble",
    "LoopSpectrum",
    "loop_size_spectrum",
    "scale_comparison",
    "BoxCount",
    "box_counting_dimension",
    "MarkovReport",
    "boundary_cluster_pattern",
    "markov_property_check",
]


# -- plumbing -----------------------------------------------------------------------
@dataclass
class EstimatorReport:
    """Point estimate with its standard error and the per-sample records."""

    name: str
    parameters: dict
    estimate: float
    stderr: float
    records: list = field(default_factory=list)
    seed: int | None = None

    def to_csv(self, path=None) -> str:
        """One row per sample plus a ``summary`` row; returns the CSV text."""
        keys = sorted({k for r in self.records for k in r})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row"] + keys + ["estimate", "stderr", "seed"])
        for i, r in enumerate(self.records):
            w.writerow([i] + [_fmt(r.get(k, "")) for k in keys] + ["", "", ""])
        w.writerow(["summary"] + [""] * len(keys) + [_fmt(self.estimate), _fmt(self.stderr), self.seed])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "parameters": self.parameters,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "seed": self.seed,
            "records": self.records,
        }


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def sample_rngs(seed: int, n: int) -> list:
    """Independent generators, one per sample, spawned from ``seed``."""
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def _map_chunks(worker, common, seed: int, samples: int, jobs: int) -> list:
    """Run ``worker(common, children)`` over chunks of per-sample seeds; results in sample order.

    Each sample's generator depends only on ``seed`` and its index, so the
    output does not depend on ``jobs``.
    """
    children = np.random.SeedSequence(int(seed)).spawn(samples)
    if jobs is None or jobs <= 1:
        return worker(common, children)
    from concurrent.futures import ProcessPoolExecutor

    size = max(1, -(-samples // (4 * jobs)))
    chunks = [children[i:i + size] for i in range(0, samples, size)]
    out = []
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        for part in ex.map(worker, [common] * len(chunks), chunks):
            out.extend(part)
    return out


def _seed_of(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    return int(rng)


def constant_sampler(config: SpinConfiguration):
    """Sampler stub returning the same configuration every time (zero-temperature proxy)."""
    return lambda rng: config


def binomial_3sigma_ok(count: int, n: int, p: float) -> bool:
    """Whether ``count`` successes out of ``n`` are compatible with probability ``p``.

    Uses the normal 3-sigma band when both the observed and expected counts
    are at least 30 and the exact binomial two-sided tail at the same level
    (0.27%) otherwise.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if p <= 0.0:
        return count == 0
    if p >= 1.0:
        return count == n
    mean = n * p
    if min(count, n - count) >= 30 and min(mean, n - mean) >= 30:
        return abs(count - mean) <= 3.0 * np.sqrt(n * p * (1 - p))
    alpha = 2 * sps.norm.sf(3.0)
    lo = sps.binom.cdf(count, n, p)
    hi = sps.binom.sf(count - 1, n, p)
    return min(1.0, 2 * min(lo, hi)) >= alpha


# -- boundary avoidance -------------------------------------------------------------
def weak_edges(domain: DiscreteDomain) -> np.ndarray:
    """Vertex pairs sharing an edge or a face of the domain."""
    f = domain.faces
    vi = domain.vertex_index
    i0, j0 = domain.origin
    a, b = f[:, 0] - i0, f[:, 1] - j0
    diag = np.concatenate(
        [np.column_stack([vi[a, b], vi[a + 1, b + 1]]), np.column_stack([vi[a + 1, b], vi[a, b + 1]])]
    )
    return np.concatenate([domain.edges, diag])


def _arc_distance(domain: DiscreteDomain, arc) -> np.ndarray:
    """Euclidean distance of every vertex to the arc (whole boundary if ``None``)."""
    if arc is None:
        idx = domain.boundary_walk[0]
        geom = shapely.LinearRing(domain.vertex_points[idx]) if len(idx) >= 3 else shapely.MultiPoint(domain.vertex_points[idx])
    else:
        idx = np.asarray(arc, dtype=np.int64)
        P = domain.vertex_points[idx]
        geom = shapely.LineString(P) if len(P) >= 2 else shapely.Point(P[0])
    pts = domain.vertex_points
    return shapely.distance(geom, shapely.points(pts[:, 0], pts[:, 1]))


def _gap_event_from(spins, W, dist, eta, epsilon, exclude):
    minus = (spins < 0) & ~exclude
    n = len(spins)
    keep = minus[W[:, 0]] & minus[W[:, 1]]
    w = W[keep]
    g = coo_matrix((np.ones(len(w)), (w[:, 0], w[:, 1])), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    near = minus & (dist <= eta)
    far = minus & (dist > epsilon)
    return bool(np.intersect1d(lab[near], lab[far]).size)


def boundary_gap_event(config: SpinConfiguration, eta: float, epsilon: float, arc=None) -> bool:
    """Whether a weak ``-`` cluster links the ``eta``-neighbourhood of the arc to distance beyond ``epsilon``.

    Boundary vertices never belong to the cluster. ``arc`` is a sequence of
    vertex indices along the boundary (``None`` for the whole boundary).
    """
    if not 0 < eta < epsilon:
        raise ValueError("need 0 < eta < epsilon")
    d = config.domain
    return _gap_event_from(config.spins, weak_edges(d), _arc_distance(d, arc), eta, epsilon, d.boundary_vertex)


def boundary_gap_exact(domain: DiscreteDomain, eta: float, epsilon: float, arc=None, params: IsingParams = None) -> float:
    """Exact event probability under the plus-boundary Ising law (enumeration)."""
    if not 0 < eta < epsilon:
        raise ValueError("need 0 < eta < epsilon")
    params = params or IsingParams(BETA_C)
    table = enumerate_exact(domain, "ising", "plus", params)
    W, dist = weak_edges(domain), _arc_distance(domain, arc)
    hit = np.array([_gap_event_from(s, W, dist, eta, epsilon, domain.boundary_vertex) for s in table.states])
    return float(table.probs[hit].sum())


def boundary_gap_curve(
    domain: DiscreteDomain,
    etas,
    epsilon: float,
    arc=None,
    samples: int = 100,
    rng=0,
    steps: int = 50,
    params: IsingParams = None,
    sampler=None,
    jobs: int = 1,
) -> list:
    """Event probabilities for several ``eta`` on the same independent samples."""
    etas = [float(e) for e in etas]
    if any(not 0 < e < epsilon for e in etas):
        raise ValueError("need 0 < eta < epsilon")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    params = params or IsingParams(BETA_C)
    seed = _seed_of(rng)
    if sampler is None:
        common = (domain_to_json(domain), params.beta, steps, etas, float(epsilon), arc)
        hits = np.array(_map_chunks(_gap_worker, common, seed, samples, jobs), dtype=bool).reshape(samples, len(etas))
    else:
        W, dist = weak_edges(domain), _arc_distance(domain, arc)
        hits = np.zeros((samples, len(etas)), dtype=bool)
        for k, g in enumerate(sample_rngs(seed, samples)):
            hits[k] = _gap_row(sampler(g), W, dist, etas, epsilon)
    out = []
    for m, e in enumerate(etas):
        p = float(hits[:, m].mean())
        out.append(
            EstimatorReport(
                "boundary_gap_probability",
                {"eta": e, "epsilon": float(epsilon), "mesh": domain.mesh, "n_faces": domain.n_faces, "samples": samples, "steps": steps, "beta": params.beta},
                p,
                float(np.sqrt(p * (1 - p) / samples)),
                [{"sample": k, "event": int(hits[k, m])} for k in range(samples)],
                seed,
            )
        )
    return out


def _gap_row(cfg, W, dist, etas, epsilon):
    if cfg.bc != "plus":
        raise ValueError("boundary gap estimator needs plus boundary conditions")
    bv = cfg.domain.boundary_vertex
    return [_gap_event_from(cfg.spins, W, dist, e, epsilon, bv) for e in etas]


def _gap_worker(common, children):
    doc, beta, steps, etas, epsilon, arc = common
    domain = domain_from_json(doc)
    W, dist = weak_edges(domain), _arc_distance(domain, arc)
    params = IsingParams(beta)
    out = []
    for c in children:
        cfg = sample_ising(domain, "plus", params, steps, np.random.Generator(np.random.Philox(c)))
        out.append(_gap_row(cfg, W, dist, etas, epsilon))
    return out


def boundary_gap_probability(domain, eta, epsilon, arc=None, samples=100, rng=0, **kw) -> EstimatorReport:
    """Monte Carlo estimate of the boundary-gap event probability."""
    return boundary_gap_curve(domain, [eta], epsilon, arc, samples, rng, **kw)[0]


# -- leftmost / rightmost closeness ------------------------------------------------
@dataclass
class ClosenessReport:
    """Symmetric differences between paired rightmost and leftmost level-1 loops.

    ``pairs`` holds ``(rightmost index, leftmost index, component diameters)``;
    ``violations`` lists rightmost loops without a leftmost partner.
    """

    max_diameter: float
    pairs: list
    violations: list
    epsilon: float


def _edge_components(domain, edges):
    """Diameters of the connected pieces of a set of dual edges."""
    if not edges:
        return []
    ec = domain.edge_coords[np.array(sorted(edges))]
    # dual edge endpoints = the two faces beside the primal edge (doubled coordinates)
    x, y, o = ec[:, 0], ec[:, 1], ec[:, 2]
    f1 = np.where(o[:, None] == 0, np.column_stack([2 * x + 1, 2 * y - 1]), np.column_stack([2 * x - 1, 2 * y + 1]))
    f2 = np.column_stack([2 * x + 1, 2 * y + 1])
    pts, inv = np.unique(np.concatenate([f1, f2]), axis=0, return_inverse=True)
    inv = inv.ravel()
    m = len(ec)
    g = coo_matrix((np.ones(m), (inv[:m], inv[m:])), shape=(len(pts), len(pts)))
    k, lab = connected_components(g, directed=False)
    return [_point_diameter(pts[lab == c] * (domain.mesh / 2)) for c in range(k)]


def leftmost_rightmost_closeness(config: SpinConfiguration, epsilon: float) -> ClosenessReport:
    """Compare each macroscopic rightmost level-1 loop with its leftmost partner.

    The partner is the leftmost level-1 loop surrounding the rightmost
    loop's ``-`` side. The report holds the diameters of the connected
    pieces of the symmetric difference of every pair (as dual-edge sets).
    """
    if config.bc != "plus":
        raise ValueError("closeness is defined for plus boundary conditions")
    d = config.domain
    left = [l for l in classify_ising_levels(extract_ising_loops(config, "leftmost"), config) if l.level == 1]
    right = [l for l in classify_ising_levels(extract_ising_loops(config, "rightmost"), config) if l.level == 1]
    s = config.spins
    pairs, bad, worst = [], [], 0.0
    left_edges = [set(l.edges) for l in left]
    for ri, r in enumerate(right):
        if r.diameter() < epsilon:
            continue
        u, v = d.edges[r.edges[0]]
        minus = v if s[u] > 0 else u
        target = d.vertex_points[minus]
        partner = -1
        for li, l in enumerate(left):
            if minus in {int(w) for e in l.edges for w in d.edges[e]} or containment(l, target):
                partner = li
                break
        if partner < 0:
            bad.append(ri)
            continue
        sym = set(r.edges) ^ left_edges[partner]
        comps = _edge_components(d, sym)
        worst = max([worst] + comps)
        pairs.append((ri, partner, comps))
    return ClosenessReport(float(worst), pairs, bad, float(epsilon))


def _median_se(x: np.ndarray, rng) -> float:
    """Bootstrap standard error of the median."""
    if len(x) < 2:
        return 0.0
    idx = rng.integers(0, len(x), size=(1000, len(x)))
    return float(np.median(x[idx], axis=1).std(ddof=1))


def _closeness_worker(common, children):
    doc, beta, steps, epsilon = common
    domain = domain_from_json(doc)
    params = IsingParams(beta)
    out = []
    for c in children:
        cfg = sample_ising(domain, "plus", params, steps, np.random.Generator(np.random.Philox(c)))
        rep = leftmost_rightmost_closeness(cfg, epsilon)
        out.append((rep.max_diameter, len(rep.pairs), len(rep.violations)))
    return out


def closeness_ensemble(
    domain: DiscreteDomain, epsilon: float, samples: int, rng=0, steps: int = 50, params=None, jobs: int = 1
) -> EstimatorReport:
    """Median over samples of the largest symmetric-difference piece."""
    params = params or IsingParams(BETA_C)
    seed = _seed_of(rng)
    common = (domain_to_json(domain), params.beta, steps, float(epsilon))
    res = _map_chunks(_closeness_worker, common, seed, samples, jobs)
    vals = [r[0] for r in res]
    recs = [{"sample": k, "max_diameter": v, "pairs": n, "violations": b} for k, (v, n, b) in enumerate(res)]
    x = np.array(vals)
    se = _median_se(x, np.random.Generator(np.random.Philox(seed)))
    return EstimatorReport(
        "leftmost_rightmost_closeness",
        {"epsilon": float(epsilon), "mesh": domain.mesh, "n_faces": domain.n_faces, "samples": samples, "steps": steps},
        float(np.median(x)),
        se,
        recs,
        seed,
    )


# -- loop sizes and dimension -------------------------------------------------------
@dataclass
class LoopSpectrum:
    diameters: list
    level_counts: dict
    thresholds: list
    counts_at_least: list
    histogram: list  # (lower edge, upper edge, count) over dyadic bins


def loop_size_spectrum(collection, mesh: float | None = None) -> LoopSpectrum:
    """Loop diameters, counts per level and counts above dyadic thresholds ``mesh * 2^k``."""
    loops = list(collection)
    if not loops:
        return LoopSpectrum([], {}, [], [], [])
    mesh = float(mesh if mesh is not None else loops[0].mesh)
    diam = np.sort(np.array([l.diameter() for l in loops]))
    levels = dict(sorted(Counter(l.level for l in loops if l.level is not None).items()))
    top = max(diam.max(), mesh)
    K = int(np.floor(np.log2(top / mesh) + 1e-9)) + 1
    th = [mesh * 2.0**k for k in range(K + 1)]
    counts = [int((diam >= t - 1e-12).sum()) for t in th]
    edges = [0.0] + th
    hist = [(edges[i], edges[i + 1], int(((diam >= edges[i] - 1e-12) & (diam < edges[i + 1] - 1e-12)).sum())) for i in range(len(edges) - 1)]
    return LoopSpectrum(diam.tolist(), levels, th, counts, hist)


def scale_comparison(a: LoopSpectrum, b: LoopSpectrum) -> dict:
    """Two-sample Kolmogorov-Smirnov comparison of diameter distributions (reported, not asserted)."""
    if not a.diameters or not b.diameters:
        return {"statistic": float("nan"), "pvalue": float("nan"), "n_a": len(a.diameters), "n_b": len(b.diameters)}
    r = sps.ks_2samp(a.diameters, b.diameters)
    return {"statistic": float(r.statistic), "pvalue": float(r.pvalue), "n_a": len(a.diameters), "n_b": len(b.diameters)}


@dataclass
class BoxCount:
    slope: float
    intercept: float
    scales: list
    counts: list


def _densify(P: np.ndarray, step: float, closed: bool) -> np.ndarray:
    Q = np.roll(P, -1, axis=0) if closed else P[1:]
    A = P if closed else P[:-1]
    L = np.hypot(*(Q - A).T)
    k = np.maximum(1, np.ceil(L / step).astype(np.int64))
    t = np.concatenate([np.arange(n) / n for n in k])
    rep = np.repeat(np.arange(len(A)), k)
    out = A[rep] + (Q[rep] - A[rep]) * t[:, None]
    return out if closed else np.vstack([out, P[-1:]])


def box_counting_dimension(loop, scales=None, mesh: float | None = None, closed: bool = True) -> BoxCount:
    """Least-squares slope of ``log N(s)`` against ``log(1/s)``.

    ``N(s)`` counts the boxes of an axis-aligned grid of side ``s`` met by
    the polyline. The default scales are ``mesh * 2^k`` up to a quarter of
    the diameter. The loop must have diameter at least ``16 * mesh`` and the
    scales must cover two octaves inside ``[mesh, diameter / 4]``.
    """
    if isinstance(loop, Loop):
        P = loop.points
        mesh = loop.mesh if mesh is None else mesh
    else:
        P = np.asarray(loop, dtype=float)
        if mesh is None:
            raise ValueError("mesh is required for raw polylines")
    mesh = float(mesh)
    diam = _point_diameter(P)
    if diam < 16 * mesh - 1e-9:
        raise ValueError("loop too small for box counting")
    if scales is None:
        scales = [mesh * 2.0**k for k in range(int(np.floor(np.log2(diam / 4 / mesh) + 1e-9)) + 1)]
    scales = sorted(float(s) for s in scales)
    if scales[0] < mesh - 1e-12 or scales[-1] > diam / 4 + 1e-12:
        raise ValueError("scales must lie within [mesh, diameter / 4]")
    if scales[-1] / scales[0] < 4 - 1e-9:
        raise ValueError("scales must span at least two octaves")
    dense = _densify(P, scales[0] / 8, closed)
    counts = [len(np.unique(np.floor(dense / s).astype(np.int64), axis=0)) for s in scales]
    slope, intercept = np.polyfit(np.log(1 / np.array(scales)), np.log(counts), 1)
    return BoxCount(float(slope), float(intercept), scales, counts)


# -- spatial Markov property -------------------------------------------------------
@dataclass
class MarkovReport:
    """Empirical law inside the cut-out domains against the free-boundary law.

    ``table`` rows are ``(state code, observed count, exact probability,
    product-of-marginals probability, within 3 sigma)``.
    """

    passed: bool
    vacuous: bool
    insufficient: bool
    events: int
    samples: int
    pattern: tuple
    inner_edges: list
    components: int
    table: list
    independence_ok: bool
    seed: int | None


def boundary_cluster_pattern(domain: DiscreteDomain, open_edges: np.ndarray):
    """Vertices of the boundary cluster and the states of the edges touching it.

    This pair determines the outermost FK loops, so conditioning on it is
    conditioning on those loops.
    """
    group = np.where(domain.boundary_vertex, 0, -1).astype(np.int64)
    e = domain.edges
    label, _ = _label_clusters(domain.n_vertices, e[:, 0].copy(), e[:, 1].copy(), np.asarray(open_edges, dtype=bool), group)
    in_k = label == label[np.argmax(domain.boundary_vertex)]
    touch = in_k[e[:, 0]] | in_k[e[:, 1]]
    return in_k, touch


def _pattern_key(in_k, touch, open_edges):
    return (np.packbits(in_k).tobytes(), np.packbits(touch & open_edges).tobytes())


def markov_property_check(
    domain: DiscreteDomain,
    samples: int,
    rng=0,
    params: FKParams = None,
    pattern: str = "boundary",
    min_components: int = 1,
    min_events: int = 1000,
    burnin: int = 100,
    thin: int = 2,
) -> MarkovReport:
    """Compare the law inside the cut-out domains with the free-boundary FK law.

    Wired FK samples are grouped by their boundary cluster, which fixes the
    outermost loops and the cut-out domains. For the chosen pattern the
    empirical law of the edges strictly inside the cut-out domains is
    compared state by state with the exact free-boundary law on those
    edges (a product over cut-out domains).

    ``pattern="boundary"`` conditions on the boundary cluster being the
    boundary alone; ``pattern="frequent"`` picks the most frequent pattern
    with at least ``min_components`` cut-out domains containing edges.
    """
    params = params or FKParams()
    seed = _seed_of(rng)
    g = np.random.Generator(np.random.Philox(seed))
    states = fk_chain(domain, "wired", params, samples, g, burnin=burnin, thin=thin)
    e = domain.edges
    groups = {}
    for k, w in enumerate(states):
        in_k, touch = boundary_cluster_pattern(domain, w)
        key = _pattern_key(in_k, touch, w)
        if key not in groups:
            groups[key] = [in_k, touch, []]
        groups[key][2].append(k)

    def n_comp(in_k, touch):
        inner = np.nonzero(~touch)[0]
        if len(inner) == 0:
            return 0
        verts = np.unique(e[inner])
        sub = {int(v): i for i, v in enumerate(verts)}
        a = np.array([sub[int(v)] for v in e[inner, 0]])
        b = np.array([sub[int(v)] for v in e[inner, 1]])
        m = coo_matrix((np.ones(len(a)), (a, b)), shape=(len(verts), len(verts)))
        return connected_components(m, directed=False)[0]

    chosen = None
    if pattern == "boundary":
        for key, (in_k, touch, idx) in groups.items():
            if (in_k == domain.boundary_vertex).all():
                chosen = key
    elif pattern == "frequent":
        best = -1
        for key, (in_k, touch, idx) in sorted(groups.items(), key=lambda kv: -len(kv[1][2])):
            if n_comp(in_k, touch) >= min_components and len(idx) > best:
                chosen, best = key, len(idx)
                break
    else:
        raise ValueError("pattern must be 'boundary' or 'frequent'")
    if chosen is None:
        return MarkovReport(False, False, True, 0, samples, (), [], 0, [], False, seed)
    in_k, touch, idx = groups[chosen]
    inner = np.nonzero(~touch)[0]
    comps = n_comp(in_k, touch)
    events = len(idx)
    pat = (tuple(np.nonzero(in_k)[0].tolist()), tuple(np.nonzero(touch & states[idx[0]])[0].tolist()))
    if len(inner) == 0:
        return MarkovReport(True, True, events < min_events, events, samples, pat, [], 0, [], True, seed)
    # exact free law on the inner edges (vertices of the boundary cluster removed)
    verts = np.unique(e[inner])
    sub = {int(v): i for i, v in enumerate(verts)}
    ie = np.array([[sub[int(a)], sub[int(b)]] for a, b in e[inner]], dtype=np.int64)
    m = len(inner)
    codes_all = np.arange(1 << m, dtype=np.int64)
    bits = ((codes_all[:, None] >> np.arange(m)) & 1).astype(bool)
    table = _fk_table(len(verts), ie, bits, np.arange(m), np.full(len(verts), -1, dtype=np.int64), params)
    obs = states[np.array(idx)][:, inner]
    codes = (obs.astype(np.int64) << np.arange(m)).sum(1)
    counts = np.bincount(codes, minlength=1 << m)
    # product of empirical marginals over components, for the independence check
    lab = _inner_component_labels(ie, len(verts), comps)
    prod = np.ones(1 << m)
    for c in range(comps):
        sel = np.nonzero(lab == c)[0]
        sub_codes = (obs[:, sel].astype(np.int64) << np.arange(len(sel))).sum(1)
        marg = np.bincount(sub_codes, minlength=1 << len(sel)) / events
        all_sub = (bits[:, sel].astype(np.int64) << np.arange(len(sel))).sum(1)
        prod *= marg[all_sub]
    rows, ok_all, ind_ok = [], True, True
    for c in range(1 << m):
        ok = binomial_3sigma_ok(int(counts[c]), events, float(table.probs[c]))
        ind = binomial_3sigma_ok(int(counts[c]), events, float(prod[c])) if comps > 1 else True
        ok_all &= ok
        ind_ok &= ind
        rows.append((c, int(counts[c]), float(table.probs[c]), float(prod[c]), bool(ok)))
    insufficient = events < min_events
    return MarkovReport(
        bool(ok_all and not insufficient), False, insufficient, events, samples, pat, inner.tolist(), comps, rows, bool(ind_ok), seed
    )


def _inner_component_labels(ie, n, comps):
    """Component label of each inner edge."""
    m = coo_matrix((np.ones(len(ie)), (ie[:, 0], ie[:, 1])), shape=(n, n))
    _, lab = connected_components(m, directed=False)
    return lab[ie[:, 0]]

"""Critical Ising and FK-Ising models with the Edwards-Sokal coupling.

Spins live on the vertices of a :class:`~isingloops.lattice.DiscreteDomain`,
FK configurations on its edges. Sampling alternates the two conditional
laws of the coupling (Swendsen-Wang), using uniforms drawn from a numpy
``Generator`` so that runs are reproducible from a single 64-bit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numba
import numpy as np

from .lattice import DiscreteDomain, derive_dual

__all__ = [
    "BETA_C",
    "P_SD",
    "IsingParams",
    "FKParams",
    "MixedBC",
    "SpinConfiguration",
    "FKConfiguration",
    "ProbabilityTable",
    "make_rng",
    "energy",
    "fk_log_weight",
    "clusters",
    "dual_configuration",
    "sample_fk",
    "sample_ising",
    "fk_chain",
    "ising_chain",
    "ising_from_fk",
    "fk_from_ising",
    "enumerate_exact",
    "enumerate_dual_free",
    "graph_chain",
    "enumerate_graph_fk",
    "config_to_json",
    "config_from_json",
]

BETA_C = 0.5 * math.log(math.sqrt(2.0) + 1.0)
P_SD = math.sqrt(2.0) / (1.0 + math.sqrt(2.0))

SPIN_BCS = ("free", "plus", "minus")
FK_BCS = ("wired", "free")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class IsingParams:
    beta: float = BETA_C

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")

    @property
    def p(self) -> float:
        return 1.0 - math.exp(-2.0 * self.beta)

    def to_fk(self) -> "FKParams":
        return FKParams(self.p, 2.0)


@dataclass(frozen=True)
class FKParams:
    p: float = P_SD
    q: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if not self.q > 0:
            raise ValueError("q must be positive")

    @property
    def beta(self) -> float:
        return -0.5 * math.log1p(-self.p) if self.p < 1 else math.inf

    @property
    def dual_p(self) -> float:
        # p/(1-p) * p*/(1-p*) = q
        r = self.q * (1.0 - self.p) / self.p
        return r / (1.0 + r)


@dataclass(frozen=True)
class MixedBC:
    """Per boundary-circuit-position labels: +1 / -1 (spins) or 1 = wired, 0 = free (FK).

    ``labels[k]`` refers to vertex ``domain.boundary_circuit[k]``.
    """

    labels: tuple

    def vertex_labels(self, domain: DiscreteDomain) -> np.ndarray:
        lab = np.zeros(domain.n_vertices, dtype=np.int8)
        circ = domain.boundary_circuit
        if len(self.labels) != len(circ):
            raise ValueError("mixed boundary labels must cover the boundary circuit")
        lab[circ] = np.asarray(self.labels, dtype=np.int8)
        return lab


BC = Union[str, MixedBC]


def _bc_name(bc) -> str:
    return bc if isinstance(bc, str) else "mixed"


@dataclass(frozen=True, eq=False)
class SpinConfiguration:
    domain: DiscreteDomain
    spins: np.ndarray
    bc: BC = "free"

    def __post_init__(self):
        s = np.asarray(self.spins, dtype=np.int8)
        if s.shape != (self.domain.n_vertices,):
            raise ValueError("spin array does not match the domain")
        if not np.all(np.abs(s) == 1):
            raise ValueError("spins must be +1 or -1")
        s.setflags(write=False)
        object.__setattr__(self, "spins", s)
        bv = self.domain.boundary_vertex
        if self.bc == "plus" and not np.all(s[bv] == 1):
            raise ValueError("plus boundary condition violated")
        if self.bc == "minus" and not np.all(s[bv] == -1):
            raise ValueError("minus boundary condition violated")
        if isinstance(self.bc, MixedBC):
            lab = self.bc.vertex_labels(self.domain)
            fixed = lab != 0
            if not np.all(s[fixed] == lab[fixed]):
                raise ValueError("mixed boundary condition violated")
        elif self.bc not in SPIN_BCS:
            raise ValueError(f"unknown spin boundary condition {self.bc!r}")

    def __eq__(self, other):
        return (
            isinstance(other, SpinConfiguration)
            and self.domain == other.domain
            and np.array_equal(self.spins, other.spins)
            and self.bc == other.bc
        )

    def flipped(self) -> "SpinConfiguration":
        """Global spin flip, boundary condition sign flipped accordingly."""
        bc = {"plus": "minus", "minus": "plus"}.get(self.bc, self.bc)
        if isinstance(bc, MixedBC):
            bc = MixedBC(tuple(-int(x) for x in bc.labels))
        return SpinConfiguration(self.domain, -self.spins, bc)


@dataclass(frozen=True, eq=False)
class FKConfiguration:
    """Open-edge indicator on the domain (or on its dual graph when ``on_dual``)."""

    domain: DiscreteDomain
    open_edges: np.ndarray
    bc: BC = "wired"
    on_dual: bool = False

    def __post_init__(self):
        w = np.asarray(self.open_edges, dtype=bool)
        n = int(self.domain.interior_edge.sum()) if self.on_dual else self.domain.n_edges
        if w.shape != (n,):
            raise ValueError("open-edge array does not match the graph")
        w.setflags(write=False)
        object.__setattr__(self, "open_edges", w)
        if isinstance(self.bc, MixedBC):
            if self.on_dual:
                raise ValueError("mixed boundary conditions are primal only")
            forced = _forced_open(self.domain, self.bc)
            if not np.all(w[forced]):
                raise ValueError("wired arcs must be open")
        elif self.bc not in FK_BCS:
            raise ValueError(f"unknown FK boundary condition {self.bc!r}")
        elif self.bc == "wired":
            if self.on_dual:
                raise ValueError("dual configurations carry free boundary conditions")
            if not np.all(w[self.domain.boundary_pair_edge]):
                raise ValueError("wired boundary condition: edges between boundary vertices must be open")

    def __eq__(self, other):
        return (
            isinstance(other, FKConfiguration)
            and self.domain == other.domain
            and self.on_dual == other.on_dual
            and self.bc == other.bc
            and np.array_equal(self.open_edges, other.open_edges)
        )

    # graph accessors
    def graph(self):
        """``(n_nodes, edges)`` of the graph carrying the configuration."""
        if self.on_dual:
            dual = derive_dual(self.domain)
            return self.domain.n_faces, dual.edges
        return self.domain.n_vertices, self.domain.edges

    def merged_nodes(self) -> np.ndarray:
        n, _ = self.graph()
        m = np.zeros(n, dtype=bool)
        if self.on_dual:
            return m
        if self.bc == "wired":
            m[self.domain.boundary_vertex] = True
        elif isinstance(self.bc, MixedBC):
            m = self.bc.vertex_labels(self.domain) == 1
        return m

    @property
    def n_open(self) -> int:
        return int(self.open_edges.sum())


def _forced_open(domain: DiscreteDomain, bc) -> np.ndarray:
    if bc == "wired":
        return domain.boundary_pair_edge.copy()
    if isinstance(bc, MixedBC):
        w = bc.vertex_labels(domain) == 1
        e = domain.edges
        return w[e[:, 0]] & w[e[:, 1]]
    return np.zeros(domain.n_edges, dtype=bool)


def _merge_groups(domain: DiscreteDomain, bc) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex group id (-1: none) and per-group forced sign (0: fair coin)."""
    group = np.full(domain.n_vertices, -1, dtype=np.int64)
    if bc in ("wired", "plus"):
        group[domain.boundary_vertex] = 0
        return group, np.array([1], dtype=np.int8)
    if bc == "minus":
        group[domain.boundary_vertex] = 0
        return group, np.array([-1], dtype=np.int8)
    if isinstance(bc, MixedBC):
        lab = bc.vertex_labels(domain)
        group[lab == 1] = 0
        group[lab == -1] = 1
        return group, np.array([1, -1], dtype=np.int8)
    return group, np.zeros(0, dtype=np.int8)


# -- union-find kernels --------------------------------------------------------
@numba.njit(cache=True)
def _find(parent, x):
    r = x
    while parent[r] != r:
        r = parent[r]
    while parent[x] != r:
        nxt = parent[x]
        parent[x] = r
        x = nxt
    return r


@numba.njit(cache=True)
def _label_clusters(n, eu, ev, open_, group):
    parent = np.arange(n)
    first = np.full(8, -1, np.int64)
    for x in range(n):
        g = group[x]
        if g >= 0:
            if first[g] < 0:
                first[g] = x
            else:
                a = _find(parent, x)
                b = _find(parent, first[g])
                if a != b:
                    parent[a] = b
    for e in range(eu.shape[0]):
        if open_[e]:
            a = _find(parent, eu[e])
            b = _find(parent, ev[e])
            if a != b:
                parent[a] = b
    label = np.full(n, -1, np.int64)
    roots = np.full(n, -1, np.int64)
    k = 0
    for x in range(n):
        r = _find(parent, x)
        if roots[r] < 0:
            roots[r] = k
            k += 1
        label[x] = roots[r]
    return label, k


@numba.njit(cache=True)
def _count_clusters_batch(n, eu, ev, states, group):
    out = np.empty(states.shape[0], np.int64)
    for s in range(states.shape[0]):
        _, k = _label_clusters(n, eu, ev, states[s], group)
        out[s] = k
    return out


@numba.njit(cache=True)
def _sw_block(n, eu, ev, spins, p, forced_open, group, gsign, U, C, record, out_bonds, out_spins, rec_start):
    """Run ``U.shape[0]`` Swendsen-Wang steps in place; optionally record states."""
    ne = eu.shape[0]
    bonds = np.zeros(ne, np.bool_)
    r = rec_start
    for t in range(U.shape[0]):
        for e in range(ne):
            if forced_open[e]:
                bonds[e] = True
            else:
                bonds[e] = spins[eu[e]] == spins[ev[e]] and U[t, e] < p
        label, k = _label_clusters(n, eu, ev, bonds, group)
        csign = np.zeros(k, np.int8)
        for x in range(n):
            g = group[x]
            if g >= 0 and gsign[g] != 0:
                csign[label[x]] = gsign[g]
        for c in range(k):
            if csign[c] == 0:
                csign[c] = 1 if C[t, c] else -1
        for x in range(n):
            spins[x] = csign[label[x]]
        if record[t]:
            out_bonds[r] = bonds
            out_spins[r] = spins
            r += 1
    return bonds, r


def _run_chain(domain, bc, p, steps, rng, burnin=0, thin=1, record=False, init_spins=None, block=256):
    n = domain.n_vertices
    eu = domain.edges[:, 0].copy()
    ev = domain.edges[:, 1].copy()
    group, gsign = _merge_groups(domain, bc)
    forced = _forced_open(domain, bc) if bc in ("wired",) or isinstance(bc, MixedBC) and bc_is_fk(bc) else np.zeros(len(eu), bool)
    if init_spins is None:
        spins = np.ones(n, dtype=np.int8)
        if bc == "minus":
            spins[:] = -1
        if isinstance(bc, MixedBC):
            lab = bc.vertex_labels(domain)
            spins[lab == -1] = -1
    else:
        spins = np.array(init_spins, dtype=np.int8)
    total = burnin + steps
    rec_mask = np.zeros(total, dtype=bool)
    if record:
        rec_mask[burnin::thin] = True
    nrec = int(rec_mask.sum())
    out_b = np.zeros((max(nrec, 1), len(eu)), dtype=bool)
    out_s = np.zeros((max(nrec, 1), n), dtype=np.int8)
    r = 0
    bonds = np.zeros(len(eu), dtype=bool)
    for start in range(0, total, block):
        m = min(block, total - start)
        U = rng.random((m, len(eu)))
        C = rng.integers(0, 2, size=(m, n), dtype=np.int8).astype(bool)
        bonds, r = _sw_block(n, eu, ev, spins, float(p), forced, group, gsign, U, C,
                             rec_mask[start:start + m], out_b, out_s, r)
    return spins, bonds, out_b[:nrec], out_s[:nrec]


def bc_is_fk(bc) -> bool:
    return getattr(bc, "_fk", True)


# -- observables ----------------------------------------------------------------
def energy(config: SpinConfiguration) -> int:
    """``H = -sum_{x~y} s_x s_y`` over the domain's edges."""
    s = config.spins.astype(np.int64)
    e = config.domain.edges
    return int(-(s[e[:, 0]] * s[e[:, 1]]).sum())


def clusters(config: FKConfiguration) -> np.ndarray:
    """Cluster label of every node (boundary vertices merged under wired bc)."""
    n, edges = config.graph()
    group = np.where(config.merged_nodes(), 0, -1).astype(np.int64)
    label, _ = _label_clusters(n, edges[:, 0].copy(), edges[:, 1].copy(), config.open_edges, group)
    return label


def fk_log_weight(config: FKConfiguration, params: FKParams) -> float:
    """``o log p + c log(1-p) + k log q``.

    Under wired boundary conditions the forced edges between boundary
    vertices are left out of ``o`` and ``c``; this only shifts the weight
    by a constant.
    """
    w = config.open_edges
    if not config.on_dual:
        w = w[~_forced_open(config.domain, config.bc)]
    o = int(w.sum())
    c = len(w) - o
    k = int(clusters(config).max()) + 1
    return _xlogy(o, params.p) + _xlogy(c, 1.0 - params.p) + k * math.log(params.q)


def _xlogy(n, x):
    return 0.0 if n == 0 else n * math.log(x)


def dual_configuration(config: FKConfiguration) -> FKConfiguration:
    """Planar dual: dual edges open exactly where the crossed primal edge is closed.

    Wired primal configurations map to free configurations on the dual graph
    and back.
    """
    dom = config.domain
    inner = dom.interior_edge
    if config.on_dual:
        w = np.ones(dom.n_edges, dtype=bool)
        w[inner] = ~config.open_edges
        return FKConfiguration(dom, w, "wired")
    if config.bc != "wired":
        raise ValueError("duality is implemented for wired configurations only")
    return FKConfiguration(dom, ~config.open_edges[inner], "free", on_dual=True)


# -- coupling --------------------------------------------------------------------
def ising_from_fk(config: FKConfiguration, target_bc: str, rng) -> SpinConfiguration:
    """Fair coin per cluster; the boundary cluster is forced under plus/minus."""
    if config.on_dual:
        raise ValueError("spins live on primal configurations")
    if target_bc in ("plus", "minus") and config.bc != "wired":
        raise ValueError("plus/minus spins need a wired FK configuration")
    label = clusters(config)
    k = int(label.max()) + 1
    coins = np.where(rng.integers(0, 2, size=k) == 1, 1, -1).astype(np.int8)
    if target_bc in ("plus", "minus"):
        b = label[config.domain.boundary_vertex]
        coins[b] = 1 if target_bc == "plus" else -1
    return SpinConfiguration(config.domain, coins[label], target_bc)


def fk_from_ising(config: SpinConfiguration, params: FKParams, rng, bc: str = None) -> FKConfiguration:
    """Open each agreeing edge with probability ``p``; disagreeing edges stay closed."""
    dom = config.domain
    if bc is None:
        bc = "wired" if config.bc in ("plus", "minus") else "free"
    s = config.spins
    e = dom.edges
    agree = s[e[:, 0]] == s[e[:, 1]]
    w = agree & (rng.random(dom.n_edges) < params.p)
    if bc == "wired":
        if len(np.unique(s[dom.boundary_vertex])) != 1:
            raise ValueError("wired FK needs constant boundary spins")
        w |= dom.boundary_pair_edge
    return FKConfiguration(dom, w, bc)


# -- samplers ---------------------------------------------------------------------
def _check_q(params: FKParams):
    if params.q != 2:
        raise ValueError("sampling is implemented for q = 2 only")


def sample_fk(domain: DiscreteDomain, bc, params: FKParams, steps: int, rng) -> FKConfiguration:
    """FK-Ising configuration after ``steps`` Swendsen-Wang alternations."""
    _check_q(params)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if bc not in FK_BCS:
        raise ValueError(f"unknown FK boundary condition {bc!r}")
    _, bonds, _, _ = _run_chain(domain, bc, params.p, steps, rng)
    return FKConfiguration(domain, bonds, bc)


def sample_ising(domain: DiscreteDomain, bc, params: IsingParams, steps: int, rng) -> SpinConfiguration:
    """Ising configuration after ``steps`` Swendsen-Wang sweeps."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not isinstance(bc, MixedBC) and bc not in SPIN_BCS:
        raise ValueError(f"unknown spin boundary condition {bc!r}")
    if isinstance(bc, MixedBC):
        bc = _SpinMixed(bc.labels)
    spins, _, _, _ = _run_chain(domain, bc, params.p, steps, rng)
    if isinstance(bc, _SpinMixed):
        bc = MixedBC(bc.labels)
    return SpinConfiguration(domain, spins, bc)


@dataclass(frozen=True)
class _SpinMixed(MixedBC):
    _fk: bool = field(default=False, repr=False)


def fk_chain(domain, bc, params: FKParams, n_samples: int, rng, burnin: int = 100, thin: int = 1) -> np.ndarray:
    """Recorded FK states (``n_samples x n_edges`` booleans) of one chain."""
    _check_q(params)
    _, _, out_b, _ = _run_chain(domain, bc, params.p, n_samples * thin, rng, burnin, thin, record=True)
    return out_b


def ising_chain(domain, bc, params: IsingParams, n_samples: int, rng, burnin: int = 100, thin: int = 1) -> np.ndarray:
    """Recorded spin states (``n_samples x n_vertices`` int8) of one chain."""
    if isinstance(bc, MixedBC):
        bc = _SpinMixed(bc.labels)
    _, _, _, out_s = _run_chain(domain, bc, params.p, n_samples * thin, rng, burnin, thin, record=True)
    return out_s


def graph_chain(n_vertices: int, edges, p: float, n_samples: int, rng, burnin: int = 100, thin: int = 1):
    """Free-bc Edwards-Sokal chain on an arbitrary graph.

    Returns ``(bonds, spins)`` of shapes ``(n_samples, n_edges)`` and
    ``(n_samples, n_vertices)``. Useful for graphs that are not lattice
    domains, such as a single edge.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    eu, ev = e[:, 0].copy(), e[:, 1].copy()
    n = int(n_vertices)
    group = np.full(n, -1, dtype=np.int64)
    gsign = np.zeros(0, dtype=np.int8)
    forced = np.zeros(len(e), dtype=bool)
    spins = np.ones(n, dtype=np.int8)
    total = burnin + n_samples * thin
    rec = np.zeros(total, dtype=bool)
    rec[burnin::thin] = True
    out_b = np.zeros((n_samples, len(e)), dtype=bool)
    out_s = np.zeros((n_samples, n), dtype=np.int8)
    r = 0
    for start in range(0, total, 256):
        m = min(256, total - start)
        U = rng.random((m, len(e)))
        C = rng.integers(0, 2, size=(m, n), dtype=np.int8).astype(bool)
        _, r = _sw_block(n, eu, ev, spins, float(p), forced, group, gsign, U, C, rec[start:start + m], out_b, out_s, r)
    return out_b, out_s


def enumerate_graph_fk(n_vertices: int, edges, params: FKParams) -> "ProbabilityTable":
    """Exact free-bc FK law on an arbitrary graph."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(e) > MAX_ENUM_BITS:
        raise ValueError("state space too large for enumeration")
    group = np.full(int(n_vertices), -1, dtype=np.int64)
    return _fk_table(int(n_vertices), e, _all_bits(len(e)), np.arange(len(e)), group, params)


# -- exact enumeration -------------------------------------------------------------
@dataclass(frozen=True)
class ProbabilityTable:
    """Exact law over the free variables.

    ``states`` holds full configurations (spins or open-edge indicators);
    ``codes`` the integer code of each state's free bits (see :meth:`encode`).
    """

    states: np.ndarray
    probs: np.ndarray
    free: np.ndarray

    def encode(self, samples) -> np.ndarray:
        x = np.asarray(samples)[..., self.free]
        bits = (x > 0) if x.dtype != bool else x
        weights = 1 << np.arange(bits.shape[-1], dtype=np.int64)
        return (bits.astype(np.int64) * weights).sum(-1)

    @property
    def codes(self) -> np.ndarray:
        return self.encode(self.states)

    def prob_of(self, predicate) -> float:
        mask = np.array([bool(predicate(s)) for s in self.states])
        return float(self.probs[mask].sum())


MAX_ENUM_BITS = 20


def _all_bits(m: int) -> np.ndarray:
    codes = np.arange(1 << m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(bool)


def enumerate_exact(domain: DiscreteDomain, model: str, bc, params) -> ProbabilityTable:
    """Brute-force Gibbs / FK law over every configuration."""
    if model == "ising":
        beta = params.beta if isinstance(params, (IsingParams, FKParams)) else float(params)
        n = domain.n_vertices
        bv = domain.boundary_vertex
        if bc == "free":
            free = np.arange(n)
            fixed_val = None
        elif bc in ("plus", "minus"):
            free = np.nonzero(~bv)[0]
            fixed_val = 1 if bc == "plus" else -1
        else:
            raise ValueError(f"unsupported spin boundary condition {bc!r}")
        if len(free) > MAX_ENUM_BITS:
            raise ValueError("state space too large for enumeration")
        bits = _all_bits(len(free))
        states = np.full((len(bits), n), fixed_val or 1, dtype=np.int8)
        states[:, free] = np.where(bits, 1, -1)
        e = domain.edges
        H = -(states[:, e[:, 0]].astype(np.int64) * states[:, e[:, 1]]).sum(1)
        logw = -beta * H
        w = np.exp(logw - logw.max())
        return ProbabilityTable(states, w / w.sum(), free)
    if model == "fk":
        if not isinstance(params, FKParams):
            raise TypeError("fk enumeration needs FKParams")
        forced = _forced_open(domain, bc)
        free = np.nonzero(~forced)[0]
        if len(free) > MAX_ENUM_BITS:
            raise ValueError("state space too large for enumeration")
        bits = _all_bits(len(free))
        states = np.ones((len(bits), domain.n_edges), dtype=bool)
        states[:, free] = bits
        group = np.where(FKConfiguration(domain, states[-1], bc).merged_nodes(), 0, -1).astype(np.int64)
        return _fk_table(domain.n_vertices, domain.edges, states, free, group, params)
    raise ValueError(f"unknown model {model!r}")


def enumerate_dual_free(domain: DiscreteDomain, params: FKParams) -> ProbabilityTable:
    """Exact free-bc FK law on the dual graph of ``domain``."""
    dual = derive_dual(domain)
    m = dual.n_edges
    if m > MAX_ENUM_BITS:
        raise ValueError("state space too large for enumeration")
    states = _all_bits(m)
    group = np.full(domain.n_faces, -1, dtype=np.int64)
    return _fk_table(domain.n_faces, dual.edges, states, np.arange(m), group, params)


def _fk_table(n, edges, states, free, group, params):
    k = _count_clusters_batch(n, edges[:, 0].copy(), edges[:, 1].copy(), states, group)
    o = states.sum(1)
    c = states.shape[1] - o
    with np.errstate(divide="ignore"):
        logw = o * np.log(params.p) + c * np.log1p(-params.p) + k * np.log(params.q)
    w = np.exp(logw - logw.max())
    return ProbabilityTable(states, w / w.sum(), free)


# -- serialization ---------------------------------------------------------------------
def _bitstring(a) -> str:
    return "".join("1" if x else "0" for x in np.asarray(a).ravel())


def _bc_to_json(bc):
    return bc if isinstance(bc, str) else {"mixed": list(map(int, bc.labels))}


def _bc_from_json(doc):
    if isinstance(doc, dict):
        return MixedBC(tuple(doc["mixed"]))
    return doc


def config_to_json(config, domain_ref: str = "domain.json") -> dict:
    if isinstance(config, SpinConfiguration):
        return {"domain_ref": domain_ref, "bc": _bc_to_json(config.bc), "spins": _bitstring(config.spins > 0)}
    return {
        "domain_ref": domain_ref,
        "bc": _bc_to_json(config.bc),
        "open_edges": _bitstring(config.open_edges),
        **({"on_dual": True} if config.on_dual else {}),
    }


def config_from_json(doc: dict, domain: DiscreteDomain):
    bc = _bc_from_json(doc.get("bc", "free"))
    if "spins" in doc:
        bits = np.array([c == "1" for c in doc["spins"]], dtype=bool)
        if len(bits) != domain.n_vertices:
            raise ValueError("field 'spins': length does not match the domain")
        return SpinConfiguration(domain, np.where(bits, 1, -1), bc)
    if "open_edges" in doc:
        bits = np.array([c == "1" for c in doc["open_edges"]], dtype=bool)
        return FKConfiguration(domain, bits, bc, on_dual=bool(doc.get("on_dual", False)))
    raise ValueError("configuration needs a 'spins' or 'open_edges' field")

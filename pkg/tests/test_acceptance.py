"""Acceptance criteria, one test per criterion.

Each test prints one PASS/FAIL line (also collected in the terminal
summary) and fails when its criterion or runtime budget is not met. All
seeds are fixed in advance.
"""

import json
import time

import numpy as np
import pytest

from isingloops.cli import main as cli_main
from isingloops.exploration import direct_level1_fk, direct_level1_leftmost, explore_all_fk_level1, harvest_outermost
from isingloops.fk_ising import (
    P_SD,

    FKConfiguration,
    FKParams,
    IsingParams,
    SpinConfiguration,
    dual_configuration,
    enumerate_dual_free,
    enumerate_exact,
    enumerate_graph_fk,
    fk_chain,
    fk_from_ising,
    graph_chain,
    ising_chain,
    ising_from_fk,
    make_rng,
    sample_ising,
)
from isingloops.lattice import DiscreteDomain, build_rectangle
from isingloops.loops import classify_ising_levels, cut_out_domains, extract_ising_loops, ising_interface_edges
from isingloops.metric import collection_distance, loop_diameter
from isingloops.stats import (
    binomial_3sigma_ok,
    boundary_gap_curve,
    box_counting_dimension,
    closeness_ensemble,
    markov_property_check,
    sample_rngs,
)

SEED = 20261019
SQ2 = np.sqrt(2.0)
pytestmark = pytest.mark.acceptance


def per_state_failures(table, samples):
    """States whose empirical count misses the exact probability at the 3-sigma level."""
    counts = np.bincount(table.encode(samples), minlength=1 << len(table.free))
    n = len(samples)
    return [int(c) for c, p in zip(table.codes, table.probs) if not binomial_3sigma_ok(int(counts[c]), n, float(p))]


def l_shape():
    return DiscreteDomain([(0, 0), (1, 0), (0, 1)])


# -- 1 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_c01_exact_law_sampling(acceptance_report):
    t0 = time.perf_counter()
    n = 100_000
    cases = [
        ("fk", build_rectangle(1, 1), "free"),
        ("fk", build_rectangle(2, 2), "wired"),
        ("fk", build_rectangle(3, 1), "wired"),
        ("fk", l_shape(), "wired"),
        ("ising", build_rectangle(1, 1), "free"),
        ("ising", build_rectangle(2, 2), "plus"),
        ("ising", build_rectangle(3, 2), "plus"),
        ("ising", build_rectangle(3, 3), "plus"),
    ]
    bad, n_states, domains = [], 0, set()
    for model, d, bc in cases:
        domains.add((d.n_faces, tuple(map(tuple, d.faces))))
        if model == "fk":
            table = enumerate_exact(d, "fk", bc, FKParams())
            s = fk_chain(d, bc, FKParams(), n, make_rng(SEED), burnin=100, thin=5)
        else:
            table = enumerate_exact(d, "ising", bc, IsingParams())
            s = ising_chain(d, bc, IsingParams(), n, make_rng(SEED), burnin=100, thin=5)
        assert len(table.free) <= 12
        n_states += len(table.probs)
        f = per_state_failures(table, s)
        if f:
            bad.append((model, d.n_faces, bc, f))
    el = time.perf_counter() - t0
    ok = acceptance_report(1, not bad and len(domains) >= 5, f"{len(domains)} domains, {n_states} states, off-3sigma: {bad}", el, 120)
    assert ok


# -- 2 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_c02_edwards_sokal(acceptance_report):
    t0 = time.perf_counter()
    n = 100_000
    rng = make_rng(SEED)
    bad = []
    # bonds -> spins reproduces the Ising law
    for d, fbc, sbc in [(build_rectangle(3, 3), "wired", "plus"), (build_rectangle(1, 1), "free", "free")]:
        table = enumerate_exact(d, "ising", sbc, IsingParams())
        bonds = fk_chain(d, fbc, FKParams(), n, rng, burnin=100, thin=5)
        spins = np.array([ising_from_fk(FKConfiguration(d, w, fbc), sbc, rng).spins for w in bonds])
        if per_state_failures(table, spins):
            bad.append(("fk->ising", d.n_faces, sbc))
    # one full Gibbs cycle applied to exact draws keeps the law
    for d, sbc in [(build_rectangle(3, 3), "plus"), (build_rectangle(1, 1), "free")]:
        table = enumerate_exact(d, "ising", sbc, IsingParams())
        draws = table.states[rng.choice(len(table.probs), size=n, p=table.probs)]
        out = np.empty_like(draws)
        for k, s in enumerate(draws):
            w = fk_from_ising(SpinConfiguration(d, s, sbc), FKParams(), rng)
            out[k] = ising_from_fk(w, sbc, rng).spins
        if per_state_failures(table, out):
            bad.append(("cycle", d.n_faces, sbc))
    # single-edge checkpoints
    t = enumerate_graph_fk(2, [[0, 1]], FKParams(P_SD))
    exact_open = float(t.probs[t.states[:, 0]].sum())
    bonds, spins = graph_chain(2, [[0, 1]], P_SD, n, rng)
    checks = {
        "exact P(open)": abs(exact_open - (SQ2 - 1)) < 1e-12,
        "P(open)": binomial_3sigma_ok(int(bonds[:, 0].sum()), n, SQ2 - 1),
        "P(agree)": binomial_3sigma_ok(int((spins[:, 0] == spins[:, 1]).sum()), n, 1 / SQ2),
    }
    bad += [k for k, v in checks.items() if not v]
    el = time.perf_counter() - t0
    ok = acceptance_report(2, not bad, f"failures: {bad}", el, 120)
    assert ok


# -- 3 -------------------------------------------------------------------------------
def test_c03_duality(acceptance_report):
    t0 = time.perf_counter()
    bad = []
    params = FKParams(P_SD)
    for d in (build_rectangle(2, 2), build_rectangle(3, 2), build_rectangle(3, 3), build_rectangle(4, 2)):
        wired = enumerate_exact(d, "fk", "wired", params)
        free = enumerate_dual_free(d, params)
        inner = d.interior_edge
        weights = 1 << np.arange(int(inner.sum()), dtype=np.int64)
        pushed = np.zeros(len(free.probs))
        for s, p in zip(wired.states, wired.probs):
            dual = dual_configuration(FKConfiguration(d, s, "wired"))
            np.add.at(pushed, int((dual.open_edges.astype(np.int64) * weights).sum()), p)
        codes = (free.states.astype(np.int64) * weights).sum(1)
        if not np.allclose(pushed[codes], free.probs, atol=1e-12):
            bad.append(d.n_faces)
    invol = 0
    rngs = sample_rngs(SEED, 4)
    for (n, m), g in zip([(4, 4), (8, 8), (16, 16), (32, 32)], rngs):
        d = build_rectangle(n, m)
        for w in fk_chain(d, "wired", FKParams(), 2500, g, burnin=10, thin=1):
            c = FKConfiguration(d, w, "wired")
            invol += dual_configuration(dual_configuration(c)) != c
    el = time.perf_counter() - t0
    ok = acceptance_report(3, not bad and invol == 0, f"law mismatches on {bad}, involution failures {invol}/10000", el, 60)
    assert ok


# -- 4 -------------------------------------------------------------------------------
def _coupling_violations(omega, sigma):
    v = int((ising_interface_edges(sigma) & omega.open_edges).sum())
    d = omega.domain
    i0, j0 = d.origin
    home = np.full(d.face_mask.shape, -1, dtype=np.int64)
    for k, cut in enumerate(cut_out_domains(omega)):
        home[cut.faces[:, 0] - i0, cut.faces[:, 1] - j0] = k
    for l in extract_ising_loops(sigma, "leftmost"):
        f = (np.asarray(l.grid_points) - 1) // 2
        h = np.unique(home[f[:, 0] - i0, f[:, 1] - j0])
        v += not (len(h) == 1 and h[0] >= 0)
    return v


@pytest.mark.slow
def test_c04_ising_loops_inside_dual_fk(acceptance_report):
    t0 = time.perf_counter()
    plan = [(16, 5000), (32, 3000), (64, 1500), (128, 500)]
    total, viol = 0, 0
    for (n, k), g in zip(plan, sample_rngs(SEED, len(plan))):
        d = build_rectangle(n, n, 1 / n)
        for w in fk_chain(d, "wired", FKParams(), k, g, burnin=20, thin=1):
            omega = FKConfiguration(d, w, "wired")
            viol += _coupling_violations(omega, ising_from_fk(omega, "plus", g))
            total += 1
    el = time.perf_counter() - t0
    ok = acceptance_report(4, viol == 0 and total == 10_000, f"{total} coupled samples up to 128^2, {viol} violations", el, 300)
    assert ok


# -- 5 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_c05_exploration_completeness(acceptance_report):
    t0 = time.perf_counter()
    viol, total = 0, 0
    for n, g in zip((16, 32, 64), sample_rngs(SEED, 3)):
        d = build_rectangle(n, n)
        eps = 4.0 * d.mesh
        spins = ising_chain(d, "plus", IsingParams(), 1000, g, burnin=50, thin=2)
        for k, s in enumerate(spins):
            c = SpinConfiguration(d, s, "plus")
            tr = harvest_outermost(c, FKParams(), eps, g)
            got = {l.edge_set for l in tr.harvested() if l.diameter() >= eps}
            want = {l.edge_set for l in direct_level1_leftmost(c, eps) if l.diameter() >= eps}
            viol += got != want
            total += 1
    el = time.perf_counter() - t0
    ok = acceptance_report(5, viol == 0, f"{total} configurations at 16^2/32^2/64^2, {viol} violations", el, 600)
    assert ok


# -- 6 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_c06_fk_exploration(acceptance_report):
    t0 = time.perf_counter()
    d = build_rectangle(32, 32)
    eps = 4.0 * d.mesh
    viol = 0
    for w in fk_chain(d, "wired", FKParams(), 1000, make_rng(SEED), burnin=50, thin=2):
        f = FKConfiguration(d, w, "wired")
        got = {l.edge_set for l in explore_all_fk_level1(f, eps) if l.diameter() >= eps}
        want = {l.edge_set for l in direct_level1_fk(f) if l.diameter() >= eps}
        viol += got != want
    el = time.perf_counter() - t0
    ok = acceptance_report(6, viol == 0, f"1000 wired samples at 32^2, {viol} violations", el, 600)
    assert ok


# -- 7 -------------------------------------------------------------------------------
def _random_loop(rng):
    k = int(rng.integers(3, 13))
    r = float(np.exp(rng.uniform(np.log(1e-3), np.log(0.5))))
    t = np.sort(rng.uniform(0, 2 * np.pi, k))
    rad = r * rng.uniform(0.5, 1.0, k)
    c = rng.uniform(0, 1, 2)
    return np.column_stack([c[0] + rad * np.cos(t), c[1] + rad * np.sin(t)])


@pytest.mark.slow
def test_c07_metric(acceptance_report):
    t0 = time.perf_counter()
    rng = make_rng(SEED)
    sym = ident = tri = 0
    worst = 0.0
    for _ in range(10_000):
        A, B, C = ([_random_loop(rng) for _ in range(int(rng.integers(0, 4)))] for _ in range(3))
        ab = collection_distance(A, B).value
        ba = collection_distance(B, A).value
        bc = collection_distance(B, C).value
        ac = collection_distance(A, C).value
        sym += ab != ba
        ident += collection_distance(A, A).value != 0.0
        if ac > ab + bc + 1e-9:
            tri += 1
            worst = max(worst, ac - ab - bc)
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    examples = [
        abs(collection_distance([sq], [sq]).value) <= 1e-9,
        abs(collection_distance([sq], []).value - loop_diameter(sq)) <= 1e-9,
        abs(collection_distance([sq], [sq + [0.3, 0.0]]).value - 0.3) <= 1e-9,
    ]
    el = time.perf_counter() - t0
    ok = not sym and not ident and not tri and all(examples)
    detail = f"10000 triples: symmetry {sym}, identity {ident}, triangle {tri} (worst excess {worst:.3g}); examples {examples}"
    assert acceptance_report(7, ok, detail, el, 300)


# -- 8 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_c08_boundary_avoidance(acceptance_report):
    t0 = time.perf_counter()
    d = build_rectangle(128, 128, 1 / 128)
    h = d.mesh
    reps = boundary_gap_curve(d, [8 * h, 4 * h, 2 * h], 0.25 * d.diameter(), samples=500, rng=SEED, steps=50)
    est = [r.estimate for r in reps]
    se = [r.stderr for r in reps]
    mono = all(b <= a + 3 * np.hypot(sa, sb) for a, b, sa, sb in zip(est, est[1:], se, se[1:]))
    margin = est[0] - est[-1] > 2 * np.hypot(se[0], se[-1])
    el = time.perf_counter() - t0
    detail = "P(8d,4d,2d) = " + ", ".join(f"{p:.3f}+-{s:.3f}" for p, s in zip(est, se))
    assert acceptance_report(8, mono and margin, detail, el, 1200)


# -- 9 -------------------------------------------------------------------------------
@pytest.mark.slow
def test_c09_dimension(acceptance_report):
    t0 = time.perf_counter()
    d = build_rectangle(256, 256, 1 / 256)
    slopes = []
    for g in sample_rngs(SEED, 20):
        c = sample_ising(d, "plus", IsingParams(), 100, g)
        level1 = [l for l in classify_ising_levels(extract_ising_loops(c, "leftmost"), c) if l.level == 1]
        slopes.append(box_counting_dimension(max(level1, key=lambda l: l.diameter())).slope)
    m = float(np.mean(slopes))
    el = time.perf_counter() - t0
    assert acceptance_report(9, 1.20 <= m <= 1.55, f"mean slope {m:.3f} over 20 samples at 256^2 (band [1.20, 1.55])", el, 1200)


# -- 10 ------------------------------------------------------------------------------
@pytest.mark.slow
def test_c10_closeness_trend(acceptance_report):
    t0 = time.perf_counter()
    reps = []
    for n in (16, 32, 64):
        reps.append(closeness_ensemble(build_rectangle(n, n, 1 / n), 0.25, 200, rng=SEED, steps=50))
    med = [r.estimate for r in reps]
    se = [r.stderr for r in reps]
    ok = all(b <= a + 3 * np.hypot(sa, sb) for a, b, sa, sb in zip(med, med[1:], se, se[1:]))
    el = time.perf_counter() - t0
    detail = "median max component (1/16, 1/32, 1/64) = " + ", ".join(f"{m:.4f}+-{s:.4f}" for m, s in zip(med, se))
    assert acceptance_report(10, ok, detail, el, 1200)


# -- 11 ------------------------------------------------------------------------------
@pytest.mark.slow
def test_c11_markov(acceptance_report):
    t0 = time.perf_counter()
    r = markov_property_check(build_rectangle(3, 3), 400_000, rng=SEED)
    el = time.perf_counter() - t0
    ok = r.passed and not r.vacuous and r.events >= 1000
    detail = f"{r.events} conditioning events, {len(r.inner_edges)} inner edges, {sum(not row[4] for row in r.table)} states off 3 sigma"
    assert acceptance_report(11, ok, detail, el, 300)


# -- 12 ------------------------------------------------------------------------------
def test_c12_reproducibility(acceptance_report, tmp_path, capsys):
    t0 = time.perf_counter()
    p = lambda name: str(tmp_path / name)
    commands = [
        ["sample", "--shape", "rect:16x16", "--mesh", "0.0625", "--model", "fk", "--bc", "wired", "--steps", "50", "--seed", "7", "--out", p("fk.json")],
        ["sample", "--shape", "disk:1", "--mesh", "0.125", "--model", "ising", "--bc", "plus", "--steps", "50", "--seed", "8", "--out", p("spins.json")],
        ["loops", "--config", p("spins.json"), "--chirality", "leftmost", "--out", p("left.json")],
        ["loops", "--config", p("spins.json"), "--chirality", "rightmost", "--out", p("right.json")],
        ["loops", "--config", p("fk.json"), "--out", p("fkloops.json")],
        ["explore", "--config", p("spins.json"), "--epsilon", "2", "--seed", "3", "--out", p("harvest.json")],
        ["explore", "--config", p("fk.json"), "--epsilon", "2", "--out", p("fkexplore.json")],
        ["metric", "--a", p("left.json"), "--b", p("right.json"), "--out", p("metric.json")],
        ["stats", "boundary-gap", "--shape", "rect:16x16", "--mesh", "0.0625", "--eta", "0.125", "--epsilon", "0.3",
         "--samples", "6", "--steps", "10", "--seed", "1", "--jobs", "2", "--out", p("gap.csv")],
        ["stats", "closeness", "--shape", "rect:16x16", "--mesh", "0.0625", "--epsilon", "0.25", "--samples", "4", "--steps", "10", "--out", p("close.csv")],
        ["stats", "spectrum", "--shape", "rect:16x16", "--mesh", "0.0625", "--samples", "3", "--steps", "10", "--out", p("spectrum.csv")],
        ["stats", "dimension", "--shape", "rect:32x32", "--mesh", "0.03125", "--samples", "2", "--steps", "10", "--out", p("dim.csv")],
        ["stats", "markov", "--shape", "rect:2x2", "--samples", "200", "--out", p("markov.csv")],
        ["render", "--config", p("spins.json"), "--loops", p("left.json"), "--out", p("spins.svg")],
    ]
    failures = []
    for argv in commands:
        if cli_main(argv) != 0:
            failures.append(("run", argv[0], argv[-1]))
            continue
        out = argv[-1]
        manifest = json.loads(open(out + ".manifest.json").read())
        before = {q: open(q, "rb").read() for q in manifest["outputs"]}
        capsys.readouterr()
        code = cli_main(["rerun", "--manifest", out + ".manifest.json"])
        verdict = json.loads(capsys.readouterr().out.splitlines()[-1])
        after = {q: open(q, "rb").read() for q in manifest["outputs"]}
        if code != 0 or not verdict["identical"] or before != after:
            failures.append(("rerun", argv[0], out))
    el = time.perf_counter() - t0
    assert acceptance_report(12, not failures, f"{len(commands)} commands replayed, failures: {failures}", el, 60)

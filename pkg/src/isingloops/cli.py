"""Command-line interface.

Every command is a pure function of its input files, flags and seed. Each
output file embeds the hash of a run manifest, which is written next to it
(``<output>.manifest.json``) and can be replayed with ``rerun``.

Exit codes: 0 success, 2 usage error, 3 input error, 4 numeric validation
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .exploration import explore_all_fk_level1, harvest_outermost
from .fk_ising import (
    BETA_C,
    FK_BCS,
    SPIN_BCS,
    FKConfiguration,
    FKParams,
    IsingParams,
    SpinConfiguration,
    config_from_json,
    config_to_json,
    make_rng,
    sample_fk,
    sample_ising,
)
from .lattice import DomainError, build_rectangle, discretize_shape, domain_from_json, domain_to_json, parse_shape
from .loops import (
    classify_ising_levels,
    dumps,
    extract_ising_loops,
    fk_loops_with_levels,
    loops_from_json,
    loops_to_json,
    render_svg,
)
from .metric import collection_distance
from .stats import (
    box_counting_dimension,
    boundary_gap_curve,
    closeness_ensemble,
    loop_size_spectrum,
    markov_property_check,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4


class InputError(Exception):
    """Missing or corrupt input file; carries the file and field involved."""

    def __init__(self, message, file=None, field=None):
        super().__init__(message)
        self.file, self.field = file, field


class NumericError(Exception):
    """A numeric flag outside its allowed range."""

    def __init__(self, flag, value, rule):
        super().__init__(f"{flag}={value!r}: {rule}")
        self.flag, self.value, self.rule = flag, value, rule


# -- validation -------------------------------------------------------------------------
def _check(flag, value, ok, rule):
    if value is not None and not ok(value):
        raise NumericError(flag, value, rule)


def _validate(args):
    _check("--mesh", getattr(args, "mesh", None), lambda v: math.isfinite(v) and v > 0, "must be a positive number")
    _check("--steps", getattr(args, "steps", None), lambda v: v >= 1, "must be >= 1")
    _check("--burnin", getattr(args, "burnin", None), lambda v: v >= 0, "must be >= 0")
    _check("--samples", getattr(args, "samples", None), lambda v: v >= 1, "must be >= 1")
    _check("--jobs", getattr(args, "jobs", None), lambda v: v >= 1, "must be >= 1")
    _check("--seed", getattr(args, "seed", None), lambda v: 0 <= v < 2**63, "must lie in [0, 2^63)")
    _check("--beta", getattr(args, "beta", None), lambda v: math.isfinite(v) and v >= 0, "must be a finite number >= 0")
    eps = getattr(args, "epsilon", None)
    eta = getattr(args, "eta", None)
    _check("--epsilon", eps, lambda v: math.isfinite(v) and v > 0, "must be a positive number")
    _check("--eta", eta, lambda v: math.isfinite(v) and v > 0, "must be a positive number")
    if eps is not None and eta is not None and not eta < eps:
        raise NumericError("--eta", eta, "must be smaller than --epsilon")


# -- files and manifests ----------------------------------------------------------------
def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_json(path, what):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {what}: {exc.strerror}", file=path) from None
    try:
        return json.loads(raw), _sha(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{what} is not valid JSON: {exc}", file=path) from None


def _load_domain(doc, path, field="domain"):
    try:
        return domain_from_json(doc)
    except (DomainError, ValueError, TypeError) as exc:
        raise InputError(str(exc), file=path, field=field) from None


def _load_config(path, inputs):
    doc, h = _read_json(path, "configuration")
    inputs[path] = h
    if not isinstance(doc, dict):
        raise InputError("configuration must be a JSON object", file=path)
    if "domain" in doc:
        domain = _load_domain(doc["domain"], path)
    elif "domain_ref" in doc:
        ref = os.path.join(os.path.dirname(path), doc["domain_ref"])
        ddoc, dh = _read_json(ref, "domain")
        inputs[ref] = dh
        domain = _load_domain(ddoc, ref)
    else:
        raise InputError("missing field", file=path, field="domain_ref")
    try:
        return config_from_json(doc, domain)
    except (ValueError, KeyError, TypeError) as exc:
        field = "spins" if "spins" in doc else "open_edges" if "open_edges" in doc else "bc"
        raise InputError(str(exc), file=path, field=field) from None


def _load_loops(path, inputs):
    doc, h = _read_json(path, "loop file")
    inputs[path] = h
    items = doc.get("loops") if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise InputError("loop file needs a 'loops' list", file=path, field="loops")
    mesh = float(doc.get("mesh", 1.0)) if isinstance(doc, dict) else 1.0
    try:
        return loops_from_json(items, mesh)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad loop entry: {exc}", file=path, field="loops") from None


class Run:
    """Collects the manifest of one command and writes its outputs."""

    def __init__(self, args, argv):
        self.command = args.command
        self.argv = list(argv)
        self.parameters = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "func")}
        self.seed = getattr(args, "seed", None)
        self.inputs = {}
        self.outputs = []

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "parameters": self.parameters,
            "seed": self.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": list(self.outputs),
            "version": __version__,
        }

    @property
    def manifest_hash(self) -> str:
        return _sha(dumps(self.manifest()).encode())

    def plan(self, *paths):
        self.outputs.extend(p for p in paths if p)

    def write(self, path, text: str):
        with open(path, "w", newline="\n") as fh:
            fh.write(text)

    def finish(self, written: dict):
        """Write the manifest next to the first output with the output hashes."""
        if not self.outputs:
            return
        doc = self.manifest()
        doc["manifest_hash"] = self.manifest_hash
        doc["output_sha256"] = {p: _sha(written[p].encode()) for p in self.outputs}
        with open(self.outputs[0] + ".manifest.json", "w", newline="\n") as fh:
            fh.write(dumps(doc) + "\n")


def _json_doc(run, payload: dict) -> str:
    return dumps({**payload, "manifest_hash": run.manifest_hash}) + "\n"


def _domain_from_flags(args):
    try:
        shape = parse_shape(args.shape)
        if isinstance(shape, tuple) and shape[0] == "rect":
            return build_rectangle(shape[1], shape[2], args.mesh)
        return discretize_shape(shape, args.mesh)
    except (ValueError, DomainError) as exc:
        raise InputError(f"bad --shape: {exc}", field="--shape") from None


# -- commands -------------------------------------------------------------------------
def cmd_sample(args, run):
    if args.model == "ising" and args.bc not in SPIN_BCS:
        raise argparse.ArgumentTypeError(f"bc {args.bc!r} is not valid for the Ising model")
    if args.model == "fk" and args.bc not in FK_BCS:
        raise argparse.ArgumentTypeError(f"bc {args.bc!r} is not valid for the FK model")
    domain = _domain_from_flags(args)
    rng = make_rng(args.seed)
    beta = BETA_C if args.beta is None else args.beta
    steps = args.steps + args.burnin
    if args.model == "ising":
        config = sample_ising(domain, args.bc, IsingParams(beta), steps, rng)
    else:
        config = sample_fk(domain, args.bc, IsingParams(beta).to_fk(), steps, rng)
    out = args.out
    dom_path = os.path.splitext(out)[0] + ".domain.json"
    run.plan(out, dom_path)
    texts = {
        dom_path: _json_doc(run, domain_to_json(domain)),
        out: _json_doc(run, {**config_to_json(config, os.path.basename(dom_path)), "model": args.model}),
    }
    for p, t in texts.items():
        run.write(p, t)
    return texts


def _loops_payload(coll, mesh):
    return {"mesh": mesh, "loops": loops_to_json(coll)}


def cmd_loops(args, run):
    config = _load_config(args.config, run.inputs)
    if isinstance(config, SpinConfiguration):
        coll = extract_ising_loops(config, args.chirality)
        if config.bc == "plus":
            coll = classify_ising_levels(coll, config)
    else:
        coll, _ = fk_loops_with_levels(config)
    run.plan(args.out)
    text = _json_doc(run, _loops_payload(coll, config.domain.mesh))
    run.write(args.out, text)
    return {args.out: text}


def cmd_explore(args, run):
    config = _load_config(args.config, run.inputs)
    eps = args.epsilon * config.domain.mesh
    if isinstance(config, SpinConfiguration):
        if config.bc != "plus":
            raise InputError("exploration of Ising loops needs plus boundary conditions", file=args.config, field="bc")
        if not args.epsilon > 1:
            raise NumericError("--epsilon", args.epsilon, "must exceed 1 (mesh units)")
        tr = harvest_outermost(config, FKParams(), eps, make_rng(args.seed))
        d = config.domain
        iters = []
        for it in tr.iterations:
            iters.append(
                {
                    "index": it.index,
                    "regions": [d.vertices[r].tolist() for r in it.regions],
                    "open_edges": "".join("1" if b else "0" for b in it.open_edges),
                    "harvested": loops_to_json(it.harvested),
                    "residual": [d.vertices[r].tolist() for r in it.residual],
                }
            )
        payload = {"mode": "ising", "epsilon": eps, "seed": args.seed, "mesh": d.mesh, "iterations": iters}
    else:
        if config.bc != "wired":
            raise InputError("FK exploration needs wired boundary conditions", file=args.config, field="bc")
        if not args.epsilon > 1:
            raise NumericError("--epsilon", args.epsilon, "must exceed 1 (mesh units)")
        coll, tree = explore_all_fk_level1(config, eps, return_tree=True)
        payload = {"mode": "fk", "epsilon": eps, "mesh": config.domain.mesh, "loops": loops_to_json(coll), "regions": tree}
    run.plan(args.out)
    text = _json_doc(run, payload)
    run.write(args.out, text)
    return {args.out: text}


def cmd_metric(args, run):
    A = _load_loops(args.a, run.inputs)
    B = _load_loops(args.b, run.inputs)
    res = collection_distance(A.loops, B.loops)
    run.plan(args.out)
    text = _json_doc(run, res.to_json())
    if args.out:
        run.write(args.out, text)
    sys.stdout.write(text)
    return {args.out: text} if args.out else {}


def cmd_stats(args, run):
    est = args.estimator
    texts = {}
    if est in ("boundary-gap", "closeness", "spectrum", "dimension"):
        domain = _domain_from_flags(args)
    if est == "boundary-gap":
        if args.eta is None or args.epsilon is None:
            raise argparse.ArgumentTypeError("boundary-gap needs --eta and --epsilon")
        rep = boundary_gap_curve(domain, [args.eta], args.epsilon, None, args.samples, args.seed, args.steps, jobs=args.jobs)[0]
        body = rep.to_csv()
    elif est == "closeness":
        if args.epsilon is None:
            raise argparse.ArgumentTypeError("closeness needs --epsilon")
        rep = closeness_ensemble(domain, args.epsilon, args.samples, args.seed, args.steps, jobs=args.jobs)
        body = rep.to_csv()
    elif est in ("spectrum", "dimension"):
        rows = []
        for k, g in enumerate(_spawn(args.seed, args.samples)):
            cfg = sample_ising(domain, "plus", IsingParams(BETA_C), args.steps, g)
            level1 = [l for l in classify_ising_levels(extract_ising_loops(cfg), cfg) if l.level == 1]
            if est == "spectrum":
                sp = loop_size_spectrum(level1, domain.mesh)
                rows.append({"sample": k, "n_loops": len(level1), "counts_at_least": " ".join(map(str, sp.counts_at_least))})
            else:
                big = max(level1, key=lambda l: l.diameter(), default=None)
                try:
                    bc = box_counting_dimension(big)
                    rows.append({"sample": k, "slope": bc.slope, "diameter": big.diameter()})
                except (ValueError, AttributeError):
                    rows.append({"sample": k, "slope": "", "diameter": big.diameter() if big else 0.0})
        body = _rows_csv(rows)
    elif est == "markov":
        shape = parse_shape(args.shape)
        if not (isinstance(shape, tuple) and shape[0] == "rect"):
            raise argparse.ArgumentTypeError("markov needs a rect shape")
        rep = markov_property_check(build_rectangle(shape[1], shape[2], args.mesh), args.samples, args.seed)
        rows = [{"state": c, "observed": o, "exact": p, "within_3sigma": int(ok)} for c, o, p, _, ok in rep.table]
        rows.append({"state": "summary", "observed": rep.events, "exact": "", "within_3sigma": int(rep.passed)})
        body = _rows_csv(rows)
    else:  # pragma: no cover - argparse restricts the choices
        raise argparse.ArgumentTypeError(f"unknown estimator {est!r}")
    run.plan(args.out)
    text = f"# manifest_hash={run.manifest_hash}\n" + body
    run.write(args.out, text)
    texts[args.out] = text
    return texts


def _spawn(seed, n):
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def _rows_csv(rows):
    import csv
    import io

    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def cmd_render(args, run):
    config = _load_config(args.config, run.inputs)
    coll = _load_loops(args.loops, run.inputs) if args.loops else None
    spins = config.spins if isinstance(config, SpinConfiguration) else None
    open_edges = config.open_edges if isinstance(config, FKConfiguration) else None
    svg = render_svg(config.domain, coll, spins=spins, open_edges=open_edges, size=args.size)
    run.plan(args.out)
    text = svg.replace("<svg ", f"<!-- manifest_hash={run.manifest_hash} -->\n<svg ", 1)
    if not text.endswith("\n"):
        text += "\n"
    run.write(args.out, text)
    return {args.out: text}


def cmd_rerun(args, argv_unused=None):
    doc, _ = _read_json(args.manifest, "manifest")
    try:
        argv = doc["argv"]
        expected = doc["output_sha256"]
    except (KeyError, TypeError) as exc:
        raise InputError("missing field", file=args.manifest, field=str(exc.args[0])) from None
    code = main(argv)
    if code != EXIT_OK:
        return code
    bad = []
    for p, h in sorted(expected.items()):
        try:
            with open(p, "rb") as fh:
                if _sha(fh.read()) != h:
                    bad.append(p)
        except OSError:
            bad.append(p)
    sys.stdout.write(dumps({"identical": not bad, "differing": bad}) + "\n")
    return EXIT_OK if not bad else EXIT_NUMERIC


# -- parser -----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isingloops", description="Critical Ising and FK-Ising loop toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def domain_flags(q):
        q.add_argument("--shape", default="rect:8x8", help="rect:WxH, rectangle:x0,y0,x1,y1, disk:r, ellipse:a,b or polygon:x,y;...")
        q.add_argument("--mesh", type=float, default=1.0)

    q = sub.add_parser("sample", help="sample an Ising or FK configuration")
    domain_flags(q)
    q.add_argument("--model", choices=["ising", "fk"], required=True)
    q.add_argument("--bc", required=True, help="plus, minus or free (ising); wired or free (fk)")
    q.add_argument("--beta", type=float, default=None, help="inverse temperature (default: critical)")
    q.add_argument("--steps", type=int, default=100)
    q.add_argument("--burnin", type=int, default=0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_sample)

    q = sub.add_parser("loops", help="extract loops from a configuration")
    q.add_argument("--config", required=True)
    q.add_argument("--chirality", choices=["leftmost", "rightmost"], default="leftmost")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_loops)

    q = sub.add_parser("explore", help="recursive exploration (plus spins or wired FK)")
    q.add_argument("--config", required=True)
    q.add_argument("--epsilon", type=float, required=True, help="stopping diameter in mesh units")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_explore)

    q = sub.add_parser("metric", help="distance between two loop collections")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_metric)

    q = sub.add_parser("stats", help="Monte Carlo estimators (CSV output)")
    q.add_argument("estimator", choices=["boundary-gap", "closeness", "spectrum", "dimension", "markov"])
    domain_flags(q)
    q.add_argument("--eta", type=float, default=None)
    q.add_argument("--epsilon", type=float, default=None)
    q.add_argument("--samples", type=int, default=100)
    q.add_argument("--steps", type=int, default=50)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_stats)

    q = sub.add_parser("render", help="SVG drawing of a configuration and loops")
    q.add_argument("--config", required=True)
    q.add_argument("--loops", default=None)
    q.add_argument("--size", type=int, default=600)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_render)

    q = sub.add_parser("rerun", help="replay a manifest and check the outputs are byte-identical")
    q.add_argument("--manifest", required=True)
    q.set_defaults(func=None)
    return p


def _error(kind, message, **extra):
    sys.stderr.write(dumps({"error": kind, "message": message, **{k: v for k, v in extra.items() if v is not None}}) + "\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        _validate(args)
        if args.command == "rerun":
            return cmd_rerun(args)
        run = Run(args, argv)
        written = args.func(args, run)
        run.finish(written)
        return EXIT_OK
    except argparse.ArgumentTypeError as exc:
        _error("usage", str(exc))
        return EXIT_USAGE
    except InputError as exc:
        _error("input", str(exc), file=exc.file, field=exc.field)
        return EXIT_INPUT
    except NumericError as exc:
        _error("numeric", str(exc), flag=exc.flag)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

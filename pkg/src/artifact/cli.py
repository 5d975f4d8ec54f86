"""Command-line front end: ``artifact <subcommand> ...``.

Exit status is 0 on success, 1 on a domain error (one diagnostic line on
stderr) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import importlib
import sys
from collections import Counter
from pathlib import Path

from . import formats as fm
from .enumeration import graphs_up_to
from .gsf import GSFFamily, compile_zero_profile_to_gsf, covers_family, find_embedding, is_family_free
from .hanf import compile_hanf_to_profiles, lift_sentence
from .harness import (
    always_accept,
    coin_tester,
    epsilon_distance,
    forbidden_type_tester,
    propagation_probe,
    rotation_gap,
    run_trials,
    spectral_gap,
)
from .neighborhoods import (
    _in_envelope,
    element_type_keys,
    enumerate_types,
    obeys_profile,
    type_counts,
)
from .reduction import QueryTranslator, apply_reduction
from .structures import BOTTOM, DomainError, Graph, Structure
from .zigzag import BASE_MAPS, COMPONENTS, build_canonical_model, check_component


class Context:
    def __init__(self, args):
        self.args = args
        self.out_lines: list[str] = []

    def emit(self, line: str = "") -> None:
        self.out_lines.append(line)

    def artifact(self, text: str, path: str | None = None) -> None:
        """Write an artifact (with the seed recorded) to ``path`` or ``-o``, else stdout."""
        text = f"# seed {self.args.seed}\n" + text
        target = path or self.args.output
        if target:
            fm.save(target, text)
            self.emit(f"wrote: {target}")
        else:
            self.out_lines.extend(text.rstrip("\n").split("\n"))


def _bool(x: bool) -> str:
    return "true" if x else "false"


def _structure(path: str) -> Structure:
    return fm.load(path, fm.read_structure)


def _graph(path: str) -> Graph:
    return fm.as_graph(_structure(path))


def _family(path: str) -> GSFFamily:
    return fm.load(path, fm.read_family)


def _rotation(path: str | None):
    if path is None:
        return BASE_MAPS["toy16"]()
    if path in BASE_MAPS:
        return BASE_MAPS[path]()
    return fm.load(path, fm.read_rotation)


def _radius(args, default: int = 1) -> int:
    return default if args.r is None else args.r


# --- subcommands ------------------------------------------------------------


def cmd_types(ctx: Context) -> None:
    A = _structure(ctx.args.file)
    for a, key in zip(A.universe, element_type_keys(A, _radius(ctx.args))):
        ctx.emit(f"{a} {key}")


def cmd_hist(ctx: Context) -> None:
    A = _structure(ctx.args.file)
    r = _radius(ctx.args)
    d = A.degree_bound if ctx.args.d is None else ctx.args.d
    counts = type_counts(A, r)
    keys = None
    if _in_envelope(A.signature, d, r, isinstance(A, Graph)):
        cat = enumerate_types(A.signature, d, r, graphs=isinstance(A, Graph))
        outside = set(counts) - set(cat.keys)
        if outside:
            raise DomainError(f"{len(outside)} element types fall outside the degree-{d} catalog")
        keys = list(cat.keys)
    ctx.artifact(fm.write_histogram(counts, keys))


def cmd_obeys(ctx: Context) -> None:
    A = _structure(ctx.args.file)
    rho = fm.load(ctx.args.profile, fm.read_profile)
    ctx.emit(f"result: {_bool(obeys_profile(A, rho))}")


def cmd_compile_gsf(ctx: Context) -> None:
    profiles = [fm.load(p, fm.read_profile) for p in ctx.args.profiles]
    fam = compile_zero_profile_to_gsf(profiles, ctx.args.size_bound)
    ctx.artifact(fm.write_family(fam))


def cmd_embed(ctx: Context) -> None:
    fam = _family(ctx.args.family)
    G = _graph(ctx.args.graph)
    members = list(fam)
    if not members:
        raise DomainError("family file has no marked graph")
    if not 0 <= ctx.args.index < len(members):
        raise DomainError(f"index {ctx.args.index} out of range 0..{len(members) - 1}")
    f = find_embedding(members[ctx.args.index], G)
    ctx.emit(f"result: {_bool(f is not None)}")
    for v, x in (f or {}).items():
        ctx.emit(f"{v} -> {x}")


def cmd_free(ctx: Context) -> None:
    ctx.emit(f"result: {_bool(is_family_free(_graph(ctx.args.graph), _family(ctx.args.family)))}")


def _sentence(ctx: Context):
    phi, sig, d = fm.load(ctx.args.sentence, fm.read_hanf)
    if ctx.args.d is not None:
        d = ctx.args.d
    if d is None:
        raise DomainError("degree bound unknown: pass --d or add 'degree:' to the sentence file")
    return phi, sig, d


def cmd_hanf_compile(ctx: Context) -> None:
    phi, sig, d = _sentence(ctx)
    radii = phi.radii() or {_radius(ctx.args)}
    if len(radii) > 1:
        raise DomainError(f"mixed radii {sorted(radii)}; lift first")
    (r,) = radii
    cat = enumerate_types(sig, d, r)
    pool = graphs_up_to(ctx.args.sat_pool, d) if ctx.args.sat_pool else None
    profiles = compile_hanf_to_profiles(phi, cat, pool)
    ctx.emit(f"profiles: {len(profiles)}")
    for i, rho in enumerate(profiles):
        if pool is not None:
            sat = rho.extra["satisfiable"]
            ctx.emit(f"profile {i} satisfiable: {'unknown' if sat is None else _bool(sat)}")
        if ctx.args.output:
            ctx.artifact(fm.write_profile(rho), f"{ctx.args.output}.{i}.profile")


def cmd_lift(ctx: Context) -> None:
    phi, sig, d = _sentence(ctx)
    if ctx.args.r is None:
        raise DomainError("--r (target radius) is required")
    cat = enumerate_types(sig, d, ctx.args.r)
    ctx.artifact(fm.write_hanf(lift_sentence(phi, ctx.args.r, cat), sig, d))


def cmd_zz_gen(ctx: Context) -> None:
    rot = _rotation(ctx.args.base)
    if rot.degree != ctx.args.D:
        raise DomainError(f"base map has degree {rot.degree}, not {ctx.args.D}")
    kwargs = {} if ctx.args.budget is None else {"budget": ctx.args.budget}
    M = build_canonical_model(rot, ctx.args.levels, **kwargs)
    ctx.artifact(f"# root {M.root}\n" + fm.write_structure(M.structure))


def cmd_zz_check(ctx: Context) -> None:
    A = _structure(ctx.args.file)
    res = check_component(A, ctx.args.which, _rotation(ctx.args.base))
    ctx.emit(f"result: {_bool(res.ok)}")
    if not res.ok:
        ctx.emit(f"clause: {res.clause}")
        ctx.emit("witness: " + " ".join(map(str, res.witness)))


def cmd_reduce(ctx: Context) -> None:
    A = _structure(ctx.args.file)
    red = apply_reduction(A, ctx.args.d)
    ctx.artifact(fm.write_graph(red.graph))
    if ctx.args.output:
        prov = fm.write_provenance(red.provenance, red.d, red.relation_index)
        ctx.artifact(prov, ctx.args.output + ".prov")


def cmd_sim_query(ctx: Context) -> None:
    from .harness import CountingOracle

    A = _structure(ctx.args.file)
    tr = QueryTranslator(CountingOracle(A), ctx.args.d)
    ans, used = tr.query(ctx.args.vertex, ctx.args.port)
    ctx.emit(f"answer: {'bottom' if ans is BOTTOM else ans}")
    ctx.emit(f"queries: {used}")


def _membership(ctx: Context):
    prop = ctx.args.property
    if prop in ("zigzag-prime", "zigzag", "zigzag~", "tree", "tree'"):
        which = "zigzag'" if prop == "zigzag-prime" else prop
        rot = _rotation(ctx.args.base)
        return lambda X: bool(check_component(X, which, rot))
    if prop == "free":
        if not ctx.args.family:
            raise DomainError("--family is required for property 'free'")
        fam = _family(ctx.args.family)
        return lambda X: is_family_free(fm.as_graph(X), fam)
    if prop == "profile":
        if not ctx.args.profile:
            raise DomainError("--profile is required for property 'profile'")
        rho = fm.load(ctx.args.profile, fm.read_profile)
        return lambda X: obeys_profile(X, rho)
    raise DomainError(f"unknown property {prop!r}")


def _move_text(move) -> str:
    op, a, b = move
    return f"{op} {a} {' '.join(b)}" if isinstance(b, tuple) else f"{op} {a} {b}"


def cmd_dist(ctx: Context) -> None:
    X = _structure(ctx.args.file)
    kwargs = {} if ctx.args.budget is None else {"cap": ctx.args.budget}
    res = epsilon_distance(X, _membership(ctx), ctx.args.eps, **kwargs)
    ctx.emit(f"result: {res}")
    ctx.emit(f"budget: {res.budget}")
    ctx.emit(f"candidates: {res.candidates}")
    for move in res.witness:
        ctx.emit(f"witness: {_move_text(move)}")


def _tester(ctx: Context):
    name = ctx.args.tester
    if name == "always":
        return always_accept
    if name == "coin":
        return coin_tester
    if name == "forbidden-type":
        if not ctx.args.profile:
            raise DomainError("--profile is required for tester 'forbidden-type'")
        return forbidden_type_tester(fm.load(ctx.args.profile, fm.read_profile))
    mod, sep, attr = name.partition(":")
    if not sep:
        raise DomainError(f"unknown tester {name!r} (use always, coin, forbidden-type or module:function)")
    try:
        return getattr(importlib.import_module(mod), attr)
    except (ImportError, AttributeError) as exc:
        raise DomainError(f"cannot load tester {name!r}: {exc}") from None


def cmd_pot(ctx: Context) -> None:
    X = _structure(ctx.args.file)
    rep = run_trials(_tester(ctx), X, ctx.args.trials, ctx.args.seed, ctx.args.ceiling, ctx.args.threads)
    ctx.emit("# evidence table from finitely many trials; not a testability verdict")
    for line in rep.lines():
        ctx.emit(line)


def cmd_gap(ctx: Context) -> None:
    path = ctx.args.file
    text = Path(path).read_text() if Path(path).is_file() else ""
    first = next((ln.split("#")[0].strip() for ln in text.splitlines() if ln.split("#")[0].strip()), "")
    if first == "rotation-map v1":
        value = rotation_gap(_rotation(path))
    else:
        value = spectral_gap(_graph(path))
    ctx.emit(f"gap: {value:.12f}")


def _vertex_set(text: str | None) -> list[str]:
    return [v for v in (text or "").split(",") if v]


def cmd_covers(ctx: Context) -> None:
    G = _graph(ctx.args.graph)
    ctx.emit(f"result: {_bool(covers_family(G, _vertex_set(ctx.args.set), _family(ctx.args.family)))}")


def cmd_probe(ctx: Context) -> None:
    G = _graph(ctx.args.graph)
    budget = 2 if ctx.args.budget is None else ctx.args.budget
    rep = propagation_probe(G, _family(ctx.args.family), _vertex_set(ctx.args.set), budget)
    for line in rep.lines():
        ctx.emit(line)
    for move in rep.witness:
        ctx.emit(f"witness: {_move_text(move)}")


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, default=None, help="degree bound")
    common.add_argument("--r", type=int, default=None, help="radius")
    common.add_argument("--seed", type=int, default=0, help="global random seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--budget", type=int, default=None, help="search budget")
    common.add_argument("-o", "--output", default=None, help="output file")

    p = argparse.ArgumentParser(prog="artifact", description="Bounded-degree property testing toolkit.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("types", cmd_types, "r-type key of every element")
    sp.add_argument("file")
    sp = add("hist", cmd_hist, "histogram of r-types")
    sp.add_argument("file")
    sp = add("obeys", cmd_obeys, "check a structure against a profile")
    sp.add_argument("file")
    sp.add_argument("--profile", required=True)
    sp = add("compile-gsf", cmd_compile_gsf, "compile 0-profiles to a forbidden family")
    sp.add_argument("profiles", nargs="+")
    sp.add_argument("--size-bound", type=int, default=6)
    sp = add("embed", cmd_embed, "find an embedding of a marked graph")
    sp.add_argument("family")
    sp.add_argument("graph")
    sp.add_argument("--index", type=int, default=0, help="which family member")
    sp = add("free", cmd_free, "check family freeness")
    sp.add_argument("graph")
    sp.add_argument("family")
    sp = add("hanf-compile", cmd_hanf_compile, "compile a Hanf sentence to profiles")
    sp.add_argument("sentence")
    sp.add_argument("--sat-pool", type=int, default=0, help="search graphs up to this size for models")
    sp = add("lift", cmd_lift, "lift a Hanf sentence to a larger radius")
    sp.add_argument("sentence")
    sp = add("zz-gen", cmd_zz_gen, "generate a canonical tree-of-expanders model")
    sp.add_argument("--D", type=int, default=2)
    sp.add_argument("--levels", type=int, default=1)
    sp.add_argument("--base", default=None, help="rotation map file (default: toy16)")
    sp = add("zz-check", cmd_zz_check, "evaluate a zig-zag component checker")
    sp.add_argument("file")
    sp.add_argument("--which", default="zigzag", choices=COMPONENTS)
    sp.add_argument("--base", default=None)
    sp = add("reduce", cmd_reduce, "apply the structure-to-graph reduction")
    sp.add_argument("file")
    sp = add("sim-query", cmd_sim_query, "answer a reduced-graph query through structure queries")
    sp.add_argument("file")
    sp.add_argument("--vertex", required=True)
    sp.add_argument("--port", type=int, required=True)
    sp = add("dist", cmd_dist, "exact epsilon-distance search")
    sp.add_argument("file")
    sp.add_argument("--property", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--base", default=None)
    sp.add_argument("--family", default=None)
    sp.add_argument("--profile", default=None)
    sp = add("pot", cmd_pot, "run a tester repeatedly and report acceptance")
    sp.add_argument("file")
    sp.add_argument("--tester", default="always")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--ceiling", type=int, default=None, help="query ceiling per trial")
    sp.add_argument("--profile", default=None)
    sp = add("gap", cmd_gap, "spectral gap of a regular graph or rotation map")
    sp.add_argument("file")
    sp = add("covers", cmd_covers, "check whether a vertex set covers a family")
    sp.add_argument("graph")
    sp.add_argument("family")
    sp.add_argument("--set", default="", help="comma-separated vertices")
    sp = add("probe", cmd_probe, "cover check plus smallest repair")
    sp.add_argument("graph")
    sp.add_argument("family")
    sp.add_argument("--set", default="", help="comma-separated vertices")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ctx = Context(args)
    try:
        args.fn(ctx)
    except DomainError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    except RecursionError:
        print("error: input too deeply nested", file=sys.stderr)
        return 1
    for line in ctx.out_lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())

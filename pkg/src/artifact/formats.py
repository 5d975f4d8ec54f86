"""Line-oriented text formats with line-numbered parse errors.

Every format starts with a ``<kind> v1`` header, uses ``key: value`` lines,
and ignores blank lines and ``#`` comments.  Ids are whitespace-free tokens.
"""

from __future__ import annotations

import re
from collections import Counter
from pathlib import Path
from typing import Iterator

from .gsf import MARKS, GSFFamily, MarkedGraph
from .hanf import HanfAtom, HanfDNF
from .neighborhoods import EXHAUSTIVE_ENVELOPE, NeighbourhoodProfile, TypeCatalog, enumerate_types, observed_catalog_from_counts
from .structures import GRAPH_SIGNATURE, DomainError, Graph, Signature, Structure
from .zigzag import RotationMap, validate_rotation_map


class FormatError(DomainError):
    def __init__(self, message: str, line: int | None = None, source: str = "<input>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


class _Lines:
    """Non-blank lines split into (line number, key, value); value is None for bare words."""

    def __init__(self, text: str, source: str = "<input>"):
        self.source = source
        self.rows: list[tuple[int, str, str | None]] = []
        for no, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].strip()
            if not body:
                continue
            if ": " in body:
                key, value = body.split(": ", 1)
                self.rows.append((no, key.strip(), value.strip()))
            elif body.endswith(":"):
                self.rows.append((no, body[:-1].strip(), ""))
            else:
                self.rows.append((no, body, None))
        self.pos = 0

    def error(self, message: str, line: int | None = None) -> FormatError:
        if line is None:
            if 0 < self.pos <= len(self.rows):
                line = self.rows[self.pos - 1][0]
            elif self.rows:
                line = self.rows[-1][0]
        return FormatError(message, line, self.source)

    def peek(self) -> tuple[int, str, str | None] | None:
        return self.rows[self.pos] if self.pos < len(self.rows) else None

    def peek_key(self) -> str | None:
        row = self.peek()
        return None if row is None else row[1]

    def next(self) -> tuple[int, str, str | None]:
        if self.pos >= len(self.rows):
            raise self.error("unexpected end of input")
        row = self.rows[self.pos]
        self.pos += 1
        return row

    def __iter__(self) -> Iterator[tuple[int, str, str | None]]:
        while self.pos < len(self.rows):
            yield self.next()

    def header(self, kind: str) -> None:
        no, key, value = self.next()
        if value is not None or key != f"{kind} v1":
            raise self.error(f"expected header '{kind} v1'", no)

    def field(self, key: str) -> str:
        no, k, value = self.next()
        if k != key or value is None:
            raise self.error(f"expected '{key}: ...'", no)
        return value

    def optional(self, key: str) -> str | None:
        row = self.peek()
        if row is not None and row[1] == key and row[2] is not None:
            self.pos += 1
            return row[2]
        return None

    def integer(self, tok: str, what: str, line: int | None = None) -> int:
        try:
            return int(tok)
        except ValueError:
            raise self.error(f"{what} must be an integer, got {tok!r}", line) from None


def _guard(fn):
    """Report domain errors raised while building values with the offending line."""

    def wrapped(text: str, source: str = "<input>", *args, **kwargs):
        lines = _Lines(text, source)
        try:
            return fn(lines, *args, **kwargs)
        except FormatError:
            raise
        except DomainError as exc:
            raise lines.error(str(exc)) from None

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def _token(tok: str) -> str:
    if not tok or any(c.isspace() for c in tok) or "#" in tok:
        raise DomainError(f"id {tok!r} cannot be written (whitespace or '#')")
    return tok


def _kv(key: str, value) -> str:
    value = str(value)
    return f"{key}: {value}" if value else f"{key}:"


# --- signatures, structures and graphs --------------------------------------


def signature_text(sig: Signature) -> str:
    return ", ".join(f"{_token(n)}/{a}" for n, a in sig.symbols)


def _signature(lines: _Lines, text: str) -> Signature:
    pairs = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, arity = part.rpartition("/")
        if not sep or not name:
            raise lines.error(f"symbol {part!r} must look like name/arity")
        pairs.append((name, lines.integer(arity, "arity")))
    return Signature(tuple(pairs))


def write_structure(A: Structure) -> str:
    if isinstance(A, Graph):
        return write_graph(A)
    out = [
        "sigma-structure v1",
        _kv("signature", signature_text(A.signature)),
        _kv("degree-bound", A.degree_bound),
        _kv("elements", " ".join(_token(a) for a in A.universe)),
    ]
    out += [f"tuple: {name} {' '.join(t)}" for name, t in A.tuples()]
    return "\n".join(out) + "\n"


@_guard
def read_structure(lines: _Lines) -> Structure:
    """Structure file (a graph file is also accepted and yields a Graph)."""
    if lines.peek_key() == "graph v1":
        return _read_graph(lines)
    lines.header("sigma-structure")
    sig = _signature(lines, lines.field("signature"))
    d = lines.integer(lines.field("degree-bound"), "degree bound")
    universe = lines.field("elements").split()
    known = set(universe)
    rels: dict[str, list] = {name: [] for name in sig.names}
    for no, key, value in lines:
        if key != "tuple" or not value:
            raise lines.error("expected 'tuple: <symbol> <elements>'", no)
        name, *elems = value.split()
        if name not in rels:
            raise lines.error(f"unknown relation symbol {name!r}", no)
        if len(elems) != sig.arity(name):
            raise lines.error(f"{name} needs {sig.arity(name)} elements, got {len(elems)}", no)
        for a in elems:
            if a not in known:
                raise lines.error(f"unknown element {a!r}", no)
        rels[name].append(tuple(elems))
    return Structure(sig, universe, rels, d)


def _graph_lines(G: Graph) -> list[str]:
    out = ["graph v1", _kv("degree-bound", G.degree_bound), _kv("vertices", " ".join(_token(v) for v in G.vertices))]
    out += [f"edge: {u} {v}" for u, v in G.edges]
    out += [f"loop: {v}" for v in G.loops]
    return out


def write_graph(G: Graph) -> str:
    return "\n".join(_graph_lines(G)) + "\n"


def _graph_body(lines: _Lines, marked: bool = False):
    lines.header("graph")
    d = lines.integer(lines.field("degree-bound"), "degree bound")
    vertices = lines.field("vertices").split()
    known = set(vertices)
    edges, loops, marks = [], [], {}
    while lines.peek() is not None and lines.peek_key() != "---":
        no, key, value = lines.next()
        args = (value or "").split()
        if key == "edge" and len(args) == 2:
            if args[0] == args[1]:
                raise lines.error("self-pair written as an edge; use 'loop'", no)
            edges.append((args[0], args[1]))
        elif key == "loop" and len(args) == 1:
            loops.append(args[0])
        elif key == "mark" and marked and len(args) == 2:
            if args[1] not in MARKS:
                raise lines.error(f"mark must be one of {'|'.join(MARKS)}", no)
            marks[args[0]] = args[1]
        else:
            raise lines.error(f"unexpected line {key!r}", no)
        if args[0] not in known or (key == "edge" and args[1] not in known):
            raise lines.error(f"unknown vertex in {key!r} line", no)
    return d, vertices, edges, loops, marks


def _read_graph(lines: _Lines) -> Graph:
    d, vertices, edges, loops, _ = _graph_body(lines)
    if lines.peek() is not None:
        raise lines.error("unexpected '---' in a graph file", lines.peek()[0])
    return Graph(vertices, edges, d, loops=loops, allow_loops=bool(loops))


read_graph = _guard(_read_graph)


def as_graph(A: Structure) -> Graph:
    if isinstance(A, Graph):
        return A
    if A.signature != GRAPH_SIGNATURE:
        raise DomainError("expected a graph")
    return Graph.from_structure(A)


# --- marked graphs and families ---------------------------------------------


def write_marked_graph(F: MarkedGraph) -> str:
    return "\n".join(_graph_lines(F.graph) + [f"mark: {v} {m}" for v, m in F.mark_map().items()]) + "\n"


def _marked(lines: _Lines) -> MarkedGraph:
    d, vertices, edges, loops, marks = _graph_body(lines, marked=True)
    if loops:
        raise lines.error("marked graphs are loop-free")
    missing = [v for v in vertices if v not in marks]
    if missing:
        raise lines.error(f"vertex {missing[0]!r} has no mark")
    return MarkedGraph.of(vertices, edges, marks)


read_marked_graph = _guard(_marked)


def write_family(fam: GSFFamily) -> str:
    """Members separated by ``---``; a leading ``size-bound:`` line keeps the family's bound."""
    blocks = [write_marked_graph(F).rstrip("\n") for F in fam]
    return "\n---\n".join([_kv("size-bound", fam.size_bound)] + blocks) + "\n"


@_guard
def read_family(lines: _Lines) -> GSFFamily:
    bound = lines.optional("size-bound")
    graphs = []
    while lines.peek() is not None:
        if lines.peek_key() == "---":
            lines.next()
            continue
        graphs.append(_marked(lines))
    if bound is None:
        return GSFFamily.of(graphs)
    fam = GSFFamily(lines.integer(bound, "size bound"))
    for F in graphs:
        fam.add(F)
    return fam


# --- profiles and histograms ------------------------------------------------


_INTERVAL = re.compile(r"^(\S+)\s+\[\s*(\d+)\s*,\s*(\d+|inf)\s*\]$")


def write_profile(rho: NeighbourhoodProfile) -> str:
    """Every catalog type is listed; ``catalog:`` and ``keys:`` record how to rebuild the catalog."""
    cat = rho.catalog
    out = [
        "profile v1",
        _kv("radius", cat.radius),
        _kv("degree", cat.degree_bound),
        _kv("signature", signature_text(cat.signature)),
        _kv("catalog", "exhaustive" if cat.exhaustive else "observed"),
        _kv("keys", rho.extra.get("key_mode", "exact")),
    ]
    if rho.label:
        out.append(_kv("label", _token(rho.label)))
    for key, (lo, hi) in zip(cat.keys, rho.bounds):
        out.append(f"bound: {key} [{lo},{'inf' if hi is None else hi}]")
    return "\n".join(out) + "\n"


@_guard
def read_profile(lines: _Lines) -> NeighbourhoodProfile:
    """Profile file; unlisted keys of an exhaustive catalog default to [0,0]."""
    lines.header("profile")
    r = lines.integer(lines.field("radius"), "radius")
    d = lines.integer(lines.field("degree"), "degree")
    sig = _signature(lines, lines.field("signature"))
    kind = lines.optional("catalog") or "observed"
    if kind not in ("exhaustive", "observed"):
        raise lines.error(f"catalog kind {kind!r} is not exhaustive/observed")
    mode = lines.optional("keys") or "exact"
    label = lines.optional("label") or ""
    bounds: dict[str, tuple[int, int | None]] = {}
    for no, key, value in lines:
        m = _INTERVAL.match(value or "") if key == "bound" else None
        if m is None:
            raise lines.error("expected 'bound: <key> [lo,hi]'", no)
        k, lo, hi = m.group(1), int(m.group(2)), m.group(3)
        if k in bounds:
            raise lines.error(f"duplicate bound for {k}", no)
        if hi != "inf" and int(hi) < lo:
            raise lines.error(f"empty interval [{lo},{hi}]", no)
        bounds[k] = (lo, None if hi == "inf" else int(hi))
    if kind == "exhaustive":
        try:
            cat: TypeCatalog = enumerate_types(sig, d, r)
        except DomainError:
            raise lines.error(f"exhaustive catalog outside envelope ({EXHAUSTIVE_ENVELOPE})") from None
        unknown = set(bounds) - set(cat.keys)
        if unknown:
            raise lines.error(f"key {sorted(unknown)[0]} is not a type of the exhaustive catalog")
    else:
        cat = observed_catalog_from_counts(sig, d, r, bounds)
    rho = NeighbourhoodProfile.from_map(cat, bounds, label=label)
    rho.extra["key_mode"] = mode
    return rho


def write_histogram(counts: Counter, keys=None) -> str:
    keys = sorted(counts) if keys is None else keys
    return "".join(f"count: {k} {counts.get(k, 0)}\n" for k in keys)


# --- Hanf sentences ---------------------------------------------------------


def write_hanf(phi: HanfDNF, sig: Signature | None = None, d: int | None = None) -> str:
    out = ["hanf v1"]
    if sig is not None:
        out.append(_kv("signature", signature_text(sig)))
    if d is not None:
        out.append(_kv("degree", d))
    for conj in phi.disjuncts:
        out.append("disjunct:")
        out += [f"  atom: {a}" for a in conj]
    return "\n".join(out) + "\n"


_ATOM = re.compile(r"^(not)?>=(\d+)\s+(\d+)\s+(\S+)$")


@_guard
def read_hanf(lines: _Lines) -> tuple[HanfDNF, Signature, int | None]:
    """Sentence file; ``signature:`` (graphs by default) and ``degree:`` are optional headers."""
    lines.header("hanf")
    sig_text = lines.optional("signature")
    sig = GRAPH_SIGNATURE if sig_text is None else _signature(lines, sig_text)
    d_text = lines.optional("degree")
    d = None if d_text is None else lines.integer(d_text, "degree")
    disjuncts: list[list[HanfAtom]] = []
    for no, key, value in lines:
        if key == "disjunct" and value == "":
            disjuncts.append([])
        elif key == "atom":
            if not disjuncts:
                raise lines.error("atom before the first 'disjunct:'", no)
            m = _ATOM.match(value or "")
            if m is None:
                raise lines.error("atom must read '>=m r key' or 'not>=m r key'", no)
            disjuncts[-1].append(HanfAtom(int(m.group(2)), int(m.group(3)), m.group(4), bool(m.group(1))))
        else:
            raise lines.error(f"unexpected line {key!r}", no)
    return HanfDNF(tuple(tuple(c) for c in disjuncts)), sig, d


# --- rotation maps ----------------------------------------------------------


def _port_text(p) -> str:
    return ".".join(map(str, p)) if isinstance(p, tuple) else str(p)


def write_rotation(rot: RotationMap) -> str:
    out = ["rotation-map v1", _kv("vertices", rot.n), _kv("degree", rot.degree)]
    if rot.ports != tuple(range(1, rot.degree + 1)):
        out.append(_kv("ports", " ".join(_port_text(p) for p in rot.ports)))
    for v in range(rot.n):
        for p in rot.ports:
            w, q = rot.table[(v, p)]
            out.append(f"rot: {v} {_port_text(p)} {w} {_port_text(q)}")
    return "\n".join(out) + "\n"


@_guard
def read_rotation(lines: _Lines) -> RotationMap:
    """Rotation map (vertices from 0, ports 1..D or dotted pairs); the involution is enforced."""
    lines.header("rotation-map")
    n = lines.integer(lines.field("vertices"), "vertex count")
    D = lines.integer(lines.field("degree"), "degree")
    port_text = lines.optional("ports")

    def port(tok: str, no: int | None = None):
        vals = tuple(lines.integer(x, "port", no) for x in tok.split("."))
        return vals[0] if len(vals) == 1 else vals

    ports = tuple(port(t) for t in port_text.split()) if port_text else tuple(range(1, D + 1))
    if len(ports) != D:
        raise lines.error(f"{len(ports)} ports listed for degree {D}")
    table = {}
    for no, key, value in lines:
        toks = (value or "").split()
        if key != "rot" or len(toks) != 4:
            raise lines.error("expected 'rot: v i w j'", no)
        v, w = lines.integer(toks[0], "vertex", no), lines.integer(toks[2], "vertex", no)
        p, q = port(toks[1], no), port(toks[3], no)
        if (v, p) in table:
            raise lines.error(f"duplicate rot entry for ({toks[0]}, {toks[1]})", no)
        table[(v, p)] = (w, q)
    rot = RotationMap(n, ports, table)
    check = validate_rotation_map(rot)
    if not check:
        raise lines.error(f"rotation map fails {check.clause} at {check.witness}")
    return rot


# --- reduction provenance ---------------------------------------------------


def write_provenance(prov: dict[str, tuple], d: int | None = None, relation_index: dict[str, int] | None = None) -> str:
    out = ["provenance v1"]
    if d is not None:
        out.append(_kv("degree", d))
    for name, k in sorted((relation_index or {}).items(), key=lambda x: x[1]):
        out.append(f"relation: {name} {k}")
    for x, tag in prov.items():
        if tag[0] == "element":
            out.append(f"vertex: {x} element {tag[1]}")
        elif tag[0] == "v":
            _, a, i, k = tag
            out.append(f"vertex: {x} gadget v {k} {a} {i}")
        else:
            _, a, i = tag
            out.append(f"vertex: {x} gadget w {a} {i}")
    return "\n".join(out) + "\n"


@_guard
def read_provenance(lines: _Lines) -> tuple[dict[str, tuple], int | None, dict[str, int]]:
    lines.header("provenance")
    d_text = lines.optional("degree")
    d = None if d_text is None else lines.integer(d_text, "degree")
    rel: dict[str, int] = {}
    prov: dict[str, tuple] = {}
    for no, key, value in lines:
        toks = (value or "").split()
        if key == "relation" and len(toks) == 2:
            rel[toks[0]] = lines.integer(toks[1], "relation index", no)
        elif key == "vertex" and len(toks) == 3 and toks[1] == "element":
            prov[toks[0]] = ("element", toks[2])
        elif key == "vertex" and len(toks) == 6 and toks[1:3] == ["gadget", "v"]:
            k, a, i = toks[3:]
            prov[toks[0]] = ("v", a, lines.integer(i, "port", no), lines.integer(k, "slot", no))
        elif key == "vertex" and len(toks) == 5 and toks[1:3] == ["gadget", "w"]:
            prov[toks[0]] = ("w", toks[3], lines.integer(toks[4], "port", no))
        else:
            raise lines.error("malformed provenance line", no)
    return prov, d, rel


# --- files ------------------------------------------------------------------


def load(path: str | Path, reader):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise DomainError(f"{p}: {exc.strerror}") from None
    return reader(text, str(p))


def save(path: str | Path, text: str) -> None:
    Path(path).write_text(text)

"""Local reduction from binary relational structures to bounded-degree graphs via arrow gadgets.

Each element a becomes a vertex ``e:a`` with one spine per port i:
``v:a:i:k`` for k = 1..l and a pendant ``w:a:i``.  A tuple (a, b) of the k-th
relation, found at port i of a and port j of b, joins the two spines at their
first vertices and hangs w_{a,i}, w_{b,j} on v^k_{b,j}.  A tuple (a, a) hangs
w_{a,i} on v^k_{a,i}; an empty port hangs w_{a,i} on v^1_{a,i} and v^2_{a,i}
(on a itself when l = 1).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cache

from .gsf import FULL, SEMIFULL, MarkedGraph, all_embeddings
from .neighborhoods import NeighbourhoodProfile, _keys_for, observed_catalog_from_counts, refinement_type_keys, type_counts
from .structures import BOTTOM, Bottom, DomainError, Graph, Structure, TupleAnswer

ARROW, LOOP, NON_ARROW = "arrow", "loop", "non-arrow"


def reduction_constants(d: int, ell: int) -> tuple[int, int]:
    """Distance dilation c1 and query blow-up c2 of the reduction."""
    if d < 1 or ell < 1:
        raise DomainError("d and l must be positive")
    return 2 * d + 2 * d * d * ell, d + 1


def graph_degree_bound(d: int, ell: int) -> int:
    """Degree bound of reduced graphs: gadget vertices reach 4; with l = 1 empty ports also load the element."""
    return max(2 * d if ell == 1 else d, 4)


def vertex_count(n: int, d: int, ell: int) -> int:
    return n * (1 + d * (ell + 1))


# --- gadget templates -------------------------------------------------------


@dataclass(frozen=True)
class GadgetSpec:
    kind: str
    k: int | None
    ell: int

    @cache
    def template(self) -> tuple[MarkedGraph, tuple[str, ...]]:
        """Template with internal vertices marked full and endpoints semifull, plus the endpoint names."""
        ell, k = self.ell, self.k
        if self.kind == ARROW:
            chain = [f"a{t}" for t in range(1, 2 * ell + 3)]
            edges = list(zip(chain, chain[1:])) + [(f"a{ell + 1 + k}", "b1"), (f"a{ell + 1 + k}", "b2")]
            verts = chain + ["b1", "b2"]
            ends = (chain[0], chain[-1])
        else:
            chain = [f"a{t}" for t in range(1, ell + 2)]
            anchors = [f"a{k}"] if self.kind == LOOP else ["a1", "a2"]
            edges = list(zip(chain, chain[1:])) + [(x, "b") for x in anchors]
            verts = chain + ["b"]
            ends = (chain[-1],)
        marks = {v: (SEMIFULL if v in ends else FULL) for v in verts}
        return MarkedGraph.of(verts, edges, marks), ends

    @property
    def vertex_count(self) -> int:
        return 2 * self.ell + 4 if self.kind == ARROW else self.ell + 2


def gadget_specs(ell: int) -> list[GadgetSpec]:
    return (
        [GadgetSpec(ARROW, k, ell) for k in range(1, ell + 1)]
        + [GadgetSpec(LOOP, k, ell) for k in range(1, ell + 1)]
        + [GadgetSpec(NON_ARROW, None, ell)]
    )


# --- materialised reduction -------------------------------------------------


def e_id(a: str) -> str:
    return f"e:{a}"


def v_id(a: str, i: int, k: int) -> str:
    return f"v:{a}:{i}:{k}"


def w_id(a: str, i: int) -> str:
    return f"w:{a}:{i}"


def parse_vertex(x: str) -> tuple:
    """('element', a) | ('v', a, i, k) | ('w', a, i)."""
    try:
        kind, body = x.split(":", 1)
        if kind == "e":
            return ("element", body)
        if kind == "v":
            a, i, k = body.rsplit(":", 2)
            return ("v", a, int(i), int(k))
        if kind == "w":
            a, i = body.rsplit(":", 1)
            return ("w", a, int(i))
    except ValueError:
        pass
    raise DomainError(f"malformed reduced-graph vertex {x!r}")


@dataclass
class ReducedGraph:
    graph: Graph
    provenance: dict[str, tuple]
    d: int
    ell: int
    relation_index: dict[str, int] = field(default_factory=dict)


def _check_binary(A: Structure) -> None:
    for name, arity in A.signature.symbols:
        if arity != 2:
            raise DomainError(f"relation {name} has arity {arity}; the reduction needs binary relations")


def _slot(tag: tuple, ell: int) -> int:
    if tag[0] == "element":
        return 0
    if tag[0] == "v":
        return 1 + (tag[2] - 1) * (ell + 1) + (tag[3] - 1)
    return 1 + (tag[2] - 1) * (ell + 1) + ell


def apply_reduction(A: Structure, d: int | None = None) -> ReducedGraph:
    _check_binary(A)
    d = A.degree_bound if d is None else d
    ell = len(A.signature)
    if ell < 1:
        raise DomainError("signature has no relations")
    kidx = {name: A.signature.index(name) + 1 for name in A.signature.names}
    verts: list[str] = []
    prov: dict[str, tuple] = {}
    for a in A.universe:
        if len(A.incident(a)) > d:
            raise DomainError(f"element {a} has degree above {d}")
        verts.append(e_id(a))
        prov[e_id(a)] = ("element", a)
        for i in range(1, d + 1):
            for k in range(1, ell + 1):
                verts.append(v_id(a, i, k))
                prov[v_id(a, i, k)] = ("v", a, i, k)
            verts.append(w_id(a, i))
            prov[w_id(a, i)] = ("w", a, i)
    edges: set[tuple[str, str]] = set()
    port: dict[tuple[str, str, tuple], int] = {}
    for a in A.universe:
        for i, (name, t) in enumerate(A.incident(a), start=1):
            port[(a, name, t)] = i
    for a in A.universe:
        inc = A.incident(a)
        for i in range(1, d + 1):
            edges.add((e_id(a), v_id(a, i, ell)))
            for k in range(1, ell):
                edges.add((v_id(a, i, k), v_id(a, i, k + 1)))
            if i > len(inc):
                edges.add((v_id(a, i, 1), w_id(a, i)))
                edges.add((v_id(a, i, 2) if ell >= 2 else e_id(a), w_id(a, i)))
                continue
            name, t = inc[i - 1]
            k = kidx[name]
            if t[0] == t[1]:
                edges.add((v_id(a, i, k), w_id(a, i)))
            elif t[0] == a:
                b = t[1]
                j = port[(b, name, t)]
                edges.add((v_id(a, i, 1), v_id(b, j, 1)))
                edges.add((v_id(b, j, k), w_id(b, j)))
                edges.add((v_id(b, j, k), w_id(a, i)))
    G = Graph(verts, sorted(edges), graph_degree_bound(d, ell))
    return ReducedGraph(G, prov, d, ell, kidx)


# --- gadget detection -------------------------------------------------------


def detect_gadgets(G: Graph, v: str, w: str | None = None, ell: int = 1) -> list[tuple[str, int | None]]:
    """Every gadget with the given endpoints: arrows from v to w, or loops and non-arrows at v."""
    if v not in G.position or (w is not None and w not in G.position):
        return []
    found = []
    cache: dict = {}
    for spec in gadget_specs(ell):
        if (spec.kind == ARROW) != (w is not None):
            continue
        T, ends = spec.template()
        fixed = dict(zip(ends, (v, w) if w is not None else (v,)))
        if next(all_embeddings(T, G, fixed, cache), None) is not None:
            found.append((spec.kind, spec.k))
    return found


def detect_gadget(G: Graph, v: str, w: str | None = None, ell: int = 1) -> tuple[str, int | None] | None:
    found = detect_gadgets(G, v, w, ell)
    return found[0] if found else None


def count_gadgets(G: Graph, v: str, spec: GadgetSpec, w: str | None = None) -> int:
    """Number of distinct gadget copies (by vertex set) with the given endpoints."""
    T, ends = spec.template()
    fixed = dict(zip(ends, (v, w) if w is not None else (v,)))
    return len({frozenset(f.values()) for f in all_embeddings(T, G, fixed)})


# --- query translation ------------------------------------------------------


class QueryTranslator:
    """Answers neighbour queries on f(A) through a counting oracle for A.

    The oracle must offer ``query(a, i)`` (counted) and ``index_of(a)`` and
    ``structure.signature`` / ``degree_bound`` (public, uncounted).
    """

    def __init__(self, oracle, d: int | None = None):
        self.oracle = oracle
        sig = oracle.signature
        for name, arity in sig.symbols:
            if arity != 2:
                raise DomainError(f"relation {name} has arity {arity}; the reduction needs binary relations")
        self.d = oracle.degree_bound if d is None else d
        self.ell = len(sig)
        self.kidx = {name: sig.index(name) + 1 for name in sig.names}
        self.degree_bound = graph_degree_bound(self.d, self.ell)

    def _find_port(self, b: str, ans: TupleAnswer) -> int:
        for j in range(1, self.d + 1):
            if self.oracle.query(b, j) == ans:
                return j
        raise DomainError(f"tuple {ans} not found among the tuples of {b}")

    def neighbours(self, x: str) -> list[str]:
        tag = parse_vertex(x)
        d, ell = self.d, self.ell
        out: list[str] = []
        if tag[0] == "element":
            a = tag[1]
            out = [v_id(a, i, ell) for i in range(1, d + 1)]
            if ell == 1:
                out += [w_id(a, i) for i in range(1, d + 1) if isinstance(self.oracle.query(a, i), Bottom)]
        elif tag[0] == "v":
            _, a, i, k = tag
            out.append(v_id(a, i, k + 1) if k < ell else e_id(a))
            if k > 1:
                out.append(v_id(a, i, k - 1))
            ans = self.oracle.query(a, i)
            if isinstance(ans, Bottom):
                if k == 1 or k == 2:
                    out.append(w_id(a, i))
            else:
                k0 = self.kidx[ans.symbol]
                src, dst = ans.elements
                if src == dst:
                    if k == k0:
                        out.append(w_id(a, i))
                else:
                    b = dst if src == a else src
                    j = self._find_port(b, ans) if (k == 1 or (dst == a and k == k0)) else None
                    if k == 1:
                        out.append(v_id(b, j, 1))
                    if dst == a and k == k0:
                        out += [w_id(a, i), w_id(b, j)]
        else:
            _, a, i = tag
            ans = self.oracle.query(a, i)
            if isinstance(ans, Bottom):
                out = [v_id(a, i, 1), v_id(a, i, 2) if ell >= 2 else e_id(a)]
            else:
                k0 = self.kidx[ans.symbol]
                src, dst = ans.elements
                if src == dst or dst == a:
                    out = [v_id(a, i, k0)]
                else:
                    out = [v_id(dst, self._find_port(dst, ans), k0)]
        return sorted(set(out), key=self._order)

    def _order(self, x: str) -> tuple[int, int]:
        tag = parse_vertex(x)
        return self.oracle.index_of(tag[1]), _slot(tag, self.ell)

    def query(self, x: str, port: int) -> tuple[str | Bottom, int]:
        """The port-th neighbour of x in f(A) (or Bottom) and the number of structure queries spent."""
        if not 1 <= port <= self.degree_bound:
            raise DomainError(f"port {port} out of range 1..{self.degree_bound}")
        before = self.oracle.count
        nbrs = self.neighbours(x)
        ans = nbrs[port - 1] if port <= len(nbrs) else BOTTOM
        return ans, self.oracle.count - before


def translate_query(oracle, vertex: str, port: int) -> tuple[str | Bottom, int]:
    return QueryTranslator(oracle).query(vertex, port)


# --- lifted profile ---------------------------------------------------------


def profile_radius(ell: int) -> int:
    return 4 * ell + 2


def build_graph_profile(models, root: str | None = None, key_mode: str = "refinement") -> tuple[NeighbourhoodProfile, str]:
    """Empirical 0-profile of reduced models: [0,1] at the root vertex's type, [0,inf) at other observed types.

    ``models`` are structures or objects with ``structure`` and ``root``.
    Types never observed in the corpus are bounded by [0,0].  The radius grows
    with the gadget length, so colour-refinement keys are the default.
    """
    models = list(models)
    if not models:
        raise DomainError("empty corpus")
    observed: Counter = Counter()
    root_keys = set()
    sig = None
    d_graph = None
    r = None
    for M in models:
        A = getattr(M, "structure", M)
        rt = getattr(M, "root", root)
        if rt is None:
            raise DomainError("root element unknown")
        red = apply_reduction(A)
        if sig is None:
            sig, d_graph, r = red.graph.signature, red.graph.degree_bound, profile_radius(red.ell)
        elif profile_radius(red.ell) != r:
            raise DomainError("corpus models use different signatures")
        G = red.graph
        if key_mode == "refinement":
            keys = refinement_type_keys(G, r)
            observed.update(keys)
            root_keys.add(keys[G.position[e_id(rt)]])
        else:
            observed.update(type_counts(G, r))
            root_keys.add(_keys_for(G, r, [G.position[e_id(rt)]])[0])
    if len(root_keys) != 1:
        raise DomainError(f"corpus has {len(root_keys)} distinct root types")
    (rk,) = root_keys
    cat = observed_catalog_from_counts(sig, d_graph, r, observed)
    bounds = {k: ((0, 1) if k == rk else (0, None)) for k in observed}
    rho = NeighbourhoodProfile.from_map(cat, bounds, label="empirical")
    rho.extra["key_mode"] = key_mode
    return rho, rk

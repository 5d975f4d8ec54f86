"""Marked graphs, generalised subgraph freeness and compilation of 0-profiles into forbidden families."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Iterator, Sequence

from .neighborhoods import NeighbourhoodProfile, TypeCatalog, element_type_keys
from .structures import DomainError, Graph, canonical_key

FULL, SEMIFULL, PARTIAL = "full", "semifull", "partial"
MARKS = (FULL, SEMIFULL, PARTIAL)
_MARK_CODE = {FULL: 1, SEMIFULL: 2, PARTIAL: 3}

# Largest marked graph any constructor here will produce.
MAX_SIZE_BOUND = 10


@dataclass(frozen=True)
class MarkedGraph:
    graph: Graph
    marks: tuple[str, ...]

    def __post_init__(self):
        if len(self.marks) != len(self.graph.vertices):
            raise DomainError("one mark per vertex required")
        for m in self.marks:
            if m not in _MARK_CODE:
                raise DomainError(f"unknown mark {m!r}")

    @classmethod
    def of(cls, vertices: Sequence[str], edges: Iterable[Sequence[str]], marks: dict[str, str] | str) -> "MarkedGraph":
        g = Graph(list(vertices), edges)
        if isinstance(marks, str):
            return cls(g, tuple(marks for _ in g.vertices))
        return cls(g, tuple(marks[v] for v in g.vertices))

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.graph.vertices

    def mark(self, v: str) -> str:
        return self.marks[self.graph.position[v]]

    def mark_map(self) -> dict[str, str]:
        return dict(zip(self.graph.vertices, self.marks))

    def __len__(self) -> int:
        return len(self.marks)

    @property
    def key(self) -> str:
        return canonical_key(self.graph, {v: _MARK_CODE[m] for v, m in zip(self.graph.vertices, self.marks)})

    def __eq__(self, other) -> bool:
        return isinstance(other, MarkedGraph) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)


@dataclass
class GSFFamily:
    """Finite set of marked graphs, deduplicated by canonical key."""

    size_bound: int
    members: dict[str, MarkedGraph] = field(default_factory=dict)

    @classmethod
    def of(cls, graphs: Iterable[MarkedGraph], size_bound: int | None = None) -> "GSFFamily":
        graphs = list(graphs)
        bound = max((len(F) for F in graphs), default=0) if size_bound is None else size_bound
        fam = cls(bound)
        for F in graphs:
            fam.add(F)
        return fam

    def add(self, F: MarkedGraph) -> None:
        if len(F) > self.size_bound:
            raise DomainError(f"marked graph with {len(F)} vertices exceeds size bound {self.size_bound}")
        self.members.setdefault(F.key, F)

    def __iter__(self) -> Iterator[MarkedGraph]:
        return (self.members[k] for k in sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)


def _open(G: Graph, v: str) -> set[str]:
    return {u for u in G.neighbors(v) if u != v}


def check_embedding(F: MarkedGraph, G: Graph, f: dict[str, str]) -> bool:
    """Direct check of the three closed-neighbourhood conditions for a candidate map."""
    if set(f) != set(F.vertices) or len(set(f.values())) != len(f):
        return False
    if any(x not in G.position for x in f.values()):
        return False
    image = set(f.values())
    for v in F.vertices:
        nf = {f[u] for u in _open(F.graph, v)} | {f[v]}
        ng = _open(G, f[v]) | {f[v]}
        m = F.mark(v)
        if m == FULL and ng != nf:
            return False
        if m == SEMIFULL and ng & image != nf:
            return False
        if m == PARTIAL and not nf <= ng:
            return False
    return True


def _search_order(F: MarkedGraph, first: Iterable[str] = ()) -> list[str]:
    """Most constrained vertex first, then grow along edges so candidates come from placed neighbours."""
    Fg = F.graph
    rank = {FULL: 0, SEMIFULL: 1, PARTIAL: 2}
    order: list[str] = list(first)
    placed: set[str] = set(order)
    ranked = sorted(
        (v for v in F.vertices if v not in placed),
        key=lambda v: (rank[F.mark(v)], -len(_open(Fg, v)), Fg.position[v]),
    )
    pos = {v: i for i, v in enumerate(ranked)}
    frontier: list[int] = []

    def touch(v: str) -> None:
        for u in _open(Fg, v):
            if u not in placed:
                heapq.heappush(frontier, pos[u])

    for v in order:
        touch(v)
    nxt = 0
    while len(order) < len(F.vertices):
        while frontier and ranked[frontier[0]] in placed:
            heapq.heappop(frontier)
        if frontier:
            v = ranked[heapq.heappop(frontier)]
        else:
            while ranked[nxt] in placed:
                nxt += 1
            v = ranked[nxt]
        order.append(v)
        placed.add(v)
        touch(v)
    return order


class _Nbrs(dict):
    def __init__(self, G: Graph):
        super().__init__()
        self.G = G

    def __missing__(self, x: str) -> set[str]:
        s = self[x] = _open(self.G, x)
        return s


def all_embeddings(
    F: MarkedGraph, G: Graph, fixed: dict[str, str] | None = None, dist_cache: dict | None = None
) -> Iterator[dict[str, str]]:
    """Every embedding of F into G (extending ``fixed``), candidates tried in vertex order of G.

    Images stay within the template distance of each fixed image, since edges
    map to edges.  ``dist_cache`` shares those BFS runs across calls on one G.
    """
    Fg = F.graph
    fixed = dict(fixed or {})
    for v, x in fixed.items():
        if v not in Fg.position or x not in G.position:
            return
    if len(set(fixed.values())) != len(fixed):
        return
    order = _search_order(F, fixed)
    reach = []
    for v0, x0 in fixed.items():
        fd = _bfs(Fg, [v0])
        radius = max(fd.values())
        key = (x0, radius)
        gd = None if dist_cache is None else dist_cache.get(key)
        if gd is None:
            gd = _bfs(G, [x0], radius)
            if dist_cache is not None:
                dist_cache[key] = gd
        reach.append((gd, fd))
    fn = {v: _open(Fg, v) for v in F.vertices}
    gn = _Nbrs(G)
    marks = F.mark_map()
    f: dict[str, str] = {}
    inv: dict[str, str] = {}

    def fits(v: str, x: str) -> bool:
        nx_, nv = gn[x], fn[v]
        dg, df = len(nx_), len(nv)
        if dg < df or (marks[v] == FULL and dg != df):
            return False
        for gd, fd in reach:
            if v in fd and gd.get(x, fd[v] + 1) > fd[v]:
                return False
        for u in nv:
            if u in f and f[u] not in nx_:
                return False
        for y in nx_:
            u = inv.get(y)
            if u is not None and u not in nv and (marks[u] != PARTIAL or marks[v] != PARTIAL):
                return False
        return True

    def extend(i: int) -> Iterator[dict[str, str]]:
        if i == len(order):
            yield dict(f)
            return
        v = order[i]
        if v in fixed:
            pool = [fixed[v]]
        else:
            anchor = next((u for u in fn[v] if u in f), None)
            pool = G.neighbors(f[anchor]) if anchor is not None else G.vertices
        for x in pool:
            if x in inv or not fits(v, x):
                continue
            f[v] = x
            inv[x] = v
            yield from extend(i + 1)
            del f[v]
            del inv[x]

    yield from extend(0)


def find_embedding(F: MarkedGraph, G: Graph, fixed: dict[str, str] | None = None) -> dict[str, str] | None:
    return next(all_embeddings(F, G, fixed), None)


def brute_force_embedding(F: MarkedGraph, G: Graph) -> dict[str, str] | None:
    """Reference search over every injective map."""
    for image in permutations(G.vertices, len(F.vertices)):
        f = dict(zip(F.vertices, image))
        if check_embedding(F, G, f):
            return f
    return None


def is_family_free(G: Graph, fam: Iterable[MarkedGraph]) -> bool:
    return all(find_embedding(F, G) is None for F in fam)


def covers_family(G: Graph, B: Iterable[str], fam: Iterable[MarkedGraph]) -> bool:
    """Whether every embedding of every member uses a vertex of B."""
    B = set(B)
    unknown = B - set(G.vertices)
    if unknown:
        raise DomainError(f"cover set contains non-vertices {sorted(unknown)}")
    for F in fam:
        for f in all_embeddings(F, G):
            if not B & set(f.values()):
                return False
    return True


# --- k-realisations ---------------------------------------------------------


def _bfs(G: Graph, sources: Iterable[str], limit: int | None = None) -> dict[str, int]:
    dist = {s: 0 for s in sources}
    queue = deque(dist)
    while queue:
        v = queue.popleft()
        if limit is not None and dist[v] >= limit:
            continue
        for u in G.neighbors(v):
            if u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def realisation_marks(G: Graph, witnesses: Sequence[str], r: int) -> tuple[str, ...] | None:
    """Marks forced by a witness set, or None when some vertex is farther than r from all witnesses."""
    dist = _bfs(G, witnesses)
    marks = []
    for v in G.vertices:
        d = dist.get(v)
        if d is None or d > r:
            return None
        marks.append(FULL if d < r else SEMIFULL)
    return tuple(marks)


def is_k_realisation(F: MarkedGraph, tau: str, r: int, k: int) -> bool:
    """Some k distinct vertices of type tau force exactly F's marks and cover F within distance r."""
    keys = element_type_keys(F.graph, r)
    cands = [v for v, key in zip(F.vertices, keys) if key == tau]
    for ws in combinations(cands, k):
        if realisation_marks(F.graph, ws, r) == F.marks:
            return True
    return False


def _check_envelope(d: int, r: int, k: int) -> None:
    if not ((d <= 3 and r <= 1) or (d <= 2 and r <= 2)) or k > 3:
        raise DomainError(f"realisation enumeration outside envelope (d={d}, r={r}, k={k})")


def enumerate_k_realisations(catalog: TypeCatalog, tau: str, k: int, size_bound: int) -> GSFFamily:
    """All k-realisations of tau with at most ``size_bound`` vertices, by generate and filter.

    Any embedding into an n-vertex graph uses n or fewer vertices, so the
    truncated set forbids exactly the same graphs of size at most ``size_bound``.
    """
    from .enumeration import graphs_up_to

    d, r = catalog.degree_bound, catalog.radius
    _check_envelope(d, r, k)
    if tau not in catalog.index:
        raise DomainError("type not in catalog")
    ball = catalog.representative(tau)
    size_bound = min(size_bound, k * len(ball.structure.universe))
    fam = GSFFamily(max(size_bound, 0))
    if k < 1 or size_bound < 1:
        return fam
    for g in graphs_up_to(size_bound, d):
        keys = element_type_keys(g, r) if len(g.vertices) else []
        cands = [v for v, key in zip(g.vertices, keys) if key == tau]
        for ws in combinations(cands, k):
            marks = realisation_marks(g, ws, r)
            if marks is not None:
                fam.add(MarkedGraph(g, marks))
    return fam


# --- unions -----------------------------------------------------------------

_PRECEDENCE = {FULL: 0, SEMIFULL: 1, PARTIAL: 2}


def _identifications(n1: int, n2: int, min_shared: int) -> Iterator[dict[int, int]]:
    """Injective partial maps from range(n2) into range(n1) with at least ``min_shared`` pairs."""
    for j in range(max(min_shared, 0), min(n1, n2) + 1):
        for dom in combinations(range(n2), j):
            for img in permutations(range(n1), j):
                yield dict(zip(dom, img))


def union_marked_graphs(
    F1: MarkedGraph, F2: MarkedGraph, size_bound: int | None = None, degree_bound: int | None = None
) -> set[MarkedGraph]:
    """Every union of F1 and F2 with at most ``size_bound`` vertices (all of them when unbounded).

    The union vertex set is V(F1) plus the unshared vertices of F2.  An edge is
    forced when a part has it; a non-edge is forced when a full endpoint, or a
    semifull endpoint with the other end in the same part's image, lacks it.
    All remaining pairs are free, and any subset of them keeps both maps
    embeddings, so the unions are exactly these edge subsets.
    """
    n1, n2 = len(F1), len(F2)
    if size_bound is None:
        size_bound = n1 + n2
    if size_bound > MAX_SIZE_BOUND:
        raise DomainError(f"union size bound {size_bound} exceeds {MAX_SIZE_BOUND}")
    parts = (F1, F2)
    adj = [[[u in _open(F.graph, v) for u in F.vertices] for v in F.vertices] for F in parts]
    pmarks = [F.marks for F in parts]
    out: dict[str, MarkedGraph] = {}
    for ident in _identifications(n1, n2, n1 + n2 - size_bound):
        extra = [b for b in range(n2) if b not in ident]
        n = n1 + len(extra)
        pre = [list(range(n1)) + [None] * len(extra), [None] * n]
        for b, a in ident.items():
            pre[1][a] = b
        for i, b in enumerate(extra):
            pre[1][n1 + i] = b

        def status(x: int, y: int) -> str | None:
            req = forb = False
            for i in (0, 1):
                px, py = pre[i][x], pre[i][y]
                both = px is not None and py is not None
                edge = both and adj[i][px][py]
                req |= edge
                for p, q in ((px, py), (py, px)):
                    if p is None:
                        continue
                    m = pmarks[i][p]
                    if m == FULL and not edge:
                        forb = True
                    elif m == SEMIFULL and q is not None and not edge:
                        forb = True
            if req and forb:
                return None
            return "req" if req else "forb" if forb else "opt"

        required, optional = [], []
        ok = True
        for x, y in combinations(range(n), 2):
            s = status(x, y)
            if s is None:
                ok = False
                break
            if s == "req":
                required.append((x, y))
            elif s == "opt":
                optional.append((x, y))
        if not ok:
            continue
        deg = [0] * n
        for x, y in required:
            deg[x] += 1
            deg[y] += 1
        if degree_bound is not None and max(deg, default=0) > degree_bound:
            continue
        marks = []
        for x in range(n):
            seen = [pmarks[i][pre[i][x]] for i in (0, 1) if pre[i][x] is not None]
            marks.append(min(seen, key=_PRECEDENCE.__getitem__))
        names = [str(x) for x in range(n)]
        chosen: list[tuple[int, int]] = []

        def emit() -> None:
            g = Graph(names, [(names[x], names[y]) for x, y in required + chosen])
            F = MarkedGraph(g, tuple(marks))
            out.setdefault(F.key, F)

        def extend(i: int) -> None:
            if i == len(optional):
                emit()
                return
            extend(i + 1)
            x, y = optional[i]
            if degree_bound is None or (deg[x] < degree_bound and deg[y] < degree_bound):
                deg[x] += 1
                deg[y] += 1
                chosen.append((x, y))
                extend(i + 1)
                chosen.pop()
                deg[x] -= 1
                deg[y] -= 1

        extend(0)
    return {out[k] for k in sorted(out)}


def is_union(F: MarkedGraph, F1: MarkedGraph, F2: MarkedGraph) -> bool:
    """Reference check of the union conditions by searching both maps into F."""
    G = F.graph
    plain = [MarkedGraph(P.graph, P.marks) for P in (F1, F2)]
    emb1 = list(all_embeddings(plain[0], G))
    emb2 = list(all_embeddings(plain[1], G))
    for f1 in emb1:
        for f2 in emb2:
            if set(f1.values()) | set(f2.values()) != set(G.vertices):
                continue
            best = {}
            for P, f in zip((F1, F2), (f1, f2)):
                for v, x in f.items():
                    m = P.mark(v)
                    if x not in best or _PRECEDENCE[m] < _PRECEDENCE[best[x]]:
                        best[x] = m
            if all(best[x] == F.mark(x) for x in G.vertices):
                return True
    return False


def union_families(fam1: GSFFamily, fam2: GSFFamily, size_bound: int, degree_bound: int | None = None) -> GSFFamily:
    fam = GSFFamily(size_bound)
    for F1 in fam1:
        for F2 in fam2:
            for F in union_marked_graphs(F1, F2, size_bound, degree_bound):
                fam.add(F)
    return fam


# --- compilation ------------------------------------------------------------


def compile_zero_profile_to_gsf(
    profiles: NeighbourhoodProfile | Sequence[NeighbourhoodProfile], size_bound: int = 6
) -> GSFFamily:
    """Forbidden family whose free graphs (up to ``size_bound`` vertices) obey the profile, or any of several."""
    if isinstance(profiles, NeighbourhoodProfile):
        profiles = [profiles]
    if not profiles:
        raise DomainError("at least one profile required")
    fams = []
    for rho in profiles:
        if not rho.is_zero_profile():
            raise DomainError("profile has a positive lower bound")
        cat = rho.catalog
        if not cat.exhaustive:
            raise DomainError("compilation needs an exhaustive catalog")
        fam = GSFFamily(size_bound)
        for key, (_, hi) in zip(cat.keys, rho.bounds):
            if hi is None:
                continue
            for F in enumerate_k_realisations(cat, key, hi + 1, size_bound):
                fam.add(F)
        fams.append(fam)
    d = profiles[0].catalog.degree_bound
    out = fams[0]
    for fam in fams[1:]:
        out = union_families(out, fam, size_bound, d)
    return out


# --- fixtures ---------------------------------------------------------------


def example_families() -> dict[str, GSFFamily]:
    """The even/odd forbidden families for 'one isolated vertex plus a perfect matching'."""
    g1 = MarkedGraph.of(["v"], [], PARTIAL)
    g2 = MarkedGraph.of(["a", "b", "c"], [("a", "b"), ("b", "c")], PARTIAL)
    g3 = MarkedGraph.of(["a", "b"], [], FULL)
    return {"even": GSFFamily.of([g1]), "odd": GSFFamily.of([g2, g3])}

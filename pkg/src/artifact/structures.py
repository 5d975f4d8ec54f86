"""Relational signatures, bounded-degree structures and graphs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _canon


class DomainError(ValueError):
    """Raised for inputs that violate an operation's preconditions."""


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [s for s, _ in self.symbols]
        if len(set(names)) != len(names):
            raise DomainError("duplicate relation symbol in signature")
        for name, arity in self.symbols:
            if arity < 1:
                raise DomainError(f"symbol {name} has arity {arity} < 1")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "Signature":
        return cls(tuple(pairs))

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: i for i, (name, _) in enumerate(self.symbols)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DomainError(f"unknown relation symbol {name!r}") from None

    def arity(self, name: str) -> int:
        return self.symbols[self.index(name)][1]

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.symbols]

    def __len__(self) -> int:
        return len(self.symbols)


GRAPH_SIGNATURE = Signature.of(("E", 2))


class Bottom:
    """The answer to a query past the last tuple containing an element."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Bottom"


BOTTOM = Bottom()


@dataclass(frozen=True)
class TupleAnswer:
    symbol: str
    elements: tuple[str, ...]


class Structure:
    """A finite sigma-structure with a degree bound.

    Degree counts tuples containing an element; a tuple containing the element
    twice counts once.
    """

    def __init__(
        self,
        signature: Signature,
        universe: Sequence[str],
        relations: dict[str, Iterable[Sequence[str]]] | None = None,
        degree_bound: int | None = None,
    ):
        self.signature = signature
        self.universe: tuple[str, ...] = tuple(universe)
        self.position = {a: i for i, a in enumerate(self.universe)}
        if len(self.position) != len(self.universe):
            raise DomainError("duplicate element id in universe")
        rels: dict[str, frozenset[tuple[str, ...]]] = {name: frozenset() for name in signature.names}
        for name, tuples in (relations or {}).items():
            arity = signature.arity(name)
            checked = []
            for t in tuples:
                t = tuple(t)
                if len(t) != arity:
                    raise DomainError(f"tuple {t} has wrong arity for {name}/{arity}")
                for a in t:
                    if a not in self.position:
                        raise DomainError(f"tuple {name}{t} mentions unknown element {a!r}")
                checked.append(t)
            rels[name] = frozenset(checked)
        self.relations = rels
        incident: dict[str, list[tuple[int, tuple[int, ...], str, tuple[str, ...]]]] = {a: [] for a in self.universe}
        for name, tuples in rels.items():
            si = signature.index(name)
            for t in tuples:
                entry = (si, tuple(self.position[a] for a in t), name, t)
                for a in set(t):
                    incident[a].append(entry)
        for entries in incident.values():
            entries.sort()
        self._incident = {a: [(name, t) for _, _, name, t in entries] for a, entries in incident.items()}
        max_deg = max((len(v) for v in self._incident.values()), default=0)
        self.degree_bound = max_deg if degree_bound is None else degree_bound
        self._check_degree()

    def _check_degree(self) -> None:
        for a, entries in self._incident.items():
            if len(entries) > self.degree_bound:
                raise DomainError(f"element {a} has degree {len(entries)} > bound {self.degree_bound}")

    def __repr__(self) -> str:
        return f"Structure(n={len(self.universe)}, tuples={self.tuple_count()}, d={self.degree_bound})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.universe == other.universe
            and self.relations == other.relations
            and self.degree_bound == other.degree_bound
        )

    def __hash__(self) -> int:
        return hash((self.signature, self.universe, tuple(sorted(self.relations.items()))))

    def __len__(self) -> int:
        return len(self.universe)

    def tuple_count(self) -> int:
        return sum(len(t) for t in self.relations.values())

    def tuples(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        """All tuples in canonical order (symbol index, then element positions)."""
        rows = []
        for name, tuples in self.relations.items():
            si = self.signature.index(name)
            for t in tuples:
                rows.append((si, tuple(self.position[a] for a in t), name, t))
        rows.sort()
        for _, _, name, t in rows:
            yield name, t

    def has(self, name: str, t: Sequence[str]) -> bool:
        return tuple(t) in self.relations[name]

    def incident(self, a: str) -> list[tuple[str, tuple[str, ...]]]:
        """Tuples containing ``a`` in canonical order."""
        try:
            return self._incident[a]
        except KeyError:
            raise DomainError(f"unknown element {a!r}") from None

    def with_changes(
        self,
        add: Iterable[tuple[str, tuple[str, ...]]] = (),
        remove: Iterable[tuple[str, tuple[str, ...]]] = (),
        degree_bound: int | None = None,
    ) -> "Structure":
        rels = {name: set(ts) for name, ts in self.relations.items()}
        for name, t in remove:
            rels[name].discard(tuple(t))
        for name, t in add:
            rels[name].add(tuple(t))
        return Structure(self.signature, self.universe, rels, self.degree_bound if degree_bound is None else degree_bound)

    def relabel(self, mapping: dict[str, str], order: Sequence[str] | None = None) -> "Structure":
        universe = [mapping[a] for a in self.universe] if order is None else list(order)
        rels = {name: [tuple(mapping[a] for a in t) for t in ts] for name, ts in self.relations.items()}
        return Structure(self.signature, universe, rels, self.degree_bound)

    def induced(self, elements: Iterable[str]) -> "Structure":
        keep = set(elements)
        universe = [a for a in self.universe if a in keep]
        rels = {name: [t for t in ts if all(a in keep for a in t)] for name, ts in self.relations.items()}
        return Structure(self.signature, universe, rels, self.degree_bound)

    @cached_property
    def encoded(self) -> _canon.Encoded:
        by_arity: dict[int, tuple[list[int], list[tuple[int, ...]]]] = {}
        for name, tuples in self.relations.items():
            si = self.signature.index(name)
            arity = self.signature.arity(name)
            syms, rows = by_arity.setdefault(arity, ([], []))
            for t in tuples:
                syms.append(si)
                rows.append(tuple(self.position[a] for a in t))
        groups = []
        for arity in sorted(by_arity):
            syms, rows = by_arity[arity]
            el = np.array(rows, dtype=np.int64).reshape(len(rows), arity)
            groups.append((arity, np.array(syms, dtype=np.int64), el))
        return _canon.Encoded(len(self.universe), groups)

    @cached_property
    def gaifman_csr(self):
        """Sparse adjacency of the Gaifman graph over universe positions."""
        from scipy.sparse import csr_matrix

        n = len(self.universe)
        us, vs = [], []
        for arity, _, el in self.encoded.groups:
            for p in range(arity):
                for q in range(arity):
                    if p != q:
                        us.append(el[:, p])
                        vs.append(el[:, q])
        if us:
            u = np.concatenate(us)
            v = np.concatenate(vs)
            keep = u != v
            u, v = u[keep], v[keep]
        else:
            u = v = np.zeros(0, dtype=np.int64)
        m = csr_matrix((np.ones(len(u), dtype=np.int8), (u, v)), shape=(n, n))
        m.sum_duplicates()
        m.data[:] = 1
        return m


class Graph(Structure):
    """Undirected graph as a symmetric structure over the one-symbol signature.

    ``degree_bound`` bounds the graph degree (number of neighbours; a loop
    counts as one neighbour).  Loops are rejected unless ``allow_loops``.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        edges: Iterable[Sequence[str]] = (),
        degree_bound: int | None = None,
        loops: Iterable[str] = (),
        allow_loops: bool = False,
    ):
        loops = list(loops)
        if loops and not allow_loops:
            raise DomainError("graph loops require allow_loops")
        tuples = set()
        for e in edges:
            u, v = e
            if u == v:
                if not allow_loops:
                    raise DomainError(f"self-pair on {u} in a loop-free graph")
                tuples.add((u, u))
            else:
                tuples.add((u, v))
                tuples.add((v, u))
        for v in loops:
            tuples.add((v, v))
        self.allow_loops = allow_loops
        self._graph_bound = degree_bound
        super().__init__(GRAPH_SIGNATURE, vertices, {"E": tuples}, degree_bound=10**9)
        self._adj = {v: [] for v in self.universe}
        for u, v in self.relations["E"]:
            self._adj[u].append(v)
        for v in self._adj:
            self._adj[v].sort(key=self.position.__getitem__)
        self.degree_bound = max((len(a) for a in self._adj.values()), default=0) if degree_bound is None else degree_bound
        for v, nbrs in self._adj.items():
            if len(nbrs) > self.degree_bound:
                raise DomainError(f"vertex {v} has degree {len(nbrs)} > bound {self.degree_bound}")

    def __repr__(self) -> str:
        return f"Graph(n={len(self.universe)}, m={len(self.edges)}, d={self.degree_bound})"

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.universe

    @cached_property
    def edges(self) -> list[tuple[str, str]]:
        """Non-loop edges as (u, v) with u before v in vertex order."""
        pos = self.position
        return sorted(((u, v) for u, v in self.relations["E"] if pos[u] < pos[v]), key=lambda e: (pos[e[0]], pos[e[1]]))

    @cached_property
    def loops(self) -> list[str]:
        return [v for v in self.universe if (v, v) in self.relations["E"]]

    def neighbors(self, v: str) -> list[str]:
        """Neighbours in vertex order (a loop lists the vertex itself)."""
        try:
            return self._adj[v]
        except KeyError:
            raise DomainError(f"unknown vertex {v!r}") from None

    def graph_degree(self, v: str) -> int:
        return len(self.neighbors(v))

    def max_degree(self) -> int:
        return max((len(a) for a in self._adj.values()), default=0)

    def neighbor_query(self, v: str, i: int) -> str | Bottom:
        """The i-th neighbour of v (1-based) or Bottom."""
        if not 1 <= i <= self.degree_bound:
            raise DomainError(f"port {i} out of range 1..{self.degree_bound}")
        nbrs = self.neighbors(v)
        return nbrs[i - 1] if i <= len(nbrs) else BOTTOM

    def adjacent(self, u: str, v: str) -> bool:
        return (u, v) in self.relations["E"]

    def with_edges(self, add=(), remove=(), degree_bound: int | None = None) -> "Graph":
        edges = {frozenset(e) for e in self.edges}
        loops = set(self.loops)
        for e in remove:
            edges.discard(frozenset(e))
        for e in add:
            edges.add(frozenset(e))
        return Graph(
            self.universe,
            [tuple(e) for e in edges],
            self.degree_bound if degree_bound is None else degree_bound,
            loops=loops,
            allow_loops=self.allow_loops,
        )

    def induced(self, vertices: Iterable[str]) -> "Graph":
        keep = set(vertices)
        vs = [v for v in self.universe if v in keep]
        return Graph(
            vs,
            [e for e in self.edges if e[0] in keep and e[1] in keep],
            self.degree_bound,
            loops=[v for v in self.loops if v in keep],
            allow_loops=self.allow_loops,
        )

    def relabel(self, mapping: dict[str, str], order: Sequence[str] | None = None) -> "Graph":
        vs = [mapping[v] for v in self.universe] if order is None else list(order)
        return Graph(
            vs,
            [(mapping[u], mapping[v]) for u, v in self.edges],
            self.degree_bound,
            loops=[mapping[v] for v in self.loops],
            allow_loops=self.allow_loops,
        )

    @classmethod
    def from_structure(cls, A: Structure, degree_bound: int | None = None) -> "Graph":
        if A.signature != GRAPH_SIGNATURE:
            raise DomainError("graph view requires the one-symbol binary signature")
        tuples = A.relations["E"]
        for u, v in tuples:
            if (v, u) not in tuples:
                raise DomainError(f"relation not symmetric at ({u}, {v})")
        loops = [u for u, v in tuples if u == v]
        return cls(A.universe, [t for t in tuples if t[0] != t[1]], degree_bound, loops=loops, allow_loops=bool(loops))


def degree_of(A: Structure, a: str) -> int:
    return len(A.incident(a))


def answer_query(A: Structure, a: str, i: int) -> TupleAnswer | Bottom:
    """The i-th tuple containing ``a`` in canonical order, or Bottom."""
    if not 1 <= i <= A.degree_bound:
        raise DomainError(f"query index {i} out of range 1..{A.degree_bound}")
    entries = A.incident(a)
    if i > len(entries):
        return BOTTOM
    name, t = entries[i - 1]
    return TupleAnswer(name, t)


def gaifman_graph(A: Structure) -> Graph:
    edges = set()
    for _, t in A.tuples():
        for x in t:
            for y in t:
                if x != y:
                    edges.add(frozenset((x, y)))
    return Graph(A.universe, [tuple(e) for e in edges], degree_bound=None)


def canonical_key(A: Structure, labels: dict[str, int] | None = None) -> str:
    """Isomorphism-complete key; ``labels`` adds vertex colours that isomorphisms must keep."""
    enc = A.encoded
    lab = np.zeros(enc.n, dtype=np.int64)
    if labels:
        for a, v in labels.items():
            lab[A.position[a]] = v
    col = _canon.mix(lab.astype(np.uint64) + np.uint64(_canon.SEED_UNIFORM))
    header = repr((A.signature.symbols,)).encode()
    return _canon.digest("k", header + _canon.canonical_certificate(enc, col, lab))


def disjoint_union(A: Structure, B: Structure, tags: tuple[str, str] = ("0", "1")) -> Structure:
    """Tagged disjoint union; element a of A becomes ``<tag0>:a``."""
    if A.signature != B.signature:
        raise DomainError("signature mismatch in disjoint union")
    t0, t1 = tags
    if isinstance(A, Graph) and isinstance(B, Graph):
        vs = [f"{t0}:{v}" for v in A.universe] + [f"{t1}:{v}" for v in B.universe]
        edges = [(f"{t0}:{u}", f"{t0}:{v}") for u, v in A.edges] + [(f"{t1}:{u}", f"{t1}:{v}") for u, v in B.edges]
        loops = [f"{t0}:{v}" for v in A.loops] + [f"{t1}:{v}" for v in B.loops]
        return Graph(vs, edges, max(A.degree_bound, B.degree_bound), loops=loops, allow_loops=A.allow_loops or B.allow_loops)
    universe = [f"{t0}:{a}" for a in A.universe] + [f"{t1}:{b}" for b in B.universe]
    rels: dict[str, list] = {}
    for tag, S in ((t0, A), (t1, B)):
        for name, ts in S.relations.items():
            rels.setdefault(name, []).extend(tuple(f"{tag}:{x}" for x in t) for t in ts)
    return Structure(A.signature, universe, rels, max(A.degree_bound, B.degree_bound))


def is_isomorphic(A: Structure, B: Structure) -> bool:
    return len(A) == len(B) and A.tuple_count() == B.tuple_count() and canonical_key(A) == canonical_key(B)

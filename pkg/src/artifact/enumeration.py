"""Exhaustive generation of small graphs and structures up to isomorphism."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, product

from .structures import Graph, Signature, Structure, canonical_key


def _graph(n: int, edges, d: int | None) -> Graph:
    return Graph([str(i) for i in range(n)], [(str(u), str(v)) for u, v in edges], d)


@lru_cache(maxsize=None)
def _graphs_exactly(n: int, d: int) -> tuple[Graph, ...]:
    if n == 0:
        return (_graph(0, [], d),)
    out: dict[str, Graph] = {}
    for g in _graphs_exactly(n - 1, d):
        free = [int(v) for v in g.vertices if g.graph_degree(v) < d]
        for size in range(0, min(d, len(free)) + 1):
            for nbrs in combinations(free, size):
                edges = [(int(u), int(v)) for u, v in g.edges] + [(u, n - 1) for u in nbrs]
                h = _graph(n, edges, d)
                out.setdefault(canonical_key(h), h)
    return tuple(out[k] for k in sorted(out))


def graphs_up_to(n_max: int, d: int) -> list[Graph]:
    """All graphs with at most ``n_max`` vertices and maximum degree <= d, one per isomorphism class."""
    return [g for n in range(n_max + 1) for g in _graphs_exactly(n, d)]


def graphs_on(n: int, d: int) -> list[Graph]:
    return list(_graphs_exactly(n, d))


def regular_graphs(n: int, k: int) -> list[Graph]:
    """All k-regular simple graphs on n vertices up to isomorphism."""
    return list(_regular(n, k))


@lru_cache(maxsize=None)
def _regular(n: int, k: int) -> tuple[Graph, ...]:
    if n == 0 or k >= n or (n * k) % 2:
        return () if n else (_graph(0, [], k),)
    if 2 * k > n - 1:
        return tuple(sorted((_complement(g, n - 1 - k, k) for g in _regular(n, n - 1 - k)), key=canonical_key))
    out: dict[str, Graph] = {}
    deg = [0] * n
    edges: list[tuple[int, int]] = []

    def fill(i: int) -> None:
        if i == n:
            g = _graph(n, edges, k)
            out.setdefault(canonical_key(g), g)
            return
        need = k - deg[i]
        cand = [j for j in range(i + 1, n) if deg[j] < k]
        if need < 0 or need > len(cand):
            return
        choices = [tuple(range(1, k + 1))] if i == 0 else combinations(cand, need)
        for nbrs in choices:
            for j in nbrs:
                deg[i] += 1
                deg[j] += 1
                edges.append((i, j))
            fill(i + 1)
            for j in nbrs:
                deg[i] -= 1
                deg[j] -= 1
                edges.pop()

    fill(0)
    return tuple(out[key] for key in sorted(out))


def _complement(g: Graph, k_old: int, k_new: int) -> Graph:
    n = len(g.vertices)
    edges = [(u, v) for u, v in combinations(range(n), 2) if not g.adjacent(str(u), str(v))]
    return _graph(n, edges, k_new)


def binary_structures_on(n: int, d: int, name: str = "R") -> list[Structure]:
    """All structures over one binary symbol on n elements with degree <= d, up to isomorphism."""
    sig = Signature.of((name, 2))
    elems = [str(i) for i in range(n)]
    pairs = list(product(elems, repeat=2))
    out: dict[str, Structure] = {}
    for bits in product((0, 1), repeat=len(pairs)):
        tuples = [p for p, b in zip(pairs, bits) if b]
        deg = {a: 0 for a in elems}
        for t in tuples:
            for a in set(t):
                deg[a] += 1
        if max(deg.values(), default=0) > d:
            continue
        s = Structure(sig, elems, {name: tuples}, d)
        out.setdefault(canonical_key(s), s)
    return [out[key] for key in sorted(out)]


def random_structure(sig: Signature, n: int, d: int, rng, attempts: int | None = None) -> Structure:
    """Random structure on n elements: propose ``attempts`` uniform tuples, keep those within degree d."""
    elems = [str(i) for i in range(n)]
    deg = {a: 0 for a in elems}
    rels: dict[str, set[tuple[str, ...]]] = {name: set() for name in sig.names}
    for _ in range(n * d if attempts is None else attempts):
        if not n:
            break
        name, arity = sig.symbols[rng.randrange(len(sig.symbols))]
        t = tuple(rng.choice(elems) for _ in range(arity))
        if t in rels[name] or any(deg[a] >= d for a in set(t)):
            continue
        rels[name].add(t)
        for a in set(t):
            deg[a] += 1
    return Structure(sig, elems, rels, d)


def random_graph(n: int, d: int, rng, attempts: int | None = None) -> Graph:
    """Random graph on n vertices with maximum degree <= d."""
    deg = [0] * n
    edges: set[tuple[int, int]] = set()
    for _ in range(n * d if attempts is None else attempts):
        if n < 2:
            break
        u, v = rng.sample(range(n), 2)
        u, v = min(u, v), max(u, v)
        if (u, v) in edges or deg[u] >= d or deg[v] >= d:
            continue
        edges.add((u, v))
        deg[u] += 1
        deg[v] += 1
    return _graph(n, sorted(edges), d)

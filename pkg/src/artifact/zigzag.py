"""Rotation maps, the tree-of-expanders model generator and first-order component checkers.

Conventions for base degree D: rotation-map ports are 1..D; a pair of ports
(a, b) in [D]^2 is encoded as the index (a-1)*D + (b-1); a vertex of the base
graph H is an element of ([D]^2)^2 encoded as p1 * D^2 + p2.  Relation names
are ``E{i}{j}`` (i, j pair indices), ``F{k}`` and ``L{k}`` (k a vertex of H),
and ``R``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .structures import DomainError, Signature, Structure

Port = Hashable


# --- rotation maps ----------------------------------------------------------


@dataclass(frozen=True)
class RotationMap:
    """ROT(v, port) = (w, port') on vertices 0..n-1 with the given port labels."""

    n: int
    ports: tuple
    table: dict = field(hash=False, compare=True)

    @property
    def degree(self) -> int:
        return len(self.ports)

    def __call__(self, v: int, port: Port) -> tuple[int, Port]:
        try:
            return self.table[(v, port)]
        except KeyError:
            raise DomainError(f"rotation map undefined at ({v}, {port})") from None

    @classmethod
    def from_rows(cls, n: int, degree: int, rows: Iterable[tuple[int, int, int, int]]) -> "RotationMap":
        table = {(v, i): (w, j) for v, i, w, j in rows}
        return cls(n, tuple(range(1, degree + 1)), table)


@dataclass(frozen=True)
class Check:
    ok: bool
    clause: str = ""
    witness: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_rotation_map(rot: RotationMap) -> Check:
    for v in range(rot.n):
        for p in rot.ports:
            if (v, p) not in rot.table:
                return Check(False, "total", (v, p))
    for (v, p), (w, q) in rot.table.items():
        if not (0 <= v < rot.n and p in rot.ports):
            return Check(False, "domain", (v, p))
        if not (0 <= w < rot.n and q in rot.ports):
            return Check(False, "range", (v, p))
        if rot.table.get((w, q)) != (v, p):
            return Check(False, "involution", (v, p))
    return Check(True)


def square_rotation(rot: RotationMap) -> RotationMap:
    """Rotation map of the square: ROT2(v, (i, j)) = (w, (j~, i~)) along the two-step walk."""
    check = validate_rotation_map(rot)
    if not check:
        raise DomainError(f"invalid rotation map: {check.clause} at {check.witness}")
    ports = tuple((i, j) for i in rot.ports for j in rot.ports)
    table = {}
    for v in range(rot.n):
        for i, j in ports:
            u, i2 = rot(v, i)
            w, j2 = rot(u, j)
            table[(v, (i, j))] = (w, (j2, i2))
    return RotationMap(rot.n, ports, table)


def cycle_rotation(n: int) -> RotationMap:
    """Port 1 steps forward (arriving on port 2), port 2 steps back."""
    rows = [(v, 1, (v + 1) % n, 2) for v in range(n)] + [(v, 2, (v - 1) % n, 1) for v in range(n)]
    return RotationMap.from_rows(n, 2, rows)


def toy_base_map() -> RotationMap:
    """Default base graph for D = 2: the 16-cycle.  Structurally valid, not an expander of the required quality."""
    return cycle_rotation(16)


BASE_MAPS = {"toy16": toy_base_map}


def _base_degree(rot: RotationMap) -> int:
    D = rot.degree
    if rot.ports != tuple(range(1, D + 1)):
        raise DomainError("base map ports must be 1..D")
    if rot.n != D**4:
        raise DomainError(f"base map has {rot.n} vertices, expected D^4 = {D ** 4}")
    check = validate_rotation_map(rot)
    if not check:
        raise DomainError(f"invalid rotation map: {check.clause} at {check.witness}")
    return D


# --- signature and model ----------------------------------------------------


def _pair_width(D: int) -> int:
    return len(str(D * D - 1))


def e_name(i: int, j: int, D: int) -> str:
    w = _pair_width(D)
    return f"E{i:0{w}d}{j:0{w}d}"


def zigzag_signature(D: int) -> Signature:
    P, V = D * D, D**4
    syms = [(e_name(i, j, D), 2) for i in range(P) for j in range(P)]
    syms += [(f"F{k}", 2) for k in range(V)] + [("R", 2)] + [(f"L{k}", 2) for k in range(V)]
    return Signature.of(*syms)


def model_degree(D: int) -> int:
    """Largest tuple degree in a canonical model (attained at the root)."""
    return 1 + D**4 + D**4


@dataclass
class ZigZagModel:
    structure: Structure
    D: int
    levels: int
    root: str


def _pair(a: int, b: int, D: int) -> int:
    return (a - 1) * D + (b - 1)


DEFAULT_BUDGET = 200_000


def build_canonical_model(rot_H: RotationMap, levels: int, budget: int = DEFAULT_BUDGET) -> ZigZagModel:
    """Complete D^4-ary tree of the given depth whose levels carry the recursive rotation maps."""
    D = _base_degree(rot_H)
    if levels < 1:
        raise DomainError("levels must be at least 1")
    V, P = D**4, D * D
    total = sum(V**m for m in range(levels + 1))
    if total > budget:
        raise DomainError(f"model would have {total} elements, budget {budget}")
    sig = zigzag_signature(D)
    rel: dict[str, set] = defaultdict(set)
    root = "r"
    universe = [root]
    rel["R"].add((root, root))
    for i in range(P):
        for j in range(P):
            rel[e_name(i, j, D)].add((root, root))
    # out[x][port] = (y, arrival port) for the E-edges of the current level
    level = [f"{root}.{k}" for k in range(V)]
    for k, y in enumerate(level):
        rel[f"F{k}"].add((root, y))
    universe += level
    sq = square_rotation(rot_H)
    out: dict[str, dict[int, tuple[str, int]]] = {y: {} for y in level}
    for k in range(V):
        for a, b in sq.ports:
            k2, (c, e) = sq(k, (a, b))
            i, i2 = _pair(a, b, D), _pair(c, e, D)
            rel[e_name(i, i2, D)].add((level[k], level[k2]))
            out[level[k]][i] = (level[k2], i2)
    for _ in range(levels - 1):
        nxt_out: dict[str, dict[int, tuple[str, int]]] = {}
        for x in level:
            for k in range(V):
                child = f"{x}.{k}"
                rel[f"F{k}"].add((x, child))
                universe.append(child)
                nxt_out[child] = {}
        for x in level:
            for k in range(V):
                for i in range(1, D + 1):
                    kk, i_arr = rot_H(k, i)
                    k1, k2 = divmod(kk, P)
                    y, l1 = out[x][k1]
                    z, l2 = out[y][k2]
                    for j in range(1, D + 1):
                        ell, j_arr = rot_H(l2 * P + l1, j)
                        lab, lab2 = _pair(i, j, D), _pair(j_arr, i_arr, D)
                        src, dst = f"{x}.{k}", f"{z}.{ell}"
                        rel[e_name(lab, lab2, D)].add((src, dst))
                        nxt_out[src][lab] = (dst, lab2)
        level = [f"{x}.{k}" for x in level for k in range(V)]
        out = nxt_out
    for x in level:
        for k in range(V):
            rel[f"L{k}"].add((x, x))
    A = Structure(sig, universe, {name: sorted(ts) for name, ts in rel.items()}, model_degree(D))
    return ZigZagModel(A, D, levels, root)


# --- component checkers -----------------------------------------------------


class _Index:
    """Per-symbol-family adjacency of a zig-zag structure, built in canonical tuple order.

    Supports removing and restoring single tuples so that many one-tuple
    mutants can be checked without rebuilding.
    """

    def __init__(self, A: Structure, D: int):
        self.universe = A.universe
        self.D = D
        self.P, self.V = D * D, D**4
        self.e_out = defaultdict(list)  # x -> [(i, j, y)]
        self.e_in = defaultdict(list)  # y -> [(i, j, x)]
        self.f_out = defaultdict(list)  # x -> [(k, y)]
        self.f_in = defaultdict(list)  # y -> [(k, x)]
        self.l_out = defaultdict(list)  # x -> [(k, y)]
        self.l_in = defaultdict(list)
        self.r_set: set = set()
        self.r_at = defaultdict(int)  # element -> number of R tuples containing it
        self.e_set: set = set()
        self._decode = {}
        P = self.P
        for i in range(P):
            for j in range(P):
                self._decode[e_name(i, j, D)] = ("E", i, j)
        for k in range(self.V):
            self._decode[f"F{k}"] = ("F", k, None)
            self._decode[f"L{k}"] = ("L", k, None)
        self._decode["R"] = ("R", None, None)
        for name, t in A.tuples():
            self.add(name, t)

    def _entries(self, name: str, t: tuple):
        kind, a, b = self._decode[name]
        x, y = t
        if kind == "E":
            return [(self.e_out[x], (a, b, y)), (self.e_in[y], (a, b, x))]
        if kind == "F":
            return [(self.f_out[x], (a, y)), (self.f_in[y], (a, x))]
        if kind == "L":
            return [(self.l_out[x], (a, y)), (self.l_in[y], (a, x))]
        return []

    def add(self, name: str, t: tuple) -> None:
        for lst, item in self._entries(name, t):
            lst.append(item)
        kind, a, b = self._decode[name]
        if kind == "E":
            self.e_set.add((a, b) + tuple(t))
        elif kind == "R":
            self.r_set.add(tuple(t))
            for e in set(t):
                self.r_at[e] += 1

    def remove(self, name: str, t: tuple) -> None:
        for lst, item in self._entries(name, t):
            lst.remove(item)
        kind, a, b = self._decode[name]
        if kind == "E":
            self.e_set.discard((a, b) + tuple(t))
        elif kind == "R":
            self.r_set.discard(tuple(t))
            for e in set(t):
                self.r_at[e] -= 1

    def is_root(self, x: str) -> bool:
        return not self.f_in[x]

    def has_e(self, i: int, j: int, x: str, y: str) -> bool:
        return (i, j, x, y) in self.e_set


def _infer_D(A: Structure) -> int:
    names = set(A.signature.names)
    for D in range(2, 6):
        if set(zigzag_signature(D).names) == names:
            return D
    raise DomainError("structure is not over a zig-zag signature")


def check_tree(ix: _Index, at_most_one_root: bool = False, count_roots: bool = True, focus=None) -> Check:
    if count_roots:
        roots = [x for x in ix.universe if ix.is_root(x)]
        if len(roots) > 1:
            return Check(False, "root count", tuple(roots[:2]))
        if not at_most_one_root and len(roots) != 1:
            return Check(False, "root count", ())
    for x in ix.universe if focus is None else focus:
        if ix.is_root(x):
            if (x, x) not in ix.r_set:
                return Check(False, "root R loop", (x,))
        else:
            parents = {y for _, y in ix.f_in[x]}
            if len(parents) != 1 or ix.r_at[x]:
                return Check(False, "one parent and no R", (x,))
        leaf = (
            not ix.f_out[x]
            and {k for k, y in ix.l_out[x] if y == x} == set(range(ix.V))
            and all(y == x for _, y in ix.l_out[x])
            and all(y == x for _, y in ix.l_in[x])
        )
        if leaf:
            continue
        if ix.l_out[x] or ix.l_in[x]:
            return Check(False, "leaf or inner", (x,))
        by_k: dict[int, set] = defaultdict(set)
        by_y: dict[str, set] = defaultdict(set)
        for k, y in ix.f_out[x]:
            by_k[k].add(y)
            by_y[y].add(k)
        for k in range(ix.V):
            ys = by_k.get(k, set())
            if len(ys) != 1:
                return Check(False, "leaf or inner", (x,))
            (y,) = ys
            if y == x or len(by_y[y]) != 1:
                return Check(False, "leaf or inner", (x,))
    return Check(True)


def check_rotation(ix: _Index, focus=None) -> Check:
    """Symmetry of E-labels, and one E-edge per out-port (roots exempt from the per-port clause)."""
    xs = ix.universe if focus is None else focus
    for x in xs:
        for i, j, y in ix.e_out[x]:
            if not ix.has_e(j, i, y, x):
                return Check(False, "symmetry", (x, y))
    for x in xs:
        if ix.is_root(x):
            continue
        ports: dict[int, int] = defaultdict(int)
        for i, _, _ in ix.e_out[x]:
            ports[i] += 1
        if any(ports.get(i, 0) != 1 for i in range(ix.P)):
            return Check(False, "one edge per port", (x,))
    return Check(True)


def check_base(ix: _Index, rot_H: RotationMap, focus=None) -> Check:
    D = _base_degree(rot_H)
    sq = square_rotation(rot_H)
    for x in ix.universe if focus is None else focus:
        if not ix.is_root(x):
            continue
        loops = {(i, j) for i, j, y in ix.e_out[x] if y == x}
        if len(loops) != ix.P * ix.P:
            return Check(False, "root E loops", (x,))
        if any(y != x for _, _, y in ix.e_out[x]) or any(y != x for _, _, y in ix.e_in[x]):
            return Check(False, "root E isolation", (x,))
        kids: dict[int, list] = defaultdict(list)
        for k, y in ix.f_out[x]:
            kids[k].append(y)
        for k in range(ix.V):
            for a, b in sq.ports:
                k2, (c, e) = sq(k, (a, b))
                i, i2 = _pair(a, b, D), _pair(c, e, D)
                if not any(ix.has_e(i, i2, y, y2) for y in kids.get(k, ()) for y2 in kids.get(k2, ())):
                    return Check(False, "base edges", (x,))
    return Check(True)


def check_recursion(ix: _Index, rot_H: RotationMap, focus=None) -> Check:
    """Every two-step E-walk between non-root parents forces the matching child edge.

    Pairs involving a root are exempt; the root's E-loops encode level 0 and
    the level below it is fixed by the base clause instead.
    """
    D = _base_degree(rot_H)
    P = ix.P
    for x in ix.universe if focus is None else focus:
        if ix.is_root(x):
            continue
        x_kids: dict[int, list] = defaultdict(list)
        for k, c in ix.f_out[x]:
            x_kids[k].append(c)
        for k1, l1, y in ix.e_out[x]:
            for k2, l2, z in ix.e_out[y]:
                if ix.is_root(z) or (not ix.f_out[x] and not ix.f_out[z]):
                    continue
                z_kids: dict[int, list] = defaultdict(list)
                for k, c in ix.f_out[z]:
                    z_kids[k].append(c)
                for i_arr in range(1, D + 1):
                    k, i = rot_H(k1 * P + k2, i_arr)
                    for j in range(1, D + 1):
                        ell, j_arr = rot_H(l2 * P + l1, j)
                        lab, lab2 = _pair(i, j, D), _pair(j_arr, i_arr, D)
                        if not any(ix.has_e(lab, lab2, a, b) for a in x_kids.get(k, ()) for b in z_kids.get(ell, ())):
                            return Check(False, "recursion", (x, z))
    return Check(True)


COMPONENTS = ("tree", "tree'", "rotationMap", "base", "recursion", "zigzag", "zigzag'", "zigzag~")


def _run(ix: _Index, which: str, rot_H: RotationMap, focus=None) -> Check:
    parts = {
        "tree": lambda: check_tree(ix, focus=focus),
        "tree'": lambda: check_tree(ix, at_most_one_root=True, focus=focus),
        "tree~": lambda: check_tree(ix, count_roots=False, focus=focus),
        "rotationMap": lambda: check_rotation(ix, focus=focus),
        "base": lambda: check_base(ix, rot_H, focus=focus),
        "recursion": lambda: check_recursion(ix, rot_H, focus=focus),
    }
    tail = ["rotationMap", "base", "recursion"]
    plan = {
        "zigzag": ["tree"] + tail,
        "zigzag'": ["tree'"] + tail,
        "zigzag~": ["tree~"] + tail,
    }.get(which, [which])
    for name in plan:
        res = parts[name]()
        if not res:
            return Check(False, f"{name}: {res.clause}", res.witness)
    return Check(True)


def _prepare(A: Structure, which: str, rot_H: RotationMap | None) -> tuple[_Index, RotationMap]:
    if which not in COMPONENTS:
        raise DomainError(f"unknown component {which!r}")
    rot_H = rot_H or toy_base_map()
    D = _infer_D(A)
    if D != rot_H.degree:
        raise DomainError("base map degree differs from the structure's signature")
    return _Index(A, D), rot_H


def check_component(A: Structure, which: str, rot_H: RotationMap | None = None) -> Check:
    """Evaluate one conjunct (or a conjunction) directly; ``zigzag~`` omits the root count."""
    ix, rot_H = _prepare(A, which, rot_H)
    return _run(ix, which, rot_H)


# Every clause evaluated at x reads only elements within this Gaifman distance of x.
CLAUSE_RADIUS = 3


def deletion_results(A: Structure, which: str = "zigzag", rot_H: RotationMap | None = None):
    """Check result for every single-tuple deletion from an accepted structure.

    Clauses are only re-evaluated at elements within ``CLAUSE_RADIUS`` of the
    deleted tuple; clauses elsewhere read no changed tuple and keep their
    value from the unmutated structure, which must itself be accepted.
    """
    from .neighborhoods import _distances

    ix, rot_H = _prepare(A, which, rot_H)
    if not _run(ix, which, rot_H):
        raise DomainError("unmutated structure is not accepted")
    out = []
    for name, t in list(A.tuples()):
        near = set()
        for e in set(t):
            dist = _distances(A, A.position[e], CLAUSE_RADIUS)
            near.update(j for j in range(len(A.universe)) if dist[j] <= CLAUSE_RADIUS)
        focus = [A.universe[j] for j in sorted(near)]
        ix.remove(name, t)
        out.append(((name, t), _run(ix, which, rot_H, focus=focus)))
        ix.add(name, t)
    return out


def check_connected_F(A: Structure) -> bool:
    """Whether the F-relations connect the whole universe."""
    if not A.universe:
        return True
    adj: dict[str, set] = defaultdict(set)
    for name in A.signature.names:
        if name.startswith("F"):
            for x, y in A.relations.get(name, ()):
                adj[x].add(y)
                adj[y].add(x)
    seen = {A.universe[0]}
    stack = [A.universe[0]]
    while stack:
        v = stack.pop()
        for u in adj[v] - seen:
            seen.add(u)
            stack.append(u)
    return len(seen) == len(A.universe)


def root_profile(models: Iterable[Structure], r: int = 2):
    """The 0-profile: [0,1] at the roots' type, [0,inf) at other observed types, [0,0] elsewhere.

    All models must share the root type; returns the profile over the observed catalog.
    """
    from .neighborhoods import NeighbourhoodProfile, element_type_keys, observed_catalog_from_counts

    models = list(models)
    if not models:
        raise DomainError("need at least one model")
    observed: set[str] = set()
    root_keys: set[str] = set()
    sig, d = models[0].signature, models[0].degree_bound
    for A in models:
        keys = element_type_keys(A, r)
        observed.update(keys)
        ix = _Index(A, _infer_D(A))
        root_keys.update(k for x, k in zip(A.universe, keys) if ix.is_root(x))
    if len(root_keys) != 1:
        raise DomainError(f"models have {len(root_keys)} distinct root types")
    (rk,) = root_keys
    cat = observed_catalog_from_counts(sig, d, r, observed)
    bounds = {k: ((0, 1) if k == rk else (0, None)) for k in observed}
    return NeighbourhoodProfile.from_map(cat, bounds, label="root"), rk

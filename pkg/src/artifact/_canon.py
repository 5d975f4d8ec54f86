"""Colour refinement and canonical certificates for relational structures.

Elements are the integers ``0..n-1``; tuples are grouped by arity into integer
arrays.  Colours are 64-bit mixing hashes, so a colour is a function of the
isomorphism-invariant data it summarises and never depends on processing
order.  Hash collisions can only coarsen a colouring; the certificate itself
lists every tuple under the computed order, so equal certificates always mean
isomorphic structures.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

_U = np.uint64
_GOLDEN = _U(0x9E3779B97F4A7C15)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)
_S30, _S27, _S31 = _U(30), _U(27), _U(31)

SEED_UNIFORM = 0x51ED
SALT_INDIVIDUALISE = 0x1D1D
SALT_DISTANCE = 0xD157
SALT_POSITION = 0x9051
SALT_ARITY = 0xA217


def mix(x):
    """splitmix64 finaliser, elementwise on uint64 arrays (wraps silently)."""
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=_U) + _GOLDEN
        x = (x ^ (x >> _S30)) * _M1
        x = (x ^ (x >> _S27)) * _M2
        return x ^ (x >> _S31)


@dataclass
class Encoded:
    n: int
    groups: list[tuple[int, np.ndarray, np.ndarray]]
    _incident: dict[int, set] | None = field(default=None, repr=False)

    def incident(self, elems) -> dict[int, set]:
        """Incident tuples (sym, elems...) for each element in ``elems``."""
        wanted = np.fromiter(elems, dtype=np.int64)
        out: dict[int, set] = {int(e): set() for e in wanted}
        for arity, syms, el in self.groups:
            if len(syms) == 0:
                continue
            rows = np.nonzero(np.isin(el, wanted).any(axis=1))[0]
            for row in rows:
                t = (int(syms[row]),) + tuple(int(x) for x in el[row])
                for e in set(t[1:]):
                    if e in out:
                        out[e].add(t)
        return out

    def restrict(self, keep: np.ndarray) -> tuple["Encoded", np.ndarray]:
        """Induced substructure on the boolean mask ``keep``; returns it with the old ids."""
        old = np.nonzero(keep)[0]
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[old] = np.arange(len(old))
        groups = []
        for arity, syms, el in self.groups:
            mask = keep[el].all(axis=1) if len(syms) else np.zeros(0, dtype=bool)
            groups.append((arity, syms[mask], new_id[el[mask]]))
        return Encoded(len(old), groups), old


def step(enc: Encoded, col: np.ndarray) -> np.ndarray:
    """One refinement round: fold in the multiset of incident tuple colours."""
    acc = np.zeros(enc.n, dtype=_U)
    for arity, syms, el in enc.groups:
        if len(syms) == 0:
            continue
        h = mix(syms.astype(_U) + _U(SALT_ARITY * 1000 + arity))
        for p in range(arity):
            h = mix(h ^ col[el[:, p]])
        for p in range(arity):
            np.add.at(acc, el[:, p], mix(h + _U(SALT_POSITION + p)))
    return mix(col ^ mix(acc))


def round_table(enc: Encoded, rounds: int) -> np.ndarray:
    """Colours after 0..rounds rounds from the uniform start, shape (rounds+1, n)."""
    table = np.empty((rounds + 1, enc.n), dtype=_U)
    table[0] = mix(np.full(enc.n, SEED_UNIFORM, dtype=_U))
    for t in range(1, rounds + 1):
        table[t] = step(enc, table[t - 1])
    return table


def n_classes(col: np.ndarray) -> int:
    return len(np.unique(col))


def refine_stable(enc: Encoded, col: np.ndarray) -> np.ndarray:
    count = n_classes(col)
    while True:
        new = step(enc, col)
        new_count = n_classes(new)
        if new_count <= count:
            return col
        col, count = new, new_count


def _tie_classes(col: np.ndarray) -> list[np.ndarray]:
    order = np.argsort(col, kind="stable")
    sorted_col = col[order]
    breaks = np.nonzero(np.diff(sorted_col))[0] + 1
    return [c for c in np.split(order, breaks) if len(c) > 1]


def _swap(t: tuple, x: int, y: int) -> tuple:
    return (t[0],) + tuple(y if e == x else x if e == y else e for e in t[1:])


def _are_twins(inc: dict[int, set], x: int, y: int) -> bool:
    return {_swap(t, x, y) for t in inc[x]} == inc[y]


def twin_resolvable(enc: Encoded, col: np.ndarray) -> tuple[bool, list[np.ndarray]]:
    """True when every colour tie consists of mutually swappable elements.

    Consecutive transpositions generate the full symmetric group on a class,
    so any tie-break then yields the same labelled structure.
    """
    ties = _tie_classes(col)
    if not ties:
        return True, []
    members = np.concatenate(ties)
    inc = enc.incident(members.tolist())
    bad = []
    for cls in ties:
        ok = all(_are_twins(inc, int(cls[i]), int(cls[i + 1])) for i in range(len(cls) - 1))
        if not ok:
            bad.append(cls)
    return not bad, bad


def certificate(enc: Encoded, col: np.ndarray, labels: np.ndarray) -> bytes:
    """Relabel by colour rank and list every tuple in sorted order."""
    order = np.argsort(col, kind="stable")
    rank = np.empty(enc.n, dtype=np.int64)
    rank[order] = np.arange(enc.n)
    parts = [np.array([enc.n], dtype=np.int64).tobytes(), labels[order].astype(np.int64).tobytes()]
    for arity, syms, el in enc.groups:
        rows = np.column_stack([syms.astype(np.int64), rank[el]]) if len(syms) else np.zeros((0, arity + 1), dtype=np.int64)
        if len(rows):
            rows = rows[np.lexsort(rows.T[::-1])]
        parts.append(np.array([arity, len(rows)], dtype=np.int64).tobytes())
        parts.append(np.ascontiguousarray(rows).tobytes())
    return b"".join(parts)


def _target_cell(bad: list[np.ndarray], col: np.ndarray) -> np.ndarray:
    return min(bad, key=lambda c: (len(c), int(col[c[0]])))


class _Abort(Exception):
    def __init__(self, depth: int):
        self.depth = depth


class _Search:
    """Depth-first individualisation-refinement with automorphism pruning.

    Two leaves with equal certificates give an automorphism; the branch that
    produced the second leaf is then equivalent to an explored one and is cut.
    """

    def __init__(self, enc: Encoded, labels: np.ndarray):
        self.enc = enc
        self.labels = labels
        self.best: bytes | None = None
        self.seen: dict[bytes, tuple[tuple[int, ...], np.ndarray]] = {}
        self.autos: list[np.ndarray] = []

    def leaf(self, col: np.ndarray, seq: tuple[int, ...]) -> None:
        cert = certificate(self.enc, col, self.labels)
        order = np.argsort(col, kind="stable")
        if cert in self.seen:
            seq0, order0 = self.seen[cert]
            perm = np.arange(self.enc.n)
            perm[order0] = order
            self.autos.append(perm)
            depth = 0
            while depth < min(len(seq0), len(seq)) and seq0[depth] == seq[depth]:
                depth += 1
            raise _Abort(depth)
        self.seen[cert] = (seq, order)
        if self.best is None or cert < self.best:
            self.best = cert

    def _orbit_roots(self, seq: tuple[int, ...]) -> np.ndarray | None:
        gens = [g for g in self.autos if all(g[v] == v for v in seq)]
        if not gens:
            return None
        parent = np.arange(self.enc.n)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in gens:
            for x in np.nonzero(g != np.arange(self.enc.n))[0]:
                a, b = find(int(x)), find(int(g[x]))
                if a != b:
                    parent[max(a, b)] = min(a, b)
        return np.array([find(x) for x in range(self.enc.n)])

    def node(self, col: np.ndarray, seq: tuple[int, ...], refine: bool = True) -> None:
        if refine:
            col = refine_stable(self.enc, col)
        ok, bad = twin_resolvable(self.enc, col)
        if ok:
            self.leaf(col, seq)
            return
        if not refine:
            self.node(col, seq, refine=True)
            return
        cell = _target_cell(bad, col)
        explored: list[int] = []
        for v in (int(x) for x in cell):
            if explored and self.autos:
                roots = self._orbit_roots(seq)
                if roots is not None and roots[v] in {roots[u] for u in explored}:
                    continue
            branch = col.copy()
            branch[v] = mix(branch[v] + _U(SALT_INDIVIDUALISE))
            try:
                self.node(branch, seq + (v,))
            except _Abort as stop:
                if stop.depth < len(seq):
                    raise
            explored.append(v)


def canonical_certificate(enc: Encoded, col: np.ndarray, labels: np.ndarray, refine: bool = True) -> bytes:
    """Least leaf certificate of the individualisation-refinement tree.

    With ``refine=False`` the given colouring is used as-is when it already
    resolves up to twins (the seeded fast path for balls); otherwise the
    search proceeds with full refinement.
    """
    search = _Search(enc, labels)
    search.node(col, (), refine=refine)
    return search.best


def digest(prefix: str, cert: bytes) -> str:
    return prefix + hashlib.sha256(cert).hexdigest()[:40]


def ball_seed(table: np.ndarray, dist: np.ndarray, elems: np.ndarray, r: int) -> np.ndarray:
    """Seed colour (distance, (r - distance)-round colour) for ball members."""
    d = dist[elems].astype(np.int64)
    return mix(table[r - d, elems] ^ mix(d.astype(_U) + _U(SALT_DISTANCE)))

"""Balls, r-type catalogs, histogram vectors and neighbourhood profiles."""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components, dijkstra

from . import _canon
from .structures import GRAPH_SIGNATURE, DomainError, Graph, Signature, Structure, canonical_key

INF = None  # upper bound "infinity" in profile intervals

# Components at least this large are profiled once per isomorphism class.
MEMO_THRESHOLD = 400


@dataclass(frozen=True)
class Ball:
    structure: Structure
    center: str
    radius: int


def _distances(A: Structure, i: int, r: int) -> np.ndarray:
    return dijkstra(A.gaifman_csr, directed=False, indices=i, unweighted=True, limit=r + 0.5)


def extract_ball(A: Structure, a: str, r: int) -> Ball:
    if a not in A.position:
        raise DomainError(f"unknown element {a!r}")
    dist = _distances(A, A.position[a], r)
    members = [A.universe[j] for j in np.nonzero(dist <= r)[0]]
    return Ball(A.induced(members), a, r)


def _type_header(sig: Signature, r: int) -> bytes:
    return repr(("type", sig.symbols, r)).encode()


def _keys_for(A: Structure, r: int, indices: Iterable[int]) -> list[str]:
    enc = A.encoded
    table = _canon.round_table(enc, r)
    header = _type_header(A.signature, r)
    keys = []
    for i in indices:
        dist = _distances(A, i, r)
        mask = dist <= r
        sub, old = enc.restrict(mask)
        seeds = _canon.ball_seed(table, dist, old, r)
        labels = (old == i).astype(np.int64)
        cert = _canon.canonical_certificate(sub, seeds, labels, refine=False)
        keys.append(_canon.digest("t", header + cert))
    return keys


def type_key(ball: Ball) -> str:
    """Canonical key of a pointed ball; equal iff isomorphic with centres matched."""
    S = ball.structure
    return _keys_for(S, ball.radius, [S.position[ball.center]])[0]


def element_type_keys(A: Structure, r: int) -> list[str]:
    """Type key of every element's r-ball, in universe order."""
    return _keys_for(A, r, range(len(A.universe)))


def refinement_type_keys(A: Structure, r: int) -> list[str]:
    """Colour after r refinement rounds from the uniform start, for every element.

    The r-round colour depends only on the pointed r-ball, so equal types
    always get equal keys; distinct types could in principle share a key.
    One pass over the whole structure serves every element, which is what
    makes very large radii affordable.
    """
    table = _canon.round_table(A.encoded, r)
    head = _canon.mix(np.uint64(int.from_bytes(_type_header(A.signature, r)[-8:], "little")))
    col = _canon.mix(table[r] ^ head)
    return [f"c{int(c):016x}" for c in col]


KEY_MODES = ("exact", "refinement")


_memo: dict[tuple[str, int], Counter] = {}
_memo_lock = threading.Lock()


def type_counts(A: Structure, r: int, mode: str = "exact") -> Counter:
    """Multiset of r-type keys over the universe.

    Large connected components are keyed by their canonical form so that
    isomorphic components share one computation.  ``mode="refinement"``
    uses the colour-refinement keys instead of canonical ball keys.
    """
    if mode == "refinement":
        return Counter(refinement_type_keys(A, r))
    if mode != "exact":
        raise DomainError(f"unknown key mode {mode!r}")
    n = len(A.universe)
    if n < MEMO_THRESHOLD:
        return Counter(element_type_keys(A, r))
    ncomp, labels = connected_components(A.gaifman_csr, directed=False)
    total: Counter = Counter()
    small: list[int] = []
    for c in range(ncomp):
        members = np.nonzero(labels == c)[0]
        if len(members) < MEMO_THRESHOLD:
            small.extend(members.tolist())
            continue
        comp = A.induced(A.universe[j] for j in members)
        ckey = canonical_key(comp)
        with _memo_lock:
            hit = _memo.get((ckey, r))
        if hit is None:
            hit = Counter(element_type_keys(comp, r))
            with _memo_lock:
                _memo[(ckey, r)] = hit
        total.update(hit)
    if small:
        total.update(_keys_for(A, r, small))
    return total


class TypeCatalog:
    """Ordered set of r-types (lexicographic by key) with representatives."""

    def __init__(
        self,
        signature: Signature,
        degree_bound: int,
        radius: int,
        entries: dict[str, Ball | Callable[[], Ball]],
        exhaustive: bool,
    ):
        self.signature = signature
        self.degree_bound = degree_bound
        self.radius = radius
        self.keys: tuple[str, ...] = tuple(sorted(entries))
        self._reps = dict(entries)
        self.exhaustive = exhaustive
        self.index = {k: i for i, k in enumerate(self.keys)}

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: str) -> bool:
        return key in self.index

    def __eq__(self, other) -> bool:
        if not isinstance(other, TypeCatalog):
            return NotImplemented
        return (self.signature, self.degree_bound, self.radius, self.keys, self.exhaustive) == (
            other.signature,
            other.degree_bound,
            other.radius,
            other.keys,
            other.exhaustive,
        )

    __hash__ = None

    def __repr__(self) -> str:
        kind = "exhaustive" if self.exhaustive else "observed"
        return f"TypeCatalog({kind}, r={self.radius}, d={self.degree_bound}, types={len(self)})"

    def representative(self, key: str) -> Ball:
        rep = self._reps[key]
        if callable(rep):
            rep = rep()
            self._reps[key] = rep
        return rep


EXHAUSTIVE_ENVELOPE = (
    "graphs with d <= 3 and r <= 1, graphs with d <= 2 and r <= 2, "
    "or one binary symbol with d <= 2 and r <= 1"
)


def _in_envelope(sig: Signature, d: int, r: int, graphs: bool) -> bool:
    if graphs and sig == GRAPH_SIGNATURE:
        return (d <= 3 and r <= 1) or (d <= 2 and r <= 2)
    return len(sig) == 1 and sig.symbols[0][1] == 2 and d <= 2 and r <= 1


def _ball_size_bound(d: int, r: int) -> int:
    return 1 + sum(d * (d - 1) ** i for i in range(r))


def enumerate_types(
    signature: Signature,
    d: int,
    r: int,
    mode: str = "exhaustive",
    corpus: Sequence[Structure] = (),
    graphs: bool = True,
) -> TypeCatalog:
    """Exhaustive catalog inside the feasibility envelope, or the types observed in ``corpus``.

    ``graphs`` selects symmetric loop-free graphs with graph degree <= d when
    the signature is the graph signature; otherwise arbitrary structures with
    tuple degree <= d.
    """
    from . import enumeration

    entries: dict[str, Ball | Callable[[], Ball]] = {}
    if mode == "exhaustive":
        if not _in_envelope(signature, d, r, graphs):
            raise DomainError(f"exhaustive catalog outside envelope ({EXHAUSTIVE_ENVELOPE})")
        if graphs and signature == GRAPH_SIGNATURE:
            pool: list[Structure] = enumeration.graphs_up_to(_ball_size_bound(d, r), d)
        else:
            name = signature.symbols[0][0]
            pool = [s for n in range(1, _ball_size_bound(d, r) + 1) for s in enumeration.binary_structures_on(n, d, name)]
        for S in pool:
            for a, key in zip(S.universe, element_type_keys(S, r)):
                if key not in entries:
                    entries[key] = extract_ball(S, a, r)
        return TypeCatalog(signature, d, r, entries, exhaustive=True)
    if mode != "observed":
        raise DomainError(f"unknown catalog mode {mode!r}")
    for S in corpus:
        if S.signature != signature:
            raise DomainError("corpus structure over a different signature")
        for a, key in zip(S.universe, element_type_keys(S, r)):
            if key not in entries:
                entries[key] = (lambda S=S, a=a: extract_ball(S, a, r))
    return TypeCatalog(signature, d, r, entries, exhaustive=False)


def observed_catalog_from_counts(signature: Signature, d: int, r: int, keys: Iterable[str]) -> TypeCatalog:
    """Catalog over already-computed keys (representatives unavailable)."""

    def missing():
        raise DomainError("representative not retained for this catalog")

    return TypeCatalog(signature, d, r, {k: missing for k in keys}, exhaustive=False)


@dataclass(frozen=True)
class HistogramVector:
    catalog: TypeCatalog
    counts: tuple[int, ...]

    def __le__(self, other: "HistogramVector") -> bool:
        return all(a <= b for a, b in zip(self.counts, other.counts))

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.catalog.keys, self.counts))


def histogram_vector(A: Structure, catalog: TypeCatalog, r: int | None = None) -> HistogramVector:
    r = catalog.radius if r is None else r
    if r != catalog.radius:
        raise DomainError(f"catalog radius {catalog.radius} differs from requested radius {r}")
    counts = [0] * len(catalog)
    for key, c in type_counts(A, r).items():
        if key not in catalog.index:
            raise DomainError("element with a type outside the catalog")
        counts[catalog.index[key]] += c
    return HistogramVector(catalog, tuple(counts))


@dataclass(frozen=True)
class NeighbourhoodProfile:
    """Interval bound per catalog type; ``hi`` of None means unbounded."""

    catalog: TypeCatalog
    bounds: tuple[tuple[int, int | None], ...]
    label: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.bounds) != len(self.catalog):
            raise DomainError("profile length differs from catalog size")
        for lo, hi in self.bounds:
            if lo < 0 or (hi is not None and hi < lo):
                raise DomainError(f"invalid interval [{lo},{hi}]")

    @classmethod
    def from_map(cls, catalog: TypeCatalog, bounds: dict[str, tuple[int, int | None]], default=(0, 0), label: str = ""):
        return cls(catalog, tuple(bounds.get(k, default) for k in catalog.keys), label)

    def is_zero_profile(self) -> bool:
        return all(lo == 0 for lo, _ in self.bounds)

    def bound(self, key: str) -> tuple[int, int | None]:
        i = self.catalog.index.get(key)
        return (0, 0) if i is None else self.bounds[i]

    def admits(self, counts: Counter) -> bool:
        """Whether a type-count multiset lies in every interval (unknown types bounded by [0,0])."""
        for key, c in counts.items():
            if key not in self.catalog.index and c > 0:
                return False
        for key, (lo, hi) in zip(self.catalog.keys, self.bounds):
            c = counts.get(key, 0)
            if c < lo or (hi is not None and c > hi):
                return False
        return True


def obeys_profile(A: Structure, rho: NeighbourhoodProfile) -> bool:
    return rho.admits(type_counts(A, rho.catalog.radius, rho.extra.get("key_mode", "exact")))

"""Hanf-normal-form sentences in disjunctive form: evaluation, lifting, compilation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator, Sequence

from .neighborhoods import NeighbourhoodProfile, TypeCatalog, extract_ball, type_counts, type_key
from .structures import DomainError, Structure


@dataclass(frozen=True, order=True)
class HanfAtom:
    """``>= m`` elements of the given r-type (``negated`` flips the atom)."""

    m: int
    radius: int
    key: str
    negated: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"threshold {self.m} must be at least 1")

    def holds(self, counts: Counter) -> bool:
        return (counts.get(self.key, 0) >= self.m) != self.negated

    def __str__(self) -> str:
        return f"{'not' if self.negated else ''}>={self.m} {self.radius} {self.key}"


@dataclass(frozen=True)
class HanfDNF:
    """Disjunction of conjunctions; no disjuncts is false, one empty conjunction is true."""

    disjuncts: tuple[tuple[HanfAtom, ...], ...]

    @classmethod
    def true(cls) -> "HanfDNF":
        return cls(((),))

    @classmethod
    def false(cls) -> "HanfDNF":
        return cls(())

    @classmethod
    def of(cls, *conjunctions: Sequence[HanfAtom]) -> "HanfDNF":
        return cls(tuple(tuple(c) for c in conjunctions))

    def radii(self) -> set[int]:
        return {a.radius for c in self.disjuncts for a in c}

    def atoms(self) -> Iterator[HanfAtom]:
        for c in self.disjuncts:
            yield from c


def evaluate_counts(phi: HanfDNF, counts_by_radius: dict[int, Counter]) -> bool:
    return any(all(a.holds(counts_by_radius[a.radius]) for a in conj) for conj in phi.disjuncts)


def evaluate_hanf(phi: HanfDNF, A: Structure, catalogs: dict[int, TypeCatalog] | None = None) -> bool:
    if catalogs is not None:
        missing = phi.radii() - set(catalogs)
        if missing:
            raise DomainError(f"no catalog for radius {sorted(missing)}")
    counts = {r: type_counts(A, r) for r in phi.radii()}
    return evaluate_counts(phi, counts)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def restricting_types(key: str, r_from: int, catalog: TypeCatalog) -> list[str]:
    """Keys of catalog types whose r_from-ball around the centre has type ``key``."""
    out = []
    for k in catalog.keys:
        ball = catalog.representative(k)
        inner = extract_ball(ball.structure, ball.center, r_from)
        if type_key(inner) == key:
            out.append(k)
    return out


def lift_radius(atom: HanfAtom, r: int, catalog: TypeCatalog) -> HanfDNF:
    """Equivalent sentence over r-types, for an atom over a smaller radius."""
    if atom.radius > r:
        raise DomainError(f"cannot lift radius {atom.radius} down to {r}")
    if atom.radius == r:
        return HanfDNF.of((atom,))
    if not catalog.exhaustive or catalog.radius != r:
        raise DomainError("lifting needs an exhaustive catalog at the target radius")
    taus = restricting_types(atom.key, atom.radius, catalog)
    if not atom.negated:
        return HanfDNF(
            tuple(
                tuple(HanfAtom(mi, r, k) for mi, k in zip(split, taus) if mi > 0)
                for split in compositions(atom.m, len(taus))
            )
        )
    # at most m-1 in total: some split of m-1 bounds every part from above
    return HanfDNF(
        tuple(
            tuple(HanfAtom(ci + 1, r, k, negated=True) for ci, k in zip(split, taus))
            for split in compositions(atom.m - 1, len(taus))
        )
    )


def lift_sentence(phi: HanfDNF, r: int, catalog: TypeCatalog) -> HanfDNF:
    """Lift every atom to radius r and redistribute into disjunctive form."""
    out = []
    for conj in phi.disjuncts:
        parts = [lift_radius(a, r, catalog).disjuncts for a in conj]
        for choice in product(*parts):
            out.append(tuple(a for c in choice for a in c))
    return HanfDNF(tuple(out))


def conjunction_bounds(conj: Sequence[HanfAtom], catalog: TypeCatalog) -> dict[str, tuple[int, int | None]] | None:
    """Interval per type forced by a conjunction, or None if it is contradictory."""
    lo: dict[str, int] = {}
    hi: dict[str, int] = {}
    for a in conj:
        if a.key not in catalog.index:
            if a.negated:
                continue
            return None
        if a.negated:
            hi[a.key] = min(hi.get(a.key, a.m - 1), a.m - 1)
        else:
            lo[a.key] = max(lo.get(a.key, 0), a.m)
    bounds = {}
    for k in catalog.keys:
        l, h = lo.get(k, 0), hi.get(k)
        if h is not None and l > h:
            return None
        bounds[k] = (l, h)
    return bounds


def compile_hanf_to_profiles(
    phi: HanfDNF,
    catalog: TypeCatalog,
    sat_search: Sequence[Structure] | None = None,
) -> list[NeighbourhoodProfile]:
    """One profile per disjunct that is not contradictory.

    With ``sat_search`` (a pool of candidate small models) each surviving
    profile records ``satisfiable`` as True when a model is found and None
    (unknown) otherwise; unknown disjuncts are kept since dropping them is only
    sound for unsatisfiable ones.
    """
    radii = phi.radii()
    if len(radii) > 1:
        raise DomainError(f"mixed radii {sorted(radii)}; lift first")
    if radii and radii != {catalog.radius}:
        raise DomainError("catalog radius differs from the sentence radius")
    if not catalog.exhaustive:
        raise DomainError("compilation needs an exhaustive catalog")
    profiles = []
    for conj in phi.disjuncts:
        bounds = conjunction_bounds(conj, catalog)
        if bounds is None:
            continue
        rho = NeighbourhoodProfile.from_map(catalog, bounds)
        if sat_search is not None:
            from .neighborhoods import obeys_profile

            found = any(obeys_profile(S, rho) for S in sat_search)
            rho.extra["satisfiable"] = True if found else None
        profiles.append(rho)
    return profiles


def profile_to_hanf(rho: NeighbourhoodProfile) -> HanfDNF:
    r = rho.catalog.radius
    atoms = []
    for key, (lo, hi) in zip(rho.catalog.keys, rho.bounds):
        if lo >= 1:
            atoms.append(HanfAtom(lo, r, key))
        if hi is not None:
            atoms.append(HanfAtom(hi + 1, r, key, negated=True))
    return HanfDNF.of(atoms)


def obeys_any(A: Structure, profiles: Sequence[NeighbourhoodProfile]) -> bool:
    if not profiles:
        return False
    by_radius: dict[int, Counter] = {}
    for rho in profiles:
        r = rho.catalog.radius
        if r not in by_radius:
            by_radius[r] = type_counts(A, r)
        if rho.admits(by_radius[r]):
            return True
    return False

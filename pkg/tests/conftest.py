from __future__ import annotations

import random
from functools import lru_cache

import pytest

from artifact.enumeration import random_structure
from artifact.structures import Graph, Signature, Structure
from artifact.zigzag import build_canonical_model, toy_base_map

TWO_BINARY = Signature.of(("P", 2), ("Q", 2))


def path_graph(n: int, d: int = 2) -> Graph:
    vs = [str(i) for i in range(n)]
    return Graph(vs, list(zip(vs, vs[1:])), d)


def cycle_graph(n: int, d: int = 2) -> Graph:
    vs = [str(i) for i in range(n)]
    return Graph(vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)], d)


def complete_graph(n: int) -> Graph:
    vs = [str(i) for i in range(n)]
    return Graph(vs, [(u, v) for i, u in enumerate(vs) for v in vs[i + 1 :]], n - 1)


def matching_graph(m: int, isolated: int = 0, d: int = 2) -> Graph:
    vs = [f"{s}{i}" for i in range(m) for s in "ab"] + [f"z{i}" for i in range(isolated)]
    return Graph(vs, [(f"a{i}", f"b{i}") for i in range(m)], d)


@lru_cache(maxsize=None)
def canonical_model(levels: int):
    return build_canonical_model(toy_base_map(), levels)


def random_corpus(count: int, seed: int, sig: Signature = TWO_BINARY, max_n: int = 8, degrees=(1, 2, 3, 4)) -> list[Structure]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(1, max_n)
        d = rng.choice(degrees)
        out.append(random_structure(sig, n, d, rng, attempts=rng.randint(0, 3 * n * d)))
    return out


@pytest.fixture(scope="session")
def model_l1():
    return canonical_model(1)

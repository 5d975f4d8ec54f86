from __future__ import annotations

import random
from collections import Counter

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.enumeration import graphs_up_to, random_graph, random_structure
from artifact.neighborhoods import (
    MEMO_THRESHOLD,
    NeighbourhoodProfile,
    element_type_keys,
    enumerate_types,
    extract_ball,
    histogram_vector,
    obeys_profile,
    refinement_type_keys,
    type_counts,
    type_key,
)
from artifact.reduction import apply_reduction, profile_radius
from artifact.structures import GRAPH_SIGNATURE, DomainError, Graph, Signature, disjoint_union

from conftest import TWO_BINARY, cycle_graph, path_graph


def _pointed_nx(G: Graph, centre: str) -> nx.Graph:
    H = nx.Graph()
    for v in G.vertices:
        H.add_node(v, centre=(v == centre))
    H.add_edges_from(G.edges)
    return H


def test_extract_ball_on_path():
    G = path_graph(7)
    ball = extract_ball(G, "3", 2)
    assert sorted(ball.structure.universe) == ["1", "2", "3", "4", "5"]
    assert ball.center == "3"
    with pytest.raises(DomainError):
        extract_ball(G, "x", 1)


def test_type_keys_match_pointed_isomorphism():
    rng = random.Random(11)
    balls = []
    for _ in range(25):
        G = random_graph(rng.randint(1, 8), 3, rng)
        for v in G.vertices:
            balls.append(extract_ball(G, v, 2))
    balls = balls[::3]
    same = lambda x, y: x["centre"] == y["centre"]  # noqa: E731
    for i, b1 in enumerate(balls):
        for b2 in balls[i + 1 : i + 12]:
            iso = nx.is_isomorphic(
                _pointed_nx(b1.structure, b1.center), _pointed_nx(b2.structure, b2.center), node_match=same
            )
            assert (type_key(b1) == type_key(b2)) == iso


def test_element_keys_agree_with_extracted_balls():
    rng = random.Random(3)
    A = random_structure(TWO_BINARY, 7, 3, rng)
    keys = element_type_keys(A, 1)
    for a, k in zip(A.universe, keys):
        assert type_key(extract_ball(A, a, 1)) == k


def test_cycle_has_one_type_and_path_ends_differ():
    assert len(type_counts(cycle_graph(9), 2)) == 1
    keys = element_type_keys(path_graph(5), 1)
    assert keys[0] == keys[4] and keys[0] != keys[2] and keys[1] == keys[2]


def test_exhaustive_catalog_sizes():
    # centre degree 0..d, plus which neighbour pairs are adjacent up to symmetry
    assert len(enumerate_types(GRAPH_SIGNATURE, 2, 1)) == 4
    assert len(enumerate_types(GRAPH_SIGNATURE, 3, 1)) == 8
    with pytest.raises(DomainError):
        enumerate_types(GRAPH_SIGNATURE, 4, 1)
    with pytest.raises(DomainError):
        enumerate_types(TWO_BINARY, 2, 1)


def test_exhaustive_catalog_covers_every_small_graph():
    for d, r, n in ((3, 1, 6), (2, 2, 6)):
        cat = enumerate_types(GRAPH_SIGNATURE, d, r)
        for g in graphs_up_to(n, d):
            assert set(type_counts(g, r)) <= set(cat.keys)


def test_histogram_and_profile():
    cat = enumerate_types(GRAPH_SIGNATURE, 2, 1)
    G = path_graph(4)
    h = histogram_vector(G, cat)
    assert sum(h.counts) == 4
    assert histogram_vector(path_graph(2), cat) <= h
    counts = type_counts(G, 1)
    rho = NeighbourhoodProfile.from_map(cat, {k: (0, c) for k, c in counts.items()})
    assert rho.is_zero_profile()
    assert obeys_profile(G, rho)
    assert obeys_profile(path_graph(3), rho)
    assert not obeys_profile(cycle_graph(3), rho)
    with pytest.raises(DomainError):
        NeighbourhoodProfile(cat, ((0, 1),))
    with pytest.raises(DomainError):
        NeighbourhoodProfile.from_map(cat, {cat.keys[0]: (2, 1)})
    with pytest.raises(DomainError):
        histogram_vector(G, cat, r=2)


def test_zero_profile_downward_closed_on_small_graphs():
    cat = enumerate_types(GRAPH_SIGNATURE, 2, 1)
    rng = random.Random(7)
    graphs = graphs_up_to(5, 2)
    hists = [histogram_vector(g, cat) for g in graphs]
    for _ in range(20):
        rho = NeighbourhoodProfile.from_map(cat, {k: (0, rng.choice([None, 0, 1, 2])) for k in cat.keys})
        member = [rho.admits(h.as_dict()) for h in hists]
        assert member == [obeys_profile(g, rho) for g in graphs]
        for hg, ok in zip(hists, member):
            if ok:
                assert all(m for h, m in zip(hists, member) if h <= hg)


def test_memoised_components_agree_with_direct_keys():
    big = cycle_graph(MEMO_THRESHOLD + 10)
    G = disjoint_union(disjoint_union(big, big, ("x", "y")), path_graph(4), ("u", "v"))
    assert type_counts(G, 2) == Counter(element_type_keys(G, 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8), st.integers(1, 3))
def test_refinement_keys_never_split_types(seed, n, r):
    A = random_structure(TWO_BINARY, n, 3, random.Random(seed))
    exact = element_type_keys(A, r)
    refined = refinement_type_keys(A, r)
    seen: dict[str, str] = {}
    for e, c in zip(exact, refined):
        assert seen.setdefault(e, c) == c


def test_refinement_keys_comparable_across_structures():
    A = path_graph(6)
    B = disjoint_union(path_graph(6), cycle_graph(4))
    assert set(refinement_type_keys(A, 2)) <= set(refinement_type_keys(B, 2))


def test_refinement_partition_equals_exact_on_reduced_graphs():
    # reduced graphs at the profile radius for two relations
    rng = random.Random(2024)
    r = profile_radius(2)
    for _ in range(12):
        A = random_structure(TWO_BINARY, rng.randint(1, 4), 2, rng)
        G = apply_reduction(A).graph
        exact = element_type_keys(G, r)
        refined = refinement_type_keys(G, r)
        assert len(set(exact)) == len(set(refined))
        assert len(set(zip(exact, refined))) == len(set(exact))


def test_unknown_key_mode():
    with pytest.raises(DomainError):
        type_counts(path_graph(2), 1, mode="fast")


def test_single_symbol_catalog():
    sig = Signature.of(("R", 2))
    cat = enumerate_types(sig, 1, 1, graphs=False)
    # isolated, self-tuple, tail of a tuple, head of a tuple
    assert len(cat) == 4

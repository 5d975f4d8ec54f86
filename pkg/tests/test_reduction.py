from __future__ import annotations

import itertools

import pytest

from artifact.harness import CountingOracle
from artifact.neighborhoods import obeys_profile
from artifact.reduction import (
    ARROW,
    LOOP,
    NON_ARROW,
    GadgetSpec,
    QueryTranslator,
    apply_reduction,
    build_graph_profile,
    count_gadgets,
    detect_gadget,
    detect_gadgets,
    e_id,
    gadget_specs,
    graph_degree_bound,
    parse_vertex,
    profile_radius,
    reduction_constants,
    translate_query,
    vertex_count,
)
from artifact.structures import BOTTOM, DomainError, Graph, Signature, Structure, canonical_key
from artifact.zigzag import check_component

from conftest import TWO_BINARY, random_corpus


def test_reduction_constants():
    assert reduction_constants(1, 1) == (4, 2)
    assert reduction_constants(2, 1) == (12, 3)
    assert reduction_constants(2, 1)[1] == reduction_constants(2, 7)[1]
    with pytest.raises(DomainError):
        reduction_constants(0, 1)


def test_gadget_templates():
    for ell in (1, 2, 3):
        for spec in gadget_specs(ell):
            T, ends = spec.template()
            assert len(T) == spec.vertex_count
            expected_edges = 2 * ell + 3 if spec.kind == ARROW else ell + (1 if spec.kind == LOOP else 2)
            assert len(T.graph.edges) == expected_edges
            assert len(ends) == (2 if spec.kind == ARROW else 1)


def test_empty_structure_gives_empty_graph():
    red = apply_reduction(Structure(TWO_BINARY, [], {}, 2))
    assert red.graph.vertices == ()


def test_single_isolated_element():
    A = Structure(Signature.of(("R", 2)), ["a"], {}, 1)
    red = apply_reduction(A)
    G = red.graph
    assert set(G.vertices) == {"e:a", "v:a:1:1", "w:a:1"}
    assert {frozenset(e) for e in G.edges} == {
        frozenset(("e:a", "v:a:1:1")),
        frozenset(("v:a:1:1", "w:a:1")),
        frozenset(("e:a", "w:a:1")),
    }
    assert detect_gadget(G, "e:a") == (NON_ARROW, None)


def test_rejects_non_binary_and_over_degree():
    with pytest.raises(DomainError):
        apply_reduction(Structure(Signature.of(("T", 3)), ["a"], {}, 1))
    A = Structure(TWO_BINARY, ["a", "b"], {"P": [("a", "b")], "Q": [("b", "a")]}, 2)
    with pytest.raises(DomainError):
        apply_reduction(A, d=1)


def test_provenance_total_and_injective():
    for A in random_corpus(20, 1):
        red = apply_reduction(A)
        assert set(red.provenance) == set(red.graph.vertices)
        assert len(set(red.provenance.values())) == len(red.provenance)
        for x, tag in red.provenance.items():
            assert parse_vertex(x) == tag
        assert len(red.graph.vertices) == vertex_count(len(A.universe), A.degree_bound, 2)


def test_parse_vertex_errors():
    with pytest.raises(DomainError):
        parse_vertex("q:a")
    with pytest.raises(DomainError):
        parse_vertex("v:a:x:1")


def test_degree_within_graph_bound():
    for A in random_corpus(40, 2):
        red = apply_reduction(A)
        assert red.graph.max_degree() <= graph_degree_bound(A.degree_bound, 2)
        if A.degree_bound >= 4:
            assert red.graph.max_degree() <= A.degree_bound


def test_degree_above_d_for_small_d():
    # the hub of a tuple carries two pendants and two spine neighbours
    A = Structure(TWO_BINARY, ["a", "b"], {"Q": [("a", "b")]}, 1)
    assert apply_reduction(A).graph.max_degree() == 4
    one = Structure(Signature.of(("R", 2)), ["a"], {}, 3)
    assert apply_reduction(one).graph.graph_degree("e:a") == 6 == graph_degree_bound(3, 1)


def test_gadget_soundness_on_corpus():
    for A in random_corpus(25, 3, max_n=5):
        red = apply_reduction(A)
        G, kidx = red.graph, red.relation_index
        for a, b in itertools.permutations(A.universe, 2):
            want = {(ARROW, kidx[n]) for n in A.signature.names if A.has(n, (a, b))}
            assert set(detect_gadgets(G, e_id(a), e_id(b), red.ell)) == want
        for a in A.universe:
            loops = {(LOOP, kidx[n]) for n in A.signature.names if A.has(n, (a, a))}
            empty = A.degree_bound - len(A.incident(a))
            found = set(detect_gadgets(G, e_id(a), None, red.ell))
            assert {g for g in found if g[0] == LOOP} == loops
            assert count_gadgets(G, e_id(a), GadgetSpec(NON_ARROW, None, red.ell)) == empty


def test_injective_up_to_isomorphism():
    corpus = random_corpus(30, 6, max_n=4, degrees=(2,))
    keys = [(canonical_key(A), canonical_key(apply_reduction(A).graph)) for A in corpus]
    for (ka, ga), (kb, gb) in itertools.combinations(keys, 2):
        assert (ka == kb) == (ga == gb)


def test_translation_matches_materialised_graph():
    for A in random_corpus(15, 4, max_n=5):
        G = apply_reduction(A).graph
        oracle = CountingOracle(A)
        tr = QueryTranslator(oracle)
        assert tr.degree_bound == G.degree_bound
        for x in G.vertices:
            for port in range(1, G.degree_bound + 1):
                ans, used = tr.query(x, port)
                assert ans == G.neighbor_query(x, port)
                assert used <= A.degree_bound + 1
                if x.startswith("e:"):
                    assert used == 0


def test_translate_query_errors():
    A = Structure(TWO_BINARY, ["a"], {}, 2)
    with pytest.raises(DomainError):
        translate_query(CountingOracle(A), "e:a", 99)
    with pytest.raises(DomainError):
        translate_query(CountingOracle(A), "nonsense", 1)
    assert translate_query(CountingOracle(A), "w:a:1", 3) == (BOTTOM, 1)


def test_profile_radius():
    assert profile_radius(1) == 6 and profile_radius(49) == 198


def test_build_graph_profile_errors():
    with pytest.raises(DomainError):
        build_graph_profile([])
    with pytest.raises(DomainError):
        build_graph_profile([Structure(TWO_BINARY, ["a"], {}, 1)])


def test_graph_profile_tracks_zigzag_prime(model_l1):
    A = model_l1.structure
    rho, _ = build_graph_profile([model_l1])
    assert rho.extra["key_mode"] == "refinement" and rho.label == "empirical"
    assert obeys_profile(apply_reduction(A).graph, rho)
    assert obeys_profile(Graph([], [], rho.catalog.degree_bound), rho)
    tuples = list(A.tuples())
    for idx in (0, 40, 352):
        name, t = tuples[idx]
        B = A.with_changes(remove=[(name, t)])
        reduced = apply_reduction(B, A.degree_bound).graph
        assert obeys_profile(reduced, rho) == bool(check_component(B, "zigzag'"))

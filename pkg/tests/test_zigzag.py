from __future__ import annotations

import random

import pytest

from artifact.harness import rotation_gap
from artifact.neighborhoods import obeys_profile
from artifact.structures import DomainError, Signature, Structure, disjoint_union
from artifact.zigzag import (
    COMPONENTS,
    RotationMap,
    build_canonical_model,
    check_component,
    check_connected_F,
    cycle_rotation,
    deletion_results,
    e_name,
    model_degree,
    root_profile,
    square_rotation,
    toy_base_map,
    validate_rotation_map,
    zigzag_signature,
)

from conftest import canonical_model


def test_rotation_map_validation():
    assert validate_rotation_map(cycle_rotation(5))
    broken = RotationMap.from_rows(2, 1, [(0, 1, 1, 1), (1, 1, 1, 1)])
    res = validate_rotation_map(broken)
    assert not res and res.clause == "involution"
    partial = RotationMap.from_rows(2, 1, [(0, 1, 1, 1)])
    assert validate_rotation_map(partial).clause == "total"


def test_square_rotation_is_involution_with_pair_ports():
    sq = square_rotation(cycle_rotation(16))
    assert sq.degree == 4
    assert validate_rotation_map(sq)
    # two steps forward from 0 arrive at 2 through the backward ports
    assert sq(0, (1, 1)) == (2, (2, 2))


def test_square_squares_the_spectrum():
    rot = cycle_rotation(9)
    assert rotation_gap(square_rotation(rot)) == pytest.approx(rotation_gap(rot) ** 2, abs=1e-12)


def test_signature_and_degree():
    sig = zigzag_signature(2)
    assert len(sig) == 16 + 16 + 1 + 16
    assert e_name(3, 1, 2) == "E31"
    assert e_name(3, 12, 4) == "E0312"
    assert model_degree(2) == 33


def test_model_sizes():
    assert len(canonical_model(1).structure.universe) == 17
    m = canonical_model(1)
    assert m.root == "r" and m.D == 2 and m.levels == 1
    with pytest.raises(DomainError):
        build_canonical_model(toy_base_map(), 0)
    with pytest.raises(DomainError):
        build_canonical_model(toy_base_map(), 3, budget=1000)


def test_model_passes_every_component(model_l1):
    for which in COMPONENTS:
        assert check_component(model_l1.structure, which), which
    assert check_connected_F(model_l1.structure)


def test_root_count_variants(model_l1):
    A = model_l1.structure
    two = disjoint_union(A, A)
    assert not check_component(two, "tree")
    assert not check_component(two, "tree'")
    assert not check_component(two, "zigzag'")
    assert check_component(two, "zigzag~")
    assert not check_connected_F(two)
    empty = Structure(A.signature, [], {}, A.degree_bound)
    assert check_component(empty, "tree'")
    assert not check_component(empty, "tree")


def test_focused_deletion_checks_match_full_checks(model_l1):
    A = model_l1.structure
    results = deletion_results(A, "zigzag")
    rng = random.Random(1)
    for (name, t), res in rng.sample(results, 40):
        full = check_component(A.with_changes(remove=[(name, t)]), "zigzag")
        assert bool(res) == bool(full)
    assert all(not res for _, res in results)


def test_inserted_tuple_is_rejected(model_l1):
    A = model_l1.structure
    B = A.with_changes(add=[(e_name(0, 0, 2), ("r.1", "r.2"))], degree_bound=A.degree_bound + 1)
    assert not check_component(B, "zigzag")
    C = A.with_changes(add=[("R", ("r.1", "r.1"))], degree_bound=A.degree_bound + 1)
    res = check_component(C, "tree")
    assert not res and res.witness == ("r.1",)


def test_root_profile_separates_two_roots(model_l1):
    rho, _ = root_profile([model_l1.structure])
    assert obeys_profile(model_l1.structure, rho)
    assert not obeys_profile(disjoint_union(model_l1.structure, model_l1.structure), rho)


def test_checker_input_errors(model_l1):
    with pytest.raises(DomainError):
        check_component(model_l1.structure, "nonsense")
    with pytest.raises(DomainError):
        check_component(Structure(Signature.of(("E", 2)), ["a"]), "tree")
    with pytest.raises(DomainError):
        check_component(model_l1.structure, "base", cycle_rotation(5))
    with pytest.raises(DomainError):
        check_component(model_l1.structure, "tree", square_rotation(cycle_rotation(16)))
    with pytest.raises(DomainError):
        deletion_results(disjoint_union(model_l1.structure, model_l1.structure), "zigzag")

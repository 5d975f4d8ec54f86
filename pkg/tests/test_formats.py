from __future__ import annotations

import random

import pytest

from artifact import formats as fm
from artifact.enumeration import random_structure
from artifact.gsf import compile_zero_profile_to_gsf, example_families
from artifact.hanf import HanfAtom, HanfDNF
from artifact.neighborhoods import NeighbourhoodProfile, enumerate_types, type_counts
from artifact.reduction import apply_reduction
from artifact.structures import GRAPH_SIGNATURE, DomainError, Graph, Structure
from artifact.zigzag import cycle_rotation, square_rotation

from conftest import TWO_BINARY, cycle_graph, path_graph


def test_structure_round_trip(model_l1):
    rng = random.Random(1)
    for A in [random_structure(TWO_BINARY, rng.randint(0, 6), 3, rng) for _ in range(10)] + [model_l1.structure]:
        assert fm.read_structure(fm.write_structure(A)) == A


def test_structure_text_layout():
    A = Structure(TWO_BINARY, ["a", "b"], {"P": [("a", "b")]}, 2)
    text = fm.write_structure(A)
    assert text.splitlines() == [
        "sigma-structure v1",
        "signature: P/2, Q/2",
        "degree-bound: 2",
        "elements: a b",
        "tuple: P a b",
    ]


def test_graph_round_trip():
    G = path_graph(4)
    text = fm.write_graph(G)
    assert text.startswith("graph v1\ndegree-bound: 2\nvertices: 0 1 2 3\nedge: 0 1\n")
    assert fm.read_graph(text) == G
    L = Graph(["a", "b"], [("a", "b")], 2, loops=["a"], allow_loops=True)
    assert fm.read_graph(fm.write_graph(L)) == L
    assert isinstance(fm.read_structure(text), Graph)


def test_family_round_trip():
    for fam in example_families().values():
        back = fm.read_family(fm.write_family(fam))
        assert set(back.members) == set(fam.members) and back.size_bound == fam.size_bound


def test_profile_round_trip():
    cat = enumerate_types(GRAPH_SIGNATURE, 2, 1)
    rho = NeighbourhoodProfile.from_map(cat, {k: (0, 1 if i % 2 else None) for i, k in enumerate(cat.keys)}, label="demo")
    back = fm.read_profile(fm.write_profile(rho))
    assert back.catalog == cat and back.bounds == rho.bounds and back.label == "demo"
    assert len(compile_zero_profile_to_gsf(back, 4)) == len(compile_zero_profile_to_gsf(rho, 4))


def test_profile_defaults_and_observed_catalog():
    key = next(iter(type_counts(cycle_graph(3), 1)))
    text = f"profile v1\nradius: 1\ndegree: 2\nsignature: E/2\ncatalog: exhaustive\nbound: {key} [0,inf]\n"
    rho = fm.read_profile(text)
    assert rho.bound(key) == (0, None)
    assert all(rho.bound(k) == (0, 0) for k in rho.catalog.keys if k != key)
    observed = fm.read_profile("profile v1\nradius: 3\ndegree: 5\nsignature: E/2\nbound: tabc [1,2]\n")
    assert not observed.catalog.exhaustive and observed.bound("tabc") == (1, 2)


def test_hanf_round_trip():
    phi = HanfDNF.of([HanfAtom(2, 1, "tk1"), HanfAtom(3, 1, "tk2", True)], [])
    back, sig, d = fm.read_hanf(fm.write_hanf(phi, d=2))
    assert back == phi and sig == GRAPH_SIGNATURE and d == 2


def test_rotation_round_trip():
    for rot in (cycle_rotation(7), square_rotation(cycle_rotation(16))):
        assert fm.read_rotation(fm.write_rotation(rot)) == rot


def test_provenance_round_trip():
    A = random_structure(TWO_BINARY, 4, 2, random.Random(3))
    red = apply_reduction(A)
    prov, d, rel = fm.read_provenance(fm.write_provenance(red.provenance, red.d, red.relation_index))
    assert prov == red.provenance and d == 2 and rel == red.relation_index


@pytest.mark.parametrize(
    "reader, text, line",
    [
        (fm.read_structure, "sigma-structure v1\nsignature: P/2\ndegree-bound: 1\nelements: a\ntuple: P a z\n", 5),
        (fm.read_structure, "sigma-structure v1\nsignature: P/x\n", 2),
        (fm.read_graph, "graph v1\ndegree-bound: 1\nvertices: a b c\nedge: a b\nedge: a c\n", 5),
        (fm.read_graph, "graph v1\ndegree-bound: 1\nvertices: a\nedge: a a\n", 4),
        (fm.read_profile, "profile v1\nradius: 1\ndegree: 2\nsignature: E/2\nbound: k [3,1]\n", 5),
        (fm.read_hanf, "hanf v1\natom: >=1 1 k\n", 2),
        (fm.read_rotation, "rotation-map v1\nvertices: 2\ndegree: 1\nrot: 0 1 1 1\nrot: 1 1 1 1\n", 5),
        (fm.read_provenance, "provenance v1\nvertex: x gadget q\n", 2),
        (fm.read_marked_graph, "graph v1\ndegree-bound: 1\nvertices: a\nmark: a odd\n", 4),
    ],
)
def test_errors_carry_line_numbers(reader, text, line):
    with pytest.raises(fm.FormatError) as exc:
        reader(text, "f.txt")
    assert exc.value.line == line
    assert str(exc.value).startswith(f"f.txt:{line}: ")


def test_wrong_header_and_missing_file(tmp_path):
    with pytest.raises(fm.FormatError):
        fm.read_graph("profile v1\n")
    with pytest.raises(DomainError):
        fm.load(tmp_path / "missing.txt", fm.read_graph)
    fm.save(tmp_path / "g.txt", fm.write_graph(path_graph(2)))
    assert fm.load(tmp_path / "g.txt", fm.read_graph) == path_graph(2)

from __future__ import annotations

import shutil
import subprocess
import sys

import pytest

from artifact import formats as fm
from artifact.cli import main
from artifact.gsf import example_families
from artifact.hanf import HanfAtom, HanfDNF
from artifact.neighborhoods import NeighbourhoodProfile, enumerate_types, type_counts
from artifact.structures import GRAPH_SIGNATURE, Graph, Structure
from artifact.zigzag import square_rotation, cycle_rotation

from conftest import TWO_BINARY, complete_graph, cycle_graph, matching_graph, path_graph


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    paths = {}

    def put(name, text):
        p = tmp_path / name
        p.write_text(text)
        paths[name] = p
        return p

    put("c3.graph", fm.write_graph(cycle_graph(3)))
    put("c4.graph", fm.write_graph(cycle_graph(4)))
    put("k4.graph", fm.write_graph(complete_graph(4)))
    put("p3.graph", fm.write_graph(path_graph(3)))
    put("iso.graph", fm.write_graph(Graph(["x"], [], 1)))
    put("g2.graph", fm.write_graph(matching_graph(2, 1)))
    put("odd.family", fm.write_family(example_families()["odd"]))
    put("iso.family", "graph v1\ndegree-bound: 1\nvertices: v\nmark: v full\n")
    put("s.struct", fm.write_structure(Structure(TWO_BINARY, ["a", "b"], {"P": [("a", "b")]}, 2)))
    put("rot.map", fm.write_rotation(square_rotation(cycle_rotation(16))))
    cat = enumerate_types(GRAPH_SIGNATURE, 2, 1)
    counts = type_counts(cycle_graph(3), 1)
    rho = NeighbourhoodProfile.from_map(cat, {k: (0, None) for k in counts})
    put("cyc.profile", fm.write_profile(rho))
    (key,) = counts
    put("tri.hanf", fm.write_hanf(HanfDNF.of([HanfAtom(3, 1, key)]), d=2))
    paths["tmp"] = tmp_path
    return paths


def test_types_and_hist(capsys, files):
    code, out, _ = run(capsys, "types", files["c4.graph"])
    assert code == 0 and len(out.splitlines()) == 4
    code, out, _ = run(capsys, "hist", files["p3.graph"], "--d", 2, "--r", 1)
    lines = out.splitlines()
    assert lines[0] == "# seed 0"
    assert sum(int(ln.split()[-1]) for ln in lines[1:]) == 3 and len(lines) == 5


def test_empty_graph_histogram(capsys, files):
    empty = files["tmp"] / "empty.graph"
    empty.write_text("graph v1\ndegree-bound: 2\nvertices:\n")
    code, out, _ = run(capsys, "hist", empty, "--r", 1)
    assert code == 0
    assert [ln.split()[-1] for ln in out.splitlines()[1:]] == ["0"] * 4


def test_obeys_free_embed_covers(capsys, files):
    assert run(capsys, "obeys", files["c3.graph"], "--profile", files["cyc.profile"])[1] == "result: true\n"
    assert run(capsys, "obeys", files["p3.graph"], "--profile", files["cyc.profile"])[1] == "result: false\n"
    assert run(capsys, "free", files["g2.graph"], files["odd.family"])[1] == "result: true\n"
    assert run(capsys, "free", files["p3.graph"], files["odd.family"])[1] == "result: false\n"
    code, out, _ = run(capsys, "embed", files["odd.family"], files["p3.graph"], "--index", 0)
    assert code == 0 and out.startswith("result:")
    assert run(capsys, "covers", files["iso.graph"], files["iso.family"])[1] == "result: false\n"
    assert run(capsys, "covers", files["iso.graph"], files["iso.family"], "--set", "x")[1] == "result: true\n"
    code, out, _ = run(capsys, "probe", files["iso.graph"], files["iso.family"], "--budget", 1)
    assert "covers: false" in out


def test_compile_gsf(capsys, files):
    out_path = files["tmp"] / "cyc.family"
    code, out, _ = run(capsys, "compile-gsf", files["cyc.profile"], "--size-bound", 4, "-o", out_path)
    assert code == 0 and out == f"wrote: {out_path}\n"
    fam = fm.load(out_path, fm.read_family)
    assert len(fam) > 0


def test_hanf_compile_and_lift(capsys, files):
    prefix = files["tmp"] / "tri"
    code, out, _ = run(capsys, "hanf-compile", files["tri.hanf"], "--sat-pool", 4, "-o", prefix)
    assert code == 0
    assert "profiles: 1" in out and "profile 0 satisfiable: true" in out
    assert (files["tmp"] / "tri.0.profile").exists()
    code, out, _ = run(capsys, "lift", files["tri.hanf"], "--r", 2)
    assert code == 0 and "hanf v1" in out and " 2 " in out
    assert run(capsys, "lift", files["tri.hanf"])[0] == 1


def test_zigzag_generation_check_and_distance(capsys, files):
    model = files["tmp"] / "m.struct"
    assert run(capsys, "zz-gen", "--D", 2, "--levels", 1, "-o", model)[0] == 0
    assert model.read_text().startswith("# seed 0\n# root r\nsigma-structure v1")
    assert run(capsys, "zz-check", model)[1] == "result: true\n"
    text = model.read_text().replace("tuple: E03 r.1 r.3\n", "")
    mutant = files["tmp"] / "mut.struct"
    mutant.write_text(text)
    code, out, _ = run(capsys, "zz-check", mutant, "--which", "rotationMap")
    assert code == 0 and out.startswith("result: false\nclause:")
    code, out, _ = run(capsys, "dist", mutant, "--property", "zigzag-prime", "--eps", 0.002)
    assert code == 0
    assert "result: close" in out and "witness: add E03 r.1 r.3" in out


def test_reduce_and_simulate(capsys, files):
    out_path = files["tmp"] / "red.graph"
    assert run(capsys, "reduce", files["s.struct"], "-o", out_path)[0] == 0
    G = fm.load(out_path, fm.read_graph)
    prov, d, _ = fm.load(str(out_path) + ".prov", fm.read_provenance)
    assert set(prov) == set(G.vertices) and d == 2
    code, out, _ = run(capsys, "sim-query", files["s.struct"], "--vertex", "e:a", "--port", 1)
    assert out == "answer: v:a:1:2\nqueries: 0\n"
    code, out, _ = run(capsys, "sim-query", files["s.struct"], "--vertex", "w:b:2", "--port", 1)
    assert out.splitlines()[-1] == "queries: 1"


def test_pot_and_gap(capsys, files):
    code, out, _ = run(capsys, "pot", files["c4.graph"], "--tester", "coin", "--trials", 200, "--seed", 5)
    assert code == 0 and out.startswith("# evidence")
    again = run(capsys, "pot", files["c4.graph"], "--tester", "coin", "--trials", 200, "--seed", 5, "--threads", 3)[1]
    assert again == out
    code, out, _ = run(
        capsys, "pot", files["c3.graph"], "--tester", "forbidden-type", "--profile", files["cyc.profile"], "--trials", 10
    )
    assert "accept: 10" in out
    code, out, _ = run(
        capsys, "pot", files["c4.graph"], "--tester", "forbidden-type", "--profile", files["cyc.profile"], "--trials", 10
    )
    assert "accept: 0" in out
    assert run(capsys, "gap", files["k4.graph"])[1] == "gap: 0.333333333333\n"
    assert run(capsys, "gap", files["c4.graph"])[1] == "gap: 1.000000000000\n"
    assert run(capsys, "gap", files["rot.map"])[0] == 0


def test_exit_codes(capsys, files):
    code, out, err = run(capsys, "gap", files["p3.graph"])
    assert code == 1 and out == "" and err.startswith("error:")
    code, _, err = run(capsys, "types", files["tmp"] / "nope.graph")
    assert code == 1 and "error:" in err
    bad = files["tmp"] / "bad.graph"
    bad.write_text("graph v1\ndegree-bound: 1\nvertices: a\nedge: a q\n")
    code, _, err = run(capsys, "types", bad)
    assert code == 1 and f"{bad}:4:" in err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()
    code, _, err = run(capsys, "pot", files["c4.graph"], "--tester", "nosuch")
    assert code == 1


def test_console_script():
    exe = shutil.which("artifact")
    cmd = [exe, "--help"] if exe else [sys.executable, "-m", "artifact.cli", "--help"]
    res = subprocess.run(cmd, capture_output=True, text=True)
    assert res.returncode == 0
    for name in ("types", "hist", "obeys", "compile-gsf", "embed", "free", "hanf-compile", "lift", "zz-gen", "zz-check",
                 "reduce", "sim-query", "dist", "pot", "gap", "covers", "probe"):
        assert name in res.stdout

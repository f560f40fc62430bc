import json
import subprocess
import sys

import pytest

from roe_calc.catalog import random_bounded_geometry, random_operator
from roe_calc.cli import COMMANDS, main
from roe_calc.serialize import dumps, save


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


@pytest.fixture
def bad_space(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"points": ["a", "b", "c"], "dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}))
    return str(path)


@pytest.fixture
def operator_file(tmp_path):
    X = random_bounded_geometry(10, 3, 1)
    T = random_operator(X, X, 3, max_degree=3, density=0.4)
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"source": json.loads(dumps(X)), "target": json.loads(dumps(X)),
                                "entries": [[y, x, v.real, v.imag] for y, x, v in T.entries()]}))
    return str(path), X, T


def test_all_subcommands_registered():
    assert set(COMMANDS) == {
        "validate", "compose", "dzero", "adjoint", "meet", "from-map", "defect", "extract-map",
        "near-identity", "band-decompose", "factor", "propagation", "norm", "profile", "order-check",
        "equiv-check", "inv-semi", "idempotent", "selfadjoint", "join-feasible", "close-pairs", "demo",
    }


def test_demo_idem(capsys):
    code, rep, _ = run_json(capsys, "demo", "idem", "--max-n", "50")
    assert code == 0
    assert rep["selfadjoint"]["exact"] is True
    assert rep["idempotent"]["bound"] == 0.5
    assert rep["order_df_below_dzero"]["relation"] == "holds-bounded"
    assert rep["order_dzero_below_df"]["relation"] == "fails-growing"
    assert rep["equivalent_to_dzero"] is False


def test_demo_nonupper_and_sparse_line(capsys):
    code, rep, _ = run_json(capsys, "demo", "nonupper")
    assert code == 0 and rep["certificate"]["lhs"] > rep["certificate"]["rhs"]
    code, rep, _ = run_json(capsys, "demo", "sparse-line", "--max-n", "20")
    assert code == 0 and rep["identity_only"] and rep["defect"] == 1.0
    assert rep["literal_convention"]["injective_up_to"] == 1


def test_join_feasible_obstruction_exits_1(capsys):
    code, rep, _ = run_json(capsys, "join-feasible", "--g1", "df:id:10", "--g2", "df:neg:10", "--bound", "3")
    assert code == 1
    cert = rep["certificate"]
    assert cert["kind"] == "triangle" and len(cert["witness"]) == 3 and cert["lhs"] > cert["rhs"]


def test_join_feasible_control(capsys):
    code, rep, _ = run_json(capsys, "join-feasible", "--g1", "dzero:z_interval:4",
                            "--g2", "dzero:z_interval:4", "--bound", "1")
    assert code == 0 and rep["feasible"] and rep["validation"]["ok"]


def test_validate_bad_space_exits_2(capsys, bad_space):
    code, out, err = run(capsys, "validate", "--space", bad_space)
    assert code == 2
    assert "['a', 'b', 'c']" in err
    assert json.loads(out)["violations"][0]["witness"] == ["a", "b", "c"]


def test_bad_file_input_to_other_commands_exits_2(capsys, bad_space):
    code, _, err = run(capsys, "dzero", "--space", bad_space)
    assert code == 2 and "triangle" in err


def test_unknown_ref_and_bad_flags_exit_2(capsys):
    assert run(capsys, "compose", "--g1", "nope:1", "--g2", "df:id:2")[0] == 2
    assert run(capsys, "profile", "--radii", "3,1")[0] == 2
    assert run(capsys, "compose", "--g1", "df:id:2")[0] == 2
    assert run(capsys)[0] == 2


def test_glue_commands(capsys):
    code, rep, _ = run_json(capsys, "compose", "--g1", "dzero:z_interval:2", "--g2", "dzero:z_interval:2")
    assert code == 0 and rep["glue"]["cross"][0][0] == 2
    code, rep, _ = run_json(capsys, "adjoint", "--glue", "random_glue:3:4:1")
    assert code == 0 and len(rep["glue"]["cross"]) == 4
    code, rep, _ = run_json(capsys, "meet", "--g1", "df:id:3", "--g2", "df:neg:3")
    assert code == 0 and rep["validation"]["ok"]
    code, rep, _ = run_json(capsys, "from-map", "--map", "sparse_f:5", "--epsilon", "2")
    assert code == 0
    code, rep, _ = run_json(capsys, "dzero", "--space", "halfline:3")
    assert rep["glue"]["cross"][0] == [1, 2, 3, 4]


def test_map_checks(capsys):
    code, rep, _ = run_json(capsys, "defect", "--map", "sparse_f:20")
    assert code == 0 and rep["defect"] == 1
    assert run(capsys, "defect", "--map", "sparse_f:20", "--bound", "0.5")[0] == 1
    code, rep, _ = run_json(capsys, "extract-map", "--glue", "idem:6", "--bound", "1")
    assert code == 0 and [p[0] for p in rep["pairs"]] == list(range(7))
    code, rep, _ = run_json(capsys, "extract-map", "--glue", "idem:6", "--bound", "0.1")
    assert code == 1 and rep["found"] is False
    code, rep, _ = run_json(capsys, "near-identity", "--glue", "dzero:z_interval:3")
    assert code == 0 and rep["bound"] == 1


def test_operator_commands(capsys, operator_file):
    path, X, T = operator_file
    code, out, _ = run(capsys, "band-decompose", "--operator", path)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines and all(len(line.split("\t")) == 3 for line in lines)
    assert sum(int(line.split("\t")[1]) for line in lines) == T.nnz
    code, rep, _ = run_json(capsys, "band-decompose", "--operator", path, "--format", "json")
    assert rep["exact"] and rep["count"] <= rep["max_degree"]
    code, out, _ = run(capsys, "band-decompose", "--operator", path, "--format", "csv")
    assert out.startswith("band,support,propagation")
    code, rep, _ = run_json(capsys, "norm", "--operator", path)
    assert code == 0 and rep["norm"] > 0
    code, rep, _ = run_json(capsys, "propagation", "--operator", path)
    assert code == 0
    assert run(capsys, "propagation", "--operator", path, "--bound", "0.5")[0] == 1


def test_factor_command(capsys, tmp_path):
    from roe_calc.catalog import random_band, random_chain

    spaces, (g, h) = random_chain([6, 5, 6], 8)
    band = random_band(spaces[0], spaces[2], 8).operator()
    paths = {}
    for name, obj in (("g", g), ("h", h)):
        paths[name] = str(tmp_path / f"{name}.json")
        save(obj, paths[name])
    op = tmp_path / "band.json"
    op.write_text(json.dumps({"source": json.loads(dumps(spaces[0])), "target": json.loads(dumps(spaces[2])),
                              "entries": [[y, x, v.real, v.imag] for y, x, v in band.entries()]}))
    code, rep, _ = run_json(capsys, "factor", "--operator", str(op), "--g1", paths["g"], "--g2", paths["h"])
    assert code == 0 and all(p["exact"] for p in rep["pieces"])


def test_profile_csv(capsys):
    code, out, _ = run(capsys, "profile", "--g1", "dzero", "--g2", "idem", "--max-n", "20",
                       "--radii", "1,2", "--format", "csv")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "n,R,h" and rows[-1] == "20,2.0,40.5"


def test_profile_single_glues(capsys):
    code, rep, _ = run_json(capsys, "profile", "--g1", "dzero:z_interval:5", "--g2", "idem:5", "--radii", "2")
    assert code == 0 and rep["rows"] == [{"n": 0, "R": 2.0, "h": 10.5}]


def test_order_and_family_checks(capsys):
    code, rep, _ = run_json(capsys, "order-check", "--g1", "idem", "--g2", "dzero", "--max-n", "30")
    assert code == 0 and rep["relation"] == "holds-bounded"
    code, rep, _ = run_json(capsys, "order-check", "--g1", "dzero:30", "--g2", "idem:30")
    assert code == 1 and rep["relation"] == "fails-growing"
    code, rep, _ = run_json(capsys, "equiv-check", "--g1", "dzero:30", "--g2", "dzero_shift:2:30")
    assert code == 0 and rep["relation"] == "equivalent"
    code, rep, _ = run_json(capsys, "idempotent", "--glue", "idem:30")
    assert code == 0 and rep["bound"] == 0.5
    code, rep, _ = run_json(capsys, "idempotent", "--glue", "df_neg:30")
    assert code == 1
    code, rep, _ = run_json(capsys, "selfadjoint", "--glue", "idem:30")
    assert code == 0 and rep["exact"]
    code, rep, _ = run_json(capsys, "inv-semi", "--glue", "random_glue:5:5:2")
    assert code == 0 and rep["holds"]
    code, rep, _ = run_json(capsys, "close-pairs", "--glue", "dzero:z_interval:4", "--bound", "1")
    assert code == 0 and rep["size"] == 9


def test_output_files_are_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["demo", "idem", "--max-n", "20", "--output", str(a)]) == 0
    assert main(["demo", "idem", "--max-n", "20", "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a.json.meta.json").read_text())
    assert "created" in meta and meta["passed"] is True


def test_scenario_file(capsys, tmp_path):
    scenario = {
        "name": "nonupper",
        "operation": "join-feasible",
        "inputs": {"g1": "df:id:10", "g2": "df:neg:10"},
        "parameters": {"bound": 3},
        "outputs": {"output": "cert.json"},
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scenario))
    assert main(["run", "--input", str(path)]) == 1
    assert json.loads((tmp_path / "cert.json").read_text())["feasible"] is False
    scenario["surprise"] = 1
    path.write_text(json.dumps(scenario))
    assert main(["run", "--input", str(path)]) == 2
    assert "unknown field" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "roe_calc", "defect", "--map", "neg:3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["defect"] == 0

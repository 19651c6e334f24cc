import json
import os

import pytest

from ekab2pddl.cli import main


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_answer_open_and_closed(tmp_path, capsys):
    onto = write(tmp_path, "t.onto", "C <= B\n")
    st = write(tmp_path, "s.facts", "C(a)\n")
    q_open = write(tmp_path, "q1", "(ucq (B ?x))")
    q_closed = write(tmp_path, "q2", "(B ?x)")
    assert main(["answer", onto, st, q_open]) == 0
    assert capsys.readouterr().out == "a\n"
    assert main(["answer", onto, st, q_closed]) == 0
    assert capsys.readouterr().out == ""
    assert main(["answer", onto, st, write(tmp_path, "q3", "(B ?x)"), "--oracle", "exp"]) == 0
    assert capsys.readouterr().out == "a\n"


def test_rewrite_outputs(tmp_path, capsys):
    onto = write(tmp_path, "t.onto", "C <= some r D\n")
    q = write(tmp_path, "q", "(exists (?y) (r ?x ?y))")
    assert main(["rewrite", onto, q, "--emit", "stats"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert set(stats) == {"rules", "max_arity", "predicates"}
    assert main(["rewrite", onto, q]) == 0
    prog = write(tmp_path, "p.dl", capsys.readouterr().out)
    facts = write(tmp_path, "f", "C(a).\n")
    assert main(["dump-model", prog, facts]) == 0
    assert "C(a)." in capsys.readouterr().out
    assert main(["rewrite", onto, q, "--oracle", "chase"]) == 2


def test_bench_gen_compile_validate(tmp_path, capsys):
    out = str(tmp_path / "q")
    assert main(["bench-gen", "queens", "--n", "5", "--m", "2", "--seed", "7",
                 "--out-dir", out]) == 0
    path = capsys.readouterr().out.strip()
    assert os.path.exists(path) and path.endswith(".ekab")
    cdir = str(tmp_path / "c")
    assert main(["compile", path, "--out-dir", cdir, "--validate-depth", "4"]) == 0
    rep = json.loads(open(os.path.join(cdir, "report.json")).read())
    assert rep["validation"] == {"depth": 4, "agree": True}
    assert {"rules", "max_arity", "strata", "compile_ms"} <= set(rep)
    capsys.readouterr()
    dom, prob = os.path.join(cdir, "domain.pddl"), os.path.join(cdir, "problem.pddl")
    assert main(["plan", "--pddl", dom, prob, "--search", "5"]) == 0
    plan_lines = capsys.readouterr().out.splitlines()
    assert plan_lines[0] == "(dl_sn)" and plan_lines[-1] == "(dl_achieve_goal)"
    plan = write(tmp_path, "p.plan", "\n".join(plan_lines) + "\n")
    assert main(["plan", "--pddl", dom, prob, plan]) == 0
    assert capsys.readouterr().out == "valid\n"


def test_plan_file_check(tmp_path, capsys):
    assert main(["bench-gen", "cats", "--k", "1", "--seed", "3", "--out-dir",
                 str(tmp_path)]) == 0
    path = capsys.readouterr().out.strip()
    assert main(["plan", path, "--search", "3"]) == 0
    found = capsys.readouterr().out
    good = write(tmp_path, "good.plan", "; found by search\n" + found)
    bad = write(tmp_path, "bad.plan", "(disarm p1)\n(disarm p1)\n")
    assert main(["plan", path, good]) == 0
    assert capsys.readouterr().out == "valid\n"
    assert main(["plan", path, bad]) == 1
    assert capsys.readouterr().out == "invalid\n"


def test_exit_codes(tmp_path, capsys):
    assert main(["compile", "--no-such-flag", "x"]) == 2
    assert main([]) == 2
    assert main(["compile", str(tmp_path / "missing.ekab")]) == 1
    assert main(["validate", write(tmp_path, "t.ekab", "(define (oops))")]) == 1
    assert main(["scale-report", "--min-size", "5", "--max-size", "3"]) == 2
    capsys.readouterr()


def test_scale_report_cli(tmp_path, capsys):
    assert main(["scale-report", "--out-dir", str(tmp_path), "--max-size", "6"]) == 0
    csv_path, png_path = capsys.readouterr().out.split()
    assert open(csv_path).readline().startswith("axioms,")
    assert open(png_path, "rb").read(8) == b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("fam", ["robot", "robotconj"])
def test_validate_command(tmp_path, capsys, fam):
    main(["bench-gen", fam, "--n", "2", "--out-dir", str(tmp_path)])
    path = capsys.readouterr().out.strip()
    assert main(["validate", path, "--depth", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["agree"] is True

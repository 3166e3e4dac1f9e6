import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from helpers import explicit
from oracles import skeleton_ball
from sibtrees.cli import run, sequence_from_template
from sibtrees.fixtures import fixture
from sibtrees.presentation import core, deco

TREES = Path(__file__).resolve().parent.parent / "trees"


def call(*argv):
    out, err = [], []
    code = run([str(a) for a in argv], out.append, err.append)
    return code, "\n".join(out), "\n".join(err)


def tree(name: str) -> Path:
    return TREES / f"{name}.tree"


def test_analyze():
    code, out, _ = call("analyze", tree("comb"))
    assert code == 0
    assert "ray: no" in out and "nearly finite: no" in out


def test_classify_exit_codes():
    code, out, _ = call("classify", tree("comb"))
    assert code == 0 and "parabolic" in out
    code, out, _ = call("classify", tree("dcomb_no_center"))
    assert code == 1 and "CertificateFails" in out
    code, _, err = call("classify", tree("comb"), "nope")
    assert code == 2 and "nope" in err


def test_input_errors_exit_two(tmp_path):
    assert call("analyze", tmp_path / "missing.tree")[0] == 2
    bad = tmp_path / "bad.tree"
    bad.write_text("presentation P {\n  core { vertices v0; edges v0-v9; }\n}\n")
    code, _, err = call("analyze", bad)
    assert code == 2 and "v9" in err and "line 2" in err
    assert call("analyze", tree("comb"), "--name", "Q")[0] == 2
    assert call("truncate", tree("comb"))[0] == 2
    assert call("bogus")[0] == 2


def test_search_lists_directions():
    code, out, _ = call("search", tree("dray"), "--shift-bound", "2")
    assert code == 0 and "|D| = 2" in out


def test_siblings_command():
    code, out, _ = call("siblings", tree("comb"), "--k", "3", "--depth", "8")
    assert code == 0
    assert out.count("distinct at depth") == 6
    assert call("siblings", tree("spider3"))[0] == 1


def test_truncate_dot_is_stable():
    code, out, _ = call("truncate", tree("comb"), "--depth", "1", "--dot")
    assert code == 0
    assert out == (
        "graph COMB {\n"
        '  n0 [label="v0"];\n'
        '  n1 [label="A.0"];\n'
        '  n2 [label="A.0.1"];\n'
        "  n0 -- n1;\n"
        "  n1 -- n2;\n"
        "}"
    )
    assert call("truncate", tree("comb"), "--depth", "1", "--dot")[1] == out


@pytest.mark.parametrize("name, depth", [("comb", 4), ("dcomb", 3), ("growcomb", 4), ("spider3", 2)])
def test_truncate_dot_matches_explicit_graph(name, depth):
    _, out, _ = call("truncate", tree(name), "--depth", depth, "--dot")
    labels = dict(re.findall(r'(n\d+) \[label="([^"]+)"\]', out))
    edges = {frozenset((labels[a], labels[b])) for a, b in re.findall(r"(n\d+) -- (n\d+)", out)}
    p = fixture(name.upper())
    ball = skeleton_ball(explicit(p, depth + 2), p.basepoint, depth)
    assert set(labels.values()) == set(ball)
    assert edges == {frozenset(e) for e in ball.edges()}


def test_truncate_text():
    code, out, _ = call("truncate", tree("dray"), "--depth", "1")
    assert code == 0 and out.splitlines() == ["vertices: 3", "edges: 2", "code: (()())"]


def test_report_text_and_json_agree():
    code, text, _ = call("report", tree("comb"))
    assert code == 0 and "verdict: Infinite (Theorem: parabolic, non-ray)" in text
    code, js, _ = call("report", tree("comb"), "--json")
    data = json.loads(js)
    assert data["verdict"] == "Infinite" and data["summary"] in text
    for name in ("ray", "halfcomb", "growcomb"):
        text = call("report", tree(name))[1]
        data = json.loads(call("report", tree(name), "--json")[1])
        assert f"verdict: {data['summary']}" in text


def test_report_figures(tmp_path):
    code, out, _ = call("report", tree("growcomb"), "--figures", tmp_path, "--forest-depth", "6")
    assert code == 0
    csv = (tmp_path / "GROWCOMB_difference_forest.csv").read_text().splitlines()
    assert csv[0] == "depth,components" and len(csv) == 7
    assert (tmp_path / "GROWCOMB_difference_forest.png").stat().st_size > 0
    data = json.loads(call("report", tree("growcomb"), "--json", "--figures", tmp_path, "--forest-depth", "3")[1])
    assert [r["components"] for r in data["difference_forest"]] == [1, 2, 3]


def test_convergence_command():
    code, out, _ = call(
        "convergence", tree("toothed_ray"), "--arm", "A", "--sequence", "A.{n-1}.1", "--initial", "x0", "--bound", "3"
    )
    assert code == 0 and out.splitlines()[-1].startswith("converges to A: yes")
    assert "r_2 separates 3 members: {0, 1, 2}" in out
    code, _, err = call("convergence", tree("comb"), "--arm", "A", "--sequence", "B.{n}")
    assert code == 2


def test_sequence_template():
    seq = sequence_from_template("A.{n-1}.1", "x0")
    assert seq(0) == core("x0") and seq(3) == deco("A", 2, 1)
    assert sequence_from_template("A.{2n+1}")(2) == ("s", "A", 5)


def test_console_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "sibtrees.cli", "report", str(tree("ray"))], capture_output=True, text=True, timeout=60
    )
    assert res.returncode == 0 and "ExactlyOne" in res.stdout

"""Command-line driver: commands, output formats, exit codes, budgets,
and the query-script runner."""

import json

import pytest

from opealg.cli import main, run_script


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# basic commands, text format


def test_nf_reordering_lemma(capsys):
    code, out, err = run(["--algebra", "virasoro", "nf", ":T d T: - :d T T:"], capsys)
    assert code == 0
    assert out.strip() == "d^(3) T"


def test_nf_zero(capsys):
    code, out, _ = run(["--algebra", "virasoro", "nf", "T_(9) T"], capsys)
    assert code == 0
    assert out.strip() == "0"


def test_rp_command(capsys):
    code, out, _ = run(["--algebra", "virasoro", "rp", "T", "1", "T"], capsys)
    assert code == 0
    assert out.strip() == "2*T"


def test_rp_negative_index(capsys):
    code, out, _ = run(["--algebra", "virasoro", "rp", "T", "-2", "T"], capsys)
    assert code == 0
    assert out.strip() == ":d T T:"


def test_ope_text(capsys):
    code, out, _ = run(["--algebra", "virasoro", "ope", "T", "T"], capsys)
    assert code == 0
    assert out.strip() == (
        "1/2*c*I/(z-w)^4 + 2*T/(z-w)^2 + d T/(z-w) + :T T:(w) + O(z-w)"
    )


def test_wick_right_text(capsys):
    code, out, _ = run(["--algebra", "virasoro", "wick-right", "T", "T", "T"], capsys)
    assert code == 0
    assert out.strip() == (
        "3*c*I/(z-w)^6 + (c + 8)*T/(z-w)^4 + (c + 5)*d T/(z-w)^3"
        " + ((c + 2)*d^(2) T + 4*:T T:)/(z-w)^2"
        " + ((c + 2)*d^(3) T + 6*:d T T:)/(z-w)"
    )


def test_wick_left_equals_direct_ope(capsys):
    code1, out1, _ = run(
        ["--algebra", "su2", "--format", "json", "wick-left", "J^1", "J^2", "J^2"],
        capsys,
    )
    code2, out2, _ = run(
        ["--algebra", "su2", "--format", "json", "ope", "J^1", ":J^2 J^2:"], capsys
    )
    assert code1 == code2 == 0
    # the ope view appends the regular marker; poles must coincide
    assert json.loads(out1)["poles"] == json.loads(out2)["poles"]


def test_check_borcherds_window_flag(capsys):
    code, out, _ = run(
        [
            "--algebra", "virasoro", "check-borcherds", "T", "T", ":T T:",
            "--window=-1..1,-1..1,-1..1",
        ],
        capsys,
    )
    assert code == 0
    assert out.strip() == "borcherds: checked 27 (p,q,r) windows, all hold"


def test_check_algebra(capsys):
    code, out, _ = run(["--algebra", "su2", "check-algebra", "--cutoff", "2"], capsys)
    assert code == 0
    assert "algebra consistent" in out


def test_oracle_verify(capsys):
    code, out, _ = run(
        [
            "--algebra", "virasoro", "oracle-verify", "T_(1) T",
            "--bindings", "c=1/2", "--level", "4",
        ],
        capsys,
    )
    assert code == 0
    assert "agree" in out


def test_sum_expression_from_cli(capsys):
    code, out, _ = run(
        ["--algebra", "su2", "rp", "sum(b){ :J^b J^b: }", "1", "J^3"], capsys
    )
    assert code == 0
    assert out.strip() == "(k + 2)*J^3"


# ---------------------------------------------------------------------------
# json format: stable schemas, byte-for-byte


def test_nf_json_golden(capsys):
    code, out, _ = run(
        ["--algebra", "virasoro", "--format", "json", "nf", ":T d T: - :d T T:"],
        capsys,
    )
    assert code == 0
    want = json.dumps(
        {
            "schema": "opealg.nf/1",
            "terms": [{"coefficient": "1", "monomial": [["T", 3]]}],
        },
        indent=2,
        sort_keys=True,
    )
    assert out.strip() == want


def test_rp_json_golden(capsys):
    code, out, _ = run(
        ["--algebra", "virasoro", "--format", "json", "rp", "T", "1", "T"], capsys
    )
    assert code == 0
    want = json.dumps(
        {
            "schema": "opealg.nf/1",
            "terms": [{"coefficient": "2", "monomial": [["T", 0]]}],
        },
        indent=2,
        sort_keys=True,
    )
    assert out.strip() == want


def test_report_json_golden(capsys):
    code, out, _ = run(
        [
            "--algebra", "virasoro", "--format", "json", "check-borcherds",
            "T", "d T", "T", "--window=0..1,0..1,0..1",
        ],
        capsys,
    )
    assert code == 0
    want = json.dumps(
        {
            "checked": 8,
            "failures": [],
            "kind": "borcherds",
            "ok": True,
            "schema": "opealg.report/1",
        },
        indent=2,
        sort_keys=True,
    )
    assert out.strip() == want


def test_ope_json_has_poles_and_regular(capsys):
    code, out, _ = run(
        ["--algebra", "virasoro", "--format", "json", "ope", "T", "T"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "opealg.ope/1"
    assert [p["order"] for p in doc["poles"]] == [4, 2, 1]
    assert doc["regular"]["left"]["terms"][0]["monomial"] == [["T", 0]]


def test_oracle_dump_json(capsys):
    code, out, _ = run(
        [
            "--algebra", "su2", "--format", "json", "oracle-dump",
            "--bindings", "k=1", "--level", "2",
        ],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "opealg.oracle/1"
    assert [lvl["dim"] for lvl in doc["levels"]] == [1, 3, 9]


# ---------------------------------------------------------------------------
# latex format


def test_ope_latex(capsys):
    code, out, _ = run(
        ["--algebra", "virasoro", "--format", "latex", "ope", "T", "T"], capsys
    )
    assert code == 0
    assert out.strip() == (
        r"\frac{\frac{1}{2} c\, \mathbf{1}}{(z-w)^{4}}"
        r" + \frac{2\, T}{(z-w)^{2}} + \frac{\partial T}{(z-w)}"
        r" + :T\,T:(w) + O(z-w)"
    )


def test_nf_latex_divided_power(capsys):
    code, out, _ = run(
        ["--algebra", "virasoro", "--format", "latex", "nf", ":T d T: - :d T T:"],
        capsys,
    )
    assert code == 0
    assert out.strip() == r"\partial^{(3)} T"


# ---------------------------------------------------------------------------
# exit codes


def test_exit_2_unknown_generator(capsys):
    code, out, err = run(["--algebra", "virasoro", "nf", "T_(1) X"], capsys)
    assert code == 2
    assert "unknown generator 'X' at line 1, col 7" in err


def test_exit_2_bad_algebra(capsys):
    code, _, err = run(["--algebra", "nosuch", "nf", "T"], capsys)
    assert code == 2
    assert "no such algebra" in err


def test_exit_2_usage_error(capsys):
    code, _, err = run(["--algebra", "virasoro", "rp", "T", "x", "T"], capsys)
    assert code == 2


def test_exit_1_failing_check(capsys, tmp_path):
    bad = tmp_path / "bad.alg"
    bad.write_text(
        "param c\nfield T weight 2\n"
        "ope T T { 3: (c/2)*I ; 1: 3*T ; 0: d T }\n"
    )
    code, out, _ = run(["--algebra", str(bad), "check-algebra", "--cutoff", "4"], capsys)
    assert code == 1
    assert "INCONSISTENT" in out


def test_oracle_verify_missing_bindings(capsys):
    code, _, err = run(
        ["--algebra", "virasoro", "oracle-verify", "T_(1) T", "--level", "3"], capsys
    )
    assert code == 2
    assert "c" in err


def test_exit_3_budget_flag(capsys):
    code, _, err = run(
        [
            "--algebra", "virasoro", "--step-budget", "10",
            "rp", ":T T:", "1", ":T T:",
        ],
        capsys,
    )
    assert code == 3
    assert "budget" in err


def test_exit_3_budget_env(capsys, monkeypatch):
    monkeypatch.setenv("OPEALG_STEP_BUDGET", "10")
    code, _, err = run(
        ["--algebra", "virasoro", "rp", ":T T:", "1", ":T T:"], capsys
    )
    assert code == 3


def test_flag_overrides_env_budget(capsys, monkeypatch):
    monkeypatch.setenv("OPEALG_STEP_BUDGET", "10")
    code, out, _ = run(
        [
            "--algebra", "virasoro", "--step-budget", "100000",
            "rp", ":T T:", "1", ":T T:",
        ],
        capsys,
    )
    assert code == 0
    assert out.strip() != ""


def test_algebra_file_path(capsys, tmp_path):
    src = tmp_path / "boson.alg"
    src.write_text("field a weight 1\nope a a { 1: I }\n")
    code, out, _ = run(["--algebra", str(src), "rp", "a", "1", "a"], capsys)
    assert code == 0
    assert out.strip() == "I"


# ---------------------------------------------------------------------------
# script runner


def test_run_script_text(tmp_path, capsys):
    script = tmp_path / "queries.txt"
    script.write_text(
        "algebra virasoro\n"
        "let S = :T T:\n"
        "nf S\n"
        "rp T ; 1 ; S\n"
    )
    code, out, _ = run(["run", str(script)], capsys)
    assert code == 0
    assert "> nf S" in out
    assert ":T T:" in out
    assert "4*:T T:" in out


def test_run_script_json(tmp_path, capsys):
    script = tmp_path / "queries.txt"
    script.write_text("algebra virasoro\nnf d T\n")
    code, out, _ = run(["--format", "json", "run", str(script)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc[0]["command"] == "nf d T"
    assert doc[0]["result"]["terms"][0]["monomial"] == [["T", 1]]


def test_run_script_error_cites_line():
    from opealg import ParseError

    with pytest.raises(ParseError, match="script line 2"):
        run_script("algebra virasoro\nnf T_(1) X\n", "text")


def test_run_script_rejects_shadowing_let():
    from opealg import ParseError

    with pytest.raises(ParseError, match="script line 2"):
        run_script("algebra virasoro\nlet T = d T\n", "text")


def test_run_script_multiple_checks(capsys):
    script = "algebra virasoro\nnf T\ncheck-borcherds T ; T ; T ; 0..0,0..0,0..0\n"
    code, out = run_script(script, "text")
    assert code == 0
    assert out.count(">") == 2


def test_run_script_requires_algebra_first():
    from opealg import ParseError

    with pytest.raises(ParseError, match="no algebra"):
        run_script("nf T\n", "text")


def test_run_script_via_main_error_exit(tmp_path, capsys):
    script = tmp_path / "bad.txt"
    script.write_text("algebra virasoro\nnf T_(1) X\n")
    code, _, err = run(["run", str(script)], capsys)
    assert code == 2
    assert "script line 2" in err

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from artifact import CORPUS
from artifact.cli import main


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def src(name):
    return CORPUS / f"{name}.rml"


def test_analyze_text(capsys):
    code, out, _ = cli(capsys, "analyze", src("filter_succ"))
    assert code == 0
    assert out == "filter_succ : L^8(int) --1/0--> L^0(int)\nbound: 8*n + 1\n"


def test_analyze_lower_and_metric(capsys):
    assert cli(capsys, "analyze", src("fs_twice"), "--mode", "lower")[1].splitlines()[1] == "bound: 6*n + 2"
    assert cli(capsys, "analyze", src("rsa"), "--metric", "mults")[1].splitlines()[1] == "bound: 2*n"


def test_analyze_constant_json(capsys):
    code, out, _ = cli(capsys, "analyze", src("p_compare"), "--mode", "constant", "--const-wrt", "h,l", "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["arg"] == [["5/1"], ["0/1"]] and obj["q"] == "1/1" and obj["q_out"] == "0/1"
    assert obj["signature"] == "(L^5(int), L^0(int)) --1/0--> bool" and obj["const_wrt"] == ["h", "l"]


def test_analyze_rejection_exits_one(capsys):
    code, out, _ = cli(capsys, "analyze", src("p_compare_unpadded"), "--mode", "constant", "--const-wrt", "h")
    assert code == 1 and "infeasible" in out


def test_analyze_extras(capsys):
    code, out, _ = cli(capsys, "analyze", src("filter_succ"), "--show-constraints", "--trace")
    assert code == 0 and ">=" in out and "matchlist" in out


def test_eval(capsys):
    code, out, _ = cli(capsys, "eval", src("p_compare_unpadded"), "[1;2;3]", "[0;1;2]", "--json")
    obj = json.loads(out)
    assert code == 0 and obj["net"] == "16/1" and obj["value"] == "false"
    code, out, _ = cli(capsys, "eval", src("p_compare_unpadded"), "[1;2;1]", "[0;1]")
    assert out.splitlines()[1] == "net: 11"


@pytest.mark.parametrize(
    "argv, code_name",
    [
        (["eval", src("rev"), "[1;true]"], "usage_error"),
        (["eval", src("rev")], "usage_error"),
        (["analyze", CORPUS / "missing.rml"], "usage_error"),
        (["analyze", src("rev"), "--entry", "nope"], "usage_error"),
        (["quantify", src("rev"), "--domain", "bool"], "usage_error"),
        (["analyze", src("rev"), "--const-wrt", "l"], "usage_error"),
    ],
)
def test_input_errors_exit_two_with_json(capsys, argv, code_name):
    code, out, err = cli(capsys, *argv, "--json")
    assert code == 2 and err.startswith("error: ")
    assert json.loads(out)["error"]["code"] == code_name


def test_front_end_errors(capsys, tmp_path):
    bad = tmp_path / "bad.rml"
    bad.write_text("let f(x) = x +")
    code, out, _ = cli(capsys, "analyze", bad, "--json")
    assert code == 2 and json.loads(out)["error"]["code"] == "parse_error"
    bad.write_text("let f(x) = if x then 1 else true")
    code, out, _ = cli(capsys, "analyze", bad, "--json")
    assert code == 2 and json.loads(out)["error"]["code"] == "type_error"


def test_runtime_error(capsys, tmp_path):
    prog = tmp_path / "div.rml"
    prog.write_text("let f(a, b) = a div b")
    code, out, _ = cli(capsys, "eval", prog, "1", "0", "--json")
    assert code == 2 and json.loads(out)["error"]["code"] == "runtime_error"


def test_argparse_errors_exit_two(capsys):
    assert main(["analyze", str(src("rev")), "--metric", "time"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_check_security(capsys):
    code, out, _ = cli(capsys, "check-security", src("cond_rev"), "--metric", "calls", "--trace",
                       "--oracle", "--max-len", "2")
    assert code == 0
    assert "cond_rev : const" in out and "  L-If at if b1 then" in out and "violated" not in out
    code, out, _ = cli(capsys, "check-security", src("f1"), "--metric", "calls", "--json")
    obj = json.loads(out)
    assert code == 1 and {f["function"]: f["verdict"] for f in obj["functions"]}["f1"] == "reject"
    code, out, _ = cli(capsys, "check-security", src("compare"), "--metric", "steps")
    assert code == 0 and out.startswith("compare : plain")


def test_check_security_signature_errors(capsys, tmp_path):
    code, _, err = cli(capsys, "check-security", src("filter_succ"))
    assert code == 2 and "no signature file" in err
    sigs = tmp_path / "x.sig"
    sigs.write_text("rev : (int list @ q @ l) -l-> int list @ l @ l")
    code, out, _ = cli(capsys, "check-security", src("rev"), "--sigs", sigs, "--json")
    assert code == 2 and json.loads(out)["error"]["code"] == "signature_error"


def test_quantify(capsys):
    code, out, _ = cli(capsys, "quantify", src("compare_tick"), "--sizes", "h=3,l=3")
    assert code == 0
    assert out.splitlines() == ["function: compare_tick", "observations: 5, 10, 15, 16", "exact_Q: 3",
                                "bound_Q: 5*n = 15", "entropy_bits: 4.0000"]
    code, out, _ = cli(capsys, "quantify", src("p_compare"), "--sizes", "h=2,l=2", "--json")
    obj = json.loads(out)
    assert obj["observations"] == ["11/1"] and obj["exact_Q"] == "0/1" and obj["entropy_bits"] == 0.0
    code, _, err = cli(capsys, "quantify", src("compare_tick"), "--sizes", "h=3")
    assert code == 2 and "no length for l" in err


def test_repair(capsys):
    code, out, _ = cli(capsys, "repair", src("c_compare"), "--verify", "--max-len", "2")
    assert code == 0
    assert "consume #1 : L^5(int) --5/0--> unit (line 6)" in out
    assert "consume #2 : L^5(int) --1/0--> unit (line 9)" in out
    assert "c_compare : (L^5(int), L^0(int)) --1/0--> bool" in out and "verify: ok on 49 runs" in out
    code, out, _ = cli(capsys, "repair", src("compare_tick"), "--json")
    assert code == 1 and json.loads(out)["status"] == "infeasible"
    code, out, _ = cli(capsys, "repair", src("compare_tick"), "--auto", "--verify", "--max-len", "2", "--json")
    obj = json.loads(out)
    assert code == 0 and obj["verify"]["ok"] and obj["signature"] == "(L^5(int), L^0(int)) --1/0--> bool"


@pytest.mark.parametrize("command", ["analyze", "quantify"])
def test_plot(capsys, tmp_path, command):
    target = tmp_path / f"{command}.png"
    extra = ["--max-len", "3"] if command == "analyze" else ["--sizes", "h=0..3,l=2"]
    code, out, _ = cli(capsys, command, src("compare_tick"), "--plot", target, *extra, "--json")
    assert code == 0 and json.loads(out)["plot"] == str(target)
    assert target.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_output_is_byte_identical_across_processes():
    argv = [sys.executable, "-m", "artifact.cli", "analyze", str(src("cond_rev")), "--metric", "calls",
            "--show-constraints", "--json"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True).stdout
    assert first == second and b'"bound": "n + x + 4"' in first

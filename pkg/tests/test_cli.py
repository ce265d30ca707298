import json
from fractions import Fraction as F
from pathlib import Path

import pytest

from lawvere import textio as tx
from lawvere.cli import main
from lawvere.suites import SuiteInputError, run_suite

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fx(name):
    return str(FIXTURES / name)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def jsonl(out):
    return [json.loads(line) for line in out.splitlines()]


def test_kern_laws_on_bundled_fixture_pass(capsys):
    code, out, _ = run(capsys, "kern", "laws", fx("markov.kern"), "--trials", "50", "--format", "jsonl")
    head, *laws = jsonl(out)
    assert code == 0 and head["status"] == "pass"
    assert {r["law"] for r in laws} >= {"dirac identity", "associativity", "lift factorisation", "support condition"}


def test_tampered_fixture_fails_with_replayable_witness(capsys):
    code, out, _ = run(capsys, "kern", "laws", fx("tampered.kern"), "--trials", "0", "--format", "jsonl")
    assert code == 1
    bad = [r for r in jsonl(out)[1:] if r["status"] == "fail"]
    assert [r["law"] for r in bad] == ["support condition"]
    witness = bad[0]["witnesses"][0]["kernels"]
    again = run_suite("kern-laws", [("witness", tx.parse(witness))], trials=0)
    assert again.exit_code == 1 and again.laws[0].law == "support condition"


def test_same_seed_same_bytes(capsys):
    argv = ("kern", "laws", fx("markov.kern"), "--trials", "30", "--format", "jsonl", "--seed", "5")
    first, second = run(capsys, *argv)[1], run(capsys, *argv)[1]
    assert first == second


def test_env_overrides_seed_and_bound(capsys, monkeypatch):
    monkeypatch.setenv("LAWVERE_SEED", "17")
    monkeypatch.setenv("LAWVERE_BOUND", "5")
    code, out, _ = run(capsys, "kern", "laws", "--trials", "5", "--format", "jsonl")
    head = jsonl(out)[0]
    assert code == 0 and head["seed"] == 17 and head["bounds"]["bound"] == 5
    code, out, _ = run(capsys, "kern", "laws", "--trials", "5", "--format", "jsonl", "--seed", "3")
    assert jsonl(out)[0]["seed"] == 3


def test_bad_env_value_is_an_input_error(capsys, monkeypatch):
    monkeypatch.setenv("LAWVERE_SEED", "soon")
    assert run(capsys, "kern", "laws", "--trials", "1")[0] == 3


def test_missing_file_and_parse_error_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "kern", "laws", str(tmp_path / "nope.kern"))
    assert code == 3 and "nope.kern" in err
    broken = tmp_path / "broken.kern"
    broken.write_text("space X = {x}\nkernel k : X -> Z over id\n")
    code, _, err = run(capsys, "kern", "laws", str(broken))
    assert code == 3 and "line 2" in err


def test_wrong_kind_of_file(capsys):
    assert run(capsys, "fib", "alpha-beta", fx("markov.kern"))[0] == 3


def test_not_converged_exit_2(capsys, tmp_path):
    t = tmp_path / "f2n2.theory"
    t.write_text("builtin f2 2\n")
    code, _, err = run(capsys, "theory", "free", str(t), "--generators", "3", "--bound", "2")
    assert code == 2 and "builtin f2 2" in err


def test_theory_verbs(capsys):
    code, out, _ = run(capsys, "theory", "free", fx("f2.theory"), "--generators", "3", "--format", "jsonl")
    assert code == 0 and jsonl(out)[0]["size"] == 8
    assert run(capsys, "theory", "validate", fx("f2.theory"), fx("pointed1.theory"))[0] == 0
    code, out, _ = run(capsys, "theory", "tensor-models", fx("f2.theory"), "--left", "1", "--right", "2",
                       "--format", "jsonl")
    rec = jsonl(out)[0]
    assert code == 0 and rec["size"] == 4 and rec["agree"]


def test_adjunction_suite_on_degenerate(capsys):
    assert run(capsys, "theory", "adjunction-check", fx("degenerate.theory"))[0] == 0


def test_fib_alpha_beta_on_degenerate_fixture(capsys):
    code, out, _ = run(capsys, "fib", "alpha-beta", fx("degenerate.theory"), "--format", "jsonl")
    head, *laws = jsonl(out)
    assert code == 0 and head["status"] == "pass" and len(laws) == 16


def test_fib_verbs_on_files(capsys):
    assert run(capsys, "fib", "beck-chevalley", fx("square.fib"))[0] == 0
    assert run(capsys, "fib", "projection", fx("projection.fib"), "--field", "rat")[0] == 0
    assert run(capsys, "fib", "projection", fx("projection.fib"), "--field", "4")[0] == 3


def test_fib_canonical_sweeps(capsys):
    code, out, _ = run(capsys, "fib", "beck-chevalley", "--size", "2", "--format", "jsonl")
    assert code == 0 and jsonl(out)[1]["checked"] > 0
    assert run(capsys, "fib", "projection", "--size", "2", "--dim", "2")[0] == 0


def test_kern_operations_emit_parseable_files(capsys):
    code, out, _ = run(capsys, "kern", "compose", fx("markov.kern"), "step", "obs")
    assert code == 0
    k = tx.parse(out).kernel("comp")
    assert (k(0, 0), k(1, 1), k(2, 0)) == (F(3, 4), F(7, 8), F(1, 12))
    code, out, _ = run(capsys, "kern", "lift", fx("markov.kern"), "obs")
    lifted = tx.parse(out)
    assert code == 0 and set(lifted.kernels) == {"lift", "proj"}
    code, out, _ = run(capsys, "kern", "tensor", fx("markov.kern"), "step", "signed")
    assert code == 0 and tx.parse(out).kernel("tens").norm == F(5, 2)
    assert run(capsys, "kern", "compose", fx("markov.kern"), "step", "nope")[0] == 3


def test_day_verbs(capsys):
    code, out, _ = run(capsys, "day", "tensor", fx("z2-rep.psh"), fx("z2-const.psh"), "--monoidal", "z2-monoid")
    assert code == 0 and tx.parse(out).sizes == [2]
    code, out, _ = run(capsys, "day", "hom", fx("z2-rep.psh"), fx("z2-const.psh"), "--monoidal", "z2-monoid")
    assert code == 0 and tx.parse(out).sizes == [2]
    assert run(capsys, "day", "laws", "--monoidal", "z2-monoid", "--monoidal", "chain3-min")[0] == 0
    assert run(capsys, "day", "tensor", fx("z2-rep.psh"), fx("z2-rep.psh"), "--monoidal", "chain3-min")[0] == 3
    assert run(capsys, "day", "laws", "--monoidal", "nope")[0] == 3


def test_report_file_matches_stdout_jsonl(capsys, tmp_path):
    path = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "kern", "laws", "--trials", "5", "--format", "jsonl", "--report", str(path))
    assert path.read_text() == out


def test_text_report_mentions_timing(capsys):
    _, out, _ = run(capsys, "kern", "laws", "--trials", "5")
    assert out.rstrip().endswith("s") and "PASS" in out


def test_unknown_suite():
    with pytest.raises(SuiteInputError, match="unknown suite"):
        run_suite("nope", [])


def test_fib_failure_witness_is_replayable():
    # Feed the suite a bundle file and check the witness builder writes a file the suite accepts.
    from lawvere.fibered import LinearBundle, SetMap
    from lawvere.suites import square_witness
    text = square_witness(SetMap((0, 0), 1), SetMap((0,), 1), LinearBundle((2,)))
    report = run_suite("fib-beck-chevalley", [("w", tx.parse(text))])
    assert report.exit_code == 0 and report.laws[0].instance.startswith("w:X,Y,V")

"""Command-line interface: documents, exit codes, and the oracle protocol."""

import io
import json
import subprocess
import sys

import pytest

from lossprobe.cli import main
from lossprobe.core import Labeling
from lossprobe.exact import binary_decimal_response


def run_cli(capsys, *args, stdin_text=None):
    if stdin_text is not None:
        old = sys.stdin
        sys.stdin = io.StringIO(stdin_text)
        try:
            code = main(list(args))
        finally:
            sys.stdin = old
    else:
        code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_proc(*args, stdin_text=""):
    proc = subprocess.run(
        [sys.executable, "-m", "lossprobe", *args],
        input=stdin_text,
        capture_output=True,
        text=True,
        timeout=120,
    )
    return proc.returncode, proc.stdout, proc.stderr


# build


def test_build_twin_document_bytes(capsys):
    code, out, _ = run_cli(capsys, "build", "twin", "--n", "2")
    assert code == 0
    assert out == '{"entries":["5/7","11/13"],"kind":"twin","n":2}\n'


def test_build_binary_document(capsys):
    code, out, _ = run_cli(capsys, "build", "binary", "--n", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc == {
        "kind": "binary",
        "n": 4,
        "entries": ["2/3", "4/5", "16/17", "256/257"],
    }


def test_build_multiclass_document(capsys):
    code, out, _ = run_cli(capsys, "build", "multiclass", "--n", "2", "--k", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["K"] == 3
    assert doc["entries"][0] == ["1/7", "2/7", "4/7"]
    assert doc["entries"][1] == ["1/13", "3/13", "9/13"]


def test_build_usage_errors(capsys):
    with pytest.raises(SystemExit) as err:
        main(["build", "twin", "--n", "0"])
    assert err.value.code == 2
    capsys.readouterr()
    code, _, stderr = run_cli(capsys, "build", "multiclass", "--n", "2")
    assert code == 1
    assert stderr.startswith("error:")
    # binary entries past the wire cap point at scoring by name
    code, _, stderr = run_cli(capsys, "build", "binary", "--n", "17")
    assert code == 1
    assert '"kind":"binary"' in stderr


def test_build_to_file(tmp_path, capsys):
    target = tmp_path / "vec.json"
    code, out, _ = run_cli(capsys, "build", "twin", "--n", "3", "--out", str(target))
    assert code == 0
    doc = json.loads(target.read_text())
    assert doc["entries"] == ["5/7", "11/13", "17/19"]


# score


def test_score_exact_from_stdin(capsys):
    doc = '{"entries":["5/7","11/13","17/19"],"kind":"twin","n":3}'
    code, out, _ = run_cli(
        capsys, "score", "--vector", "-", "--labels", "101", stdin_text=doc
    )
    assert code == 0
    assert out == '{"escore":"1729/170","n":3}\n'


def test_score_decimal(capsys):
    doc = '{"entries":["1/5","2/5","3/5"]}'
    code, out, _ = run_cli(
        capsys,
        "score", "--vector", "-", "--labels", "001",
        "--mode", "decimal", "--phi", "2",
        stdin_text=doc,
    )
    assert code == 0
    assert out == '{"auc":"1.0e0","ll":"4.1e-1","phi":2}\n'


def test_score_binary_by_name_decimal(capsys):
    doc = '{"kind":"binary","n":3}'
    code, out, _ = run_cli(
        capsys,
        "score", "--vector", "-", "--labels", "001",
        "--mode", "decimal", "--phi", "2",
        stdin_text=doc,
    )
    assert code == 0
    assert json.loads(out) == {"ll": "9.2e-1", "auc": "1.0e0", "phi": 2}


def test_score_binary_by_name_exact_capped(capsys):
    doc = '{"kind":"binary","n":20}'
    code, _, stderr = run_cli(
        capsys, "score", "--vector", "-", "--labels", "0" * 20, stdin_text=doc
    )
    assert code == 1
    assert "decimal" in stderr


def test_score_multiclass(capsys):
    doc = json.dumps(
        {"kind": "multiclass", "n": 2, "K": 3,
         "entries": [["1/7", "2/7", "4/7"], ["1/13", "3/13", "9/13"]]}
    )
    code, out, _ = run_cli(
        capsys, "score", "--vector", "-", "--labels", "2,3", stdin_text=doc
    )
    assert code == 0
    assert json.loads(out) == {"escore": "91/18", "n": 2}


def test_score_length_mismatch_fails(capsys):
    doc = '{"entries":["5/7","11/13"],"kind":"twin","n":2}'
    code, _, stderr = run_cli(
        capsys, "score", "--vector", "-", "--labels", "101", stdin_text=doc
    )
    assert code == 1
    assert "error:" in stderr


def test_score_flag_combos_rejected(capsys):
    for argv in (
        ["score", "--vector", "-", "--labels", "1", "--mode", "decimal"],
        ["score", "--vector", "-", "--labels", "1", "--phi", "2"],
    ):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 2
        capsys.readouterr()


# decode


def test_decode_twin_bare_rational(capsys):
    code, out, _ = run_cli(capsys, "decode", "--kind", "twin", "--score", "1729/170")
    assert code == 0
    assert out == "101\n"


def test_decode_twin_checks_declared_n(capsys):
    code, _, stderr = run_cli(
        capsys, "decode", "--kind", "twin", "--score", "1729/170", "--n", "4"
    )
    assert code == 1
    assert "error:" in stderr


def test_decode_binary(capsys):
    code, out, _ = run_cli(
        capsys, "decode", "--kind", "binary", "--score", "255/32", "--n", "3"
    )
    assert code == 0
    assert out == "101\n"


def test_decode_binary_needs_n(capsys):
    code, _, stderr = run_cli(capsys, "decode", "--kind", "binary", "--score", "255/32")
    assert code == 1
    assert "needs n" in stderr


def test_decode_multiclass(capsys):
    code, out, _ = run_cli(
        capsys,
        "decode", "--kind", "multiclass", "--score", "91/18", "--n", "2", "--k", "3",
    )
    assert code == 0
    assert out == "2,3\n"


def test_decode_from_document_file(tmp_path, capsys):
    doc = tmp_path / "score.json"
    doc.write_text('{"escore":"1729/170","n":3}\n')
    code, out, _ = run_cli(capsys, "decode", "--kind", "twin", "--score", str(doc))
    assert code == 0
    assert out == "101\n"


def test_decode_from_stdin_document(capsys):
    code, out, _ = run_cli(
        capsys,
        "decode", "--kind", "twin", "--score", "-",
        stdin_text='{"escore":"91/10","n":2}',
    )
    assert code == 0
    assert out == "10\n"


def test_decode_document_n_conflict(capsys):
    code, _, stderr = run_cli(
        capsys,
        "decode", "--kind", "twin", "--score", "-", "--n", "4",
        stdin_text='{"escore":"1729/170","n":3}',
    )
    assert code == 1
    assert "disagrees" in stderr


def test_decode_tampered_score_fails(capsys):
    code, _, stderr = run_cli(capsys, "decode", "--kind", "twin", "--score", "1729/85")
    assert code == 1
    assert stderr.startswith("error:")


def test_full_roundtrip_build_score_decode(tmp_path, capsys):
    vec = tmp_path / "vec.json"
    run_cli(capsys, "build", "twin", "--n", "7", "--out", str(vec))
    code, out, _ = run_cli(
        capsys, "score", "--vector", str(vec), "--labels", "1011001"
    )
    assert code == 0
    escore = json.loads(out)["escore"]
    code, out, _ = run_cli(capsys, "decode", "--kind", "twin", "--score", escore)
    assert code == 0
    assert out == "1011001\n"


# the oracle protocol, over a real pipe


def _serve(tmp_path, labels, mode, phi=None, session=""):
    labels_file = tmp_path / "hidden.bits"
    labels_file.write_text(labels + "\n")
    args = ["oracle-serve", "--labels", str(labels_file), "--mode", mode]
    if phi is not None:
        args += ["--phi", str(phi)]
    return run_proc(*args, stdin_text=session)


def test_protocol_exact_session(tmp_path):
    session = (
        'SCORE {"entries":["5/7","11/13"],"kind":"twin","n":2}\n'
        '\n'
        'SCORE {"entries":["5/7"],"kind":"twin","n":1}\n'
        'FOO\n'
        'QUIT\n'
    )
    code, out, _ = _serve(tmp_path, "10", "exact", session=session)
    assert code == 0
    assert out == "ESCORE 91/10\nERR length\nERR unknown command\n"


def test_protocol_decimal_session(tmp_path):
    session = (
        'SCORE {"entries":["1/5","2/5","3/5"]}\n'
        'SCORE {"kind":"binary","n":3}\n'
        'QUIT\n'
    )
    code, out, _ = _serve(tmp_path, "001", "decimal", phi=2, session=session)
    assert code == 0
    assert out == "LL 4.1e-1 AUC 1.0e0\nLL 9.2e-1 AUC 1.0e0\n"


def test_protocol_subset_query(tmp_path):
    # indices (2, 1) of hidden 001 select bits (1, 0)
    ll, auc_score = binary_decimal_response(Labeling((1, 0)), 2)
    session = 'SCORE {"indices":[2,1],"kind":"binary","n":2}\nQUIT\n'
    code, out, _ = _serve(tmp_path, "001", "decimal", phi=2, session=session)
    assert code == 0
    assert out == f"LL {ll.wire()} AUC {auc_score.wire()}\n"


def test_protocol_eof_ends_cleanly(tmp_path):
    code, out, _ = _serve(tmp_path, "10", "exact", session="")
    assert code == 0
    assert out == ""


def test_protocol_byte_determinism(tmp_path):
    session = (
        'SCORE {"entries":["5/7","11/13"],"kind":"twin","n":2}\n'
        'SCORE {"entries":["2/3","4/5"],"kind":"binary","n":2}\n'
        'QUIT\n'
    )
    runs = {_serve(tmp_path, "10", "exact", session=session) for _ in range(2)}
    assert len(runs) == 1  # identical exit codes, stdout, stderr


def test_protocol_error_reports_reason(tmp_path):
    session = 'SCORE {"entries":["5/3","11/13"],"kind":"twin","n":2}\nQUIT\n'
    code, out, _ = _serve(tmp_path, "10", "exact", session=session)
    assert code == 0
    assert out.startswith("ERR ")
    assert "interval" in out


# attack demo


def _last_json(out):
    return json.loads(out.strip().splitlines()[-1])


def test_attack_demo_twin(capsys):
    code, out, _ = run_cli(capsys, "attack-demo", "--n", "50", "--mode", "twin")
    assert code == 0
    doc = _last_json(out)
    assert doc["queries_used"] == 1
    assert doc["accuracy"] == "1/1"
    assert len(doc["recovered"]) == 50
    assert "queries used: 1" in out
    assert "accuracy: 1 (50/50)" in out


def test_attack_demo_deterministic_under_seed(capsys):
    first = run_cli(capsys, "attack-demo", "--n", "21", "--mode", "binary", "--seed", "9")
    second = run_cli(capsys, "attack-demo", "--n", "21", "--mode", "binary", "--seed", "9")
    assert first == second
    third = run_cli(capsys, "attack-demo", "--n", "21", "--mode", "binary", "--seed", "10")
    assert _last_json(third[1])["recovered"] != _last_json(first[1])["recovered"]


def test_attack_demo_fixed_mode(capsys):
    code, out, _ = run_cli(
        capsys, "attack-demo", "--n", "13", "--mode", "fixed", "--phi", "2"
    )
    assert code == 0
    doc = _last_json(out)
    assert doc["queries_used"] == 2
    assert doc["accuracy"] == "1/1"
    assert doc["phi"] == 2
    assert doc["method"] == "tuple-table"
    assert doc["batch_size"] == 8


def test_attack_demo_transports_agree(capsys):
    args = ("--n", "12", "--mode", "twin", "--seed", "3")
    _, inproc_out, _ = run_cli(capsys, "attack-demo", *args)
    code, sub_out, _ = run_cli(capsys, "attack-demo", *args, "--transport", "subprocess")
    assert code == 0
    a, b = _last_json(inproc_out), _last_json(sub_out)
    assert a.pop("transport") == "inproc"
    assert b.pop("transport") == "subprocess"
    assert a == b


def test_attack_demo_phi_needs_fixed_mode(capsys):
    with pytest.raises(SystemExit) as err:
        main(["attack-demo", "--n", "5", "--mode", "twin", "--phi", "2"])
    assert err.value.code == 2
    capsys.readouterr()


# plan


def test_plan_sixty_two_digits(capsys):
    code, out, _ = run_cli(capsys, "plan", "--n", "60", "--phi", "2")
    assert code == 0
    doc = _last_json(out)
    assert doc["planned_queries"] == 8
    assert doc["batch_size"] == 8
    assert doc["method"] == "tuple-table"
    assert doc["max_unique_batch"] == 13
    assert doc["query_bound"] == 5
    assert doc["batches"][-1] == {"indices": [56, 57, 58, 59], "fill": [52, 53, 54, 55]}


def test_plan_from_delta(capsys):
    code, out, _ = run_cli(capsys, "plan", "--n", "5", "--delta", "0.002")
    assert code == 0
    doc = _last_json(out)
    assert doc["phi"] == 3
    assert doc["delta"] == "0.002"
    assert doc["planned_queries"] == 1


def test_plan_wide_delta_floors_at_one_digit(capsys):
    code, out, _ = run_cli(capsys, "plan", "--n", "5", "--delta", "2")
    assert code == 0
    assert _last_json(out)["phi"] == 1


def test_plan_usage_errors(capsys):
    for argv in (
        ["plan", "--n", "5"],
        ["plan", "--n", "5", "--phi", "2", "--delta", "0.1"],
    ):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 2
        capsys.readouterr()


def test_plan_rejects_garbage_delta(capsys):
    code, _, stderr = run_cli(capsys, "plan", "--n", "5", "--delta", "abc")
    assert code == 1
    assert stderr.startswith("error:")


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--help"])
    assert err.value.code == 0
    out = capsys.readouterr().out
    assert "lossprobe" in out

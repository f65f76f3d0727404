import json
import subprocess
import sys
from math import comb

import numpy as np
import pytest

from detourlab import cli, hodge


def run(argv, capsys):
    status = cli.main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def test_symbolic_gives_four_passes(capsys):
    status, out, _ = run(["verify", "symbolic", "--n", "6", "--k", "1", "--pmax", "4"], capsys)
    report = json.loads(out)
    assert status == 0
    assert [c["params"]["p"] for c in report["checks"]] == [1, 2, 3, 4]
    assert all(c["verdict"] == "pass" and c["id"] == "formula" for c in report["checks"])
    assert report["failures"] == [] and report["inconclusive"] == []


def test_torus_file_then_verify(tmp_path, capsys):
    path = str(tmp_path / "t4.cx")
    assert cli.main(["gen", "torus", "--n", "4", "--M", "1", "--out", path]) == 0
    status, out, _ = run(["verify", "complex", "--in", path, "--J", "0", "--k", "1"], capsys)
    report = json.loads(out)
    assert status == 0
    by_id = {c["id"]: c for c in report["checks"]}
    assert by_id["ricciflat"]["verdict"] == "pass"
    assert by_id["betti"]["dims"]["betti"] == [comb(4, k) for k in range(5)]


def test_suite_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "suite", "--seed", "42", "--out", str(a)]) == 0
    assert cli.main(["verify", "suite", "--seed", "42", "--out", str(b)]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    for r in (ra, rb):
        r.pop("timestamp")
        r["config"].pop("out")
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)


def test_checks_are_sorted(capsys):
    _, out, _ = run(["verify", "symbolic", "--n", "8"], capsys)
    checks = json.loads(out)["checks"]
    keys = [(c["id"], json.dumps(c["params"], sort_keys=True)) for c in checks]
    assert keys == sorted(keys)


def test_text_format(capsys):
    status, out, _ = run(["verify", "symbolic", "--n", "4", "--format", "text"], capsys)
    assert status == 0
    assert out.splitlines()[-1].startswith("3 checks, 0 failed")


def test_explain(capsys):
    status, out, _ = run(["explain", "nullL"], capsys)
    assert status == 0 and "N(L_k)" in out
    status, out, _ = run(["explain", "qdes"], capsys)
    assert "s^k = prod_{i=1}^p 2i(n-2k-i+1)/n" in out


def test_explain_unknown(capsys):
    status, _, err = run(["explain", "bogus"], capsys)
    assert status == cli.UNKNOWN_CHECK
    assert json.loads(err)["error"] == "unknown-check"


def test_unreadable_input(capsys, tmp_path):
    status, _, err = run(["verify", "complex", "--in", str(tmp_path / "missing.cx")], capsys)
    assert status == cli.BAD_INPUT
    assert json.loads(err)["error"] == "unreadable-input"
    bad = tmp_path / "bad.cx"
    bad.write_text("{not json")
    status, _, err = run(["verify", "complex", "--in", str(bad)], capsys)
    assert json.loads(err)["error"] == "malformed-input"


def test_infeasible_generator(capsys):
    status, _, err = run(["gen", "torus", "--n", "8", "--M", "2"], capsys)
    assert status == cli.BAD_BUDGET
    assert json.loads(err)["error"] == "infeasible-generator"


def test_generated_file_matches_library(tmp_path):
    path = tmp_path / "r.cx"
    assert cli.main(["gen", "random", "--n", "4", "--seed", "7", "--out", str(path)]) == 0
    back, direct = hodge.load(path), hodge.build_random(4, seed=7)
    for j in range(4):
        assert np.array_equal(back.d(j), direct.d(j))


def test_prescribed_spectrum_flag(tmp_path, capsys):
    path = tmp_path / "p.cx"
    argv = ["gen", "prescribed", "--n", "4", "--k", "1", "--spectrum", "2,1.5",
            "--dims", "1,0,0,0,1", "--out", str(path)]
    assert cli.main(argv) == 0
    cx = hodge.load(path)
    np.testing.assert_allclose(np.sort(np.linalg.svd(cx.d(1), compute_uv=False))[-2:], [1.5, 2.0])
    status, out, _ = run(["verify", "complex", "--in", str(path), "--J", "-2"], capsys)
    assert status == 0, json.loads(out)["failures"]


def test_exit_status_follows_failures(monkeypatch):
    def failing(*args, **kwargs):
        return [cli._record("formula", {"n": 6}, "fail")]

    monkeypatch.setattr(cli, "symbolic_checks", failing)
    report, status = cli.run(cli.SuiteConfig(mode="symbolic"))
    assert status == cli.CHECK_FAILED and len(report["failures"]) == 1

    monkeypatch.setattr(cli, "symbolic_checks",
                        lambda *a, **k: [cli._record("formula", {"n": 6}, "inconclusive")])
    report, status = cli.run(cli.SuiteConfig(mode="symbolic"))
    assert status == cli.CHECK_FAILED and report["inconclusive"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "detourlab", "explain", "k0"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("k0:")


@pytest.mark.parametrize("bad", [["--J", "x"], ["--tol", "tiny"]])
def test_bad_flags(bad, capsys, tmp_path):
    path = tmp_path / "t.cx"
    hodge.save(hodge.build_random(4, seed=0), path)
    status, _, err = run(["verify", "complex", "--in", str(path), *bad], capsys)
    assert status == cli.BAD_ARGS
    assert "error" in json.loads(err)


def test_rational_negative_J(tmp_path, capsys):
    path = tmp_path / "r.cx"
    hodge.save(hodge.build_random(4, seed=5), path)
    status, out, _ = run(["verify", "complex", "--in", str(path), "--J", "-3/2", "--k", "1"], capsys)
    assert status == 0
    assert {c["params"]["J"] for c in json.loads(out)["checks"] if "J" in c["params"]} == {"-1.5"}

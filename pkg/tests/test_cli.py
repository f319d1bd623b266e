import csv
import io
import json

import pytest

from torcode import verify
from torcode.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_dmin_all(capsys):
    rc, out, _ = run(capsys, "code", "dmin", "--all")
    assert rc == EXIT_OK
    got = [float(r["dmin_over_q"]) for r in rows_of(out)]
    want = [0.4998, 0.5174, 0.5484, 0.547, 0.3995, 0.5765, 0.7069]
    assert got == pytest.approx(want, abs=1e-3)


def test_build_gtd8(capsys):
    rc, out, _ = run(capsys, "code", "build", "--construction", "gtd8")
    assert rc == EXIT_OK
    assert len(json.loads(out)["codewords"]) == 256


def test_dump_labels(capsys):
    rc, out, _ = run(capsys, "code", "dump", "--construction", "minal", "--ell", "2")
    rows = rows_of(out)
    assert rc == EXIT_OK and len(rows) == 4 and rows[0]["bits"] == "00"


def test_usage_errors(capsys):
    assert run(capsys, "code", "build", "--construction", "minal", "--ell", "2", "--gamma", "5000")[0] == EXIT_USAGE
    assert run(capsys, "dfr", "bound", "--eta1", "7")[0] == EXIT_USAGE
    assert run(capsys, "dfr", "dist", "--d", "1,x")[0] == EXIT_USAGE
    assert run(capsys, "dfr", "bound", "--construction", "gtd8")[0] == EXIT_USAGE  # exact l=8 needs --allow-long
    with pytest.raises(SystemExit) as exc:
        main(["code", "nope"])
    assert exc.value.code == EXIT_USAGE


def test_verify_exit_codes(capsys, monkeypatch):
    rc, out, _ = run(capsys, "verify", "theorem1")
    assert rc == EXIT_OK and out.startswith("PASS")
    monkeypatch.setattr(verify, "check_lemma1", lambda: verify.CheckResult("lemma1", False))
    rc, out, _ = run(capsys, "verify", "lemma1")
    assert rc == EXIT_FAIL and out.startswith("FAIL")


def test_bound_baseline(capsys, tmp_path):
    rc, out, _ = run(capsys, "dfr", "bound", "--out", str(tmp_path / "b"))
    assert rc == EXIT_OK
    assert float(rows_of(out)[0]["log2_dfr"]) == pytest.approx(-174, abs=1)
    assert json.loads((tmp_path / "b.json").read_text())["schema"] == "torcode.dfr/1"


def test_mc_seeded(capsys):
    args = ("dfr", "mc", "--stressed", "--trials", "200", "--seed", "3")
    a, b = run(capsys, *args), run(capsys, *args)
    assert a[0] == EXIT_OK and a[1] == b[1]
    assert rows_of(a[1])[0]["trials"] == "200"


def test_dist_csv(capsys):
    rc, out, _ = run(capsys, "dfr", "dist", "--stressed", "--d", "1", "--prec", "128", "--prune-bits", "100")
    assert rc == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "# schema=torcode.dist/1" and lines[2].startswith("# d=1 ")
    assert lines[3] == "value,log2_mass" and len(lines) > 10


def test_report_table2(capsys, tmp_path):
    cache, out_dir = tmp_path / "cache", tmp_path / "out"
    for du in ("11", "10"):
        assert run(capsys, "dfr", "bound", "--du", du, "--cache-dir", str(cache))[0] == EXIT_OK
    rc, out, _ = run(capsys, "report", "table2", "--no-compute", "--cache-dir", str(cache), "--out-dir", str(out_dir))
    assert rc == EXIT_OK
    rows = rows_of(out)
    cached = [r for r in rows if r["status"] == "cached"]
    assert {r["construction"] for r in cached} == {"baseline"} and len(cached) == 2
    assert all(r["status"] == "missing" for r in rows if r["construction"] != "baseline")
    assert (out_dir / "table2.csv").read_text().startswith("# schema=")
    assert (out_dir / "table2_points.csv").exists() and (out_dir / "table2.png").exists()


def test_verbose_anywhere(capsys):
    assert run(capsys, "-v", "code", "dmin")[0] == EXIT_OK
    assert run(capsys, "code", "dmin", "-v")[0] == EXIT_OK

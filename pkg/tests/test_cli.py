import io

import pytest

from asyncca.cli import main
from asyncca.snapshots import read_pattern


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def fields(text):
    return dict(line.split("=", 1) for line in text.splitlines()
                if "=" in line and not line.startswith(("config", "backend")))


def test_simulate_prints_config_and_hash():
    code, text = run("simulate", "--engine", "agg", "--m", "8", "--pes", "2")
    assert code == 0
    assert text.startswith("config ") and "seed=1" in text
    f = fields(text)
    assert f["hash"] == "e2a13c4039ef5d95" and f["events"] == "1281"


def test_simulate_engines_agree():
    h = {fields(run("simulate", "--engine", e, "--m", "4")[1])["hash"]
         for e in ("serial-eventlist", "agg", "async1", "sync1")}
    assert h == {"e2a13c4039ef5d95"}


def test_simulate_csv_is_plain(tmp_path):
    p = tmp_path / "s.csv"
    code, _ = run("simulate", "--engine", "agg-poisson", "--m", "8", "--bkl", "--csv", str(p))
    assert code == 0
    raw = p.read_bytes()
    assert b"\r" not in raw
    header, row = raw.decode().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert cols["rejected_kernel_moves"] == "0"
    assert 0 < float(cols["kernel_fraction"]) < 1


def test_simulate_snapshots(tmp_path):
    out = tmp_path / "frames"
    code, text = run("simulate", "--engine", "agg", "--m", "8", "--snapshot-dt", "1",
                     "--frames", "2", "--out-dir", str(out))
    assert code == 0 and fields(text)["snapshots"] == "5"
    img, t = read_pattern(out / "pattern_K000003.pbm")
    assert img.shape == (16, 16) and t == 3.0
    code, _ = run("simulate", "--engine", "serial-eventlist", "--snapshot-dt", "1",
                  "--out-dir", str(tmp_path / "ser"))
    assert code == 0
    assert (read_pattern(tmp_path / "ser" / "pattern_K000003.pbm")[0] == img).all()


def test_print_config_only():
    code, text = run("predict", "--print-config")
    assert code == 0 and text.count("\n") == 2 and "mode=one-cell" in text


@pytest.mark.parametrize("argv", [
    ("simulate", "--engine", "bogus"),
    ("simulate", "--engine", "agg"),                       # missing --m
    ("simulate", "--engine", "agg", "--m", "5"),
    ("simulate", "--engine", "agg", "--m", "4", "--bkl"),
    ("simulate", "--engine", "agg-poisson", "--m", "4", "--law", "uniform"),
    ("simulate", "--model", "potts", "--m", "4"),
    ("simulate", "--seed", "-1"),
    ("predict", "--mode", "aggregated", "--n", "120"),
    ("predict", "--law", "gaussian:1,0.1"),
    ("verify", "--ms", "5"),
    ("nosuch",),
])
def test_argument_errors(argv):
    assert run(*argv)[0] == 2


def test_io_error():
    code, _ = run("simulate", "--m", "8", "--csv", "/nonexistent-dir/x.csv")
    assert code == 3


def test_predict_csv(tmp_path):
    p = tmp_path / "p.csv"
    code, _ = run("predict", "--mode", "aggregated", "--n", "48", "--m", "12",
                  "--rounds", "400", "--replicates", "2", "--lag-bound", "1", "--csv", str(p))
    assert code == 0
    header, row = p.read_text().splitlines()
    assert header == "n,m,law,lag_bound,efficiency,ci_low,ci_high,rounds"
    vals = row.split(",")
    assert vals[:4] == ["48", "12", "poisson:1", "1.0"]
    assert float(vals[5]) <= float(vals[4]) <= float(vals[6])


def test_predict_repeatable():
    a = run("predict", "--dim", "1", "--n", "300", "--rounds", "300")
    assert a == run("predict", "--dim", "1", "--n", "300", "--rounds", "300")


def test_verify_passes_and_reports_weak_uniqueness(tmp_path):
    code, text = run("verify", "--seeds", "1,2", "--ms", "4,8", "--pes", "1,2",
                     "--poisson-ms", "4,8", "--one-cell", "--csv", str(tmp_path / "v.csv"))
    assert code == 0
    assert "MISMATCH" not in text and text.count(" equal") == 16
    assert "weak uniqueness" in text
    assert "summary mismatches=0 tie_faults=0" in text


def test_verify_reports_tie_fault():
    code, text = run("verify", "--law", "fixed", "--seeds", "1", "--ms", "4", "--n", "8")
    assert code == 1 and "tie-fault" in text


def test_bench_reports_matched_events(tmp_path):
    p = tmp_path / "b.csv"
    code, text = run("bench", "--n", "16", "--ms", "4,16", "--end-time", "1", "--csv", str(p))
    assert code == 0
    rows = p.read_text().splitlines()
    assert len(rows) == 3 and "events_match=True" in text
    assert "efficiency" in rows[0] and "speedup" in rows[0]


def test_verify_mismatch_dumps_divergence(monkeypatch):
    import asyncca.cli as cli
    real = cli.run_engine

    def tampered(*args, **kw):
        t = real(*args, **kw)
        t.new = t.new.copy()
        t.new[5] = -t.new[5]
        t._hash = None
        return t

    monkeypatch.setattr(cli, "run_engine", tampered)
    code, text = run("verify", "--seeds", "1", "--ms", "4")
    assert code == 1
    assert "MISMATCH" in text and "first divergence at event 5" in text

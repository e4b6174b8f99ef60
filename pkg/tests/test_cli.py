import math

import pytest

from gskdet import cli
from gskdet import specialfn as sf

BENCH_CFG = """\
# space-like benchmark
nu = '0.1 + 0.05*lambda'
u  = 'lambda - 0.1*lambda^2'   # saddle at 5
g  = '0.2*sin(lambda)'
q  = 1
x  = 100, 200, 400
"""

ZERO_CFG = """\
nu = '0'
u = 'lambda - lambda^2'
q = 1
x = 100 150 200
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------- config

def test_config_parses_benchmark():
    cfg = cli.parse_config(BENCH_CFG, "bench.cfg")
    assert cfg.xs == (100.0, 200.0, 400.0)
    assert cfg.g == "0.2*sin(lambda)"
    assert cfg.spec().lambda0 == pytest.approx(5.0)


def test_hash_inside_quotes_is_not_a_comment():
    cfg = cli.parse_config(ZERO_CFG + "out = 'a#b.csv'  # trailing\n")
    assert cfg.out == "a#b.csv"


@pytest.mark.parametrize("drop", ["nu", "q", "x"])
def test_missing_key_is_named(drop):
    text = "\n".join(ln for ln in ZERO_CFG.splitlines() if not ln.startswith(drop + " "))
    with pytest.raises(cli.ConfigError, match=f"missing required key '{drop}'"):
        cli.parse_config(text, "z.cfg")


@pytest.mark.parametrize("text,anchor,fragment", [
    (ZERO_CFG + "colour = 3\n", "c:5:", "unknown key"),
    (ZERO_CFG + "q = 2\n", "c:5:", "duplicate key 'q'"),
    (ZERO_CFG.replace("q = 1", "q = one"), "c:3:", "'q'"),
    (ZERO_CFG.replace("'0'", "0"), "c:1:", "single quoted string"),
    (ZERO_CFG.replace("'0'", "'0*'"), "c:1:", ""),
    (ZERO_CFG.replace("lambda - lambda^2", "lambda"), "c:2:", "saddle"),
    ("nu '0'\n", "c:1:", "key = value"),
])
def test_errors_are_line_anchored(text, anchor, fragment):
    with pytest.raises(cli.ConfigError) as err:
        cli.parse_config(text, "c")
    assert str(err.value).startswith(anchor)
    assert fragment in str(err.value)


def test_main_reports_config_errors(tmp_path, capsys):
    path = write(tmp_path, "nu = '0'\nq = 1\nx = 100\n")
    assert cli.main(["det", "--config", path]) == 2
    assert "missing required key 'u'" in capsys.readouterr().err


# ---------------------------------------------------------------- CSV

def _record(x, **kw):
    vals = {name: 0.0 for name in cli.FIELDS}
    vals.update(x=x, det_num_re=1 / 3, det_num_im=-math.pi, det_asym_re=0.1, det_asym_im=2 ** -40, **kw)
    vals["rel_err"] = cli.rel_err_of(vals["det_num_re"], vals["det_num_im"], vals["det_asym_re"], vals["det_asym_im"])
    return cli.SweepRecord(**vals)


def test_csv_round_trip_is_bit_identical(tmp_path):
    path = str(tmp_path / "s.csv")
    recs = [_record(100.0, runtime_ms=1e-300), _record(200.0, abs_Bx=5e-324)]
    cli.write_csv(path, recs)
    back, status = cli.read_csv(path)
    assert status == "complete"
    assert back == recs
    for r in back:
        assert cli.rel_err_of(r.det_num_re, r.det_num_im, r.det_asym_re, r.det_asym_im) == r.rel_err


def test_csv_columns_follow_record_order(tmp_path):
    path = str(tmp_path / "s.csv")
    cli.write_csv(path, [_record(1.0)])
    header = open(path).read().splitlines()[1].split(",")
    assert header[0::2] == cli.FIELDS
    assert header[1::2] == [f + "_hex" for f in cli.FIELDS]


def test_csv_unknown_version_is_rejected(tmp_path):
    path = str(tmp_path / "s.csv")
    cli.write_csv(path, [_record(1.0)])
    text = open(path).read().replace(" v1 ", " v9 ")
    open(path, "w").write(text)
    with pytest.raises(ValueError, match="version"):
        cli.read_csv(path)


def test_csv_foreign_file_is_rejected(tmp_path):
    path = write(tmp_path, "x,y\n1,2\n", "f.csv")
    with pytest.raises(ValueError):
        cli.read_csv(path)


# ---------------------------------------------------------------- commands

def test_det_of_zero_nu(tmp_path, capsys):
    cfg = cli.parse_config(ZERO_CFG)
    out = str(tmp_path / "d.csv")
    assert cli.cmd_det(cfg, out) == 0
    recs, _ = cli.read_csv(out)
    assert (recs[0].det_num_re, recs[0].det_num_im) == (1.0, 0.0)
    assert recs[0].rel_err == 0
    assert "+1.000000000000000e+00 +0.000000000000000e+00i" in capsys.readouterr().out


def test_det_appends_rows(tmp_path):
    cfg = cli.parse_config(ZERO_CFG)
    out = str(tmp_path / "d.csv")
    cli.cmd_det(cfg, out)
    cli.cmd_det(cfg, out)
    assert len(cli.read_csv(out)[0]) == 2


def test_det_benchmark_row_is_populated(tmp_path):
    out = str(tmp_path / "b.csv")
    cli.cmd_det(cli.parse_config(BENCH_CFG), out)
    (rec,), _ = cli.read_csv(out)
    for name in cli.FIELDS:
        v = getattr(rec, name)
        assert math.isfinite(v)
        if name not in ("det_num_im", "det_asym_im", "dlogdet_fd_re", "dlogdet_formula_re"):
            assert v != 0, name


def test_asym_command(capsys):
    assert cli.cmd_asym(cli.parse_config(BENCH_CFG)) == 0
    text = capsys.readouterr().out
    assert "regime = space-like" in text and "Cconst" in text


def test_compare_zero_nu(tmp_path, capsys):
    out = str(tmp_path / "c.csv")
    assert cli.cmd_compare(cli.parse_config(ZERO_CFG), out) == 0
    recs, status = cli.read_csv(out)
    assert status == "complete"
    assert [r.x for r in recs] == [100.0, 150.0, 200.0]
    assert all(r.rel_err == 0 for r in recs)
    assert "rel_err identically 0" in capsys.readouterr().out


@pytest.mark.parametrize("xs", ["100 200", "100 300 200"])
def test_compare_rejects_short_or_unsorted_lists(xs, tmp_path):
    cfg = cli.parse_config(ZERO_CFG.replace("100 150 200", xs))
    assert cli.cmd_compare(cfg, str(tmp_path / "c.csv")) == 2


def test_compare_flags_partial_output(tmp_path, monkeypatch):
    real = cli.sweep_record

    def flaky(spec, with_fd=True):
        if spec.x > 160:
            raise RuntimeError("solver exploded")
        return real(spec, with_fd)

    monkeypatch.setattr(cli, "sweep_record", flaky)
    monkeypatch.setenv("GSKDET_THREADS", "1")
    out = str(tmp_path / "c.csv")
    assert cli.cmd_compare(cli.parse_config(ZERO_CFG), out) == 1
    recs, status = cli.read_csv(out)
    assert status == "partial"
    assert [r.x for r in recs] == [100.0, 150.0]
    assert "solver exploded" in open(out).read()


def test_compare_benchmark(tmp_path, capsys):
    out = str(tmp_path / "c.csv")
    assert cli.cmd_compare(cli.parse_config(BENCH_CFG), out) == 0
    recs, _ = cli.read_csv(out)
    errs = [r.rel_err for r in recs]
    assert errs[0] > errs[1] > errs[2]
    assert "summary: fitted rel_err exponent" in capsys.readouterr().out


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("GSKDET_THREADS", "1")
    assert cli.n_workers() == 1
    monkeypatch.setenv("GSKDET_THREADS", "100000")
    assert cli.n_workers() >= 1
    monkeypatch.setenv("GSKDET_THREADS", "many")
    assert cli.n_workers() >= 1


def test_rhp_report(capsys):
    assert cli.cmd_rhp(cli.parse_config(BENCH_CFG)) == 0
    text = capsys.readouterr().out
    assert "exterior |Delta| audit" in text
    assert "operator norm estimate" in text
    for line in text.splitlines():
        if "jump" in line or "det-1" in line:
            assert float(line.split()[-1]) <= 1e-8


def test_rhp_overlap_is_a_geometry_error(capsys):
    cfg = cli.parse_config(BENCH_CFG + "delta = 1.5\n")
    assert cli.cmd_rhp(cfg) == 2
    assert "geometry error" in capsys.readouterr().out


def test_rhp_zero_nu(capsys):
    assert cli.cmd_rhp(cli.parse_config(ZERO_CFG)) == 0
    assert "nu = 0" in capsys.readouterr().out


# ---------------------------------------------------------------- selftest

def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    text = capsys.readouterr().out
    jump = [ln for ln in text.splitlines() if ln.startswith("CHF jump")]
    assert len(jump) == 4 and all(ln.endswith("ok") for ln in jump)


def test_selftest_catches_a_psi_sign_bug(monkeypatch, capsys):
    real = sf.tricomi_psi

    def flipped(*args, **kw):
        v = real(*args, **kw)
        arg = kw.get("arg")
        return -v if arg is not None and arg > 0 else v

    monkeypatch.setattr(sf, "tricomi_psi", flipped)
    assert cli.cmd_selftest() == 1
    assert "selftest failed: CHF jump" in capsys.readouterr().out


def test_commands_other_than_selftest_need_a_config():
    with pytest.raises(SystemExit):
        cli.main(["det"])

import csv
import io
import math

import pytest
import yaml

from levy_exit_lab.cli import SpecError, load_spec, main, plot_series
from levy_exit_lab.io import read_json

SMALL = """\
model:
  family: isotropic-stable
  dimension: 1
  params: {alpha: 1.0}
seed: 7
tasks: [characteristics, renewal, simulate, verify]
grids:
  profile: {lo: 0.01, hi: 100.0, per_decade: 2}
  renewal: {lo: 1.0e-5, hi: 1.0e+3, per_decade: 6}
sim: {n: 400}
domains:
  ball: {kind: ball, center: [0.0], radius: 1.0}
simulate:
  - name: exit
    quantity: exit-time
    domain: ball
    x: [[0.0]]
verify:
  - check: psi-star
  - check: exit-ball
    r: 1.0
    delta_fracs: [1.0, 0.5]
  - check: survival
    kind: half-line
    x: [1.0]
    t: [0.1, 1.0, 10.0]
"""


def _write(tmp_path, text, name="spec.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    spec = _write(d, SMALL)
    code = main(["run", str(spec), "--out-dir", str(d / "out")])
    return code, d / "out"


def test_run_writes_artifacts(small_run):
    code, out = small_run
    assert code == 0
    for f in ("profile.json", "profile.csv", "renewal.json", "profile_v.json", "condition_A.csv",
              "simulate.json", "report.json", "report.csv", "summary.txt", "status.json"):
        assert (out / f).exists(), f
    status = read_json(out / "status.json")
    assert status == {"tasks": dict.fromkeys(("characteristics", "renewal", "simulate", "verify"), "ok"),
                      "hard_failure": False}


def test_cauchy_profile_has_constant_h_times_r(small_run):
    _, out = small_run
    cols = read_json(out / "profile.json")["columns"]
    for r, h in zip(cols["r"], cols["h"]):
        assert r * h == pytest.approx(4 / math.pi, rel=1e-8)


def test_plotdata_series(small_run, capsys):
    _, out = small_run
    assert main(["plotdata", str(out / "report.json"), "--series", "ratio", "--check", "exit-ball"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["delta", "series", "value"]
    assert {r[1] for r in rows[1:]} == {"observed", "lower", "upper"}
    assert main(["plotdata", str(out / "report.json"), "--series", "survival-half-line", "--out-dir", str(out)]) == 0
    assert (out / "report_survival-half-line.csv").exists()
    assert main(["plotdata", str(out / "profile_v.json"), "--series", "h-vs-Vsq"]) == 0
    assert "hV2" in capsys.readouterr().out
    assert main(["plotdata", str(out / "report.json"), "--series", "nope"]) == 2
    assert "unknown series" in capsys.readouterr().err


def test_plot_series_unknown_check(small_run):
    _, out = small_run
    with pytest.raises(KeyError):
        plot_series(read_json(out / "report.json"), "ratio", "missing")


def test_missing_dimension_is_reported_with_line(tmp_path, capsys):
    bad = SMALL.replace("  dimension: 1\n", "")
    spec = _write(tmp_path, bad)
    out = tmp_path / "never"
    assert main(["run", str(spec), "--out-dir", str(out)]) == 2
    err = capsys.readouterr().err
    assert "dimension" in err and "spec.yaml:2" in err
    assert not out.exists()


@pytest.mark.parametrize("old,new,needle", [
    ("family: isotropic-stable", "family: wobbly", "unknown family"),
    ("check: psi-star", "check: psi-starr", "unknown check"),
    ("domain: ball\n    x", "domain: sphere\n    x", "unknown domain"),
    ("x: [[0.0]]", "x: [[0.0, 1.0]]", "coordinates"),
    ("sim: {n: 400}", "sim: {n: -4}", "n must be"),
])
def test_validation_errors(tmp_path, old, new, needle):
    spec = _write(tmp_path, SMALL.replace(old, new))
    with pytest.raises(SpecError, match=needle) as info:
        load_spec(spec, out_dir=str(tmp_path / "o"))
    assert info.value.line is not None
    assert not (tmp_path / "o").exists()


def test_override_precedence(tmp_path, monkeypatch):
    spec = _write(tmp_path, SMALL + "threads: 2\nout_dir: from-file\n")
    assert load_spec(spec).config.threads == 2
    monkeypatch.setenv("LEVY_EXIT_LAB_THREADS", "3")
    monkeypatch.setenv("LEVY_EXIT_LAB_OUT_DIR", str(tmp_path / "env"))
    rs = load_spec(spec)
    assert rs.config.threads == 3 and rs.out_dir == tmp_path / "env"
    rs = load_spec(spec, threads=5, out_dir=str(tmp_path / "flag"), seed=99)
    assert rs.config.threads == 5 and rs.out_dir == tmp_path / "flag" and rs.config.seed == 99
    monkeypatch.setenv("LEVY_EXIT_LAB_THREADS", "many")
    with pytest.raises(SpecError):
        load_spec(spec)


def test_example_specs_validate(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for fam in ("isotropic-stable", "tempered-stable", "brownian"):
        assert main(["example", fam]) == 0
        text = capsys.readouterr().out
        assert yaml.safe_load(text)["model"]["family"] == fam
        load_spec(_write(tmp_path, text, f"{fam}.yaml"))


def test_failed_task_skips_dependents(tmp_path, monkeypatch):
    from levy_exit_lab import cli

    def boom(rs, state):
        raise RuntimeError("no table")

    monkeypatch.setitem(cli._RUNNERS, "renewal", boom)
    rs = load_spec(_write(tmp_path, SMALL.replace("sim: {n: 400}", "sim: {n: 50}")), out_dir=str(tmp_path / "o"))
    assert cli.execute(rs) == 1
    status = read_json(tmp_path / "o" / "status.json")
    assert status["tasks"] == {"characteristics": "ok", "renewal": "failed", "simulate": "ok", "verify": "skipped"}
    assert "no table" in (tmp_path / "o" / "summary.txt").read_text()

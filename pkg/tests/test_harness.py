import numpy as np
import pytest
import yaml

from latinterp.harness.cli import main, run_suites
from latinterp.harness.config import ConfigError, load_config, parse_config
from latinterp.harness.report import COLUMNS, csv_text, exit_code, read_csv
from latinterp.harness.specs import parse_exponent, parse_lattice, parse_space
from latinterp.harness.suites import CheckRecord, Task, plan, run_task, task_seed
from latinterp.spaces import LatticeSpace, VectorValued

SMALL_LEMMA4 = {
    "suites": {
        "lemma4": {"exponents": ["1", "2"], "dims": [2], "thetas": [0.5], "samples": 3,
                   "concavity_search": {"k_max": 2, "starts": 1, "iters": 2},
                   "anchors": [{"X": "l1^2", "lam": [1, 1]}]},
    }
}

SKIPPING_PROP3 = {
    "suites": {
        "prop3": {"thetas": [0.5], "k": [2], "instances": [{"X0": "l1^2", "X1": "l2^2", "E0": "l4/3^2", "E1": "l4/3^2"}]},
    }
}


def write_cfg(tmp_path, raw, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


# descriptors ----------------------------------------------------------------

def test_parse_exponent():
    assert parse_exponent("4/3") == pytest.approx(4 / 3)
    assert parse_exponent("inf") == np.inf
    assert parse_exponent(2) == 2.0
    with pytest.raises(ValueError):
        parse_exponent("0.5")
    with pytest.raises(ValueError):
        parse_exponent("abc")


@pytest.mark.parametrize("desc", ["l1^2", "l4/3^3", "linf^4", "l2^2[w=1,2]", "l2^2(l1^3)", "l1^2(l2^2(linf^2))"])
def test_descriptor_round_trip(desc):
    assert parse_space(desc).descriptor == desc


def test_parse_space_kinds():
    assert isinstance(parse_space("l1^2"), LatticeSpace)
    V = parse_space("l1^2(l2^3)")
    assert isinstance(V, VectorValued) and V.dim == 6
    with pytest.raises(ValueError):
        parse_lattice("l1^2(l2^2)")
    with pytest.raises(ValueError):
        parse_space("lp^2")


# config ---------------------------------------------------------------------

def test_default_config_loads():
    cfg = load_config()
    assert cfg.seed == 0
    assert len(plan(cfg)) > 0
    reg = cfg.registry()
    assert reg.value(parse_space("l1^2"), "T2_upper") == pytest.approx(np.sqrt(2))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        parse_config({"suites": {"lemma4": {"bogus": 1}}})
    with pytest.raises(ConfigError):
        parse_config({"extra_top_level": 1})


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        parse_config({"suites": {"lemma4": {"thetas": [1.5]}}})
    with pytest.raises(ConfigError):
        parse_config({"suites": {"prop3": {"instances": [{"X0": "l1^2", "X1": "l2^3"}]}}})
    with pytest.raises(ConfigError):
        parse_config({"constants": [{"space": "l1^2", "kind": "T2_upper", "value": 1.2, "provenance": ""}]})
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_cli_bad_theta_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"suites": {"lemma4": {"thetas": [1.5]}}})
    assert main(["--config", str(cfg), "--suite", "lemma4", "--out", str(tmp_path / "r.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_missing_config_exit_2(tmp_path):
    assert main(["--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "r.csv")]) == 2


def test_cli_bad_seed_and_jobs(tmp_path):
    out = str(tmp_path / "r.csv")
    assert main(["--seed", "-1", "--out", out]) == 2
    assert main(["--jobs", "0", "--out", out]) == 2


# runs -----------------------------------------------------------------------

def test_cli_lemma4_small(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL_LEMMA4)
    out = tmp_path / "r.csv"
    assert main(["--config", str(cfg), "--suite", "lemma4", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows and set(rows[0]) == set(COLUMNS)
    assert all(r["status"] == "PASS" for r in rows)
    assert all(r["seconds"] == "" for r in rows)
    assert any(r["instance"].startswith("anchor") or "l1^2" in r["instance"] for r in rows)
    assert (tmp_path / "r.summary.txt").exists()
    assert "lemma4" in capsys.readouterr().out


def test_strict_turns_skipped_into_failure(tmp_path):
    cfg = write_cfg(tmp_path, SKIPPING_PROP3)
    out = str(tmp_path / "r.csv")
    assert main(["--config", str(cfg), "--suite", "prop3", "--out", out]) == 0
    assert {r["status"] for r in read_csv(out)} == {"SKIPPED"}
    assert main(["--config", str(cfg), "--suite", "prop3", "--out", out, "--strict"]) == 1


def test_exit_code_rules():
    rec = lambda s: CheckRecord("x", "i", None, 0, 0, 0, 0, 0.0, s, 0.0)
    assert exit_code([rec("PASS")]) == 0
    assert exit_code([rec("PASS"), rec("STAGNATED")]) == 0
    assert exit_code([rec("PASS"), rec("STAGNATED")], strict=True) == 1
    assert exit_code([rec("FAIL")]) == 1
    assert exit_code([]) == 0


def test_empty_grid_gives_empty_report(tmp_path):
    cfg = write_cfg(tmp_path, {"suites": {"prop3": {"instances": []}}})
    out = tmp_path / "r.csv"
    assert main(["--config", str(cfg), "--suite", "prop3", "--out", str(out)]) == 0
    assert out.read_text().strip() == ",".join(COLUMNS)


def test_task_error_becomes_stagnated():
    cfg = parse_config({})
    bad = Task("lemma4", "no_such_runner", "k", None, None)
    recs = run_task(bad, cfg, 0)
    assert len(recs) == 1 and recs[0].status == "STAGNATED"


def test_task_seed_depends_on_task_and_seed():
    t1 = Task("lemma4", "a", "k", 0.5, None)
    t2 = Task("lemma4", "a", "k", 0.25, None)
    assert task_seed(0, t1) == task_seed(0, t1)
    assert task_seed(0, t1) != task_seed(0, t2)
    assert task_seed(0, t1) != task_seed(1, t1)


def test_jobs_do_not_change_report():
    cfg = parse_config(SMALL_LEMMA4)
    a = csv_text(run_suites(cfg, ("lemma4",), jobs=1))
    b = csv_text(run_suites(cfg, ("lemma4",), jobs=2))
    assert a == b


def test_seed_changes_samples():
    cfg = parse_config(SMALL_LEMMA4)
    a = csv_text(run_suites(cfg, ("lemma4",), seed=0))
    b = csv_text(run_suites(cfg, ("lemma4",), seed=1))
    assert a != b


def test_cli_default_lemma4_seed7(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["--suite", "lemma4", "--seed", "7", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows and all(r["suite"] == "lemma4" for r in rows)

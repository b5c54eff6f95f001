import os

import numpy as np
import pytest

from kslg.cli import main
from kslg.config import ConfigError, parse_config
from kslg.ioutil import atomic_write_text

MINIMAL_CFG = """\
[grid]
dim = 2
cells = 8 8
extent = 2.0 2.0

[model]
kappa = 2
epsilon = 0.1
s = 3/2

[coefficients]
lambda = constant 1.0
mu = prototype 1.0 1.0

[initial]
u0 = gaussian 2.0 0.45
v0 = gaussian 1.0 0.55

[time]
T = 0.05
dt = fixed 0.002
output_every = 1
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL_CFG)
    return path


def test_parse_minimal_config(cfg_file):
    doc = parse_config(cfg_file)
    assert doc.dim == 2 and doc.cells == (8, 8)
    assert doc.kappa == 2 and str(doc.s) == "3/2"
    assert doc.dt_spec == ("fixed", 0.002)
    cfg = doc.build(seed=0)
    assert cfg.exponents is not None
    assert cfg.grid.cells == (8, 8)


def test_parse_rejects_bad_kappa(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(MINIMAL_CFG.replace("kappa = 2", "kappa = 0.5"))
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    assert any("kappa" in e and "> 1" in e for e in err.value.errors)


def test_parse_suggests_near_miss_key(tmp_path):
    path = tmp_path / "typo.cfg"
    path.write_text(MINIMAL_CFG.replace("kappa = 2", "kapa = 2"))
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    joined = "\n".join(err.value.errors)
    assert "kapa" in joined and "did you mean 'kappa'" in joined
    assert any("missing required key 'kappa'" in e for e in err.value.errors)


def test_parse_collects_all_errors(tmp_path):
    text = MINIMAL_CFG.replace("kappa = 2", "kappa = 0.5")
    text = text.replace("T = 0.05", "T = -1")
    text = text.replace("dim = 2", "dim = 5")
    path = tmp_path / "multi.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    assert len(err.value.errors) >= 3


def test_parse_rejects_inadmissible_s(tmp_path):
    path = tmp_path / "inadmissible.cfg"
    path.write_text(MINIMAL_CFG.replace("s = 3/2", "s = 1/2"))  # kappa=2 needs s > 1
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    assert any("not admissible" in e for e in err.value.errors)


def test_exponents_verdict_exit_codes(capsys):
    assert main(["exponents", "--n", "2", "--alpha", "0", "--kappa", "1.01",
                 "--mode", "prototype"]) == 0
    assert "admissible" in capsys.readouterr().out
    assert main(["exponents", "--n", "3", "--alpha", "0", "--kappa", "1.3"]) == 1
    assert "inadmissible" in capsys.readouterr().out


def test_exponents_set_emission(capsys):
    code = main(["exponents", "--n", "2", "--s", "1", "--kappa", "5/2",
                 "--emit", "set"])
    assert code == 0
    out = capsys.readouterr().out
    assert "p_conj = 5" in out and "branch = planar" in out


def test_exponents_region_csv(tmp_path):
    out = tmp_path / "region.csv"
    code = main(["exponents", "--n", "3", "--mode", "prototype",
                 "--emit", "region-csv", "--grid-steps", "12", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "n,kappa,alpha_or_s,admissible"
    assert len(lines) == 1 + 12 * 13


def test_run_subcommand_end_to_end(tmp_path, cfg_file):
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg_file), "--out", str(out)])
    assert code == 0
    for name in ("diagnostics.csv", "verdicts.csv", "fields.csv", "config.cfg",
                 "meta.txt", "snap_000000.kslg", "diagnostics.png", "fields.png"):
        assert (out / name).exists(), name
    verdict_lines = (out / "verdicts.csv").read_text().strip().split("\n")
    assert verdict_lines[0] == "check,bound,value,margin,pass"
    assert all(line.endswith(",1") for line in verdict_lines[1:])


def test_run_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.cfg"),
                 "--out", str(tmp_path / "o")]) == 2


def test_usage_error_exit_2():
    assert main(["frobnicate"]) == 2
    assert main(["exponents"]) == 2  # missing --n


def test_weakcheck_subcommand(tmp_path, cfg_file):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out),
                 "--no-figures"]) == 0
    code = main(["weakcheck", "--traj", str(out)])
    assert code == 0
    lines = (out / "weakcheck.csv").read_text().strip().split("\n")
    assert lines[0] == "relation,test_id,value,tol,pass"
    assert all(line.endswith(",1") for line in lines[1:])


def test_sweep_subcommand(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(MINIMAL_CFG.replace("gaussian 2.0 0.45", "gaussian 6.0 0.35")
                   .replace("epsilon = 0.1", "epsilon = 1"))
    out = tmp_path / "sweep_out"
    code = main(["sweep", "--config", str(cfg), "--levels", "4", "--out", str(out)])
    assert code == 0
    lines = (out / "sweep.csv").read_text().strip().split("\n")
    assert lines[0] == "k,epsilon,grad_v_diff_L2,u_diff_mixed,trunc_inactive,wallclock_s"
    assert len(lines) == 6
    assert (out / "sweep.png").exists()


def test_refine_subcommand(tmp_path, cfg_file):
    out = tmp_path / "refine_out"
    code = main(["refine", "--config", str(cfg_file), "--levels", "3",
                 "--out", str(out)])
    assert code == 0
    lines = (out / "refine.csv").read_text().strip().split("\n")
    assert lines[0] == "level,cells,dt,l1_diff,observed_order"
    assert (out / "refine.png").exists()


def test_run_outputs_deterministic(tmp_path, cfg_file):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "--config", str(cfg_file), "--out", str(out_a),
                 "--no-figures"]) == 0
    assert main(["run", "--config", str(cfg_file), "--out", str(out_b),
                 "--no-figures"]) == 0
    for name in ("diagnostics.csv", "verdicts.csv", "fields.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_atomic_write_no_partial_files(tmp_path):
    target = tmp_path / "data.csv"
    atomic_write_text(target, "a,b\n1,2\n")
    assert target.read_text() == "a,b\n1,2\n"
    leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
    assert not leftovers


def test_blowup_run_exits_nonzero(tmp_path):
    # constant data: no gradients, no CFL limit; bare exponential growth
    # crosses the divergence guard before T
    text = MINIMAL_CFG.replace("lambda = constant 1.0", "lambda = constant 40.0")
    text = text.replace("T = 0.05", "T = 1.0")
    text = text.replace("s = 3/2\n", "")  # exponent checks not the point here
    text = text.replace("mu = prototype 1.0 1.0", "mu = constant 0.0")
    text = text.replace("u0 = gaussian 2.0 0.45", "u0 = constant 1.0")
    text = text.replace("v0 = gaussian 1.0 0.55", "v0 = constant 1.0")
    cfg = tmp_path / "blow.cfg"
    cfg.write_text(text)
    out = tmp_path / "blow_out"
    code = main(["run", "--config", str(cfg), "--out", str(out), "--no-figures"])
    assert code == 1
    assert (out / "meta.txt").read_text().splitlines()[0] == "completed=0"

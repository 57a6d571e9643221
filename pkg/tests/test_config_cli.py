import math
import os
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

from qbsde import ConfigError, RunConfig, StepTerminal
from qbsde.cli import main

GOLDEN_SOLVE = """
[run]
seed = 7
[generator]
spec = half_over_y 10
[transform]
alpha = 1.0
[terminal]
kind = step
lo_value = 2.0
hi_value = 5.0
threshold = 0.0
[bsde]
engine = quadrature
law = brownian
horizon = 1.0
x0 = 0.0
"""


def _run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "qbsde.cli"] + args,
                          cwd=cwd, capture_output=True, text=True)


# ---------------------------------------------------------------------------
# configuration parsing

def test_unknown_section_and_key_rejected():
    with pytest.raises(ConfigError, match="unknown config section"):
        RunConfig.from_text("[nonsense]\nfoo = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        RunConfig.from_text("[run]\nfoo = 1\n")


def test_typed_getters():
    cfg = RunConfig.from_text("[run]\nseed = 5\n[bsde]\nhorizon = 2.5\n")
    assert cfg.getint("run", "seed") == 5
    assert cfg.getfloat("bsde", "horizon") == 2.5
    assert cfg.getbool("terminal_meta", "xi_in_l1") is False
    assert cfg.getfloat("compare", "zeta") is None        # empty default
    bad = RunConfig.from_text("[run]\nseed = potato\n")
    with pytest.raises(ConfigError):
        bad.getint("run", "seed")
    with pytest.raises(ConfigError):
        RunConfig.from_text("[bsde]\nhorizon = soup\n").getfloat(
            "bsde", "horizon")
    with pytest.raises(ConfigError):
        RunConfig.from_text("[terminal_meta]\nxi_in_l1 = maybe\n").getbool(
            "terminal_meta", "xi_in_l1")


def test_parse_and_read_errors(tmp_path):
    with pytest.raises(ConfigError, match="parse error"):
        RunConfig.from_text("this is not ini")
    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.from_file(str(tmp_path / "missing.ini"))


def test_manifest_round_trip():
    cfg = RunConfig.from_text(GOLDEN_SOLVE)
    text = cfg.manifest_text()
    again = RunConfig.from_text(text)
    assert again.manifest_text() == text       # fixed point
    assert again.get("terminal", "lo_value") == "2.0"
    assert again.getint("run", "seed") == 7


def test_build_generator():
    cfg = RunConfig.from_text("[generator]\nspec = const 0.5\n"
                              "domain_lo = 0\ndomain_hi = 4\n")
    gen = cfg.build_generator()
    assert gen(np.array([1.0]))[0] == 0.5
    assert gen.domain.lo == 0.0 and gen.domain.hi == 4.0
    cfg2 = RunConfig.from_text("[generator]\nexpression = 1/(2*y)\n"
                               "domain_lo = 0\nsign_class = nonnegative\n")
    assert cfg2.build_generator()(np.array([2.0]))[0] == 0.25
    with pytest.raises(ConfigError, match="needs either"):
        RunConfig.from_text("[generator]\n").build_generator()


def test_build_forward():
    assert RunConfig.from_text("[forward]\nmodel = brownian\n"
                               ).build_forward().name == "brownian"
    m = RunConfig.from_text("[forward]\nmodel = scaled_brownian\nmu = 0.3\n"
                            "sigma = 2.0\n").build_forward()
    assert m.name == "scaled_brownian"
    assert float(m.drift(0.0, np.zeros(1))[0]) == 0.3
    g = RunConfig.from_text("[forward]\nmodel = geometric_brownian\n"
                            "sigma = 0.2\n").build_forward()
    assert float(g.diffusion(0.0, np.array([3.0]))[0]) == pytest.approx(0.6)
    with pytest.raises(ConfigError):
        RunConfig.from_text("[forward]\nmodel = levy\n").build_forward()


def test_build_terminal():
    x = np.array([-1.0, 0.0, 2.0])
    ident = RunConfig.from_text("[terminal]\nkind = identity\n"
                                ).build_terminal()
    assert np.array_equal(ident(x), x)
    aff = RunConfig.from_text("[terminal]\nkind = affine\na = 2\nb = 1\n"
                              ).build_terminal()
    assert np.array_equal(aff(x), 2 * x + 1)
    ex = RunConfig.from_text("[terminal]\nkind = exp\na = 0.5\nb = 1\n"
                             ).build_terminal()
    assert ex(np.array([0.0]))[0] == pytest.approx(2.0)
    cn = RunConfig.from_text("[terminal]\nkind = const\na = 3\n"
                             ).build_terminal()
    assert np.array_equal(cn(x), np.full(3, 3.0))
    st = RunConfig.from_text("[terminal]\nkind = step\nlo_value = 2\n"
                             "hi_value = 5\n").build_terminal()
    assert isinstance(st, StepTerminal)
    with pytest.raises(ConfigError, match="lo_value"):
        RunConfig.from_text("[terminal]\nkind = step\n").build_terminal()
    with pytest.raises(ConfigError, match="unknown terminal"):
        RunConfig.from_text("[terminal]\nkind = sine\n").build_terminal()


# ---------------------------------------------------------------------------
# command line

def test_cli_transform_and_classify(tmp_path):
    cfgfile = tmp_path / "c.ini"
    cfgfile.write_text("[generator]\nspec = neg_inv_(y-1)(y-6)\n"
                       "[transform]\nalpha = 3.5\n"
                       "[terminal_meta]\nrange_lo = 2\nrange_hi = 3\n")
    runner = CliRunner()
    out = str(tmp_path / "out")
    r = runner.invoke(main, ["transform", "--config", str(cfgfile),
                             "--out", out])
    assert r.exit_code == 0, r.output
    assert os.path.exists(os.path.join(out, "transform.csv"))
    report = open(os.path.join(out, "report.txt")).read()
    assert "monotonicity on 512-point grid: ok" in report
    r2 = runner.invoke(main, ["classify", "--config", str(cfgfile),
                              "--out", out])
    assert r2.exit_code == 0, r2.output
    assert "solution_exists_unique" in r2.output
    assert "YZ_in_S_inf_H2BMO_with_range" in r2.output
    assert os.path.exists(os.path.join(out, "manifest.ini"))


def test_cli_solve_golden_and_reproducible(tmp_path):
    cfgfile = tmp_path / "solve.ini"
    cfgfile.write_text(GOLDEN_SOLVE)
    runner = CliRunner()
    out1, out2 = str(tmp_path / "o1"), str(tmp_path / "o2")
    r1 = runner.invoke(main, ["solve", "--config", str(cfgfile), "--out", out1])
    assert r1.exit_code == 0, r1.output
    assert f"Y0: {math.sqrt(14.5):.17g}" in r1.output
    # re-running the emitted manifest reproduces every output byte for byte
    manifest = os.path.join(out1, "manifest.ini")
    r2 = runner.invoke(main, ["solve", "--config", manifest, "--out", out2])
    assert r2.exit_code == 0, r2.output
    for name in ("summary.txt", "surface.csv"):
        assert open(os.path.join(out1, name)).read() == \
            open(os.path.join(out2, name)).read()


def test_cli_compare_and_converse(tmp_path):
    cfgfile = tmp_path / "cmp.ini"
    cfgfile.write_text("[generator]\nspec = const 0.1\n"
                       "[compare]\nspec2 = const 0.3\ncondition = a1\n"
                       "zeta = -50\n"
                       "[converse]\nspec2 = const 0.3\ny = 0\nz = 1\nk = 1\n"
                       "n = 5\nsteps = 50\nn_paths = 300\n"
                       "[bsde]\nn_paths = 300\nsteps = 10\n")
    runner = CliRunner()
    r = runner.invoke(main, ["compare", "--config", str(cfgfile),
                             "--out", str(tmp_path / "cmp")])
    assert r.exit_code == 0, r.output
    assert "verdict: PASS" in r.output
    r2 = runner.invoke(main, ["converse", "--config", str(cfgfile),
                              "--out", str(tmp_path / "conv")])
    assert r2.exit_code == 0, r2.output
    assert "CONTRADICTION_FOUND" in r2.output


def test_cli_pde_writes_plots(tmp_path):
    cfgfile = tmp_path / "pde.ini"
    cfgfile.write_text("[generator]\nspec = const 0.5\n"
                       "[pde]\nx_min = -4\nx_max = 4\nn_t = 20\nn_x = 41\n")
    runner = CliRunner()
    out = str(tmp_path / "out")
    r = runner.invoke(main, ["pde", "--config", str(cfgfile), "--out", out])
    assert r.exit_code == 0, r.output
    for name in ("surface.csv", "summary.txt", "value_t0.svg",
                 "residual.svg", "manifest.ini"):
        assert os.path.exists(os.path.join(out, name))


def test_cli_exit_code_config_error(tmp_path):
    cfgfile = tmp_path / "bad.ini"
    cfgfile.write_text("[run]\nbogus_key = 1\n")
    r = _run_cli(["transform", "--config", str(cfgfile)], cwd=str(tmp_path))
    assert r.returncode == 1
    assert "unknown key" in r.stderr


def test_cli_exit_code_precondition(tmp_path):
    # identity terminal from x0 = 1 leaves (0, 10) on pilot paths
    cfgfile = tmp_path / "pre.ini"
    cfgfile.write_text("[generator]\nspec = half_over_y 10\n"
                       "[transform]\nalpha = 1.0\n"
                       "[bsde]\nx0 = 1.0\n")
    r = _run_cli(["solve", "--config", str(cfgfile)], cwd=str(tmp_path))
    assert r.returncode == 2
    assert "domain" in r.stderr


def test_cli_exit_code_numerical(tmp_path):
    # drift-dominated grid violates the Peclet condition in the oracle
    cfgfile = tmp_path / "pec.ini"
    cfgfile.write_text("[generator]\nspec = const 0.1\n"
                       "[forward]\nmodel = scaled_brownian\nmu = 10\n"
                       "[bsde]\nlaw = scaled_brownian\nhorizon = 0.1\n"
                       "[pde]\nx_min = -6\nx_max = 6\nn_t = 5\nn_x = 9\n")
    r = _run_cli(["pde", "--config", str(cfgfile)], cwd=str(tmp_path))
    assert r.returncode == 3
    assert "Peclet" in r.stderr


def test_cli_selftest_fast_smoke():
    runner = CliRunner()
    r = runner.invoke(main, ["selftest", "--fast", "--instances", "3"])
    assert r.exit_code == 0, r.output
    assert "all" in r.output and "passed" in r.output

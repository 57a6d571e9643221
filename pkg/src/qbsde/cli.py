"""Command-line entry point.

Subcommands: transform | classify | solve | compare | converse | pde |
selftest. Every run writes a ``manifest.ini`` with the fully-resolved
configuration; re-running a manifest reproduces the outputs. Exit codes:
1 configuration, 2 precondition, 3 numerical failure, 4 theorem-violation
verdict.
"""

from __future__ import annotations

import functools
import math
import os
import sys

import click
import numpy as np

from .errors import QbsdeError
from .config import RunConfig
from .intervals import OpenInterval
from .transform import build_transform
from .classifier import TerminalMeta, classify, check_necessary_condition
from .sde import simulate
from .bsde import (BsdeProblem, QuadratureBsdeSolver, solve_regression,
                   residual_check)
from .comparison import ComparisonCase, compare, converse_experiment
from .pde import PdeProblem, pde_residual, solve_fd_oracle, solve_feynman_kac


def _common_options(fn):
    @click.option("--config", "config_path", required=True,
                  type=click.Path(exists=True), help="INI config file.")
    @click.option("--seed", type=int, default=None,
                  help="Override the seed from the config.")
    @click.option("--out", "out_dir", type=click.Path(), default=None,
                  help="Output directory (default from config).")
    @click.option("--workers", type=int, default=None,
                  help="Worker count (recorded; results are independent).")
    @click.option("--tol", type=float, default=None,
                  help="Override the quadrature tolerance.")
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return fn(*args, **kwargs)
    return wrapper


def _load(config_path, seed, out_dir, workers, tol) -> tuple:
    cfg = RunConfig.from_file(config_path)
    if seed is not None:
        cfg.set("run", "seed", seed)
    if out_dir is not None:
        cfg.set("run", "out", out_dir)
    if workers is not None:
        cfg.set("run", "workers", workers)
    if tol is not None:
        cfg.set("run", "tol", tol)
    out = cfg.get("run", "out")
    os.makedirs(out, exist_ok=True)
    return cfg, out


def _write(out, name, text):
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        fh.write(text)
    click.echo(f"wrote {path}")


def _finish(cfg, out):
    _write(out, "manifest.ini", cfg.manifest_text())


def _build_transform(cfg):
    gen = cfg.build_generator()
    rep = cfg.get("transform", "representation")
    return gen, build_transform(
        gen, alpha=cfg.getfloat("transform", "alpha"),
        tol=cfg.getfloat("run", "tol", 1e-10),
        n_nodes=cfg.getint("transform", "n_nodes"),
        representation=rep,
        core_span=cfg.getfloat("transform", "core_span", 20.0))


@click.group()
def main():
    """Numerical toolkit for quadratic-driver backward equations on an
    open interval."""


@main.command("transform")
@_common_options
def cmd_transform(config_path, seed, out_dir, workers, tol):
    """Build the integrability transform and emit its table and report."""
    cfg, out = _load(config_path, seed, out_dir, workers, tol)
    gen, tr = _build_transform(cfg)
    xs = gen.domain.interior_grid(512)
    table_path = os.path.join(out, "transform.csv")
    tr.to_csv(table_path)
    click.echo(f"wrote {table_path}")
    V = tr.range_
    lines = [f"generator: {gen.name}",
             f"domain D: ({gen.domain.lo}, {gen.domain.hi})",
             f"base point alpha: {tr.alpha_:.17g}",
             f"representation: {tr.representation_}",
             f"range V: ({V.lo:.17g}, {V.hi:.17g})",
             f"V lower endpoint finite: {math.isfinite(V.lo)}",
             f"V upper endpoint finite: {math.isfinite(V.hi)}"]
    # invariant self-tests on a sample grid
    u = tr.u(xs)
    mono = bool(np.all(np.diff(u) > 0))
    lines.append(f"monotonicity on 512-point grid: "
                 f"{'ok' if mono else 'VIOLATED'}")
    mid = xs[len(xs) // 4: -len(xs) // 4]
    h = 1e-4
    second = (tr.u(mid + h) - 2 * tr.u(mid) + tr.u(mid - h)) / h ** 2
    target = 2.0 * gen.f(mid) * tr.u_prime(mid)
    rel = float(np.max(np.abs(second - target) /
                       np.maximum(1.0, np.abs(target))))
    lines.append(f"second-derivative identity max rel error: {rel:.3e}")
    beta = float(0.5 * (xs[0] + tr.alpha_))
    a, b = tr.change_base_point(beta)
    tr_b = build_transform(gen, alpha=beta, tol=tr.tol)
    aff = float(np.max(np.abs(tr.u(xs) - (a * tr_b.u(xs) + b)) /
                       np.maximum(1.0, np.abs(tr.u(xs)))))
    lines.append(f"base-point affine check max rel error: {aff:.3e}")
    _write(out, "report.txt", "\n".join(lines) + "\n")
    _finish(cfg, out)


@main.command("classify")
@_common_options
def cmd_classify(config_path, seed, out_dir, workers, tol):
    """Emit the solution-space report implied by declared metadata."""
    cfg, out = _load(config_path, seed, out_dir, workers, tol)
    gen, tr = _build_transform(cfg)
    rlo = cfg.getfloat("terminal_meta", "range_lo")
    rhi = cfg.getfloat("terminal_meta", "range_hi")
    meta = TerminalMeta(
        range_subset=(rlo, rhi) if rlo is not None and rhi is not None
        else None,
        xi_in_L1=cfg.getbool("terminal_meta", "xi_in_l1"),
        xi_in_Lp=cfg.getfloat("terminal_meta", "xi_in_lp"),
        xi_minus_in_Lp=cfg.getfloat("terminal_meta", "xi_minus_in_lp"),
        xi_plus_in_Lp=cfg.getfloat("terminal_meta", "xi_plus_in_lp"),
        uf_xi_in_L1=cfg.getbool("terminal_meta", "uf_xi_in_l1"),
        uf_xi_in_Lp=cfg.getfloat("terminal_meta", "uf_xi_in_lp"),
        uf_xi_in_Linf=cfg.getbool("terminal_meta", "uf_xi_in_linf"))
    report = classify(gen, meta, transform=tr)
    _write(out, "report.txt", report.to_text() + "\n")
    _write(out, "report.csv", report.to_csv())
    _finish(cfg, out)
    click.echo(report.to_text())


def _build_problem(cfg) -> tuple:
    gen, tr = _build_transform(cfg)
    fm = cfg.build_forward()
    g = cfg.build_terminal()
    prob = BsdeProblem(gen, tr, g, fm,
                       horizon=cfg.getfloat("bsde", "horizon", 1.0),
                       t0=cfg.getfloat("bsde", "t0", 0.0),
                       x0=cfg.getfloat("bsde", "x0", 0.0))
    return gen, tr, prob


@main.command("solve")
@_common_options
def cmd_solve(config_path, seed, out_dir, workers, tol):
    """Solve the backward equation with the configured engine."""
    cfg, out = _load(config_path, seed, out_dir, workers, tol)
    gen, tr, prob = _build_problem(cfg)
    engine = cfg.get("bsde", "engine")
    lines = [f"engine: {engine}", f"generator: {gen.name}"]
    if engine == "quadrature":
        solver = QuadratureBsdeSolver(prob, cfg.get("bsde", "law"),
                                      cfg.getint("bsde", "nodes"))
        sol = solver.solve()
        ts = np.linspace(prob.t0, prob.horizon, 21)
        xs = prob.x0 + np.linspace(-3.0, 3.0, 21)
        _write(out, "surface.csv", sol.surface_csv(ts, xs))
    elif engine == "regression":
        bundle = simulate(prob.forward, prob.t0, prob.x0, prob.horizon,
                          cfg.getint("bsde", "steps"),
                          cfg.getint("bsde", "n_paths"),
                          cfg.getint("run", "seed"))
        sol = solve_regression(prob, bundle, cfg.getint("bsde", "degree"))
        _write(out, "paths.csv", sol.paths_csv())
        stats = residual_check(sol, prob)
        lines.append(f"residual mean: {stats.mean:.6g} "
                     f"(se {stats.se:.3g})")
    else:
        from .errors import ConfigError
        raise ConfigError(f"unknown engine {engine!r}")
    lines += [f"y0 (transformed): {sol.y0:.17g}",
              f"Y0: {sol.Y0:.17g} +- {sol.se_Y0:.3g} (1 SE)",
              f"Z0: {sol.Z0:.17g}"]
    _write(out, "summary.txt", "\n".join(lines) + "\n")
    _finish(cfg, out)
    click.echo("\n".join(lines))


@main.command("compare")
@_common_options
def cmd_compare(config_path, seed, out_dir, workers, tol):
    """Verify the ordering of two problems on common noise."""
    cfg, out = _load(config_path, seed, out_dir, workers, tol)
    gen1, tr1, p1 = _build_problem(cfg)
    gen2 = cfg.build_generator(spec_key="spec2", expr_key="expression2",
                               section="compare")
    tr2 = build_transform(gen2, alpha=cfg.getfloat("transform", "alpha"),
                          tol=cfg.getfloat("run", "tol", 1e-10))
    p2 = BsdeProblem(gen2, tr2, p1.terminal_map, p1.forward, p1.horizon,
                     p1.t0, p1.x0)
    case = ComparisonCase(
        p1, p2, condition=cfg.get("compare", "condition"),
        zeta=cfg.getfloat("compare", "zeta"),
        engine=cfg.get("bsde", "engine"), law=cfg.get("bsde", "law"),
        nodes=cfg.getint("bsde", "nodes"),
        n_paths=cfg.getint("bsde", "n_paths"),
        steps=cfg.getint("bsde", "steps"),
        degree=cfg.getint("bsde", "degree"),
        seed=cfg.getint("run", "seed"))
    verdict = compare(case, raise_on_fail=False)
    _write(out, "verdict.txt", verdict.to_text() + "\n")
    _finish(cfg, out)
    click.echo(verdict.to_text())
    if verdict.verdict != "PASS":
        sys.exit(4)


@main.command("converse")
@_common_options
def cmd_converse(config_path, seed, out_dir, workers, tol):
    """Run the constructive converse-comparison experiment."""
    cfg, out = _load(config_path, seed, out_dir, workers, tol)
    f1 = cfg.build_generator()
    f2 = cfg.build_generator(spec_key="spec2", expr_key="expression2",
                             section="converse")
    report = converse_experiment(
        f1, f2, y=cfg.getfloat("converse", "y", 0.0),
        z=cfg.getfloat("converse", "z", 1.0),
        K=cfg.getfloat("converse", "k", 1.0),
        n=cfg.getint("converse", "n"),
        T=cfg.getfloat("converse", "horizon", 1.0),
        steps=cfg.getint("converse", "steps"),
        n_paths=cfg.getint("converse", "n_paths"),
        seed=cfg.getint("run", "seed"))
    _write(out, "report.txt", report.to_text() + "\n")
    _write(out, "gaps.csv", report.to_csv())
    _finish(cfg, out)
    click.echo(report.to_text())
    if report.verdict != "CONTRADICTION_FOUND":
        sys.exit(4)


@main.command("pde")
@_common_options
def cmd_pde(config_path, seed, out_dir, workers, tol):
    """Evaluate the value surface and cross-check it against the
    finite-difference oracle."""
    cfg, out = _load(config_path, seed, out_dir, workers, tol)
    gen, tr = _build_transform(cfg)
    prob = PdeProblem(
        gen, tr, cfg.build_terminal(), cfg.build_forward(),
        horizon=cfg.getfloat("bsde", "horizon", 1.0),
        x_min=cfg.getfloat("pde", "x_min", -6.0),
        x_max=cfg.getfloat("pde", "x_max", 6.0),
        n_t=cfg.getint("pde", "n_t"), n_x=cfg.getint("pde", "n_x"),
        t0=cfg.getfloat("bsde", "t0", 0.0),
        allow_nonpositive=cfg.getbool("pde", "allow_nonpositive"))
    fk = solve_feynman_kac(prob, cfg.get("pde", "engine"),
                           law=cfg.get("bsde", "law"),
                           nodes=cfg.getint("bsde", "nodes"),
                           seed=cfg.getint("run", "seed"))
    fd = solve_fd_oracle(prob)
    res = pde_residual(fk, prob, t_margin=max(2, prob.n_t // 20),
                       x_margin=max(3, (prob.n_x - 1) // 4))
    _write(out, "surface.csv", fk.to_csv())
    i0 = 0
    j0 = int(np.argmin(np.abs(fk.xs - 0.5 * (prob.x_min + prob.x_max))))
    lines = [f"method: {fk.method}",
             f"v(t0, {fk.xs[j0]:.6g}) = {fk.v[i0, j0]:.17g}",
             f"fd oracle value: {fd.v[i0, j0]:.17g}",
             f"|fk - fd| at that node: {abs(fk.v[i0, j0] - fd.v[i0, j0]):.3e}",
             f"residual max (interior subgrid): {res.max_abs:.3e}",
             f"residual rms: {res.rms:.3e}"]
    _write(out, "summary.txt", "\n".join(lines) + "\n")
    _plot_pde(out, fk, res, i0)
    _finish(cfg, out)
    click.echo("\n".join(lines))


def _plot_pde(out, fk, res, i0):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(fk.xs, fk.v[i0], lw=1.5)
    ax.set_xlabel("x")
    ax.set_ylabel("v(t0, x)")
    ax.set_title("value surface at t0")
    fig.tight_layout()
    fig.savefig(os.path.join(out, "value_t0.svg"))
    plt.close(fig)
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(np.abs(res.values), aspect="auto", origin="lower",
                   extent=[res.xs[0], res.xs[-1], res.ts[0], res.ts[-1]])
    fig.colorbar(im, ax=ax, label="|residual|")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title("equation residual (interior subgrid)")
    fig.tight_layout()
    fig.savefig(os.path.join(out, "residual.svg"))
    plt.close(fig)
    click.echo(f"wrote {os.path.join(out, 'value_t0.svg')}")
    click.echo(f"wrote {os.path.join(out, 'residual.svg')}")


@main.command("selftest")
@click.option("--fast", is_flag=True, help="Reduced path counts and "
              "instance counts for a quick smoke run.")
@click.option("--seed", type=int, default=90210, show_default=True,
              help="Master seed for the randomized property suites.")
@click.option("--instances", type=int, default=200, show_default=True,
              help="Randomized instances per property.")
def cmd_selftest(fast, seed, instances):
    """Run the acceptance battery and the randomized property suites."""
    from .selftest import run_all
    results = run_all(n_instances=instances, master_seed=seed, fast=fast)
    failed = 0
    for r in results:
        click.echo(r.line())
        failed += 0 if r.passed else 1
    if failed:
        click.echo(f"{failed} check(s) FAILED")
        sys.exit(3)
    click.echo(f"all {len(results)} checks passed")


def run():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except QbsdeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    run()

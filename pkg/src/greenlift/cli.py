"""Batch experiment harness.

Commands (each reads an optional key=value config file, applies CLI
overrides, echoes the resolved configuration, runs, and writes CSV):

    greenlift train        --config train.cfg [--seed N] [--out DIR]
    greenlift solve        --config solve.cfg
    greenlift precondition --config precond.cfg
    greenlift hybrid       --config hybrid.cfg
    greenlift eigs         --config eigs.cfg
    greenlift bias         --config bias.cfg

Problem names: benchmark-helmholtz, variable-coeff, interface.  The
kernel key is either "oracle" (closed form, benchmark only) or a path to
a trained checkpoint.  --serial pins BLAS threading to one thread so
repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys

import numpy as np

from . import config as cfgmod
from ._alloc import tune_for_large_batches
from .assemble import discretize, fast_solve, kernel_matrix
from .config import ConfigError
from .lifted import (AnalyticKernel, NeuralKernel, PenaltyWeights, TrainConfig,
                     check_regime, train)
from .problems import by_name
from .solvers import (GmresConfig, HybridConfig, damped_jacobi_step, gmres,
                      hybrid_solve, pgmres, spectral_condition,
                      write_eigenvalues_csv)
from .spectral import FitConfig, bias_track, fit_exact_kernel, kernel_eigs


def _serial_limits(enabled: bool):
    if not enabled:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=1)
    except ImportError:
        os.environ.setdefault("OMP_NUM_THREADS", "1")
        return contextlib.nullcontext()


def _kernel_source(cfg, spec):
    name = cfg["kernel"]
    if name == "oracle":
        if spec.exact_green is None:
            raise ConfigError(f"problem {spec.name!r} has no closed-form kernel; "
                              "train one and pass kernel = <checkpoint path>")
        return AnalyticKernel(spec.exact_green, name="oracle")
    source = NeuralKernel.from_checkpoint(name, alpha=spec.alpha)
    check_regime(source, spec)
    return source


def _prepare(command: str, args) -> tuple[dict, str]:
    raw = cfgmod.parse_config_file(args.config) if args.config else {}
    overrides = {"seed": args.seed, "out": args.out}
    if args.serial:
        overrides["serial"] = True
    cfg = cfgmod.resolve(command, raw, overrides)
    out = cfg["out"] or cfgmod.default_out_dir(command, cfg["problem"])
    cfg["out"] = out
    os.makedirs(out, exist_ok=True)
    cfgmod.write_effective(os.path.join(out, "effective-config.txt"), command, cfg)
    return cfg, out


def cmd_train(args) -> int:
    cfg, out = _prepare("train", args)
    spec = by_name(cfg["problem"])
    betas = PenaltyWeights(
        boundary=cfg["beta_boundary"], gamma=cfg["beta_gamma"], sym=cfg["beta_sym"],
        sigma=cfg["beta_sigma"], alpha=cfg["beta_alpha"])
    tc = TrainConfig(
        hidden_widths=cfg["hidden_widths"], epochs=cfg["epochs"], seed=cfg["seed"],
        lr=cfg["lr"], n_x=cfg["n_x"], n_y=cfg["n_y"], n_boundary=cfg["n_boundary"],
        n_gamma=cfg["n_gamma"], n_sigma=cfg["n_sigma"], n_alpha=cfg["n_alpha"],
        betas=betas,
        boundary_schedule=cfg["boundary_schedule"] or None,
        lr_schedule=cfg["lr_schedule"] or None,
        minibatch_x=cfg["minibatch_x"] or None,
        minibatch_y=cfg["minibatch_y"] or None,
        minibatch_gamma=cfg["minibatch_gamma"] or None,
        minibatch_sigma=cfg["minibatch_sigma"] or None,
        checkpoint_every=cfg["checkpoint_every"],
        lbfgs_iters=cfg["lbfgs_iters"],
        lbfgs_y=cfg["lbfgs_y"] or None,
        lbfgs_history=cfg["lbfgs_history"])
    with _serial_limits(cfg["serial"]):
        result = train(spec, tc, out_dir=out)
    status = "aborted (non-finite loss)" if result.aborted else "done"
    print(f"train {spec.name}: {status}; {len(result.history)} epochs; "
          f"checkpoint {result.checkpoint_path}")
    if result.history:
        last = result.history[-1]
        print(f"final loss {last['total']:.6e} (interior {last['L_interior']:.3e}, "
              f"gamma {last['L_gamma']:.3e})")
    return 1 if result.aborted else 0


def cmd_solve(args) -> int:
    cfg, out = _prepare("solve", args)
    spec = by_name(cfg["problem"])
    source = _kernel_source(cfg, spec)
    a, b = spec.domain
    pts = np.linspace(a, b, cfg["n_eval"])
    with _serial_limits(cfg["serial"]):
        u_hat = fast_solve(source, spec, cfg["n_quad"], pts, rule=cfg["rule"])
    path = os.path.join(out, "solution.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "u_hat", "u_exact", "abs_err"])
        exact = spec.exact_solution(pts) if spec.exact_solution else None
        for i, x in enumerate(pts):
            if exact is None:
                w.writerow([repr(float(x)), repr(float(u_hat[i])), "", ""])
            else:
                w.writerow([repr(float(x)), repr(float(u_hat[i])), repr(float(exact[i])),
                            repr(float(abs(u_hat[i] - exact[i])))])
    if spec.exact_solution is not None:
        print(f"solve {spec.name}: max |u_hat - u| = "
              f"{np.abs(u_hat - spec.exact_solution(pts)).max():.3e} -> {path}")
    else:
        print(f"solve {spec.name}: wrote {path}")
    return 0


def cmd_precondition(args) -> int:
    cfg, out = _prepare("precondition", args)
    spec = by_name(cfg["problem"])
    source = _kernel_source(cfg, spec)
    rows = []
    with _serial_limits(cfg["serial"]):
        for e in cfg["mesh_exponents"]:
            n = round((spec.domain[1] - spec.domain[0]) * 2 ** e) - 1
            system = discretize(spec, n)
            B = kernel_matrix(source, system.grid, system.h, scaled=cfg["scaled"],
                              spec=spec)
            if n <= cfg["kappa_max_n"]:
                sc = spectral_condition(B.matrix @ system.dense())
                eig_path = os.path.join(out, f"eig-h{e}.csv")
                write_eigenvalues_csv(eig_path, sc.eigenvalues)
                kappa, kappa_flag = sc.kappa, ("complex" if sc.complex_flagged else "")
            else:
                kappa, kappa_flag, eig_path = "", "skipped:n>kappa_max_n", ""
            _, tr_p = pgmres(system, B, system.F,
                             GmresConfig(tol=cfg["tol"], max_iter=cfg["max_iter"]))
            _, tr_0 = gmres(system, system.F,
                            GmresConfig(tol=cfg["tol_plain"],
                                        max_iter=cfg["max_iter_plain"]))
            rows.append({
                "h": f"2^-{e}", "n": n,
                "kappa": repr(kappa) if kappa != "" else "",
                "kappa_flag": kappa_flag, "eig_csv": os.path.basename(eig_path),
                "iters_precond": len(tr_p.relres),
                "relres_precond": repr(tr_p.relres[-1]),
                "iters_plain": len(tr_0.relres),
                "relres_plain": repr(tr_0.relres[-1]),
            })
            print(f"h=2^-{e} (n={n}): kappa={kappa if kappa != '' else 'skipped'} "
                  f"pgmres {len(tr_p.relres)} its ({tr_p.relres[-1]:.2e}) | "
                  f"gmres {len(tr_0.relres)} its ({tr_0.relres[-1]:.2e})")
    path = os.path.join(out, "table.csv")
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {path}")
    return 0


def cmd_hybrid(args) -> int:
    cfg, out = _prepare("hybrid", args)
    spec = by_name(cfg["problem"])
    source = _kernel_source(cfg, spec)
    e = cfg["mesh_exponent"]
    n = round((spec.domain[1] - spec.domain[0]) * 2 ** e) - 1
    system = discretize(spec, n)
    with _serial_limits(cfg["serial"]):
        exact_U = system.solve_direct()
        B = kernel_matrix(source, system.grid, system.h, spec=spec)
        _, tr_h = hybrid_solve(system, B,
                               HybridConfig(omega=cfg["omega"],
                                            jacobi_steps=cfg["jacobi_steps"],
                                            cycles=cfg["cycles"], tol=cfg["tol"]),
                               exact_U=exact_U)
        # pure damped Jacobi for the side-by-side trace
        from .solvers import IterTrace
        tr_j = IterTrace()
        U = np.zeros(n)
        fnorm = np.linalg.norm(system.F)
        tr_j.record(1.0, U - exact_U, stage="init")
        for _ in range(cfg["jacobi_sweeps"]):
            U = damped_jacobi_step(system, U, cfg["omega"])
            tr_j.record(np.linalg.norm(system.F - system.matvec(U)) / fnorm,
                        U - exact_U, stage="jacobi")
    hp = os.path.join(out, "hybrid_trace.csv")
    jp = os.path.join(out, "jacobi_trace.csv")
    tr_h.write_csv(hp, with_modes=cfg["modes"])
    tr_j.write_csv(jp, with_modes=cfg["modes"])
    note = " [diverged]" if tr_h.diverged else ""
    print(f"hybrid: relres {tr_h.relres[-1]:.2e} after {len(tr_h.relres) - 1} "
          f"sub-steps{note}; jacobi relres {tr_j.relres[-1]:.2e} after "
          f"{cfg['jacobi_sweeps']} sweeps")
    print(f"wrote {hp} and {jp}")
    return 0


def cmd_eigs(args) -> int:
    cfg, out = _prepare("eigs", args)
    spec = by_name(cfg["problem"])
    source = _kernel_source(cfg, spec)
    with _serial_limits(cfg["serial"]):
        report = kernel_eigs(source, spec, n=cfg["n"], count=cfg["count"])
    path = os.path.join(out, "eigen_report.csv")
    report.write_csv(path)
    lo = report.eps_mu(1, min(10, cfg["count"]))
    print(f"eigs: mean eps_mu over j<=10: {lo:.3e}; wrote {path}")
    return 0


def cmd_bias(args) -> int:
    cfg, out = _prepare("bias", args)
    spec = by_name(cfg["problem"])
    if spec.exact_green is None:
        raise ConfigError("bias tracking needs the exact-kernel problem")
    fc = FitConfig(hidden_widths=cfg["hidden_widths"], epochs=cfg["epochs"],
                   n_pairs=cfg["n_pairs"], lr=cfg["lr"], seed=cfg["seed"],
                   snapshot_every=cfg["snapshot_every"])
    with _serial_limits(cfg["serial"]):
        _, snapshots = fit_exact_kernel(spec, fc)
        report = bias_track(snapshots, spec, etas=cfg["etas"], J=cfg["j_max"],
                            n_quad=cfg["n_quad"])
    path = os.path.join(out, "bias_report.csv")
    report.write_csv(path)
    print(f"bias: {len(snapshots)} snapshots -> {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="greenlift",
        description="Green's-function kernel training and kernel-accelerated solvers")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [("train", cmd_train), ("solve", cmd_solve),
                     ("precondition", cmd_precondition), ("hybrid", cmd_hybrid),
                     ("eigs", cmd_eigs), ("bias", cmd_bias)]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--serial", action="store_true",
                       help="single-threaded BLAS for bitwise reproducibility")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    tune_for_large_batches()
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

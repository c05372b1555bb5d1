"""Command-line entry point.

Subcommands: gen (write a synthetic instance file), solve (run one solver on
a file or a freshly generated instance), sweep (corruption-rate or penalty
sweeps over seeds), table1 (the large synthetic benchmark protocol) and
eps-search (smoothing-parameter grid search for the ADMM baseline).

``--config FILE`` reads ``key = value`` lines and treats them as flags that
explicit command-line flags override.  ``--show-defaults`` prints every
numeric default.  Environment variables are never consulted.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .bench import (
    eps_grid_search,
    record_from_report,
    run_sweep,
    run_table1,
    write_csv,
)
from .data import (
    SyntheticSpec,
    load_instance,
    make_instance,
    save_instance,
)
from .ipadmm import ADMMConfig, admm_solve
from .metrics import l2err, loss_value, nnz_approx
from .penalty import PenaltyParams
from .pmm import PMMConfig, choose_rho, default_lambda, init_x0, pmm_solve
from .problem import load_libsvm
from .sncg import SNCGConfig


def _parse_cov(text):
    kind, _, param = text.partition(":")
    if kind not in ("ar", "cs"):
        raise argparse.ArgumentTypeError(f"covariance must be ar:R or cs:A, got {text!r}")
    return kind, float(param) if param else (0.8 if kind == "ar" else 0.6)


def _parse_signal(text):
    if text == "fixed16":
        return ("fixed16", 0, 4.0)
    kind, _, rest = text.partition(":")
    if kind in ("gauss", "gauss_nz") and rest:
        parts = rest.split(",")
        s_star = int(parts[0])
        var = float(parts[1]) if len(parts) > 1 else 4.0
        return ("gauss_nz", s_star, var)
    raise argparse.ArgumentTypeError(
        f"signal must be fixed16 or gauss:S[,VAR], got {text!r}"
    )


def _parse_noise(text):
    kind, _, rest = text.partition(":")
    aliases = {
        "gauss": "gauss",
        "t": "scaled_t",
        "scaled_t": "scaled_t",
        "mn": "mixture",
        "mixture": "mixture",
        "laplace": "laplace",
        "cauchy": "cauchy",
        "cauchy-signal": "cauchy_signal",
        "cauchy_signal": "cauchy_signal",
    }
    if kind not in aliases:
        raise argparse.ArgumentTypeError(f"unknown noise kind {text!r}")
    kind = aliases[kind]
    var, t_scale, t_dof = 2.0, math.sqrt(2.0), 4.0
    if rest:
        parts = [float(v) for v in rest.split(",")]
        if kind == "gauss":
            var = parts[0]
        elif kind == "scaled_t":
            t_scale = parts[0]
            if len(parts) > 1:
                t_dof = parts[1]
    return kind, var, t_scale, t_dof


def _parse_values(text):
    return [float(v) for v in text.split(",")]


def _add_synth_flags(p: argparse.ArgumentParser, require_n=True):
    p.add_argument("--n", type=int, default=None, help="number of rows")
    p.add_argument("--p", type=int, default=None, help="number of columns")
    p.add_argument("--cov", type=_parse_cov, default=("ar", 0.8),
                   help="row covariance, ar:R or cs:A (default ar:0.8)")
    p.add_argument("--signal", type=_parse_signal, default=("fixed16", 0, 4.0),
                   help="true signal, fixed16 or gauss:S[,VAR] (default fixed16)")
    p.add_argument("--noise", type=_parse_noise, default=("gauss", 2.0, math.sqrt(2.0), 4.0),
                   help="corruption law: gauss:VAR, t:SCALE[,DOF], mn, laplace, "
                        "cauchy, cauchy-signal (default gauss:2)")
    p.add_argument("--corrupt", type=float, default=0.0,
                   help="corrupted rows; a fraction of n if < 1, else a count")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--mu", type=float, default=1e-8, help="ridge weight")


def _spec_from_args(args) -> SyntheticSpec:
    if args.n is None or args.p is None:
        raise ValueError("--n and --p are required for synthetic instances")
    corrupt = args.corrupt
    count = int(math.floor(corrupt * args.n)) if 0 < corrupt < 1 else int(corrupt)
    cov_kind, cov_param = args.cov
    signal, s_star, var = args.signal
    noise, nvar, t_scale, t_dof = args.noise
    return SyntheticSpec(
        n=args.n,
        p=args.p,
        cov=cov_kind,
        cov_param=cov_param,
        signal=signal,
        s_star=s_star,
        signal_var=var,
        noise=noise,
        noise_var=nvar,
        t_scale=t_scale,
        t_dof=t_dof,
        corrupt_count=count,
        seed=args.seed,
    )


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--solver", choices=("pmm", "ipadmm"), default="pmm")
    p.add_argument("--lambda", dest="lam", default="auto",
                   help="penalty level, a number or 'auto' (column-sum rule)")
    p.add_argument("--lambda-factor", dest="lam_factor", type=float, default=0.2,
                   help="factor in the auto rule (0.2 sweeps, 0.12 table, 0.1 real data)")
    p.add_argument("--a", type=float, default=6.0, help="penalty shape constant")
    p.add_argument("--rho", default="auto",
                   help="penalty scale, a number or 'auto' (from the starting point)")
    p.add_argument("--eps", type=float, default=1.0,
                   help="ADMM smoothing parameter")
    p.add_argument("--sigma", type=float, default=None,
                   help="ADMM penalty parameter (default 4.5/eps)")
    p.add_argument("--tol", type=float, default=1e-6, help="outer residual tolerance")
    p.add_argument("--tol-sparse", type=float, default=1e-4,
                   help="residual tolerance for the sparsity-stability stop")
    p.add_argument("--kmax", type=int, default=None,
                   help="iteration cap (default 200 outer / 20000 ADMM)")
    p.add_argument("--eps-admm", type=float, default=1e-5, help="ADMM residual tolerance")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseplq",
        description="Sparse robust regression with a zero-norm penalty.",
    )
    parser.add_argument("--config", default=None,
                        help="key = value file providing flag defaults")
    parser.add_argument("--show-defaults", action="store_true",
                        help="print all numeric defaults and exit")
    sub = parser.add_subparsers(dest="command")

    g = sub.add_parser("gen", help="generate a synthetic instance file")
    _add_synth_flags(g)
    g.add_argument("--out", required=True, help="output path")
    g.add_argument("--text", action="store_true", help="write the text variant")

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--libsvm", default=None, help="LIBSVM text file")
    s.add_argument("--instance", default=None, help="instance container from gen")
    _add_synth_flags(s)
    _add_solver_flags(s)
    s.add_argument("--out", default=None, help="write the run record CSV here")

    w = sub.add_parser("sweep", help="corruption-rate or penalty sweep")
    w.add_argument("--kind", choices=("sparsity", "lambda"), required=True)
    w.add_argument("--values", type=_parse_values, required=True,
                   help="comma-separated sweep values")
    w.add_argument("--seeds", type=int, default=10, help="seeds 0..S-1 per value")
    _add_synth_flags(w)
    w.add_argument("--lambda-factor", dest="lam_factor", type=float, default=0.2)
    w.add_argument("--a", type=float, default=6.0)
    w.add_argument("--eps", type=float, default=0.7)
    w.add_argument("--solvers", default="pmm,ipadmm")
    w.add_argument("--out", required=True)

    t = sub.add_parser("table1", help="large synthetic benchmark protocol")
    t.add_argument("--cells", default="ar:0.5+gauss:100",
                   help="comma list of COV:PARAM+NOISE[:VAR] cells")
    t.add_argument("--p", type=int, default=5000)
    t.add_argument("--n", type=int, default=None)
    t.add_argument("--sstar", type=int, default=None)
    t.add_argument("--corrupt", type=float, default=0.3)
    t.add_argument("--reps", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--lambda-factor", dest="lam_factor", type=float, default=0.12)
    t.add_argument("--a", type=float, default=6.0)
    t.add_argument("--mu", type=float, default=1e-8)
    t.add_argument("--solvers", default="pmm,ipadmm")
    t.add_argument("--eps", type=float, default=1.0)
    t.add_argument("--eps-lo", type=float, default=None)
    t.add_argument("--eps-hi", type=float, default=None)
    t.add_argument("--out", required=True)

    e = sub.add_parser("eps-search", help="grid search the ADMM smoothing value")
    e.add_argument("--libsvm", default=None)
    e.add_argument("--instance", default=None)
    _add_synth_flags(e)
    _add_solver_flags(e)
    e.add_argument("--lo", type=float, required=True)
    e.add_argument("--hi", type=float, required=True)
    e.add_argument("--grid", type=int, default=20)
    e.add_argument("--target-nz", type=int, default=None,
                   help="target sparsity (default: truth if known, else the "
                        "proximal MM output)")
    e.add_argument("--out", default=None)
    return parser


def _inject_config(argv):
    # Turn the config file into flag tokens placed right after the
    # subcommand, so explicit flags (parsed later) win.
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    tokens = []
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip().replace("_", "-")
            tokens += [f"--{key}", value.strip()]
    rest = [a for j, a in enumerate(argv) if j not in (i, i + 1)]
    if rest and not rest[0].startswith("-"):
        return rest[:1] + tokens + rest[1:]
    return tokens + rest


def _show_defaults():
    pcfg = PMMConfig()
    scfg = SNCGConfig()
    print("penalty: a = 6.0, mu = 1e-08")
    print("lambda rule: max(0.05, factor * colsum(A)/n); factor 0.2 sweeps, "
          "0.12 table1, 0.1 real data")
    print("rho rule: max(1, 25/(6 ||x0||_inf)) for n <= p, 25/(4 ||x0||_inf) otherwise")
    print(f"outer loop: gamma1_0 = {pcfg.gamma1_0}, gamma2_0 = {pcfg.gamma2_0}, "
          f"floors = {pcfg.gamma1_min:g}/{pcfg.gamma2_min:g}, varrho = {pcfg.varrho}, "
          f"tol = {pcfg.tol:g}, tol_sparse = {pcfg.tol_sparse:g}, k_max = {pcfg.k_max}")
    print(f"inner Newton-CG: tau_bar = {scfg.tau_bar}, eta_bar = {scfg.eta_bar}, "
          f"delta = {scfg.delta}, armijo_c = {scfg.armijo_c:g}, j_max = {scfg.j_max}, "
          f"cg_max = {scfg.cg_max}")
    print(f"inner tolerance schedule: start {pcfg.eps_sncg0:g}, decay {pcfg.eps_decay}, "
          f"floor {pcfg.eps_floor:g}; starting-point j_max = {pcfg.x0_jmax}")
    print("ADMM: sigma = 4.5/eps_smooth, k_max = 20000, eps_admm = 1e-05")


def _load_inst(args):
    if args.libsvm is not None:
        return load_libsvm(args.libsvm, mu=args.mu), None
    if args.instance is not None:
        syn = load_instance(args.instance)
        return syn.inst, syn.x_true
    syn = make_instance(_spec_from_args(args), mu=args.mu)
    return syn.inst, syn.x_true


def _resolve_penalty(args, inst):
    lam = default_lambda(inst, args.lam_factor) if args.lam == "auto" else float(args.lam)
    cfg = PMMConfig(
        tol=args.tol,
        tol_sparse=args.tol_sparse,
        k_max=args.kmax if args.kmax is not None else 200,
    )
    x0 = init_x0(inst, lam, cfg)
    rho = choose_rho(x0, inst.n, inst.p) if args.rho == "auto" else float(args.rho)
    return PenaltyParams(a=args.a, lam=lam, rho=rho), cfg, x0


def _cmd_gen(args) -> int:
    syn = make_instance(_spec_from_args(args), mu=args.mu)
    save_instance(args.out, syn, text=args.text)
    print(f"wrote {args.out}: n={syn.inst.n} p={syn.inst.p} "
          f"nnz(x_true)={np.count_nonzero(syn.x_true)} |corrupt|={syn.corrupt_set.size}")
    return 0


def _summary_line(solver, report, inst, x_true):
    parts = [
        f"solver={solver}",
        f"nz={nnz_approx(report.x)}",
        f"loss={loss_value(inst, report.x):.6g}",
    ]
    if x_true is not None and np.any(x_true):
        parts.append(f"l2err={l2err(report.x, x_true):.6g}")
    parts += [
        f"iters={report.iterations}",
        f"time={report.wall_time:.3f}s",
        f"termination={report.termination}",
    ]
    print(" ".join(parts))


def _cmd_solve(args) -> int:
    inst, x_true = _load_inst(args)
    params, cfg, x0 = _resolve_penalty(args, inst)
    if args.solver == "pmm":
        report = pmm_solve(inst, params, cfg, x0=x0)
        eps = None
    else:
        acfg = ADMMConfig(
            eps_smooth=args.eps,
            sigma=args.sigma,
            k_max=args.kmax if args.kmax is not None else 20000,
            eps_admm=args.eps_admm,
        )
        report = admm_solve(
            inst, params, acfg, start=(x0, inst.A @ x0 - inst.b, np.zeros(inst.n))
        )
        eps = args.eps
    _summary_line(args.solver, report, inst, x_true)
    if args.out is not None:
        write_csv(args.out, [
            record_from_report("cli", report, inst, x_true=x_true, eps=eps)
        ])
    return 0


def _cmd_sweep(args) -> int:
    base = _spec_from_args(args)
    records = run_sweep(
        args.kind,
        base,
        args.values,
        seeds=list(range(args.seeds)),
        out=args.out,
        lam_factor=args.lam_factor,
        eps=args.eps,
        a=args.a,
        mu=args.mu,
        solvers=tuple(args.solvers.split(",")),
    )
    print(f"wrote {args.out}: {len(records)} rows")
    return 0


def _parse_cells(text):
    cells = []
    for part in text.split(","):
        cov_part, _, noise_part = part.partition("+")
        cov, _, cov_param = cov_part.partition(":")
        noise, _, var = noise_part.partition(":")
        noise = {"t": "scaled_t", "mn": "mixture", "cauchy-signal": "cauchy_signal"}.get(
            noise, noise
        )
        cells.append((cov, float(cov_param), noise, float(var) if var else None))
    return cells


def _cmd_table1(args) -> int:
    interval = None
    if args.eps_lo is not None and args.eps_hi is not None:
        interval = (args.eps_lo, args.eps_hi)
    records = run_table1(
        _parse_cells(args.cells),
        p=args.p,
        n=args.n,
        s_star=args.sstar,
        corrupt_frac=args.corrupt,
        seeds_per_cell=args.reps,
        base_seed=args.seed,
        out=args.out,
        lam_factor=args.lam_factor,
        a=args.a,
        mu=args.mu,
        solvers=tuple(args.solvers.split(",")),
        eps=args.eps,
        eps_interval=interval,
    )
    for rec in records:
        if rec.termination == "avg":
            print(f"{rec.problem} {rec.solver}: nz={rec.nz:.1f} loss={rec.loss:.4g} "
                  + (f"l2err={rec.l2err:.3g} " if rec.l2err is not None else "")
                  + f"time={rec.time_s:.1f}s")
    return 0


def _cmd_eps_search(args) -> int:
    inst, x_true = _load_inst(args)
    params, cfg, x0 = _resolve_penalty(args, inst)
    target = args.target_nz
    if target is None:
        if x_true is not None:
            target = int(np.count_nonzero(x_true))
        else:
            report = pmm_solve(inst, params, cfg, x0=x0)
            target = nnz_approx(report.x)
    eps_opt, records = eps_grid_search(
        inst, params, (args.lo, args.hi), grid=args.grid, target_nz=target, x0=x0
    )
    print(f"eps_opt={eps_opt:g} target_nz={target}")
    if args.out is not None:
        write_csv(args.out, records)
    return 0


_DISPATCH = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "table1": _cmd_table1,
    "eps-search": _cmd_eps_search,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--show-defaults" in argv:
        _show_defaults()
        return 0
    try:
        argv = _inject_config(argv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage()
        return 2
    try:
        return _DISPATCH[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``boltzspec <command> CONFIG``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .config import AUTO, Config, dump, parse_config
from .errors import BoltzspecError
from .kernels import KernelSpec
from .modes import Resolution, cached_table, check_table_matches, load_table, precompute_table
from .spectral_core import TorusGrid, flat_wavevectors

COMMANDS = ("precompute", "run", "eigen", "spreading", "consistency", "oracle")


def kernel_spec(cfg: Config) -> KernelSpec:
    k = cfg.kernel
    return KernelSpec(d=k.d, gamma=k.gamma, C_gamma=k.C_gamma, R=k.R, L=k.L)


def resolution(cfg: Config) -> Resolution | None:
    q = cfg.quadrature
    if q.radial == AUTO and q.angular == AUTO:
        return None
    from .modes import default_resolution

    base = default_resolution(cfg.discretization.N)
    return Resolution(base.radial if q.radial == AUTO else int(q.radial),
                      base.angular if q.angular == AUTO else int(q.angular))


def grid(cfg: Config, N: int | None = None) -> TorusGrid:
    dz = cfg.discretization
    n = None if dz.n_phys == AUTO else int(dz.n_phys)
    return TorusGrid(cfg.kernel.d, dz.N if N is None else N, cfg.kernel.L, n)


def _budget(cfg: Config):
    b = cfg.budget.table_entries
    return None if b == AUTO else int(b)


def table_path(cfg: Config) -> Path:
    from .modes import cache_path, default_resolution

    res = resolution(cfg) or default_resolution(cfg.discretization.N)
    return cache_path(cfg.output.cache_dir, kernel_spec(cfg), cfg.discretization.N,
                      "classical", res, cfg.quadrature.tol)


def operator(cfg: Config, table: str | None = None):
    from .collision import CollisionOperator

    spec = kernel_spec(cfg)
    dz = cfg.discretization
    if dz.method == "fast":
        return CollisionOperator.fast(spec, dz.N, dz.M)
    if table is not None:
        tab = load_table(table)
        check_table_matches(tab, spec, dz.N, "classical")
        return CollisionOperator.from_table(tab)
    tab = cached_table(spec, dz.N, "classical", cfg.output.cache_dir, resolution(cfg),
                       cfg.quadrature.tol, compute=cfg.output.auto_precompute,
                       max_doublings=cfg.quadrature.max_doublings, budget_entries=_budget(cfg))
    return CollisionOperator.from_table(tab)


def initial_field(cfg: Config, N: int | None = None, warn: bool = True):
    from .dynamics import Bump, InitialSpec, build_initial

    bumps = tuple(Bump(float(w), tuple(c), float(T)) for w, c, T in cfg.initial.bumps)
    return build_initial(InitialSpec(bumps, cfg.initial.mass), grid(cfg, N), warn=warn)


# --------------------------------------------------------------------------
# commands


def cmd_precompute(cfg: Config, args) -> int:
    from .modes import save_table

    spec = kernel_spec(cfg)
    dz = cfg.discretization
    if dz.method == "fast":
        print("fast path: separable weights are closed-form, no table to precompute")
        return 0
    out = Path(args.out) if args.out else table_path(cfg)
    tab = precompute_table(spec, dz.N, "classical", resolution(cfg), cfg.quadrature.tol,
                           cfg.quadrature.max_doublings, _budget(cfg))
    out.parent.mkdir(parents=True, exist_ok=True)
    save_table(tab, out)
    meta = tab.quad_meta
    print(f"wrote {out} (N={dz.N}, {tab.size}^2 entries, radial={meta['radial']}, "
          f"angular={meta['angular']}, delta={meta.get('delta', float('nan')):.2e})")
    return 0


def cmd_run(cfg: Config, args) -> int:
    from .diagnostics import write_csv
    from .dynamics import RunSettings, run

    op = operator(cfg, args.table)
    f0 = initial_field(cfg)
    out_dir = Path(args.out_dir or cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = cfg.time
    settings = RunSettings(
        t_end=t.t_end, dt=None if t.dt == AUTO else float(t.dt), cfl_safety=t.cfl_safety,
        scheme=t.scheme, force=t.force, cadence=cfg.diagnostics.cadence,
        entropy_every=cfg.diagnostics.entropy_every,
        snapshot_times=tuple(cfg.output.snapshot_times), snapshot_dir=str(out_dir),
    )
    csv_path = out_dir / cfg.output.csv
    records = []
    try:
        res = run(op, f0, settings, on_record=records.append)
    finally:
        write_csv(records, csv_path, cfg.kernel.d)
    print(f"{res.n_steps} steps of dt={res.dt:.6e} to t={res.final.t:g}; "
          f"{len(records)} rows in {csv_path}")
    return 0


def cmd_eigen(cfg: Config, args) -> int:
    from .analysis import eigenvalues

    N = args.N or cfg.discretization.N
    spec = kernel_spec(cfg)
    s = eigenvalues(spec, N, resolution=None, tol=cfg.quadrature.tol,
                    max_doublings=cfg.quadrature.max_doublings)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow([f"k{i + 1}" for i in range(spec.d)] + ["a_k"])
        for k, a in zip(flat_wavevectors(N, spec.d), s.a.reshape(-1)):
            w.writerow([*map(int, k), repr(float(a))])
    finally:
        if args.out:
            fh.close()
    print(f"lambda_N={s.lambda_N:.10g} at k={s.argmin}; a_inf={s.a_inf:.10g}; "
          f"cross defect={s.cross_defect:.2e}", file=sys.stderr)
    return 0


def cmd_spreading(cfg: Config, args) -> int:
    from .analysis import check_spreading

    spec = kernel_spec(cfg)
    ok = True
    for frac in cfg.spreading.radii:
        rep = check_spreading(frac * spec.L, spec, two_pass=cfg.spreading.two_pass)
        print(rep.text())
        ok &= rep.passed
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_consistency(cfg: Config, args) -> int:
    from .analysis import consistency_sweep

    c = cfg.consistency
    res = consistency_sweep(kernel_spec(cfg), c.Ns, c.N_ref, c.p, c.temperature,
                            cfg.discretization.M)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["N"] + [f"norm_p{p}" for p in res.ps])
        for row in res.rows():
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
    finally:
        if args.out:
            fh.close()
    for p in res.ps:
        print(f"slope p={p}: {res.slopes[p]:.4f}", file=sys.stderr)
    return 0


def cmd_oracle(cfg: Config, args) -> int:
    from .analysis import cross_path_oracle

    spec = kernel_spec(cfg)
    f = initial_field(cfg, cfg.oracle.N, warn=False)
    rep = cross_path_oracle(spec, f, cfg.oracle.M, budget=cfg.budget.physical_oracle)
    print(rep.text())
    return 0 if rep.passed else 1


HANDLERS = {"precompute": cmd_precompute, "run": cmd_run, "eigen": cmd_eigen,
            "spreading": cmd_spreading, "consistency": cmd_consistency, "oracle": cmd_oracle}

EPILOG = ("Configuration is flat 'section.key = value' text; '#' starts a comment and "
          "unknown keys are rejected. discretization.method defaults to classical for "
          "N <= 8 and fast otherwise. Exit codes: 0 ok, 1 check failed, 2 config error, "
          "3 numeric failure, 4 budget exceeded, 5 cache or file mismatch.\n\n"
          "Defaults:\n" + "\n".join("  " + line for line in dump(Config()).splitlines()))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boltzspec", epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter,
                                description="Spectral solver for the space-homogeneous "
                                            "Boltzmann equation on a velocity torus.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "precompute": "certify and write the classical kernel-mode table (BKMT)",
        "run": "integrate in time; writes diagnostics CSV and BSPC snapshots",
        "eigen": "linearised spectrum a_k as CSV k1,..,kd,a_k",
        "spreading": "positivity of the gain of a mollified ball indicator",
        "consistency": "projection-error sweep over N with fitted log-log slopes",
        "oracle": "fast vs direct-beta vs physical-space gain comparison",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name], epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("config", help="path to a configuration file")
        if name == "precompute":
            sp.add_argument("--out", help="table path (default: cache dir, keyed by hash)")
        if name == "run":
            sp.add_argument("--table", help="explicit BKMT table; must match the config")
            sp.add_argument("--out-dir", help="override output.dir")
        if name == "eigen":
            sp.add_argument("--N", type=int, help="mode box (default discretization.N)")
        if name in ("eigen", "consistency"):
            sp.add_argument("--out", help="CSV path (default stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        return HANDLERS[args.command](cfg, args)
    except BoltzspecError as exc:
        print(f"boltzspec: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # precondition failures inside modules are configuration problems
        print(f"boltzspec: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

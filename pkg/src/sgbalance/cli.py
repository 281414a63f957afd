"""Command line entry point.

Subcommands:
    verify        run the numerical verification suite (identities, lemmas,
                  solver oracles) and exit nonzero on any failure
    diagnose      solve the balance for given density/vorticity files and
                  write the diagnosed fields
    simulate      advance the prognostic system and write snapshots plus
                  diagnostics.csv
    ellipticity   evaluate the pointwise ellipticity margins only
    manufactured  print the elliptic-solver convergence table

Exit codes: 0 ok, 1 configuration error, 2 balance non-convergence,
3 non-elliptic state, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_NONELLIPTIC = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgbalance",
                                description="semi-geostrophic balance model solver")
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS/FFT threads (set before numpy loads)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify", help="run the verification suite")
    sp.add_argument("--config", default=None)

    for name in ("diagnose", "ellipticity"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--output-dir", default=None)
        sp.add_argument("rho_file")
        sp.add_argument("omega_file")

    sp = sub.add_parser("simulate")
    sp.add_argument("--config", required=True)
    sp.add_argument("--output-dir", default=None)

    sp = sub.add_parser("manufactured")
    sp.add_argument("--config", default=None)
    return p


def _load_config(path, output_dir=None):
    from .config import RunConfig, parse_config

    cfg = parse_config(Path(path)) if path else RunConfig().validate()
    if output_dir:
        cfg.output_dir = output_dir
    return cfg


def _read_state(cfg, ws, rho_file, omega_file):
    from .dynamics import State
    from .errors import FieldFormatError
    from .fileio import read_field

    _, rho = read_field(rho_file)
    _, omega = read_field(omega_file)
    if rho.shape != ws.grid.shape3:
        raise FieldFormatError(
            f"{rho_file}: shape {rho.shape} does not match grid {ws.grid.shape3}")
    if omega.shape != ws.grid.shape2:
        raise FieldFormatError(
            f"{omega_file}: shape {omega.shape} does not match grid {ws.grid.shape2}")
    # the horizontal mean of omega is a gauge; project it away
    return State(rho, ws.project_zero_horizontal_mean(omega))


def _cmd_verify(args) -> int:
    from .verification import run_verification

    if args.config:
        cfg = _load_config(args.config)
        results = run_verification(epsilon=cfg.epsilon, lam=cfg.lam, alpha=cfg.alpha,
                                   latitude=cfg.tilt().latitude)
    else:
        results = run_verification()
    ok = True
    for r in results:
        print(r.line())
        ok &= r.passed
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else 1


def _cmd_diagnose(args, margins_only: bool) -> int:
    from .balance import ellipticity_margin
    from .diagnostics import potential_vorticity
    from .dynamics import diagnose_balanced
    from .fileio import write_field
    from .thermal import diagnose_geostrophic

    cfg = _load_config(args.config, args.output_dir)
    ws = cfg.workspace()
    params = cfg.params()
    state = _read_state(cfg, ws, args.rho_file, args.omega_file)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    geo = diagnose_geostrophic(state.rho_tilde, ws)
    ell = ellipticity_margin(state, geo, params, ws)
    for i, m in enumerate((ell.margin1, ell.margin2, ell.margin3), start=1):
        write_field(out / f"margin{i}.obfl", f"margin{i}", m)
    print(f"min ellipticity margin: {ell.min_margin:.6e} "
          f"({'elliptic' if ell.elliptic else 'NOT elliptic'})")
    if not ell.elliptic:
        print("state is not elliptic; balance relation is not solvable", file=sys.stderr)
        return EXIT_NONELLIPTIC
    if margins_only:
        return EXIT_OK

    bal = diagnose_balanced(state, params, cfg.solver_options(), ws)
    q = potential_vorticity(state, bal.geo, params, ws)
    write_field(out / "theta.obfl", "theta", bal.geo.theta)
    write_field(out / "u1.obfl", "u1", bal.vel.u1)
    write_field(out / "u2.obfl", "u2", bal.vel.u2)
    write_field(out / "u3.obfl", "u3", bal.vel.u3)
    write_field(out / "zeta_b.obfl", "zeta_b", bal.iterate.zeta_b)
    write_field(out / "q.obfl", "q", q)
    print(f"balance converged in {bal.iterate.iterations} iterations "
          f"(residual {bal.iterate.residual:.3e})")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from .diagnostics import relative_drift, snapshot_report
    from .dynamics import diagnose_balanced, rk4_step
    from .errors import NonConvergenceError
    from .fileio import CSV_HEADER, csv_row, write_field
    from .presets import initial_state

    cfg = _load_config(args.config, args.output_dir)
    ws = cfg.workspace()
    params = cfg.params()
    opts = cfg.solver_options()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    state = initial_state(cfg, ws)
    steps = int(round(cfg.t_end / cfg.dt))
    rows = [CSV_HEADER]
    h0 = None

    def emit(st, step):
        nonlocal h0
        bal = diagnose_balanced(st, params, opts, ws)
        rep = snapshot_report(st, bal, params, ws)
        if h0 is None:
            h0 = rep.H
        rows.append(csv_row(rep, relative_drift(rep.H, h0)))
        write_field(out / f"rho_tilde_{step:06d}.obfl", "rho_tilde", st.rho_tilde)
        write_field(out / f"omega_{step:06d}.obfl", "omega", st.omega)
        write_field(out / f"u1_{step:06d}.obfl", "u1", bal.vel.u1)
        write_field(out / f"u2_{step:06d}.obfl", "u2", bal.vel.u2)
        write_field(out / f"u3_{step:06d}.obfl", "u3", bal.vel.u3)

    emit(state, 0)
    for step in range(1, steps + 1):
        try:
            state = rk4_step(state, cfg.dt, params, opts, ws, kappa=cfg.hyperdiff_kappa)
        except NonConvergenceError as e:
            write_field(out / "checkpoint_rho_tilde.obfl", "rho_tilde", state.rho_tilde)
            write_field(out / "checkpoint_omega.obfl", "omega", state.omega)
            (out / "diagnostics.csv").write_text("\n".join(rows) + "\n")
            print(f"step {step}: {e}", file=sys.stderr)
            print(f"final checkpoint written to {out}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        if step % cfg.output_every == 0 or step == steps:
            emit(state, step)
    (out / "diagnostics.csv").write_text("\n".join(rows) + "\n")
    print(f"completed {steps} steps to t = {state.time:.6g}; output in {out}")
    return EXIT_OK


def _cmd_manufactured(args) -> int:
    import math

    from .calculus import SpectralWorkspace
    from .grid import ObliqueGrid
    from .verification import res_manufactured_elliptic

    cfg = _load_config(args.config)
    coeff = cfg.epsilon * cfg.alpha * (cfg.lam + 0.5)
    tilt = cfg.tilt()
    errs = []
    sizes = [(cfg.nx, cfg.ny, cfg.nz),
             (2 * cfg.nx, 2 * cfg.ny, 2 * cfg.nz),
             (4 * cfg.nx, 4 * cfg.ny, 4 * cfg.nz)]
    print(f"{'nx':>5} {'ny':>5} {'nz':>5} {'max error':>13} {'order':>6}")
    ok = True
    for i, (nx, ny, nz) in enumerate(sizes):
        ws = SpectralWorkspace(ObliqueGrid(nx, ny, nz, cfg.lx, cfg.ly, tilt))
        errs.append(res_manufactured_elliptic(ws, coeff))
        order = "" if i == 0 else f"{math.log2(errs[i - 1] / errs[i]):6.2f}"
        print(f"{nx:>5} {ny:>5} {nz:>5} {errs[i]:>13.4e} {order:>6}")
        if i > 0:
            ok &= 1.9 <= math.log2(errs[i - 1] / errs[i]) <= 2.1
    return EXIT_OK if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    from .errors import (ConfigError, FieldFormatError, NonConvergenceError,
                         NonEllipticError)

    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args, margins_only=False)
        if args.command == "ellipticity":
            return _cmd_diagnose(args, margins_only=True)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "manufactured":
            return _cmd_manufactured(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as e:
        print(f"balance solve did not converge: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except NonEllipticError as e:
        print(f"non-elliptic configuration: {e}", file=sys.stderr)
        return EXIT_NONELLIPTIC
    except (FieldFormatError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

    kssav run <config> [--out DIR] [--seed N] [--snapshot-every K]
    kssav sweep <config-glob> [--out DIR] [--jobs J]
    kssav check <config>
"""
from __future__ import annotations

import argparse
import glob
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ._backend import BACKEND
from .config import ConfigError, load_config
from .diagnostics import stability_conditions
from .mesh import check_acute
from .simulate import initial_state, run, setup
from .stepper import SolverError

log = logging.getLogger("kssav")


def _summary(result) -> str:
    last = result.records[-1]
    return (
        f"{result.n_steps} steps to t={last.t:.6g}: E={last.E:.10g} mass={last.mass_u:.15g} "
        f"u in [{last.min_u:.6g}, {last.max_u:.6g}] r={last.r:.6g}"
    )


def cmd_run(args) -> int:
    cfg = load_config(args.config).with_overrides(rng_seed=args.seed, snapshot_every=args.snapshot_every)
    result = run(cfg, out_dir=args.out)
    print(_summary(result))
    print(f"wrote {len(result.files)} files to {result.files[0].parent}")
    return 0


def _sweep_one(path: str, base: str | None) -> str:
    cfg = load_config(path)
    out = Path(base if base is not None else cfg.output_dir) / Path(path).stem
    result = run(cfg, out_dir=out)
    return f"{path}: {_summary(result)} -> {out}"


def cmd_sweep(args) -> int:
    paths = sorted(glob.glob(args.pattern))
    if not paths:
        print(f"no config matches {args.pattern!r}", file=sys.stderr)
        return 2
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) != len(stems):
        print("config file names must be unique: each run writes to <out>/<name>", file=sys.stderr)
        return 2
    status = 0
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_sweep_one, p, args.out) for p in paths]
        for p, fut in zip(paths, futures):
            try:
                print(fut.result())
            except (ConfigError, SolverError, OSError, ValueError) as exc:
                print(f"{p}: error: {exc}", file=sys.stderr)
                status = 1
    return status


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    su = setup(cfg)
    m = su.metrics
    st0 = initial_state(cfg, su.mesh, su.ops, su.params)
    A0 = su.ops.assembler.mobility_stiffness(st0.u)
    rep = stability_conditions(st0, m, A0, su.params, cfg.dt)
    print(f"backend        {BACKEND}")
    print(f"mesh           dim={cfg.dim} nodes={su.mesh.n_nodes} elements={su.mesh.n_elements}")
    print(f"acute          {check_acute(su.mesh)}")
    print(f"h              {m.h:.6g}")
    print(f"kappa_h        {m.kappa_h:.6g}")
    print(f"G_h            {m.G_h}")
    print(f"h_max/h_min    {m.quasi_uniformity:.6g}")
    print(f"steps          {cfg.n_steps} (dt={cfg.dt:g}, T_final={cfg.T_final:g})")
    print(f"B = D_u/chi_c  {su.params.B:.6g}")
    print(f"peclet         {rep.peclet:.6g}  {'ok' if rep.peclet_ok else 'VIOLATED (< 1 required)'}")
    print(f"cond_pos       {rep.cond_pos:.6g}  {'ok' if rep.cond_pos_ok else 'VIOLATED (<= 1 required)'}")
    print(f"cond_diff      {rep.cond_diff:.6g}  {'ok' if rep.cond_diff_ok else 'VIOLATED (<= 1 required)'}")
    print("(cond_pos and cond_diff are evaluated at t=0 with r^1 estimated by r^0)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kssav", description=__doc__.strip().splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configured simulation")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: output_dir from the config)")
    r.add_argument("--seed", type=int, help="override rng_seed")
    r.add_argument("--snapshot-every", type=int, help="override snapshot_every")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run every config matching a glob, in parallel")
    s.add_argument("pattern")
    s.add_argument("--out", help="base directory; each run writes to <out>/<config name>")
    s.add_argument("--jobs", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="validate a config and print mesh metrics and stability estimates")
    c.add_argument("config")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, FloatingPointError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

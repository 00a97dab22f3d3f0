"""Compare the compiled kernels with the NumPy fallback.

Times the individual kernels on the shipped 1D mesh and a 2D mesh, then the
full time step through each backend. Run with ``python3 benchmarks/bench_kernels.py``.
"""
import argparse
import importlib
import timeit

import numpy as np

from kssav import _kernels_py, assembly, diagnostics, model, stepper
from kssav.assembly import assemble_operators
from kssav.mesh import build_interval_mesh, build_rect_mesh
from kssav.model import ModelParams, energy_E1
from kssav.stepper import State, build_c_operator


def _best(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


def bench_mesh(label, mesh, backends, number):
    p = ModelParams()
    dt = 1e-3
    ops = assemble_operators(mesh)
    asm = ops.assembler
    rng = np.random.default_rng(0)
    n = mesh.n_nodes
    u = rng.uniform(0.1, 0.9, n)
    c = rng.uniform(0.0, 2.0, n)
    data = asm.mobility_values(u)
    s = rng.standard_normal(n)
    g = np.empty(n)
    un, As = np.empty(n), np.empty(n)
    state = State(u, c, energy_E1(u, ops.M_l, p).sqrt_E1)
    cop = build_c_operator(ops, p, dt)

    rows = {}
    for name, k in backends.items():
        def full_step():
            for mod in USERS:
                mod.kernels = k
            try:
                stepper.step(state, mesh, ops, cop, p, dt)
            finally:
                for mod in USERS:
                    mod.kernels = default
        rows[name] = {
            "mobility": _best(lambda: k.mobility_values(asm.elements, asm.kloc, asm.slots, u, data), number),
            "entropy": _best(lambda: k.entropy(u, ops.M_l, p.eps_reg, p.C_shift, g), number),
            "quadform": _best(lambda: k.quadform(asm.indptr, asm.indices, data, s), number),
            "edge_max": _best(lambda: k.edge_max(asm.indptr, asm.indices, data, c), number),
            "sav_update": _best(lambda: k.sav_update(asm.indptr, asm.indices, data, ops.M_l, u, c, s, 1.0,
                                                     dt, p.chi_c, p.D_u, un, As), number),
            "step": _best(full_step, number),
        }
    names = list(backends)
    print(f"\n{label}: {n} nodes, {asm.nnz} nonzeros (microseconds per call)")
    print(f"{'kernel':<12}" + "".join(f"{nm:>12}" for nm in names) + ("     speedup" if len(names) == 2 else ""))
    for kernel in rows[names[0]]:
        vals = [rows[nm][kernel] * 1e6 for nm in names]
        line = f"{kernel:<12}" + "".join(f"{v:12.2f}" for v in vals)
        if len(vals) == 2:
            line += f"{vals[1] / vals[0]:11.1f}x"
        print(line)


USERS = (assembly, diagnostics, model, stepper)
default = stepper.kernels


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--number", type=int, default=200, help="calls per timing repeat")
    args = ap.parse_args(argv)
    backends = {}
    try:
        backends["cython"] = importlib.import_module("kssav._kernels")
    except ImportError:
        print("compiled extension not built; timing the fallback only")
    backends["python"] = _kernels_py
    bench_mesh("1d shipped", build_interval_mesh(0, 10, 100), backends, args.number)
    bench_mesh("1d fine", build_interval_mesh(0, 10, 2000), backends, max(1, args.number // 10))
    bench_mesh("2d", build_rect_mesh(4, 4, 32, 32), backends, max(1, args.number // 10))


if __name__ == "__main__":
    main()

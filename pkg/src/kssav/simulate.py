"""Configured runs: mesh and operator setup, initial data, time loop, output."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import AssembledOperators, assemble_operators
from .config import SimConfig
from .diagnostics import (
    FLAG_BOUNDS,
    FLAG_CLAMPED,
    FLAG_ENERGY,
    FLAG_R_NONPOSITIVE,
    EnergyRecord,
    StabilityReport,
    bounds_ok,
    discrete_energy,
    dissipation,
    energy_decay_ok,
    energy_record,
    regularization_active,
    stability_conditions,
)
from .mesh import Mesh, MeshMetrics, build_interval_mesh, build_rect_mesh, compute_metrics
from .model import ModelParams, energy_E1, r_init
from .stepper import State, build_c_operator, compute_mu1, compute_mu2, step

__all__ = [
    "RunResult",
    "Setup",
    "TIMESERIES_COLUMNS",
    "build_mesh",
    "initial_state",
    "run",
    "setup",
    "splitmix64_uniform",
]

log = logging.getLogger(__name__)

TIMESERIES_COLUMNS = (
    "t", "E", "diss", "mass_u", "min_u", "max_u", "min_c", "max_c",
    "r", "sqrt_E1", "drift", "peclet", "cond_pos", "cond_diff", "flags",
)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64_uniform(seed: int, n: int) -> np.ndarray:
    """``n`` doubles in ``[0, 1)`` from the SplitMix64 generator.

    Output ``k`` (0-based) mixes ``z = seed + (k + 1) * 0x9E3779B97F4A7C15``
    (mod 2**64) as ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
    z *= 0x94D049BB133111EB; z ^= z >> 31`` and returns ``(z >> 11) * 2**-53``.
    """
    k = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + k * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def build_mesh(cfg: SimConfig) -> Mesh:
    if cfg.dim == 1:
        return build_interval_mesh(cfg.x_min, cfg.x_max, cfg.nx)
    return build_rect_mesh(cfg.x_max - cfg.x_min, cfg.y_max - cfg.y_min, cfg.nx, cfg.ny,
                           origin=(cfg.x_min, cfg.y_min))


def initial_state(cfg: SimConfig, mesh: Mesh, ops: AssembledOperators, params: ModelParams) -> State:
    """Uniform random perturbation of ``u0_mean`` and constant ``c0``."""
    n = mesh.n_nodes
    if cfg.perturb_amp == 0.0:
        u = np.full(n, cfg.u0_mean)
    else:
        xi = splitmix64_uniform(cfg.rng_seed, n)
        u = cfg.u0_mean + cfg.perturb_amp * (2.0 * xi - 1.0)
    c = np.full(n, cfg.c0)
    return State(u=u, c=c, r=r_init(u, ops.M_l, params), t=0.0, step=0)


@dataclass(eq=False)
class Setup:
    cfg: SimConfig
    params: ModelParams
    mesh: Mesh
    metrics: MeshMetrics
    ops: AssembledOperators


def setup(cfg: SimConfig) -> Setup:
    mesh = build_mesh(cfg)
    if mesh.n_nodes < 2:
        raise ValueError("mesh needs at least 2 nodes")
    return Setup(cfg=cfg, params=cfg.params, mesh=mesh, metrics=compute_metrics(mesh), ops=assemble_operators(mesh))


@dataclass(eq=False)
class RunResult:
    final_state: State
    records: list[EnergyRecord]
    stability: list[StabilityReport]
    flags: list[int]
    files: list[Path] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.records) - 1

    def any_flag(self, bit: int) -> bool:
        return any(f & bit for f in self.flags)


def _fmt(v: float) -> str:
    return "%.17g" % v


def _write_snapshot(path: Path, mesh: Mesh, state: State) -> None:
    axes = ["x", "y"][: mesh.dim]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", *axes, "u", "c"])
        for i in range(mesh.n_nodes):
            w.writerow([i, *(_fmt(v) for v in mesh.coords[i]), _fmt(state.u[i]), _fmt(state.c[i])])


def _write_timeseries(path: Path, records, stability, flags) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_COLUMNS)
        for rec, st, f in zip(records, stability, flags):
            w.writerow([
                _fmt(rec.t), _fmt(rec.E), _fmt(rec.diss), _fmt(rec.mass_u),
                _fmt(rec.min_u), _fmt(rec.max_u), _fmt(rec.min_c), _fmt(rec.max_c),
                _fmt(rec.r), _fmt(rec.sqrt_E1), _fmt(rec.drift),
                _fmt(st.peclet), _fmt(st.cond_pos), _fmt(st.cond_diff), f,
            ])


def run(cfg: SimConfig, *, write: bool = True, out_dir=None, state0: State | None = None) -> RunResult:
    """Integrate ``cfg.n_steps`` steps and record diagnostics after each.

    Row 0 describes the initial state; its stability monitors are the a-priori
    estimates for the first step (``r^{n+1}`` replaced by ``r^0``). Row
    ``n >= 1`` holds the monitors of the step that produced it.
    """
    su = setup(cfg)
    params, mesh, ops, metrics = su.params, su.mesh, su.ops, su.metrics
    dt = cfg.dt
    state = state0 if state0 is not None else initial_state(cfg, mesh, ops, params)
    c_op = build_c_operator(ops, params, dt, method=cfg.c_solver)

    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    files: list[Path] = []
    if write:
        out.mkdir(parents=True, exist_ok=True)

    def snapshot(st: State):
        if write and st.step % cfg.snapshot_every == 0:
            p = out / f"snapshot_{st.step:06d}.csv"
            _write_snapshot(p, mesh, st)
            files.append(p)

    ev = energy_E1(state.u, ops.M_l, params)
    E_prev = discrete_energy(state, ops, params)
    A0 = ops.assembler.mobility_stiffness(state.u)
    st0 = stability_conditions(state, metrics, A0, params, dt, r_next=state.r, sqrt_E1=ev.sqrt_E1)
    records = [energy_record(state, ops, params, E_prev, 0.0, ev.sqrt_E1)]
    stability = [st0]
    f0 = st0.flags() | (0 if bounds_ok(state) else FLAG_BOUNDS)
    flags = [f0 | (FLAG_CLAMPED if regularization_active(state, params) else 0)]
    snapshot(state)

    warned: set[int] = set()
    for _ in range(cfg.n_steps):
        res = step(state, mesh, ops, c_op, params, dt)
        new = res.state
        mu1 = compute_mu1(new, state, res.s, params)
        mu2 = compute_mu2(new, state, ops, params, dt)
        diss = dissipation(new, mu1, mu2, res.A, ops, params)
        E = discrete_energy(new, ops, params)
        sq = energy_E1(new.u, ops.M_l, params).sqrt_E1
        st = stability_conditions(state, metrics, res.A, params, dt, r_next=new.r, sqrt_E1=res.sqrt_E1)
        f = st.flags()
        if not energy_decay_ok(E_prev, E, dt, diss):
            f |= FLAG_ENERGY
        if not bounds_ok(new):
            f |= FLAG_BOUNDS
        if not new.r > 0:
            f |= FLAG_R_NONPOSITIVE
        if regularization_active(new, params):
            f |= FLAG_CLAMPED
        for bit in (1, 2, 4, 8, 16, 32, 64):
            if f & bit and bit not in warned:
                warned.add(bit)
                log.warning("step %d: monitor flag %d raised (further occurrences are only recorded)", new.step, bit)
        records.append(energy_record(new, ops, params, E, diss, sq))
        stability.append(st)
        flags.append(f)
        state = new
        E_prev = E
        snapshot(state)

    if write:
        ts = out / "timeseries.csv"
        _write_timeseries(ts, records, stability, flags)
        files.insert(0, ts)
    return RunResult(final_state=state, records=records, stability=stability, flags=flags, files=files)

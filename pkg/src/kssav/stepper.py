"""One time step of the SAV scheme for the volume-filling Keller-Segel system.

With lumped mass ``M_l`` in every time-derivative and reaction pairing, the
step reads

.. code-block:: text

    A    = mobility stiffness at u^n
    s    = g(u^n) / sqrt(E1[u^n])
    L1   = M_l U^n / dt + chi A C^n + D_u (s.M_l U^n / 2 - r^n) A s
    theta = dt s.L1 / (1 + D_u dt/2 s^T A s)             # = s . M_l U^{n+1}
    U^{n+1} = M_l^{-1} (dt L1 - D_u dt/2 theta A s)
    r^{n+1} = r^n + (theta - s.M_l U^n) / 2
    (tau M_l/dt + K + alpha M_l) C^{n+1} = tau M_l C^n / dt + delta M_l U^{n+1}

which is the discrete flux ``chi phi(u^n) grad mu1`` with
``mu1 = B r^{n+1} s - c^n``; ``chi B = D_u`` carries the entropic part.
The cell update needs one diagonal inversion, the chemical update one solve
with a constant SPD matrix that is factorized once per ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .assembly import AssembledOperators
from .model import ModelParams, energy_E1, s_vector

__all__ = [
    "COperator",
    "SolverError",
    "State",
    "StepReport",
    "StepResult",
    "build_c_operator",
    "compute_mu1",
    "compute_mu2",
    "step",
]

CG_RTOL = 1e-10


class SolverError(RuntimeError):
    """A step produced a non-finite value or a linear solve failed."""


@dataclass(frozen=True, eq=False)
class State:
    u: np.ndarray
    c: np.ndarray
    r: float
    t: float = 0.0
    step: int = 0

    def __post_init__(self):
        for name in ("u", "c"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.u.shape != self.c.shape or self.u.ndim != 1:
            raise ValueError("u and c must be 1D arrays of equal length")


@dataclass(frozen=True)
class StepReport:
    theta: float
    denom: float
    c_solver_iters: int
    c_residual: float
    r_positive: bool = True


@dataclass(frozen=True, eq=False)
class StepResult:
    """Output of :func:`step`, including the per-step quantities diagnostics need."""

    state: State
    report: StepReport
    A: sp.csr_matrix
    s: np.ndarray
    sqrt_E1: float

    def __iter__(self):
        # allows ``new_state, report = step(...)``
        return iter((self.state, self.report))


@dataclass(eq=False)
class COperator:
    """Factorized ``tau M_l/dt + K + alpha M_l`` for a fixed ``dt``."""

    matrix: sp.csc_matrix
    dt: float
    method: str = "direct"
    _lu: object = field(default=None, repr=False)
    _diag: np.ndarray | None = field(default=None, repr=False)

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, int, float]:
        """Return ``(x, iterations, relative residual)``."""
        scale = float(np.linalg.norm(rhs))
        if self.method == "direct":
            x = self._lu.solve(rhs)
            iters = 0
        else:
            count = [0]

            def cb(_):
                count[0] += 1

            M = sp.diags(1.0 / self._diag)
            x, info = spla.cg(self.matrix, rhs, rtol=CG_RTOL, atol=0.0, M=M, callback=cb, maxiter=10 * rhs.size + 100)
            if info != 0:
                raise SolverError(f"CG did not converge for the chemoattractant solve (info={info})")
            iters = count[0]
        res = float(np.linalg.norm(self.matrix @ x - rhs))
        rel = res / scale if scale > 0 else res
        return x, iters, rel


def build_c_operator(ops: AssembledOperators, params: ModelParams, dt: float, method: str = "direct") -> COperator:
    """Assemble and factorize the chemoattractant operator for this ``dt``.

    ``method`` is ``"direct"`` (sparse LU) or ``"cg"`` (Jacobi-preconditioned CG).
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    if ops.M_l.size < 2:
        raise ValueError("the chemoattractant operator needs a mesh with at least 2 nodes")
    mat = (sp.diags((params.tau / dt + params.alpha) * ops.M_l) + ops.K).tocsc()
    op = COperator(matrix=mat, dt=dt, method=method)
    if method == "direct":
        try:
            op._lu = spla.splu(mat)
        except RuntimeError as exc:
            raise SolverError(f"factorization of the chemoattractant operator failed: {exc}") from exc
    elif method == "cg":
        op._diag = mat.diagonal()
        if np.any(op._diag <= 0):
            raise SolverError("chemoattractant operator has a non-positive diagonal")
    else:
        raise ValueError(f"unknown solve method {method!r}")
    return op


def step(state: State, mesh, ops: AssembledOperators, c_op: COperator, params: ModelParams, dt: float) -> StepResult:
    """Advance ``state`` by one time step of size ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if c_op.dt != dt:
        raise ValueError(f"chemoattractant operator was built for dt={c_op.dt!r}, not {dt!r}")
    asm = ops.assembler
    ml = ops.M_l
    u = state.u
    c = state.c

    data = asm.mobility_values(u)
    ev = energy_E1(u, ml, params)
    s = s_vector(ev, params)

    u_new = np.empty_like(u)
    As = np.empty_like(u)
    theta, denom, r_new = kernels.sav_update(
        asm.indptr, asm.indices, data, ml, u, c, s, float(state.r), dt, params.chi_c, params.D_u, u_new, As
    )
    if not (math.isfinite(theta) and math.isfinite(r_new) and np.all(np.isfinite(u_new))):
        raise SolverError(f"non-finite value in the cell update at step {state.step}")

    rhs = ml * ((params.tau / dt) * c + params.delta * u_new)
    c_new, iters, resid = c_op.solve(rhs)
    if not np.all(np.isfinite(c_new)):
        raise SolverError(f"non-finite value in the chemoattractant update at step {state.step}")
    if resid > CG_RTOL:
        raise SolverError(f"chemoattractant solve residual {resid:.3e} exceeds {CG_RTOL:g}")

    n = state.step + 1
    new = State(u=u_new, c=c_new, r=r_new, t=n * dt, step=n)
    report = StepReport(theta=theta, denom=denom, c_solver_iters=iters, c_residual=resid, r_positive=r_new > 0.0)
    A = asm._csr(data)
    return StepResult(state=new, report=report, A=A, s=s, sqrt_E1=ev.sqrt_E1)


def compute_mu1(state_next: State, state_prev: State, s: np.ndarray, params: ModelParams) -> np.ndarray:
    """Nodal chemical potential of the cells, ``B r^{n+1} s - c^n``."""
    return params.B * state_next.r * np.asarray(s) - state_prev.c


def compute_mu2(state_next: State, state_prev: State, ops: AssembledOperators | None, params: ModelParams, dt: float) -> np.ndarray:
    """Nodal chemical potential of the chemoattractant, ``-tau (c^{n+1} - c^n) / dt``."""
    return -params.tau * (state_next.c - state_prev.c) / dt

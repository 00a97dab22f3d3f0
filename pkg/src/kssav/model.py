"""Volume-filling Keller-Segel model: parameters, mobility and entropy.

The cell entropy density is ``F(u) = u ln u + (1 - u) ln(1 - u) + C`` with
derivative ``g(u) = ln(u / (1 - u))``. Both are evaluated on
``[eps, 1 - eps]``, outside of which ``u`` is clamped, so they stay finite
for any nodal value. ``g' = 1 / phi`` with ``phi(u) = u (1 - u)``.

The energy carried by the scalar auxiliary variable is ``E1 = int F`` with
lumped quadrature; the factor ``B = D_u / chi_c`` sits in the chemical
potential ``mu1 = B r s - c`` rather than in ``E1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

__all__ = [
    "EntropyEval",
    "ModelParams",
    "F_reg",
    "energy_E1",
    "g_reg",
    "phi",
    "r_init",
    "s_vector",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    ``B`` is derived as ``D_u / chi_c``; it is not an independent input.
    """

    D_u: float = 1.0
    chi_c: float = 40.0
    alpha: float = 0.5
    delta: float = 1.0
    tau: float = 0.01
    C_shift: float = 1.0
    eps_reg: float = 0.01

    def __post_init__(self):
        for name in ("D_u", "chi_c", "alpha", "delta", "tau", "C_shift", "eps_reg"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        for name in ("D_u", "chi_c", "tau"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("alpha", "delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.C_shift > LN2:
            raise ValueError(f"C_shift must exceed ln 2 so that F > 0, got {self.C_shift!r}")
        if not 0.0 < self.eps_reg < 0.5:
            raise ValueError(f"eps_reg must lie in (0, 1/2), got {self.eps_reg!r}")

    @property
    def B(self) -> float:
        return self.D_u / self.chi_c


def phi(u):
    """Volume-filling mobility ``v (1 - v)`` with ``v = clamp(u, 0, 1)``."""
    v = np.clip(u, 0.0, 1.0)
    out = v * (1.0 - v)
    return float(out) if np.ndim(out) == 0 else out


def _clamped(u, params: ModelParams):
    return np.clip(u, params.eps_reg, 1.0 - params.eps_reg)


def F_reg(u, params: ModelParams):
    """Regularized entropy density; strictly positive for any ``u``."""
    v = _clamped(u, params)
    out = v * np.log(v) + (1.0 - v) * np.log1p(-v) + params.C_shift
    return float(out) if np.ndim(out) == 0 else out


def g_reg(u, params: ModelParams):
    """Derivative of the entropy density, ``ln(v / (1 - v))`` at the clamped ``v``."""
    v = _clamped(u, params)
    out = np.log(v) - np.log1p(-v)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class EntropyEval:
    E1: float
    g_nodal: np.ndarray
    sqrt_E1: float


def energy_E1(u_nodal, M_l, params: ModelParams) -> EntropyEval:
    """Lumped-quadrature entropy ``sum_i M_l[i] F(u_i)`` and nodal ``g(u_i)``."""
    u = np.ascontiguousarray(u_nodal, dtype=np.float64)
    ml = np.ascontiguousarray(M_l, dtype=np.float64)
    g = np.empty_like(u)
    E1 = kernels.entropy(u, ml, params.eps_reg, params.C_shift, g)
    if not (math.isfinite(E1) and E1 > 0.0):
        raise FloatingPointError(f"entropy energy E1 must be finite and positive, got {E1!r}")
    return EntropyEval(E1=E1, g_nodal=g, sqrt_E1=math.sqrt(E1))


def s_vector(ev: EntropyEval, params: ModelParams | None = None) -> np.ndarray:
    """Nodal ``g(u_i) / sqrt(E1)``."""
    if not ev.E1 > 0.0:
        raise ValueError(f"E1 must be positive, got {ev.E1!r}")
    return ev.g_nodal / ev.sqrt_E1


def r_init(u0_nodal, M_l, params: ModelParams) -> float:
    """Initial scalar auxiliary variable ``r(0) = sqrt(E1[u0])``."""
    return energy_E1(u0_nodal, M_l, params).sqrt_E1

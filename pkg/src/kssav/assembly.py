"""P1 finite-element matrices: mass, lumped mass, stiffness, mobility stiffness.

Matrices are ``scipy.sparse.csr_matrix`` with sorted column indices. All
matrices of a mesh share one sparsity pattern (the node adjacency graph plus
the diagonal), built once by :class:`P1Assembler`. Per-element contributions
are accumulated in element order so repeated assembly is bit-identical.

Local stiffness diagonals are stored as minus the sum of the local
off-diagonals, so every assembled stiffness-type matrix annihilates constants
up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._backend import kernels
from .mesh import Mesh, element_measures
from .model import phi as volume_filling

__all__ = [
    "AssembledOperators",
    "P1Assembler",
    "assemble_mass",
    "assemble_mobility_stiffness",
    "assemble_operators",
    "assemble_stiffness",
    "dump_coo",
    "is_symmetric",
    "lump_mass",
]


def _local_stiffness(mesh: Mesh) -> np.ndarray:
    """Element stiffness matrices, shape (n_elements, k, k)."""
    meas = element_measures(mesh)
    if mesh.dim == 1:
        w = 1.0 / meas
        kl = np.empty((mesh.n_elements, 2, 2))
        kl[:, 0, 1] = kl[:, 1, 0] = -w
        kl[:, 0, 0] = kl[:, 1, 1] = w
        return kl
    p = mesh.coords[mesh.elements]
    # gradient of barycentric coordinate k: rot90 of the opposite edge / (2S)
    grads = np.empty((mesh.n_elements, 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        grads[:, k, 0] = -e[:, 1]
        grads[:, k, 1] = e[:, 0]
    grads /= (2.0 * meas)[:, None, None]
    # orientation sign cancels in the products
    kl = meas[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)
    for k in range(3):
        kl[:, k, k] = 0.0
        kl[:, k, k] = -kl[:, k, :].sum(axis=1)
    return kl


def _local_mass(mesh: Mesh) -> np.ndarray:
    meas = element_measures(mesh)
    k = mesh.dim + 1
    # exact P1 element mass: S (1 + delta_ij) / ((k)(k+1))
    base = (np.ones((k, k)) + np.eye(k)) / (k * (k + 1))
    return meas[:, None, None] * base


class P1Assembler:
    """Sparsity pattern and per-element data for one mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        el = mesh.elements
        k = mesh.dim + 1
        n = mesh.n_nodes
        rows = np.repeat(el, k, axis=1).ravel()
        cols = np.tile(el, (1, k)).ravel()
        pat = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        pat.sum_duplicates()
        pat.sort_indices()
        self.indptr = pat.indptr.astype(np.int32)
        self.indices = pat.indices.astype(np.int32)
        self.nnz = int(self.indices.size)
        # CSR slot of every local (a, b) entry, element-major
        key = rows.astype(np.int64) * n + cols
        csr_rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
        csr_key = csr_rows * n + self.indices
        self.slots = np.ascontiguousarray(np.searchsorted(csr_key, key).reshape(-1, k * k), dtype=np.int64)
        self.elements = np.ascontiguousarray(el, dtype=np.int64)
        self.kloc = np.ascontiguousarray(_local_stiffness(mesh).reshape(-1, k * k))
        self.mloc = np.ascontiguousarray(_local_mass(mesh).reshape(-1, k * k))

    def _csr(self, data: np.ndarray) -> sp.csr_matrix:
        n = self.mesh.n_nodes
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    def _accumulate(self, vals: np.ndarray) -> np.ndarray:
        return np.bincount(self.slots.ravel(), weights=vals.ravel(), minlength=self.nnz)

    def mass(self) -> sp.csr_matrix:
        return self._csr(self._accumulate(self.mloc))

    def stiffness(self) -> sp.csr_matrix:
        return self._csr(self._accumulate(self.kloc))

    def mobility_values(self, u_nodal: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """CSR data of the volume-filling mobility stiffness matrix."""
        u = np.ascontiguousarray(u_nodal, dtype=np.float64)
        if out is None:
            out = np.empty(self.nnz)
        kernels.mobility_values(self.elements, self.kloc, self.slots, u, out)
        return out

    def mobility_stiffness(self, u_nodal, phi=None) -> sp.csr_matrix:
        u = np.asarray(u_nodal, dtype=np.float64)
        if u.shape != (self.mesh.n_nodes,):
            raise ValueError(f"u_nodal must have shape ({self.mesh.n_nodes},), got {u.shape}")
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("non-finite nodal value in mobility assembly")
        if phi is None or phi is volume_filling:
            return self._csr(self.mobility_values(u))
        ubar = u[self.elements].mean(axis=1)
        mob = np.asarray(phi(np.clip(ubar, 0.0, 1.0)), dtype=np.float64) * np.ones(len(ubar))
        return self._csr(self._accumulate(mob[:, None] * self.kloc))


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    return P1Assembler(mesh).mass()


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    return P1Assembler(mesh).stiffness()


def assemble_mobility_stiffness(mesh: Mesh, u_nodal, phi=volume_filling) -> sp.csr_matrix:
    """Stiffness matrix weighted per element by ``phi`` of the clamped mean of ``u``."""
    return P1Assembler(mesh).mobility_stiffness(u_nodal, phi)


def lump_mass(M: sp.spmatrix) -> np.ndarray:
    """Row sums of the consistent mass matrix."""
    ml = np.asarray(M.sum(axis=1)).ravel()
    if np.any(ml <= 0.0):
        raise ValueError(f"non-positive lumped mass at node {int(np.argmin(ml))}")
    return ml


@dataclass(frozen=True, eq=False)
class AssembledOperators:
    M: sp.csr_matrix
    M_l: np.ndarray
    K: sp.csr_matrix
    assembler: P1Assembler


def assemble_operators(mesh: Mesh) -> AssembledOperators:
    asm = P1Assembler(mesh)
    M = asm.mass()
    ml = lump_mass(M)
    ml.setflags(write=False)
    return AssembledOperators(M=M, M_l=ml, K=asm.stiffness(), assembler=asm)


def is_symmetric(A: sp.spmatrix, tol: float = 0.0) -> bool:
    d = (A - A.T).tocoo()
    return d.nnz == 0 or float(np.max(np.abs(d.data))) <= tol


def dump_coo(A: sp.spmatrix, path) -> None:
    """Write ``row col value`` lines, one stored entry per line, row-major."""
    C = sp.csr_matrix(A)
    C.sort_indices()
    with Path(path).open("w", encoding="utf-8") as fh:
        for i in range(C.shape[0]):
            for p in range(C.indptr[i], C.indptr[i + 1]):
                fh.write("%d %d %.17g\n" % (i, C.indices[p], C.data[p]))

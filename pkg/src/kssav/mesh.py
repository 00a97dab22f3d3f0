"""Simplicial meshes (segments in 1D, triangles in 2D) and their quality metrics.

The positivity conditions of the scheme depend on three mesh quantities:

* ``h``        the largest element diameter,
* ``kappa_h``  the smallest element altitude (element length in 1D),
* ``G_h``      the largest number of edge neighbours of a node.

Meshes are immutable: every array is flagged read-only after construction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "MeshMetrics",
    "build_interval_mesh",
    "build_rect_mesh",
    "check_acute",
    "compute_metrics",
    "element_measures",
    "export_csv",
]

ACUTE_TOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid mesh input or a mesh that fails validation."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh.

    Attributes
    ----------
    dim : int
        1 or 2.
    coords : ndarray, shape (n_nodes, dim)
    elements : ndarray of int64, shape (n_elements, dim + 1)
    boundary_nodes : ndarray of int64
        Sorted indices of the nodes on the domain boundary.
    domain_measure : float
        Length (1D) or area (2D) of the meshed domain.
    """

    dim: int
    coords: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    domain_measure: float

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(np.asarray(self.coords, dtype=np.float64)))
        object.__setattr__(self, "elements", _frozen(np.asarray(self.elements, dtype=np.int64)))
        object.__setattr__(
            self, "boundary_nodes", _frozen(np.unique(np.asarray(self.boundary_nodes, dtype=np.int64)))
        )
        _validate(self)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def x(self) -> np.ndarray:
        return self.coords[:, 0]


def element_measures(mesh: Mesh) -> np.ndarray:
    """Length of each segment (1D) or area of each triangle (2D)."""
    p = mesh.coords[mesh.elements]
    if mesh.dim == 1:
        return np.abs(p[:, 1, 0] - p[:, 0, 0])
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _element_edges(mesh: Mesh) -> np.ndarray:
    """Edge lengths per element, shape (n_elements, n_edges)."""
    p = mesh.coords[mesh.elements]
    if mesh.dim == 1:
        return np.abs(p[:, 1, 0] - p[:, 0, 0])[:, None]
    # edge k is opposite to vertex k
    return np.stack(
        [
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        ],
        axis=1,
    )


def _validate(mesh: Mesh) -> None:
    if mesh.dim not in (1, 2):
        raise MeshError(f"dim must be 1 or 2, got {mesh.dim}")
    if mesh.coords.ndim != 2 or mesh.coords.shape[1] != mesh.dim:
        raise MeshError(f"coords must have shape (n_nodes, {mesh.dim})")
    if mesh.elements.ndim != 2 or mesh.elements.shape[1] != mesh.dim + 1:
        raise MeshError(f"elements must have shape (n_elements, {mesh.dim + 1})")
    if mesh.n_elements == 0:
        raise MeshError("mesh has no elements")
    if not np.all(np.isfinite(mesh.coords)):
        raise MeshError("non-finite node coordinate")
    el = mesh.elements
    if el.min() < 0 or el.max() >= mesh.n_nodes:
        raise MeshError("element node index out of range")
    s = np.sort(el, axis=1)
    if np.any(s[:, 1:] == s[:, :-1]):
        raise MeshError("element with repeated node index")
    meas = element_measures(mesh)
    if np.any(meas <= 0.0):
        raise MeshError(f"degenerate element {int(np.argmin(meas))}")
    total = float(meas.sum())
    if abs(total - mesh.domain_measure) > 1e-12 * mesh.domain_measure:
        raise MeshError(
            f"element measures sum to {total!r}, domain measure is {mesh.domain_measure!r}"
        )


def build_interval_mesh(a: float, b: float, n: int) -> Mesh:
    """Uniform partition of ``[a, b]`` into ``n`` segments."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise MeshError("interval endpoints must be finite")
    if not a < b:
        raise MeshError(f"need a < b, got a={a}, b={b}")
    if int(n) != n or n < 1:
        raise MeshError(f"n must be a positive integer, got {n}")
    n = int(n)
    x = np.linspace(a, b, n + 1)
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(1, x[:, None], elements, [0, n], float(b - a))


def build_rect_mesh(Lx: float, Ly: float, nx: int, ny: int, origin=(0.0, 0.0)) -> Mesh:
    """Structured triangulation of ``[0, Lx] x [0, Ly]`` (shifted by ``origin``).

    Every grid cell is cut along the diagonal from its lower-left to its
    upper-right corner, which gives right triangles: all angles are at most
    pi/2. Node ``(i, j)`` has index ``j * (nx + 1) + i``.
    """
    if not (np.isfinite(Lx) and np.isfinite(Ly)) or Lx <= 0 or Ly <= 0:
        raise MeshError(f"rectangle dimensions must be positive, got {Lx} x {Ly}")
    for name, v in (("nx", nx), ("ny", ny)):
        if int(v) != v or v < 1:
            raise MeshError(f"{name} must be a positive integer, got {v}")
    nx, ny = int(nx), int(ny)
    xs = origin[0] + np.linspace(0.0, Lx, nx + 1)
    ys = origin[1] + np.linspace(0.0, Ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    n00 = j * (nx + 1) + i
    n10 = n00 + 1
    n01 = n00 + nx + 1
    n11 = n01 + 1
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.empty((2 * nx * ny, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    gi, gj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    on_bd = (gi == 0) | (gi == nx) | (gj == 0) | (gj == ny)
    boundary = np.flatnonzero(on_bd.ravel())
    return Mesh(2, coords, elements, boundary, float(Lx * Ly))


def check_acute(mesh: Mesh) -> bool:
    """True iff no triangle angle exceeds pi/2 (up to ``ACUTE_TOL``).

    Right angles are accepted. 1D meshes are always acute.
    """
    if mesh.dim == 1:
        return True
    p = mesh.coords[mesh.elements]
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        # angle <= pi/2 + tol  <=>  cos(angle) >= -sin(tol) ~ -tol
        if np.any(cos < -ACUTE_TOL):
            return False
    return True


@dataclass(frozen=True, eq=False)
class MeshMetrics:
    h: float
    kappa_h: float
    G_h: int
    adjacency: tuple[frozenset, ...]
    h_min: float

    @property
    def quasi_uniformity(self) -> float:
        """Ratio of the largest to the smallest element diameter."""
        return self.h / self.h_min


def adjacency_lists(mesh: Mesh) -> list[set]:
    nbrs: list[set] = [set() for _ in range(mesh.n_nodes)]
    k = mesh.dim + 1
    for el in mesh.elements.tolist():
        for a in range(k):
            for b in range(k):
                if a != b:
                    nbrs[el[a]].add(el[b])
    return nbrs


def compute_metrics(mesh: Mesh) -> MeshMetrics:
    edges = _element_edges(mesh)
    diam = edges.max(axis=1)
    if mesh.dim == 1:
        kappa = edges[:, 0]
    else:
        # smallest altitude is the one dropped onto the longest edge
        kappa = 2.0 * element_measures(mesh) / diam
    adj = tuple(frozenset(s) for s in adjacency_lists(mesh))
    return MeshMetrics(
        h=float(diam.max()),
        kappa_h=float(kappa.min()),
        G_h=max(len(s) for s in adj),
        adjacency=adj,
        h_min=float(diam.min()),
    )


def export_csv(mesh: Mesh, nodes_path, elements_path) -> None:
    """Write ``node_id,x[,y]`` and ``elem_id,n0,n1[,n2]`` CSV files."""
    axes = ["x", "y"][: mesh.dim]
    with Path(nodes_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", *axes])
        for i, p in enumerate(mesh.coords.tolist()):
            w.writerow([i, *("%.17g" % v for v in p)])
    with Path(elements_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["elem_id", *(f"n{k}" for k in range(mesh.dim + 1))])
        for e, nodes in enumerate(mesh.elements.tolist()):
            w.writerow([e, *nodes])

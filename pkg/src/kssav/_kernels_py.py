"""NumPy implementations of the per-step kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``KSSAV_PURE_PYTHON=1`` is set. Signatures match the extension exactly.
"""
import numpy as np

BACKEND = "python"


def entropy(u, ml, eps, C, g_out):
    v = np.clip(u, eps, 1.0 - eps)
    lv = np.log(v)
    l1v = np.log1p(-v)
    np.subtract(lv, l1v, out=g_out)
    F = v * lv + (1.0 - v) * l1v + C
    return float(np.dot(ml, F))


def mobility_values(elements, kloc, slots, u, data_out):
    """Refresh the values of the mobility-weighted stiffness matrix.

    ``kloc`` and ``slots`` have shape (n_elements, k*k); ``slots`` maps each
    local entry to its position in the CSR data array.
    """
    k = elements.shape[1]
    ubar = u[elements[:, 0]]
    for a in range(1, k):
        ubar = ubar + u[elements[:, a]]
    ubar = ubar / k
    v = np.clip(ubar, 0.0, 1.0)
    mob = v * (1.0 - v)
    vals = mob[:, None] * kloc
    data_out[:] = np.bincount(slots.ravel(), weights=vals.ravel(), minlength=data_out.shape[0])


def _offdiag(indptr, indices):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return rows, rows < indices


def quadform(indptr, indices, data, x):
    """``x^T A x`` as ``sum_{i<j} -A_ij (x_i - x_j)^2`` for zero-row-sum symmetric A."""
    rows, up = _offdiag(indptr, indices)
    d = x[rows[up]] - x[indices[up]]
    return float(np.dot(-data[up], d * d))


def edge_max(indptr, indices, data, c):
    """``max_{i != j} |A_ij| |c_j - c_i|`` over stored off-diagonal entries."""
    rows, up = _offdiag(indptr, indices)
    if not up.any():
        return 0.0
    return float(np.max(np.abs(data[up]) * np.abs(c[indices[up]] - c[rows[up]])))


def _matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=n)


def sav_update(indptr, indices, data, ml, u, c, s, r, dt, chi, Du, u_out, As_out):
    """Closed-form SAV update of the cell density.

    Returns ``(theta, denom, r_new)`` and writes ``u^{n+1}`` into ``u_out``
    and ``A s`` into ``As_out``.
    """
    As_out[:] = _matvec(indptr, indices, data, s)
    Ac = _matvec(indptr, indices, data, c)
    sMu = float(np.dot(s, ml * u))
    L1 = ml * u / dt + chi * Ac + Du * (0.5 * sMu - r) * As_out
    sAs = quadform(indptr, indices, data, s)
    denom = 1.0 + 0.5 * Du * dt * sAs
    theta = dt * float(np.dot(s, L1)) / denom
    u_out[:] = (dt * L1 - (0.5 * Du * dt * theta) * As_out) / ml
    return theta, denom, r + 0.5 * (theta - sMu)

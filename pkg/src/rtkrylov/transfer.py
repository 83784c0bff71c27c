"""Block-diagonal transfer operator: per-ray triangular integral blocks.

Radiation marches along each ray with the implicit-Euler formal solver.
Downward rays (mu < 0) enter at the surface and give lower-triangular blocks
with a zero first row; upward rays (mu > 0) enter at depth and give
upper-triangular blocks with a zero last row. The matrix-free apply marches
the O(n_space) recursion; dense blocks are assembled from the closed-form
coefficient products and serve as the independent testing path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from rtkrylov import _kernels
from rtkrylov.errors import DENSE_CAP_DEFAULT, ResourceLimitError
from rtkrylov.grid import FieldVector, Grid, Ordering


def lower_block(dtau: np.ndarray) -> np.ndarray:
    """Dense downward-ray block from the closed-form coefficients.

    Entry (i, j) is dtau_{j-1} / prod_{l=j..i} (1 + dtau_{l-1}) in 1-based
    indexing; the first row is zero (inflow node carries no source term).
    """
    q = np.concatenate([[1.0], np.cumprod(1.0 + dtau)])  # q[m] = prod_{l<=m}
    col = np.concatenate([[0.0], dtau * q[:-1]])
    return np.tril(np.outer(1.0 / q, col))


def upper_block(dtau: np.ndarray) -> np.ndarray:
    """Dense upward-ray block; entry (i, j) = dtau_j / prod_{l=i..j} (1 + dtau_l)."""
    q = np.concatenate([[1.0], np.cumprod(1.0 + dtau)])
    col = np.concatenate([dtau / q[1:], [0.0]])
    return np.triu(np.outer(q, col))


def lower_decay(dtau: np.ndarray) -> np.ndarray:
    """Boundary attenuation f_i = 1 / prod_{l<i} (1 + dtau_l); f_1 = 1."""
    return np.concatenate([[1.0], 1.0 / np.cumprod(1.0 + dtau)])


def upper_decay(dtau: np.ndarray) -> np.ndarray:
    """Boundary attenuation h_i = 1 / prod_{l=i..n-1} (1 + dtau_l); h_n = 1."""
    q = np.concatenate([[1.0], np.cumprod(1.0 + dtau)])
    return q / q[-1]


def _per_frequency_values(grid: Grid, value) -> np.ndarray:
    """Expand a boundary specification (scalar, per-frequency array, or callable
    of nu) to one value per ray."""
    if callable(value):
        return np.asarray(value(grid.ray_nu), dtype=float) * np.ones(grid.n_rays)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_rays, float(arr))
    if arr.size == grid.n_freq:
        return np.tile(arr, grid.n_angles)
    raise ValueError(f"boundary values must be scalar or length {grid.n_freq}")


@dataclass
class TransferOperator:
    grid: Grid
    dtau: np.ndarray          # (n_rays, n_space - 1) optical-depth increments
    down: np.ndarray          # bool mask, rays entering at the surface
    decay: np.ndarray         # (n_rays, n_space) boundary attenuation per node
    inflow: np.ndarray        # (n_rays,) boundary intensity feeding each ray

    @property
    def n_total(self) -> int:
        return self.grid.n_total

    # protocol shared with the 2D long-characteristics operator
    def apply_space_major(self, v: np.ndarray) -> np.ndarray:
        return apply_transfer(self, np.asarray(v, dtype=float))

    def boundary_space_major(self) -> np.ndarray:
        return boundary_term(self).values

    def materialize(self, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
        return materialize_transfer(self, dense_cap)


def build_transfer(grid: Grid, i_in_deep=0.0, i_in_surf=0.0) -> TransferOperator:
    """Precompute per-ray increments, attenuation factors, and inflow values.

    mu > 0 rays carry the boundary value from t_deep upward, mu < 0 rays
    carry the value from t_surf downward.
    """
    dtau = grid.delta_tau_table()
    down = grid.ray_mu < 0

    q = np.cumprod(1.0 + dtau, axis=1)
    qfull = np.concatenate([np.ones((grid.n_rays, 1)), q], axis=1)
    decay = np.where(down[:, None], 1.0 / qfull, qfull / qfull[:, -1:])

    deep = _per_frequency_values(grid, i_in_deep)
    surf = _per_frequency_values(grid, i_in_surf)
    inflow = np.where(down, surf, deep)
    return TransferOperator(grid=grid, dtau=dtau, down=down, decay=decay, inflow=inflow)


VectorLike = Union[np.ndarray, FieldVector]


def _as_ray_matrix(op: TransferOperator, v: VectorLike):
    """Return (matrix view (n_rays, n_space), ordering, was_field_vector)."""
    if isinstance(v, FieldVector):
        values, ordering, is_fv = v.values, v.ordering, True
    else:
        values, ordering, is_fv = np.asarray(v, dtype=float), Ordering.SPACE_MAJOR, False
    if values.size != op.n_total:
        raise ValueError(f"expected length {op.n_total}, got {values.size}")
    g = op.grid
    if ordering is Ordering.RAY_MAJOR:
        mat = values.reshape(g.n_rays, g.n_space)
    else:
        mat = np.ascontiguousarray(values.reshape(g.n_space, g.n_rays).T)
    return mat, ordering, is_fv


def _from_ray_matrix(op: TransferOperator, mat, ordering, is_fv):
    if ordering is Ordering.RAY_MAJOR:
        values = mat.ravel()
    else:
        values = mat.T.ravel()
    return FieldVector(values, ordering) if is_fv else values


def apply_transfer(op: TransferOperator, source: VectorLike) -> VectorLike:
    """Apply the homogeneous part (no boundary term) of the transfer operator."""
    mat, ordering, is_fv = _as_ray_matrix(op, source)
    out = np.empty_like(mat)
    out[op.down] = _kernels.sweep_down(op.dtau[op.down], np.ascontiguousarray(mat[op.down]))
    up = ~op.down
    out[up] = _kernels.sweep_up(op.dtau[up], np.ascontiguousarray(mat[up]))
    return _from_ray_matrix(op, out, ordering, is_fv)


def boundary_term(op: TransferOperator) -> FieldVector:
    """Inflow contribution: attenuation times the boundary intensity, space-major."""
    mat = op.decay * op.inflow[:, None]  # (n_rays, n_space)
    return FieldVector(mat.T.ravel(), Ordering.SPACE_MAJOR)


def materialize_transfer(op: TransferOperator, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
    """Assemble the dense space-major matrix from the coefficient tables."""
    n = op.n_total
    if n > dense_cap:
        raise ResourceLimitError(f"dense transfer of size {n} exceeds cap {dense_cap}")
    g = op.grid
    out = np.zeros((n, n))
    view = out.reshape(g.n_space, g.n_rays, g.n_space, g.n_rays)
    for k in range(g.n_rays):
        block = lower_block(op.dtau[k]) if op.down[k] else upper_block(op.dtau[k])
        view[:, k, :, k] = block
    return out

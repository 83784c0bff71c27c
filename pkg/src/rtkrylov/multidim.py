"""2D long-characteristics transfer on a rectangle.

Each direction gets a family of parallel characteristic lines seeded from
the upstream boundary edges and traced to the opposite boundary. Transfer is
computed on the line nodes (the same implicit-Euler recursion as in 1D,
entry to exit) and coupled to the Cartesian grid by two sparse
interpolation operators: bilinear from Cartesian to line nodes, normalized
inverse-distance from line nodes back to Cartesian (both with rows summing
to one). The composed per-direction operator is
cartesian -> lines -> transfer -> cartesian.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial import cKDTree

from rtkrylov import _kernels
from rtkrylov.errors import CoverageError, DENSE_CAP_DEFAULT, ResourceLimitError
from rtkrylov.operator import RTProblem
from rtkrylov.scattering import LegendreKernel, build_scattering
from rtkrylov.transfer import lower_block, lower_decay

_SNAP = 1e-12


class CartesianGrid2D:
    """Rectangle nodes plus an equidistant-azimuth direction set.

    Node flattening is x-major: flat index = ix * n_y + iy. The direction
    descriptor exposed to the scattering kernels is mu = cos(azimuth).
    """

    sphere_measure = 2.0 * math.pi

    def __init__(self, n_x: int, n_y: int, n_angles: int,
                 domain=(0.0, 1.0, 0.0, 1.0)):
        if n_x < 2 or n_y < 2:
            raise ValueError("need at least a 2x2 grid")
        if n_angles < 1:
            raise ValueError("need at least one direction")
        self.x0, self.x1, self.y0, self.y1 = map(float, domain)
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("empty domain rectangle")
        self.n_x, self.n_y, self.n_angles = n_x, n_y, n_angles
        self.x_nodes = np.linspace(self.x0, self.x1, n_x)
        self.y_nodes = np.linspace(self.y0, self.y1, n_y)
        self.hx = (self.x1 - self.x0) / (n_x - 1)
        self.hy = (self.y1 - self.y0) / (n_y - 1)
        # offset keeps directions away from exact lattice degeneracies by default
        self.azimuths = 2.0 * math.pi * (np.arange(n_angles) + 0.5) / n_angles
        self.directions = np.column_stack([np.cos(self.azimuths), np.sin(self.azimuths)])

        self.n_space = n_x * n_y
        self.n_rays = n_angles
        self.n_freq = 1
        self.n_total = self.n_space * self.n_rays
        xg, yg = np.meshgrid(self.x_nodes, self.y_nodes, indexing="ij")
        self.node_xy = np.column_stack([xg.ravel(), yg.ravel()])

        self.ray_mu = np.cos(self.azimuths)
        self.ray_nu = np.zeros(n_angles)
        self.nu_nodes = np.zeros(1)
        self.frequency_weights = np.ones(1)
        self.ray_frequency_weight = np.ones(n_angles)
        self.angular_weights = np.full(n_angles, 2.0 * math.pi / n_angles)
        self.combined_weights = self.angular_weights.copy()

    def sample_coefficient(self, fn) -> np.ndarray:
        """Evaluate fn(x, y, mu, nu) on the node-by-direction product."""
        vals = fn(self.node_xy[:, 0:1], self.node_xy[:, 1:2],
                  self.ray_mu[None, :], self.ray_nu[None, :])
        return np.ascontiguousarray(
            np.broadcast_to(np.asarray(vals, dtype=float), (self.n_space, self.n_rays))
        )


@dataclass
class CharacteristicLine:
    entry: np.ndarray        # boundary point where radiation enters
    length: float
    nodes: np.ndarray        # (m, 2) Cartesian coordinates, entry to exit
    arc_step: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


@dataclass
class RayFamily:
    direction: np.ndarray
    lines: list
    node_offsets: np.ndarray = field(init=False)  # (n_lines + 1,) into flat node storage

    def __post_init__(self):
        counts = [ln.n_nodes for ln in self.lines]
        self.node_offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    @property
    def n_nodes(self) -> int:
        return int(self.node_offsets[-1])

    def all_nodes(self) -> np.ndarray:
        return np.concatenate([ln.nodes for ln in self.lines], axis=0)


def _exit_parameter(p, d, grid: CartesianGrid2D) -> float:
    t = math.inf
    if d[0] > 0:
        t = min(t, (grid.x1 - p[0]) / d[0])
    elif d[0] < 0:
        t = min(t, (grid.x0 - p[0]) / d[0])
    if d[1] > 0:
        t = min(t, (grid.y1 - p[1]) / d[1])
    elif d[1] < 0:
        t = min(t, (grid.y0 - p[1]) / d[1])
    return t


def trace_rays(grid: CartesianGrid2D, direction, spacing: Optional[float] = None,
               node_step: Optional[float] = None) -> RayFamily:
    """Cover the rectangle with parallel lines along one direction.

    Seeds sit every `spacing` along both upstream edges (grid spacing by
    default, one seed per boundary cell corner); duplicate lines are merged
    and zero-length corner lines dropped. Nodes are equidistant in arc
    length with step at most min(grid spacing, node_step).
    """
    d = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(d))
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    d = d / norm
    if spacing is None:
        spacing = min(grid.hx, grid.hy)
    step = min(grid.hx, grid.hy)
    if node_step is not None:
        step = min(step, node_step)

    diag = math.hypot(grid.x1 - grid.x0, grid.y1 - grid.y0)
    seeds = []
    if abs(d[0]) > 1e-14:
        x_edge = grid.x0 if d[0] > 0 else grid.x1
        n_seed = int(round((grid.y1 - grid.y0) / spacing))
        for j in range(n_seed + 1):
            seeds.append((x_edge, min(grid.y0 + j * spacing, grid.y1)))
    if abs(d[1]) > 1e-14:
        y_edge = grid.y0 if d[1] > 0 else grid.y1
        n_seed = int(round((grid.x1 - grid.x0) / spacing))
        for j in range(n_seed + 1):
            seeds.append((min(grid.x0 + j * spacing, grid.x1), y_edge))

    perp = np.array([-d[1], d[0]])
    lines = {}
    for seed in seeds:
        p = np.asarray(seed)
        length = _exit_parameter(p, d, grid)
        if length <= 1e-12 * diag:
            continue
        offset = round(float(np.dot(perp, p)) / (1e-9 * diag))
        if offset in lines:
            continue
        m = max(2, int(math.ceil(length / step - 1e-9)) + 1)
        arc = np.linspace(0.0, length, m)
        nodes = p[None, :] + arc[:, None] * d[None, :]
        lines[offset] = CharacteristicLine(
            entry=p, length=length, nodes=nodes, arc_step=float(arc[1] - arc[0])
        )
    ordered = [lines[key] for key in sorted(lines)]
    if not ordered:
        raise ValueError("no line intersects the domain")
    return RayFamily(direction=d, lines=ordered)


@dataclass
class Interpolator:
    """Sparse row map with nonnegative coefficients summing to one per row."""

    matrix: csr_matrix

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _bilinear_rows(grid: CartesianGrid2D, points: np.ndarray):
    rows, cols, vals = [], [], []
    for r, (x, y) in enumerate(points):
        ix = min(max(int((x - grid.x0) / grid.hx), 0), grid.n_x - 2)
        iy = min(max(int((y - grid.y0) / grid.hy), 0), grid.n_y - 2)
        fx = (x - grid.x_nodes[ix]) / grid.hx
        fy = (y - grid.y_nodes[iy]) / grid.hy
        fx = 0.0 if fx < _SNAP else (1.0 if fx > 1.0 - _SNAP else fx)
        fy = 0.0 if fy < _SNAP else (1.0 if fy > 1.0 - _SNAP else fy)
        stencil = (
            (ix, iy, (1.0 - fx) * (1.0 - fy)),
            (ix + 1, iy, fx * (1.0 - fy)),
            (ix, iy + 1, (1.0 - fx) * fy),
            (ix + 1, iy + 1, fx * fy),
        )
        for jx, jy, w in stencil:
            if w != 0.0:
                rows.append(r)
                cols.append(jx * grid.n_y + jy)
                vals.append(w)
    return rows, cols, vals


def build_interpolators(family: RayFamily, grid: CartesianGrid2D):
    """(cartesian->ray bilinear, ray->cartesian inverse distance) pair."""
    pts = family.all_nodes()
    rows, cols, vals = _bilinear_rows(grid, pts)
    cart_to_ray = Interpolator(csr_matrix(
        (vals, (rows, cols)), shape=(family.n_nodes, grid.n_space)
    ))

    tree = cKDTree(pts)
    k = min(4, family.n_nodes)
    dist, idx = tree.query(grid.node_xy, k=k)
    dist = np.atleast_2d(dist.reshape(grid.n_space, k))
    idx = np.atleast_2d(idx.reshape(grid.n_space, k))
    reach = 2.0 * max(grid.hx, grid.hy)
    if np.any(dist[:, 0] > reach):
        worst = float(dist[:, 0].max())
        raise CoverageError(
            f"ray family too sparse: a Cartesian node is {worst:.3g} away from "
            f"the nearest line node (limit {reach:.3g})"
        )
    rows, cols, vals = [], [], []
    snap = _SNAP * max(grid.hx, grid.hy)
    for r in range(grid.n_space):
        if dist[r, 0] <= snap:
            rows.append(r)
            cols.append(int(idx[r, 0]))
            vals.append(1.0)
            continue
        inv = 1.0 / dist[r]
        w = inv / inv.sum()
        for j in range(k):
            rows.append(r)
            cols.append(int(idx[r, j]))
            vals.append(float(w[j]))
    ray_to_cart = Interpolator(csr_matrix(
        (vals, (rows, cols)), shape=(grid.n_space, family.n_nodes)
    ))
    return cart_to_ray, ray_to_cart


@dataclass
class _RayTransferBlock:
    cart_to_ray: Interpolator
    ray_to_cart: Interpolator
    dtau: np.ndarray          # concatenated per-line increments
    node_offsets: np.ndarray
    dtau_offsets: np.ndarray
    boundary_ray: np.ndarray  # attenuated inflow on the line nodes


class TransferOperator2D:
    """Block-per-direction composed transfer with matrix-free apply."""

    def __init__(self, grid: CartesianGrid2D, blocks: Sequence[_RayTransferBlock],
                 families: Sequence[RayFamily]):
        self.grid = grid
        self.blocks = list(blocks)
        self.families = list(families)

    @property
    def n_total(self) -> int:
        return self.grid.n_total

    def apply_space_major(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.size != self.n_total:
            raise ValueError(f"expected length {self.n_total}, got {v.size}")
        mat = v.reshape(self.grid.n_space, self.grid.n_rays)
        out = np.empty_like(mat)
        for k, blk in enumerate(self.blocks):
            on_rays = blk.cart_to_ray.apply(np.ascontiguousarray(mat[:, k]))
            swept = _kernels.sweep_lines(blk.dtau, on_rays, blk.node_offsets,
                                         blk.dtau_offsets)
            out[:, k] = blk.ray_to_cart.apply(swept)
        return out.ravel()

    def boundary_space_major(self) -> np.ndarray:
        out = np.empty((self.grid.n_space, self.grid.n_rays))
        for k, blk in enumerate(self.blocks):
            out[:, k] = blk.ray_to_cart.apply(blk.boundary_ray)
        return out.ravel()

    def materialize(self, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
        n = self.n_total
        if n > dense_cap:
            raise ResourceLimitError(f"dense 2D transfer of size {n} exceeds cap {dense_cap}")
        g = self.grid
        out = np.zeros((n, n))
        view = out.reshape(g.n_space, g.n_rays, g.n_space, g.n_rays)
        for k, blk in enumerate(self.blocks):
            m = blk.node_offsets[-1]
            lam_r = np.zeros((m, m))
            for l in range(blk.node_offsets.size - 1):
                a, b = blk.node_offsets[l], blk.node_offsets[l + 1]
                da, db = blk.dtau_offsets[l], blk.dtau_offsets[l + 1]
                lam_r[a:b, a:b] = lower_block(blk.dtau[da:db])
            composed = blk.ray_to_cart.toarray() @ lam_r @ blk.cart_to_ray.toarray()
            view[:, k, :, k] = composed
        return out


def build_transfer_2d(grid: CartesianGrid2D, chi: Union[float, Callable] = 1.0,
                      inflow: Union[float, Callable] = 0.0,
                      spacing: Optional[float] = None,
                      node_step: Optional[float] = None) -> TransferOperator2D:
    """Trace all direction families and assemble the composed transfer blocks.

    chi is the opacity (scalar or chi(x, y)); optical-depth increments are
    arc length times the midpoint opacity. inflow is the boundary intensity,
    evaluated at each line's entry point (scalar or inflow(x, y)).
    """
    chi_fn = chi if callable(chi) else (lambda x, y: np.full_like(np.asarray(x, dtype=float), float(chi)))
    inflow_fn = inflow if callable(inflow) else (lambda x, y: float(inflow))

    blocks = []
    families = []
    for k in range(grid.n_rays):
        family = trace_rays(grid, grid.directions[k], spacing=spacing, node_step=node_step)
        families.append(family)
        cart_to_ray, ray_to_cart = build_interpolators(family, grid)
        dtau_parts = []
        boundary_parts = []
        dtau_offsets = [0]
        for line in family.lines:
            mids = 0.5 * (line.nodes[1:] + line.nodes[:-1])
            seg = np.linalg.norm(np.diff(line.nodes, axis=0), axis=1)
            dtau_line = seg * np.asarray(chi_fn(mids[:, 0], mids[:, 1]), dtype=float)
            dtau_parts.append(dtau_line)
            dtau_offsets.append(dtau_offsets[-1] + dtau_line.size)
            value = float(inflow_fn(line.entry[0], line.entry[1]))
            boundary_parts.append(lower_decay(dtau_line) * value)
        blocks.append(_RayTransferBlock(
            cart_to_ray=cart_to_ray,
            ray_to_cart=ray_to_cart,
            dtau=np.concatenate(dtau_parts) if dtau_parts else np.zeros(0),
            node_offsets=family.node_offsets,
            dtau_offsets=np.asarray(dtau_offsets, dtype=np.int64),
            boundary_ray=np.concatenate(boundary_parts) if boundary_parts else np.zeros(0),
        ))
    return TransferOperator2D(grid, blocks, families)


def anisotropic_2d(n_x: int, n_y: int, n_angles: int, gamma_scale: float = 1.0,
                   coefficients=None) -> RTProblem:
    """Unit-square problem with the degree-7 kernel over mu = cos(azimuth).

    Opacity is one; the scattering fraction decays linearly with height so
    the effective albedo is (1 - y) / 2 under the direction average.
    """
    from rtkrylov.presets import LEGENDRE_L7

    grid = CartesianGrid2D(n_x, n_y, n_angles)
    transfer = build_transfer_2d(grid, chi=1.0, inflow=0.0)

    def gamma(x, y, mu, nu):
        return gamma_scale * (1.0 - y) / (4.0 * math.pi) * np.ones_like(mu + nu)

    kernel = LegendreKernel(coefficients if coefficients is not None else LEGENDRE_L7)
    scattering = build_scattering(grid, kernel, gamma)
    return RTProblem(
        grid=grid, transfer=transfer, scattering=scattering,
        thermal=np.zeros(grid.n_total),
        descriptor={"preset": "aniso2d", "kernel": "legendre",
                    "n_x": n_x, "n_y": n_y, "n_angles": n_angles,
                    "n_space": grid.n_space, "n_freq": 1},
    )


def write_family_csv(family: RayFamily, path) -> None:
    """Line geometry as CSV rows (line id, node x, node y)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line", "x", "y"])
        for l, line in enumerate(family.lines):
            for x, y in line.nodes:
                writer.writerow([l, f"{x:.17g}", f"{y:.17g}"])

"""Connectivity of ball models and claimed-cell masks: components, crossings,
origin-cluster statistics, and the critical-scale sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .allocation import (
    AllocationResult,
    PointConfiguration,
    SiteGrid,
    gale_shapley,
    phase_diagnostics,
)
from .appetite import AppetiteDistribution, sample_appetites
from .booleanmodel import BooleanModel
from .geometry import Domain, distance, pairwise_distances, replica_rng, sample_poisson


class PercolationError(ValueError):
    pass


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def labels(self) -> np.ndarray:
        """Component label per element, labels compacted to 0..k-1."""
        roots = np.fromiter((self.find(i) for i in range(len(self.parent))), dtype=np.int64,
                            count=len(self.parent))
        _, labels = np.unique(roots, return_inverse=True)
        return labels


@dataclass(frozen=True)
class ClusterReport:
    """Component census of a ball model or a cell mask.

    labels has one entry per ball (or per masked cell, -1 for cells outside
    the mask). crossing_axes flags components spanning the box along an axis;
    origin statistics describe the component containing the reference origin:
    max_origin_distance is the farthest reach from the origin, diameter the
    largest extent of that component.
    """

    labels: np.ndarray
    component_sizes: np.ndarray
    crossing_axes: np.ndarray  # (n_components, d) booleans
    origin_component: int  # -1 when the origin is not covered
    max_origin_distance: float
    diameter: float

    @property
    def n_components(self) -> int:
        return len(self.component_sizes)

    @property
    def percolates(self) -> bool:
        return bool(self.crossing_axes.any())


def _palm_origin(domain: Domain) -> np.ndarray:
    return np.zeros(domain.dim) if domain.periodic else np.asarray(domain.sides) / 2.0


def ball_components(model: BooleanModel, domain: Domain,
                    origin: np.ndarray | None = None) -> ClusterReport:
    """Overlap components of the balls; tangency does not connect."""
    radii = np.asarray(model.radii)
    if np.any(~np.isfinite(radii)):
        raise PercolationError("infinite radius in model")
    n = model.n_balls
    if origin is None:
        origin = _palm_origin(domain)
    if n == 0:
        return ClusterReport(
            labels=np.zeros(0, dtype=np.int64),
            component_sizes=np.zeros(0, dtype=np.int64),
            crossing_axes=np.zeros((0, domain.dim), dtype=bool),
            origin_component=-1,
            max_origin_distance=0.0,
            diameter=0.0,
        )
    dmat = pairwise_distances(model.centers, model.centers, domain)
    overlap = dmat < radii[:, None] + radii[None, :]
    uf = UnionFind(n)
    for i, j in np.argwhere(np.triu(overlap, k=1)):
        uf.union(int(i), int(j))
    labels = uf.labels()
    k = labels.max() + 1
    sizes = np.bincount(labels, minlength=k)

    crossing = np.zeros((k, domain.dim), dtype=bool)
    if not domain.periodic:
        for ax, L in enumerate(domain.sides):
            lo = model.centers[:, ax] - radii <= 0.0
            hi = model.centers[:, ax] + radii >= L
            for c in range(k):
                m = labels == c
                crossing[c, ax] = bool(np.any(lo & m) and np.any(hi & m))

    d_origin = distance(origin[None, :], model.centers, domain)
    covering = d_origin < radii
    if np.any(covering):
        oc = int(labels[np.argmax(covering)])
        m = labels == oc
        max_reach = float(np.max(d_origin[m] + radii[m]))
        sub = np.flatnonzero(m)
        dd = dmat[np.ix_(sub, sub)] + radii[sub][:, None] + radii[sub][None, :]
        diam = float(dd.max()) if len(sub) > 1 else float(2 * radii[sub[0]])
    else:
        oc, max_reach, diam = -1, 0.0, 0.0
    return ClusterReport(
        labels=labels,
        component_sizes=sizes,
        crossing_axes=crossing,
        origin_component=oc,
        max_origin_distance=max_reach,
        diameter=diam,
    )


def _grid_neighbors(shape: tuple[int, ...], periodic: bool) -> np.ndarray:
    """(n_edges, 2) flat-index pairs of face-adjacent cells."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    edges = []
    for ax in range(len(shape)):
        a = idx
        b = np.roll(idx, -1, axis=ax)
        if not periodic:
            sl = [slice(None)] * len(shape)
            sl[ax] = slice(0, shape[ax] - 1)
            a = idx[tuple(sl)]
            b = np.roll(idx, -1, axis=ax)[tuple(sl)]
        edges.append(np.stack([a.ravel(), b.ravel()], axis=1))
    return np.concatenate(edges, axis=0)


def mask_components(mask: np.ndarray, grid: SiteGrid,
                    origin: np.ndarray | None = None) -> ClusterReport:
    """Face-adjacency components of a boolean cell mask over the grid."""
    shape = grid.shape
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size != grid.n_cells:
        raise PercolationError("mask size does not match grid")
    n = flat.size
    labels = np.full(n, -1, dtype=np.int64)
    on = np.flatnonzero(flat)
    if on.size == 0:
        return ClusterReport(
            labels=labels,
            component_sizes=np.zeros(0, dtype=np.int64),
            crossing_axes=np.zeros((0, grid.domain.dim), dtype=bool),
            origin_component=-1,
            max_origin_distance=0.0,
            diameter=0.0,
        )
    remap = -np.ones(n, dtype=np.int64)
    remap[on] = np.arange(on.size)
    uf = UnionFind(int(on.size))
    edges = _grid_neighbors(shape, grid.domain.periodic)
    live = flat[edges[:, 0]] & flat[edges[:, 1]]
    for a, b in edges[live]:
        uf.union(int(remap[a]), int(remap[b]))
    sub_labels = uf.labels()
    labels[on] = sub_labels
    k = sub_labels.max() + 1
    sizes = np.bincount(sub_labels, minlength=k)

    d = grid.domain.dim
    crossing = np.zeros((k, d), dtype=bool)
    multi = np.unravel_index(on, shape)
    # Wrap adjacency makes face-touching meaningless on the torus; crossing
    # flags are an open-mode statistic.
    for ax in range(d if not grid.domain.periodic else 0):
        coords = multi[ax]
        lo_set = np.unique(sub_labels[coords == 0])
        hi_set = np.unique(sub_labels[coords == shape[ax] - 1])
        both = np.intersect1d(lo_set, hi_set)
        crossing[both, ax] = True

    if origin is None:
        origin = _palm_origin(grid.domain)
    cells = grid.cell_centers()
    origin_flat = _containing_cell(origin, grid)
    if flat[origin_flat]:
        oc = int(labels[origin_flat])
        member = on[sub_labels == oc]
        pts = cells[member]
        dorig = distance(origin[None, :], pts, grid.domain)
        max_reach = float(dorig.max() + grid.spacing * math.sqrt(d) / 2)
        diam = _component_diameter(pts, member, shape, grid)
    else:
        oc, max_reach, diam = -1, 0.0, 0.0
    return ClusterReport(
        labels=labels,
        component_sizes=sizes,
        crossing_axes=crossing,
        origin_component=oc,
        max_origin_distance=max_reach,
        diameter=diam,
    )


def _containing_cell(point: np.ndarray, grid: SiteGrid) -> int:
    shape = grid.shape
    ix = tuple(
        min(int(point[i] // grid.spacing), shape[i] - 1) for i in range(len(shape))
    )
    return int(np.ravel_multi_index(ix, shape))


def _component_diameter(pts: np.ndarray, member: np.ndarray,
                        shape: tuple[int, ...], grid: SiteGrid) -> float:
    """Exact diameter over cell midpoints; restricted to boundary cells when
    large (the farthest pair is always extremal, hence on the set boundary)."""
    if len(pts) > 4000:
        flat = np.zeros(int(np.prod(shape)), dtype=bool)
        flat[member] = True
        cube = flat.reshape(shape)
        interior = cube.copy()
        for ax in range(len(shape)):
            interior &= np.roll(cube, 1, axis=ax) & np.roll(cube, -1, axis=ax)
        boundary_flat = flat & ~interior.ravel()
        pts = grid.cell_centers()[np.flatnonzero(boundary_flat)]
    if len(pts) == 1:
        return float(grid.spacing)
    dd = pairwise_distances(pts, pts, grid.domain)
    return float(dd.max() + grid.spacing * math.sqrt(len(shape)))


def claimed_components(alloc: AllocationResult, grid: SiteGrid,
                       origin: np.ndarray | None = None) -> ClusterReport:
    """Components of the claimed set under face adjacency."""
    return mask_components(alloc.claimed_mask.reshape(grid.shape), grid, origin=origin)


def crossing_event(model: BooleanModel, domain: Domain, x: np.ndarray,
                   radius_low: float, radius_high: float) -> bool:
    """Does a chain of balls with radii in [radius_low, radius_high] run from
    the ball B(x, radius_high) to outside B(x, 2*radius_high)?"""
    beta = radius_high
    if beta <= 0:
        raise PercolationError("radius band upper end must be positive")
    x = np.asarray(x, dtype=float)
    if domain.periodic:
        if min(domain.sides) < 6 * beta:
            raise PercolationError("window too small for the crossing event")
    else:
        if np.any(x - 3 * beta < 0) or np.any(x + 3 * beta > np.asarray(domain.sides)):
            raise PercolationError("window too small for the crossing event")
    radii = model.radii
    sel = (radii >= radius_low) & (radii <= beta)
    if not np.any(sel):
        return False
    sub = BooleanModel(
        centers=model.centers[sel],
        radii=radii[sel],
        min_radius=model.min_radius,
        truncated=model.truncated[sel],
    )
    report = ball_components(sub, domain)
    d_x = distance(x[None, :], sub.centers, domain)
    touches_inner = d_x < sub.radii + beta
    exits_outer = d_x + sub.radii > 2 * beta
    for c in range(report.n_components):
        m = report.labels == c
        if np.any(touches_inner & m) and np.any(exits_outer & m):
            return True
    return False


@dataclass(frozen=True)
class SweepRow:
    scale: float
    crossing_probability: float
    ci_low: float
    ci_high: float
    mean_claimed_fraction: float


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    indicators: np.ndarray  # (n_scales, replicas) coupled crossing indicators
    bracket: tuple[float, float] | None  # scales bracketing crossing prob 0.5


def _wilson(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def run_replica(domain: Domain, grid: SiteGrid, intensity: float,
                dist: AppetiteDistribution, seed: int, replica: int):
    """One coupled replica: centers and appetite draws depend only on
    (seed, replica), never on the scale."""
    rng = replica_rng(seed, replica)
    centers = sample_poisson(domain, intensity, rng)
    appetites = sample_appetites(dist, len(centers), rng)
    config = PointConfiguration(centers=centers, appetites=appetites)
    return gale_shapley(config, grid), config


def critical_sweep(domain: Domain, grid: SiteGrid, intensity: float,
                   base_dist: AppetiteDistribution, scale_grid, replicas: int,
                   seed: int) -> SweepResult:
    """Crossing probability of the claimed set along an ascending scale grid.

    Replica randomness is shared across scales, so the per-replica crossing
    indicator is pathwise monotone in the scale.
    """
    scale_grid = [float(a) for a in scale_grid]
    if sorted(scale_grid) != scale_grid:
        raise PercolationError("scale grid must be ascending")
    if domain.periodic:
        raise PercolationError("crossing detection needs an open (non-periodic) box")
    indicators = np.zeros((len(scale_grid), replicas), dtype=bool)
    fractions = np.zeros((len(scale_grid), replicas))
    for ai, a in enumerate(scale_grid):
        dist = replace(base_dist, scale=a)
        for rep in range(replicas):
            alloc, config = run_replica(domain, grid, intensity, dist, seed, rep)
            report = claimed_components(alloc, grid)
            indicators[ai, rep] = report.percolates
            fractions[ai, rep] = phase_diagnostics(alloc, config, grid).claimed_volume_fraction
    rows = []
    for ai, a in enumerate(scale_grid):
        succ = int(indicators[ai].sum())
        lo, hi = _wilson(succ, replicas)
        rows.append(SweepRow(
            scale=a,
            crossing_probability=succ / replicas if replicas else 0.0,
            ci_low=lo,
            ci_high=hi,
            mean_claimed_fraction=float(fractions[ai].mean()) if replicas else 0.0,
        ))
    bracket = None
    probs = [r.crossing_probability for r in rows]
    for i in range(1, len(probs)):
        if probs[i - 1] < 0.5 <= probs[i]:
            bracket = (scale_grid[i - 1], scale_grid[i])
            break
    return SweepResult(rows=rows, indicators=indicators, bracket=bracket)

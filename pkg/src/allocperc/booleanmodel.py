"""Dominating ball radii for centers with floor-truncated appetites.

The radius of a center is the smallest r whose ball volume absorbs the total
appetite of all centers within distance 2r. The appetite sum is a step
function of r, so the infimum is found exactly by sweeping the half-distance
breakpoints. The union of these balls contains the claimed set when the scale
is below the finiteness threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import AllocationResult, PointConfiguration, SiteGrid
from .geometry import Domain, distance, pairwise_distances, unit_ball_volume


class BooleanModelError(ValueError):
    pass


@dataclass(frozen=True)
class BooleanModel:
    """Centers with their dominating radii; truncated flags mark censored radii.

    A center is censored when its 2R-ball is not fully resolved by the window
    (exits an open box, or wraps more than half a periodic side), so its R is
    only a lower bound.
    """

    centers: np.ndarray
    radii: np.ndarray
    min_radius: float
    truncated: np.ndarray

    @property
    def n_balls(self) -> int:
        return len(self.radii)


def min_radius(scale: float, floor: float, d: int) -> float:
    """Hard lower bound on every radius, forced by the appetite floor."""
    return (scale * floor / unit_ball_volume(d)) ** (1.0 / d)


def _radius_window_cap(center: np.ndarray, domain: Domain) -> float:
    """Largest r with the 2r-ball fully resolved by the window."""
    if domain.periodic:
        return min(domain.sides) / 4.0
    gaps = np.minimum(center, np.asarray(domain.sides) - center)
    return float(gaps.min()) / 2.0


def _radius_from_sorted(sorted_d: np.ndarray, sorted_app: np.ndarray, pi_d: float, d: int,
                        cap: float = math.inf) -> float:
    """First r with cumulative appetite <= ball volume, breakpoints at d_k/2.

    sorted_d[0] must be 0 (the center itself). With cap finite, the search is
    restricted to [0, cap] and cap is returned when no root lies below it.
    """
    cum = np.cumsum(sorted_app)
    starts = sorted_d / 2.0
    ends = np.append(sorted_d[1:] / 2.0, math.inf)
    roots = (cum / pi_d) ** (1.0 / d)
    candidates = np.maximum(starts, roots)
    # Coincident breakpoints give empty intervals; skip them so the sum is
    # the true closed-ball sum at the returned radius.
    ok = (roots < ends) & (starts < ends)
    idx = np.flatnonzero(ok)
    for k in idx:
        r = candidates[k]
        if r <= cap:
            return float(r)
        break  # first admissible root already beyond the cap
    return cap if math.isfinite(cap) else math.inf


def compute_radius(
    center_index: int, config: PointConfiguration, domain: Domain
) -> float:
    """Dominating radius of one center, by exact breakpoint sweep."""
    _require_floor(config)
    d = domain.dim
    pi_d = unit_ball_volume(d)
    me = config.centers[center_index]
    dists = distance(me[None, :], config.centers, domain)
    order = np.argsort(dists, kind="stable")
    return _radius_from_sorted(dists[order], config.appetites[order], pi_d, d)


def compute_radius_truncated(
    center_index: int, config: PointConfiguration, domain: Domain, cap: float
) -> float:
    """Same sweep restricted to [0, cap]; cap when no root lies below it."""
    if cap <= 0:
        raise BooleanModelError("cap must be positive")
    _require_floor(config)
    d = domain.dim
    pi_d = unit_ball_volume(d)
    me = config.centers[center_index]
    dists = distance(me[None, :], config.centers, domain)
    # The restricted sweep only sees centers within distance 2*cap.
    near = dists <= 2.0 * cap
    dn, an = dists[near], config.appetites[near]
    order = np.argsort(dn, kind="stable")
    return _radius_from_sorted(dn[order], an[order], pi_d, d, cap=cap)


def _require_floor(config: PointConfiguration) -> None:
    if np.any(config.appetites <= 0):
        raise BooleanModelError(
            "dominating radii need a positive appetite floor (every appetite > 0)"
        )


def build_boolean(config: PointConfiguration, domain: Domain) -> BooleanModel:
    """Boolean model with one dominating ball per center.

    Vectorized over centers: one pairwise distance matrix, one row sort, and
    a per-row first-admissible-root scan.
    """
    _require_floor(config)
    n = config.n_centers
    d = domain.dim
    pi_d = unit_ball_volume(d)
    if n == 0:
        return BooleanModel(
            centers=config.centers,
            radii=np.zeros(0),
            min_radius=0.0,
            truncated=np.zeros(0, dtype=bool),
        )
    dmat = pairwise_distances(config.centers, config.centers, domain)
    order = np.argsort(dmat, axis=1, kind="stable")
    sd = np.take_along_axis(dmat, order, axis=1)
    sa = config.appetites[order]
    cum = np.cumsum(sa, axis=1)
    starts = sd / 2.0
    ends = np.hstack([sd[:, 1:] / 2.0, np.full((n, 1), np.inf)])
    roots = (cum / pi_d) ** (1.0 / d)
    ok = (roots < ends) & (starts < ends)
    first = np.argmax(ok, axis=1)  # ok is guaranteed true on the last interval
    rows = np.arange(n)
    radii = np.maximum(starts[rows, first], roots[rows, first])

    caps = np.array([
        _radius_window_cap(config.centers[i], domain) for i in range(n)
    ])
    truncated = radii > caps
    b = float(config.appetites.min() / pi_d) ** (1.0 / d)
    return BooleanModel(
        centers=config.centers,
        radii=radii,
        min_radius=b,
        truncated=truncated,
    )


def check_domination(
    alloc: AllocationResult,
    model: BooleanModel,
    config: PointConfiguration,
    grid: SiteGrid,
) -> list[tuple[int, int]]:
    """Cells escaping their center's dominating ball, beyond one-cell slack."""
    if model.n_balls != config.n_centers:
        raise BooleanModelError("model and configuration sizes disagree")
    cells = grid.cell_centers()
    slack = grid.spacing * math.sqrt(grid.domain.dim)
    violations = []
    assign = alloc.assignment
    claimed = assign >= 0
    if not np.any(claimed):
        return violations
    cidx = np.flatnonzero(claimed)
    owners = assign[claimed]
    dist_own = distance(cells[claimed], config.centers[owners], grid.domain)
    bad = dist_own > model.radii[owners] + slack
    for cell, owner in zip(cidx[bad], owners[bad]):
        violations.append((int(cell), int(owner)))
    return violations


@dataclass(frozen=True)
class TailStatistics:
    r_grid: np.ndarray
    survival: np.ndarray
    sup_statistic: float
    n_radii: int


def tail_statistics(models: list[BooleanModel], n_grid: int = 200) -> TailStatistics:
    """Pooled survival of the radii on a log grid plus sup_r r^d * P[R > r].

    Censored (window-truncated) radii are excluded.
    """
    if not models:
        raise BooleanModelError("need at least one model")
    d = models[0].centers.shape[1]
    pooled = np.concatenate([m.radii[~m.truncated] for m in models])
    if pooled.size == 0:
        raise BooleanModelError("all radii are censored; nothing to pool")
    r_lo = pooled.min() * 0.5
    r_hi = pooled.max() * 1.001
    grid = np.geomspace(max(r_lo, 1e-12), r_hi, n_grid)
    pooled_sorted = np.sort(pooled)
    # P[R > r] via right-side rank
    counts = pooled.size - np.searchsorted(pooled_sorted, grid, side="right")
    survival = counts / pooled.size
    sup_stat = float(np.max(grid ** d * survival))
    # include the exact jump points, where r^d * P[R > r] peaks
    jump_stat = float(np.max(pooled_sorted ** d
                             * (pooled.size - np.searchsorted(pooled_sorted, pooled_sorted, side="left"))
                             / pooled.size))
    return TailStatistics(
        r_grid=grid,
        survival=survival,
        sup_statistic=max(sup_stat, jump_stat),
        n_radii=int(pooled.size),
    )

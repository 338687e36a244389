"""Domain primitives: boxes/tori, distances, ball volumes, Poisson sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """A finite d-dimensional box, either open (hard walls) or periodic (torus).

    sides are the edge lengths L_1..L_d; points live in [0, L_i).
    """

    sides: tuple[float, ...]
    periodic: bool = True

    def __post_init__(self):
        sides = tuple(float(s) for s in self.sides)
        if len(sides) < 1:
            raise GeometryError("domain needs at least one dimension")
        if any(s <= 0 for s in sides):
            raise GeometryError(f"side lengths must be positive, got {sides}")
        object.__setattr__(self, "sides", sides)

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        lo = pts >= 0.0
        hi = pts < np.asarray(self.sides)
        return np.all(lo & hi, axis=-1)


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional ball with unit radius."""
    if d < 1 or d != int(d):
        raise GeometryError(f"dimension must be a positive integer, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def displacement(a: np.ndarray, b: np.ndarray, domain: Domain) -> np.ndarray:
    """Vector b - a, minimum-image in periodic mode. Broadcasts."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != domain.dim or b.shape[-1] != domain.dim:
        raise GeometryError(
            f"dimension mismatch: points {a.shape[-1]}/{b.shape[-1]}d, domain {domain.dim}d"
        )
    delta = b - a
    if domain.periodic:
        sides = np.asarray(domain.sides)
        delta = delta - sides * np.round(delta / sides)
    return delta


def distance(a: np.ndarray, b: np.ndarray, domain: Domain) -> np.ndarray:
    """Euclidean distance, minimum-image in periodic mode. Broadcasts."""
    delta = displacement(a, b, domain)
    return np.sqrt(np.sum(delta * delta, axis=-1))


def pairwise_distances(points: np.ndarray, others: np.ndarray, domain: Domain) -> np.ndarray:
    """(n, m) distance matrix between two point sets.

    Accumulates squared per-axis differences to avoid the (n, m, d) temporary.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    oth = np.atleast_2d(np.asarray(others, dtype=float))
    if pts.shape[-1] != domain.dim or oth.shape[-1] != domain.dim:
        raise GeometryError(
            f"dimension mismatch: points {pts.shape[-1]}/{oth.shape[-1]}d, domain {domain.dim}d"
        )
    sq = np.zeros((len(pts), len(oth)))
    for ax, L in enumerate(domain.sides):
        delta = np.abs(np.subtract.outer(pts[:, ax], oth[:, ax]))
        if domain.periodic:
            np.minimum(delta, L - delta, out=delta)
        delta *= delta
        sq += delta
    return np.sqrt(sq, out=sq)


def replica_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """Independent stream for one replica, derived from the root seed.

    Streams are keyed by (seed, replica) only, so scheduling order and worker
    count cannot change any replica's draws.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replica,)))


def sample_poisson(
    domain: Domain,
    intensity: float,
    rng: np.random.Generator,
    palm: bool = False,
) -> np.ndarray:
    """Homogeneous Poisson sample in the domain, shape (n, d).

    With palm=True one extra point is placed at the origin (box center in
    open mode, corner in periodic mode, equivalent up to translation).
    """
    if intensity < 0:
        raise GeometryError(f"intensity must be nonnegative, got {intensity}")
    n = rng.poisson(intensity * domain.volume)
    pts = rng.random((n, domain.dim)) * np.asarray(domain.sides)
    if palm:
        origin = np.zeros(domain.dim) if domain.periodic else np.asarray(domain.sides) / 2.0
        pts = np.vstack([origin[None, :], pts])
    return pts

import numpy as np
import pytest

from allocperc.allocation import PointConfiguration, SiteGrid, gale_shapley
from allocperc.appetite import AppetiteDistribution
from allocperc.booleanmodel import BooleanModel
from allocperc.geometry import Domain, distance, replica_rng, sample_poisson
from allocperc.percolation import (
    PercolationError,
    ball_components,
    claimed_components,
    critical_sweep,
    crossing_event,
    mask_components,
)


def make_model(centers, radii):
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    return BooleanModel(
        centers=centers,
        radii=radii,
        min_radius=float(radii.min()) if len(radii) else 0.0,
        truncated=np.zeros(len(radii), dtype=bool),
    )


def bfs_labels(centers, radii, domain):
    """Plain BFS over the overlap graph; oracle for the union-find path."""
    n = len(radii)
    labels = -np.ones(n, dtype=int)
    nxt = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        stack = [s]
        labels[s] = nxt
        while stack:
            i = stack.pop()
            di = distance(centers[i][None, :], centers, domain)
            for j in np.flatnonzero((di < radii[i] + radii) & (labels < 0)):
                labels[j] = nxt
                stack.append(int(j))
        nxt += 1
    return labels


def same_partition(a, b):
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def test_collinear_chain_is_one_component():
    dom = Domain(sides=(10.0,), periodic=False)
    model = make_model([[2.0], [3.5], [5.0]], [1.0, 1.0, 1.0])
    report = ball_components(model, dom)
    assert report.n_components == 1


def test_tangency_does_not_connect():
    dom = Domain(sides=(10.0,), periodic=False)
    model = make_model([[2.0], [4.0]], [1.0, 1.0])
    report = ball_components(model, dom)
    assert report.n_components == 2


def test_infinite_radius_rejected():
    dom = Domain(sides=(10.0,), periodic=False)
    model = make_model([[2.0]], [np.inf])
    with pytest.raises(PercolationError):
        ball_components(model, dom)


@pytest.mark.parametrize("seed", range(8))
def test_ball_components_match_bfs(seed):
    dom = Domain(sides=(10.0, 10.0), periodic=bool(seed % 2))
    rng = replica_rng(seed + 10)
    centers = sample_poisson(dom, 1.5, rng)
    if len(centers) == 0:
        pytest.skip("empty draw")
    radii = rng.uniform(0.1, 0.7, size=len(centers))
    report = ball_components(make_model(centers, radii), dom)
    assert same_partition(report.labels, bfs_labels(centers, radii, dom))


def test_origin_cluster_statistics():
    dom = Domain(sides=(10.0, 10.0), periodic=False)
    # chain through the box center
    model = make_model([[5.0, 5.0], [6.5, 5.0]], [1.0, 1.0])
    report = ball_components(model, dom)
    assert report.origin_component >= 0
    assert report.max_origin_distance == pytest.approx(2.5)
    assert report.diameter == pytest.approx(3.5)
    assert report.max_origin_distance <= report.diameter <= 2 * report.max_origin_distance


def test_grid_all_and_none_claimed():
    dom = Domain(sides=(4.0, 4.0), periodic=False)
    grid = SiteGrid(domain=dom, spacing=0.5)
    full = mask_components(np.ones(grid.shape, dtype=bool), grid)
    assert full.n_components == 1
    assert full.crossing_axes.all()
    assert full.percolates
    empty = mask_components(np.zeros(grid.shape, dtype=bool), grid)
    assert empty.n_components == 0
    assert not empty.percolates


def floodfill(mask, periodic):
    shape = mask.shape
    labels = -np.ones(shape, dtype=int)
    nxt = 0
    for start in map(tuple, np.argwhere(mask)):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = nxt
        while stack:
            cell = stack.pop()
            for ax in range(len(shape)):
                for step in (-1, 1):
                    nb = list(cell)
                    nb[ax] += step
                    if periodic:
                        nb[ax] %= shape[ax]
                    elif not (0 <= nb[ax] < shape[ax]):
                        continue
                    nb = tuple(nb)
                    if mask[nb] and labels[nb] < 0:
                        labels[nb] = nxt
                        stack.append(nb)
        nxt += 1
    return labels


@pytest.mark.parametrize("seed", range(8))
def test_mask_components_match_floodfill(seed):
    dom = Domain(sides=(8.0, 8.0), periodic=bool(seed % 2))
    grid = SiteGrid(domain=dom, spacing=0.25)
    mask = replica_rng(seed + 50).random(grid.shape) < 0.55
    fast = mask_components(mask, grid).labels.reshape(grid.shape)
    slow = floodfill(mask, dom.periodic)
    on = mask.ravel()
    assert same_partition(fast.ravel()[on], slow.ravel()[on])


def test_crossing_flags_on_a_strip():
    dom = Domain(sides=(6.0, 6.0), periodic=False)
    grid = SiteGrid(domain=dom, spacing=0.5)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[:, 4] = True  # full column along axis 0
    report = mask_components(mask, grid)
    assert report.n_components == 1
    assert report.crossing_axes[0, 0]
    assert not report.crossing_axes[0, 1]


def test_crossing_event_no_balls():
    dom = Domain(sides=(20.0, 20.0), periodic=False)
    model = make_model(np.zeros((0, 2)), np.zeros(0))
    assert not crossing_event(model, dom, np.array([10.0, 10.0]), 0.0, 2.0)


def test_crossing_event_single_contained_ball():
    dom = Domain(sides=(20.0, 20.0), periodic=False)
    beta = 2.0
    model = make_model([[10.0, 10.0]], [beta])
    assert not crossing_event(model, dom, np.array([10.0, 10.0]), 0.0, beta)


def test_crossing_event_chain_reaches_out():
    dom = Domain(sides=(40.0, 40.0), periodic=False)
    beta = 2.0
    x = np.array([20.0, 20.0])
    # overlapping chain from x out to distance 2.5 * beta
    offsets = np.arange(0.0, 5.1, 1.0)
    centers = np.stack([20.0 + offsets, np.full_like(offsets, 20.0)], axis=1)
    model = make_model(centers, np.full(len(offsets), 0.8))
    assert crossing_event(model, dom, x, 0.0, beta)


def test_crossing_event_band_filter():
    dom = Domain(sides=(40.0, 40.0), periodic=False)
    beta = 2.0
    x = np.array([20.0, 20.0])
    offsets = np.arange(0.0, 5.1, 1.0)
    centers = np.stack([20.0 + offsets, np.full_like(offsets, 20.0)], axis=1)
    # radii below the band's lower end are excluded, breaking the chain
    model = make_model(centers, np.full(len(offsets), 0.8))
    assert not crossing_event(model, dom, x, 1.0, beta)


def test_crossing_event_window_check():
    dom = Domain(sides=(5.0, 5.0), periodic=False)
    model = make_model([[2.5, 2.5]], [0.5])
    with pytest.raises(PercolationError):
        crossing_event(model, dom, np.array([2.5, 2.5]), 0.0, 2.0)


def small_sweep(replicas=6):
    dom = Domain(sides=(12.0, 12.0), periodic=False)
    grid = SiteGrid(domain=dom, spacing=0.25)
    base = AppetiteDistribution("constant", {"value": 1.0}, scale=1.0, floor=1.0)
    return critical_sweep(dom, grid, 1.0, base, [0.0, 0.3, 1.3], replicas, seed=77)


def test_sweep_endpoints_and_monotonicity():
    result = small_sweep()
    probs = [r.crossing_probability for r in result.rows]
    assert probs[0] == 0.0  # zero scale claims nothing
    assert probs[-1] >= 0.8  # supercritical box is essentially full
    # coupled indicators never switch off as the scale grows
    diffs = np.diff(result.indicators.astype(int), axis=0)
    assert np.all(diffs >= 0)
    assert result.bracket is not None


def test_sweep_requires_open_box_and_sorted_grid():
    dom = Domain(sides=(8.0, 8.0), periodic=True)
    grid = SiteGrid(domain=dom, spacing=0.5)
    base = AppetiteDistribution("constant", {"value": 1.0})
    with pytest.raises(PercolationError):
        critical_sweep(dom, grid, 1.0, base, [0.1, 0.2], 2, seed=1)
    dom2 = Domain(sides=(8.0, 8.0), periodic=False)
    grid2 = SiteGrid(domain=dom2, spacing=0.5)
    with pytest.raises(PercolationError):
        critical_sweep(dom2, grid2, 1.0, base, [0.2, 0.1], 2, seed=1)


def test_boolean_no_crossing_implies_claimed_no_crossing():
    # ball-union domination passes crossing absence down to the claimed set
    dom = Domain(sides=(12.0, 12.0), periodic=False)
    grid = SiteGrid(domain=dom, spacing=0.125)
    from allocperc.booleanmodel import build_boolean

    dist = AppetiteDistribution("constant", {"value": 1.0}, scale=0.1, floor=1.0)
    checked = 0
    for rep in range(10):
        rng = replica_rng(600, rep)
        centers = sample_poisson(dom, 1.0, rng)
        if len(centers) == 0:
            continue
        config = PointConfiguration(centers, dist.quantile(rng.random(len(centers))))
        model = build_boolean(config, dom)
        ball_report = ball_components(model, dom)
        if ball_report.percolates:
            continue
        alloc = gale_shapley(config, grid)
        cell_report = claimed_components(alloc, grid)
        assert not cell_report.percolates
        checked += 1
    assert checked > 0

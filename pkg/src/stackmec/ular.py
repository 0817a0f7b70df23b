"""UAV placement by k-means plus data-capacity and energy rebalancing."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from stackmec.channel import distance_matrix
from stackmec.economics import Assignment, StrategyProfile, energy_feasible
from stackmec.errors import ConfigurationError, InfeasibleError, RebalanceError
from stackmec.scenario import Scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Clustering:
    centroids: np.ndarray  # (J, 3), z = corridor height
    labels: np.ndarray  # (I,)
    distances: np.ndarray  # (I, J) UE-to-centroid 3D distances
    iterations_used: int = 0
    sse_trace: tuple = ()  # ground-plane within-cluster SSE after each round

    @property
    def members(self) -> tuple:
        return tuple(tuple(np.flatnonzero(self.labels == j).tolist())
                     for j in range(len(self.centroids)))

    def to_assignment(self) -> Assignment:
        return Assignment.from_labels(self.labels, self.centroids)

    @classmethod
    def from_assignment(cls, a: Assignment, s: Scenario) -> "Clustering":
        return cls(np.array(a.uav_positions), a.labels,
                   distance_matrix(s.ue_positions, a.uav_positions))


def _lift(xy, height):
    return np.column_stack([xy, np.full(len(xy), height)])


def kmeans_place(s: Scenario, seed, max_iter: int = 100) -> Clustering:
    """Lloyd iteration over UE ground positions; UAVs hover at the centroids.

    Initial centroids are J distinct UEs drawn with ``seed``.  Stops when the
    centroids repeat exactly or after ``max_iter`` rounds.
    """
    n, k = s.n_ues, s.n_uavs
    if n < k:
        raise ConfigurationError(f"need at least as many UEs ({n}) as UAVs ({k})")
    if max_iter < 1:
        raise ConfigurationError("max_iter must be >= 1")
    xy = np.array(s.ue_positions[:, :2])
    height = s.height
    rng = np.random.default_rng(seed)
    centers = xy[rng.choice(n, size=k, replace=False)].copy()

    sse = []
    rounds = 0
    for rounds in range(1, max_iter + 1):
        d = distance_matrix(_lift(xy, 0.0), _lift(centers, height))
        labels = np.argmin(d, axis=1)  # ties -> lowest index
        for j in range(k):
            if (labels == j).any():
                continue
            sizes = np.bincount(labels, minlength=k)
            own = d[np.arange(n), labels]
            own = np.where(sizes[labels] > 1, own, -np.inf)
            far = int(np.argmax(own))
            labels[far] = j
        new = np.array([xy[labels == j].mean(axis=0) for j in range(k)])
        sse.append(float(((xy - new[labels]) ** 2).sum()))
        done = np.array_equal(new, centers)
        centers = new
        if done:
            break

    centroids = _lift(centers, height)
    d = distance_matrix(s.ue_positions, centroids)
    return Clustering(centroids, labels, d, rounds, tuple(sse))


def rebalance_labels(labels, distances, demands, capacities, excluded=None):
    """Overflow repair; returns ``(labels, moves)`` with moves ``(ue, from, to)``.

    While some cluster carries more demand than its capacity, its farthest
    member with positive demand that some other cluster can absorb leaves for
    the nearest such cluster, never returning to a cluster it has left.
    Clusters in ``excluded`` are never targets and must be emptied.  When no
    single move helps, the remaining UEs are repacked largest first (see
    ``_repack``).  At most ``I * J`` moves are made.
    """
    labels = np.array(labels, dtype=int)
    dist = np.asarray(distances, dtype=float)
    g = np.asarray(demands, dtype=float)
    cap = np.array(capacities, dtype=float)
    n, k = dist.shape
    if excluded is not None:
        excluded = np.asarray(excluded, dtype=bool)
        if excluded.all():
            raise InfeasibleError("no UAV available")
        cap[excluded] = -np.inf
    else:
        excluded = np.zeros(k, dtype=bool)
    if g.sum() > cap[~excluded].sum():
        raise InfeasibleError(
            f"total demand {g.sum():.6g} MB exceeds total capacity {cap[~excluded].sum():.6g} MB")

    forbidden = np.zeros((n, k), dtype=bool)
    forbidden[:, excluded] = True
    forbidden[np.arange(n), labels] = True
    moves = []

    def targets(i, room):
        return np.flatnonzero(~forbidden[i] & (room >= g[i]))

    while True:
        room = cap - np.bincount(labels, weights=g, minlength=k)
        stranded = np.flatnonzero(excluded[labels])
        if stranded.size:
            candidates = stranded
        else:
            over = np.flatnonzero((room < 0) & ~excluded)
            if over.size == 0:
                break
            j = int(over[0])
            candidates = np.flatnonzero((labels == j) & (g > 0))
            candidates = candidates[np.argsort(-dist[candidates, j], kind="stable")]
        chosen = next((int(i) for i in candidates if targets(i, room).size), None)
        if chosen is None:
            labels, extra = _repack(labels, dist, g, cap, excluded)
            moves.extend(extra)
            break
        cand = targets(chosen, room)
        dst = int(cand[np.argmin(dist[chosen, cand])])
        moves.append((chosen, int(labels[chosen]), dst))
        labels[chosen] = dst
        forbidden[chosen, dst] = True
    if len(moves) > n * k:
        raise RebalanceError(f"rebalance needed {len(moves)} moves, more than {n * k}")
    return labels, moves


def _pack(labels, dist, g, room, rule):
    new = labels.copy()
    for i in np.argsort(-g, kind="stable"):
        if rule == "nearest" and room[labels[i]] >= g[i]:
            dst = labels[i]
        else:
            cand = np.flatnonzero(room >= g[i])
            if cand.size == 0:
                return None
            key = {"nearest": dist[i, cand], "tightest": room[cand], "loosest": -room[cand]}[rule]
            dst = int(cand[np.argmin(key)])
        new[i] = dst
        room[dst] -= g[i]
    return new


def _search(labels, dist, g, room, node_limit=200_000):
    """Depth-first packing, largest demand first; None if nothing found in time."""
    order = np.argsort(-g, kind="stable")
    new = labels.copy()
    nodes = 0

    def place(pos):
        nonlocal nodes
        if pos == order.size:
            return True
        i = order[pos]
        tried = set()
        for j in np.argsort(dist[i], kind="stable"):
            if room[j] < g[i] or room[j] in tried:
                continue
            tried.add(room[j])  # equal residual rooms are interchangeable
            nodes += 1
            if nodes > node_limit:
                return False
            room[j] -= g[i]
            new[i] = j
            if place(pos + 1):
                return True
            room[j] += g[i]
        return False

    return new if place(0) else None


def _repack(labels, dist, g, cap, excluded):
    """Reassign every UE, largest demand first.

    First rule: keep the UE where it is if there is room, else the nearest
    cluster with room.  If that strands some UE, retry with best-fit and
    worst-fit placement and finally a bounded depth-first search.  Raises
    RebalanceError when all fail, which can happen even with enough total
    capacity because demands are indivisible.
    """
    room = np.where(excluded, -np.inf, cap)
    for rule in ("nearest", "tightest", "loosest"):
        new = _pack(labels, dist, g, room.copy(), rule)
        if new is not None:
            break
    else:
        new = _search(labels, dist, g, room.copy())
    if new is None:
        raise RebalanceError(
            f"no packing of demands (largest {g.max():.6g} MB) into capacities "
            f"{np.round(cap, 3).tolist()} was found")
    return new, [(int(i), int(labels[i]), int(new[i])) for i in np.flatnonzero(new != labels)]


def capacity_rebalance(c: Clustering, demands, capacities, excluded=None) -> Assignment:
    labels, moves = rebalance_labels(c.labels, c.distances, demands, capacities, excluded)
    if moves:
        log.debug("capacity rebalance moved %d UEs", len(moves))
    return Assignment.from_labels(labels, c.centroids)


def respond_availability(a: Assignment, s: Scenario, profile: StrategyProfile):
    """Flag UAVs whose energy use breaks their budget and move their members.

    Returns ``(available, assignment)``.  Members of unavailable UAVs are
    redistributed over the remaining ones by capacity rebalancing; this repeats
    until the flags stop changing.
    """
    available = energy_feasible(a, profile, s)
    while not available.all():
        if not available.any():
            raise InfeasibleError("every UAV exceeds its energy budget")
        c = Clustering.from_assignment(a, s)
        labels, _ = rebalance_labels(c.labels, c.distances, profile.offloads,
                                     s.data_capacity, excluded=~available)
        a = Assignment.from_labels(labels, a.uav_positions)
        now = energy_feasible(a, profile, s) & available
        if np.array_equal(now, available):
            break
        available = now
    return available, a

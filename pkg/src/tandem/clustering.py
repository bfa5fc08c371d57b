"""Forgy clustering and the two-run centroid-averaging variant used at every node.

Seeds are actual samples picked at random subject to a minimum pairwise
distance. Assignment is to the nearest centroid (Euclidean, ties to the lowest
index) and centroids are recomputed as cluster means until no sample changes
cluster.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, SeedSelectionError, UnsupportedSizeError

MAX_EXACT_K = 8


@dataclass(frozen=True)
class ForgyParams:
    k: int
    seed_min_distance: float = 0.0
    max_iterations: int = 100
    max_seed_retries: int = 1000

    def __post_init__(self):
        if int(self.k) < 2:
            raise ConfigError("k", "need at least 2 clusters")
        if self.seed_min_distance < 0:
            raise ConfigError("seed_min_distance", "must be >= 0")
        if int(self.max_iterations) < 1:
            raise ConfigError("max_iterations", "must be >= 1")
        if int(self.max_seed_retries) < 1:
            raise ConfigError("max_seed_retries", "must be >= 1")


@dataclass(frozen=True)
class Clustering:
    centroids: np.ndarray
    assignments: np.ndarray
    iterations_run: int
    converged: bool = True

    @property
    def k(self):
        return self.centroids.shape[0]

    def members(self, label):
        return np.flatnonzero(self.assignments == label)

    def to_dict(self):
        return {
            "centroids": self.centroids.tolist(),
            "assignments": self.assignments.tolist(),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["centroids"], dtype=np.float64),
            np.array(d["assignments"], dtype=np.int64),
            int(d["iterations_run"]),
            bool(d.get("converged", True)),
        )


def _as_matrix(data, name="data"):
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ContractError(f"{name} must be a 2-D array of row vectors, got shape {X.shape}")
    return X


def pairwise_distances(a, b):
    a, b = _as_matrix(a, "a"), _as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ContractError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1))


def select_seeds(data, params, rng):
    """Pick ``k`` distinct samples whose pairwise distances all reach the threshold.

    Candidates are drawn without replacement and rejected until admissible.
    """
    X = _as_matrix(data)
    k = params.k
    if X.shape[0] < k:
        raise ContractError(f"need at least k={k} samples, got {X.shape[0]}")
    iu = np.triu_indices(k, 1)
    for _ in range(params.max_seed_retries):
        idx = rng.choice(X.shape[0], size=k, replace=False)
        seeds = X[idx]
        d = pairwise_distances(seeds, seeds)[iu]
        if d.min() > 0 and d.min() >= params.seed_min_distance:
            return seeds.copy()
    raise SeedSelectionError(
        f"no {k} seed points at pairwise distance >= {params.seed_min_distance} "
        f"after {params.max_seed_retries} draws; lower the threshold"
    )


def assign(data, centroids):
    """Nearest-centroid label per sample; ties go to the lowest centroid index."""
    X = _as_matrix(data)
    C = _as_matrix(centroids, "centroids")
    if C.shape[0] == 0:
        raise ContractError("need at least one centroid")
    # argmin returns the first minimum, which is the tie rule
    return np.argmin(pairwise_distances(X, C), axis=1)


def _means(X, labels, k):
    centroids = np.empty((k, X.shape[1]))
    filled, empty = [], []
    for c in range(k):
        m = labels == c
        if m.any():
            centroids[c] = X[m].mean(axis=0)
            filled.append(c)
        else:
            empty.append(c)
    for c in empty:
        # re-seed at the sample farthest from its nearest centroid
        far = pairwise_distances(X, centroids[filled]).min(axis=1)
        centroids[c] = X[int(np.argmax(far))]
        filled.append(c)
    return centroids


def within_cluster_ss(data, centroids, labels):
    X = _as_matrix(data)
    C = _as_matrix(centroids, "centroids")
    return float(((X - C[labels]) ** 2).sum())


def forgy_converge(data, seeds, params):
    """Alternate assignment and mean update until no sample changes cluster."""
    X = _as_matrix(data)
    seeds = _as_matrix(seeds, "seeds")
    if seeds.shape[1] != X.shape[1]:
        raise ContractError(f"seed width {seeds.shape[1]} does not match data width {X.shape[1]}")
    k = seeds.shape[0]
    labels = assign(X, seeds)
    centroids = seeds
    for it in range(1, params.max_iterations + 1):
        centroids = _means(X, labels, k)
        new = assign(X, centroids)
        if np.array_equal(new, labels):
            return Clustering(centroids, labels, it, True)
        labels = new
    # budget exhausted: report means of the last assignment
    return Clustering(_means(X, labels, k), labels, params.max_iterations, False)


def pair_centroids(a, b):
    """Permutation ``p`` minimizing ``sum_i dist(a[i], b[p[i]])`` by exhaustive search."""
    a, b = _as_matrix(a, "a"), _as_matrix(b, "b")
    if a.shape != b.shape:
        raise ContractError(f"centroid sets differ in shape: {a.shape} vs {b.shape}")
    k = a.shape[0]
    if k > MAX_EXACT_K:
        raise UnsupportedSizeError(f"exact pairing supports k <= {MAX_EXACT_K}, got {k}")
    D = pairwise_distances(a, b)
    rows = np.arange(k)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(k)):
        cost = D[rows, perm].sum()
        if cost < best_cost:
            best, best_cost = perm, cost
    return np.array(best, dtype=np.int64)


def averaged_forgy(data, params, rng):
    """Two independent Forgy runs, centroids averaged pairwise, one final reassignment.

    The second run's centroids are matched to the first's by ``pair_centroids``
    so the result keeps the first run's label order.
    """
    X = _as_matrix(data)
    first = forgy_converge(X, select_seeds(X, params, rng), params)
    second = forgy_converge(X, select_seeds(X, params, rng), params)
    perm = pair_centroids(first.centroids, second.centroids)
    averaged = 0.5 * (first.centroids + second.centroids[perm])
    labels = assign(X, averaged)
    centroids = _means(X, labels, params.k)
    return Clustering(
        centroids,
        labels,
        first.iterations_run + second.iterations_run + 1,
        first.converged and second.converged,
    )

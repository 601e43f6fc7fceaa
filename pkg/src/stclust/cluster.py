"""K-means clustering and the ACC / NMI evaluation metrics.

K-means is implemented directly (k-means++ seeding, Lloyd iterations,
farthest-point repair of empty clusters) so restart selection, tie-breaking
and convergence semantics are pinned down. The optimal label matching inside
ACC uses scipy's linear_sum_assignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .io import LabelVector


@dataclass
class ClusterResult:
    labels: np.ndarray     # n ints in [0, k)
    centroids: np.ndarray  # [k, z]
    inertia: float
    seed: int


@dataclass
class EvaluationReport:
    acc_mean: float
    acc_std: float
    nmi_mean: float
    nmi_std: float
    runs: int
    seeds: list[int]
    acc_values: list[float]
    nmi_values: list[float]

    def to_dict(self) -> dict:
        return {
            "acc_mean": self.acc_mean,
            "acc_std": self.acc_std,
            "nmi_mean": self.nmi_mean,
            "nmi_std": self.nmi_std,
            "runs": self.runs,
            "seeds": self.seeds,
        }


def _squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # ||x||^2 - 2 x.c + ||c||^2, clipped at 0 against rounding
    d2 = (X * X).sum(axis=1)[:, None] - 2.0 * (X @ C.T) + (C * C).sum(axis=1)[None, :]
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=X.dtype)
    first = int(rng.integers(n))
    centroids[0] = X[first]
    closest = _squared_distances(X, centroids[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all points coincide with chosen centroids; fall back to uniform
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), r))
            idx = min(idx, n - 1)
        centroids[c] = X[idx]
        closest = np.minimum(closest, _squared_distances(X, centroids[c:c + 1]).ravel())
    return centroids


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iters: int, tol: float) -> tuple[np.ndarray, np.ndarray, float]:
    n, k = X.shape[0], centroids.shape[0]
    prev_inertia = np.inf
    for _ in range(max_iters):
        d2 = _squared_distances(X, centroids)
        labels = d2.argmin(axis=1)

        # repair empty clusters: claim the point currently farthest from its
        # centroid, never draining a cluster below one member
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            point_d2 = d2[np.arange(n), labels]
            for c in np.flatnonzero(counts == 0):
                candidates = np.where(counts[labels] >= 2, point_d2, -np.inf)
                donor = int(candidates.argmax())
                counts[labels[donor]] -= 1
                labels[donor] = c
                counts[c] = 1
                point_d2[donor] = -np.inf

        new_centroids = np.zeros_like(centroids)
        np.add.at(new_centroids, labels, X)
        new_centroids /= counts[:, None]

        inertia = float(_squared_distances(X, new_centroids)[np.arange(n), labels].sum())
        # Lloyd monotonicity is the correctness canary for this loop
        assert inertia <= prev_inertia + 1e-9 * max(1.0, abs(prev_inertia)), \
            f"inertia increased {prev_inertia} -> {inertia}"
        prev_inertia = inertia

        shift = float(np.linalg.norm(new_centroids - centroids))
        scale = max(float(np.linalg.norm(centroids)), 1e-12)
        centroids = new_centroids
        if shift / scale < tol:
            break

    d2 = _squared_distances(X, centroids)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels.astype(np.int64), centroids, inertia


def kmeans(X: np.ndarray, k: int, restarts: int = 10, max_iters: int = 300,
           tol: float = 1e-4, seed: int = 0) -> ClusterResult:
    """Best-of-restarts k-means (k-means++ seeding, ties kept at the lowest restart)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n = X.shape[0]
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available points")
    if restarts < 1:
        raise ValueError("need at least one restart")

    best: ClusterResult | None = None
    for r in range(restarts):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, r])))
        centroids = _kmeans_pp_init(X, k, rng)
        labels, centroids, inertia = _lloyd(X, centroids, max_iters, tol)
        if best is None or inertia < best.inertia:
            best = ClusterResult(labels=labels, centroids=centroids, inertia=inertia, seed=seed)
    return best


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ka, kb = int(a.max()) + 1, int(b.max()) + 1
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def _as_dense_labels(v) -> np.ndarray:
    if isinstance(v, LabelVector):
        return v.labels
    return LabelVector.from_raw(np.asarray(v)).labels


def clustering_accuracy(true, pred) -> float:
    """Fraction correct under the best one-to-one cluster matching (Hungarian)."""
    t = _as_dense_labels(true)
    p = _as_dense_labels(pred)
    if t.size != p.size:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted")
    table = _contingency(p, t)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[:table.shape[0], :table.shape[1]] = table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum()) / t.size


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(true, pred, normalization: str = "geometric") -> float:
    """Normalized mutual information with natural-log entropies.

    normalization picks the denominator: geometric sqrt(Hu*Hv) (default),
    arithmetic (Hu+Hv)/2, min, or max. Identical single-cluster partitions
    score 1; zero-entropy disagreements score 0.
    """
    t = _as_dense_labels(true)
    p = _as_dense_labels(pred)
    if t.size != p.size:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted")
    n = t.size
    table = _contingency(t, p)
    h_t = _entropy(table.sum(axis=1), n)
    h_p = _entropy(table.sum(axis=0), n)

    if h_t == 0.0 and h_p == 0.0:
        return 1.0  # both single-cluster, necessarily identical partitions
    if h_t == 0.0 or h_p == 0.0:
        return 0.0

    nz = table > 0
    pij = table[nz] / n
    outer = (table.sum(axis=1)[:, None] * table.sum(axis=0)[None, :])[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())

    if normalization == "geometric":
        denom = np.sqrt(h_t * h_p)
    elif normalization == "arithmetic":
        denom = 0.5 * (h_t + h_p)
    elif normalization == "min":
        denom = min(h_t, h_p)
    elif normalization == "max":
        denom = max(h_t, h_p)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return float(np.clip(mi / denom, 0.0, 1.0))


def evaluate_pipeline(Z: np.ndarray, true, k: int, runs: int = 5, base_seed: int = 0,
                      restarts: int = 10) -> EvaluationReport:
    """K-means with seeds base_seed..base_seed+runs-1; mean/std of ACC and NMI."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    t = _as_dense_labels(true)
    seeds = [base_seed + r for r in range(runs)]
    accs, nmis = [], []
    for s in seeds:
        result = kmeans(Z, k, restarts=restarts, seed=s)
        accs.append(clustering_accuracy(t, result.labels))
        nmis.append(nmi(t, result.labels))
    return EvaluationReport(
        acc_mean=float(np.mean(accs)),
        acc_std=float(np.std(accs)),
        nmi_mean=float(np.mean(nmis)),
        nmi_std=float(np.std(nmis)),
        runs=runs,
        seeds=seeds,
        acc_values=[float(a) for a in accs],
        nmi_values=[float(v) for v in nmis],
    )

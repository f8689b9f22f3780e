"""Candidate-group construction over the discovered-stream similarity matrix.

Two interchangeable algorithms produce size-k groups from ``s_dd``:

* ``group_bruteforce`` scans rows in index order and grabs each unvisited
  row's k most similar unvisited streams.
* ``group_spectral`` embeds streams via the normalized graph Laplacian,
  clusters the embedding with k-means, and reconciles cluster sizes to k.

Groups are then screened by ``validate_group`` against four strict
threshold inequalities (group mean, per-stream minimum, pairwise mean,
pairwise minimum).

All functions are deterministic: ties break toward lower indices and the
k-means seed is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels

# golden-ratio mixing constant; any fixed 64-bit value works
DEFAULT_KMEANS_SEED = 0x9E3779B97F4A7C15

__all__ = [
    "DEFAULT_KMEANS_SEED",
    "CriterionCheck",
    "GroupingThresholds",
    "RawGroup",
    "ValidationReport",
    "group_bruteforce",
    "group_spectral",
    "validate_group",
]


@dataclass(frozen=True)
class GroupingThresholds:
    t_group: float = 0.0
    t_stream: float = 0.0
    s_allpair: float = 0.0
    s_pair: float = 0.0

    def __post_init__(self) -> None:
        for name in ("t_group", "t_stream", "s_allpair", "s_pair"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class RawGroup:
    """Row indices into s_dd; ``complete`` means the target size k was met."""

    members: tuple[int, ...]
    complete: bool

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise ValueError("group members must be distinct")


@dataclass(frozen=True)
class CriterionCheck:
    name: str
    value: float | None
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    checks: tuple[CriterionCheck, ...]
    reason: str | None = None


def _check_args(s_dd: np.ndarray, k: int) -> np.ndarray:
    s = np.asarray(s_dd, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("s_dd must be square")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > s.shape[0]:
        raise ValueError(f"k={k} exceeds the {s.shape[0]} available streams")
    return s


def group_bruteforce(s_dd: np.ndarray, k: int) -> list[RawGroup]:
    """Greedy row scan: each unvisited row claims its k nearest unvisited streams.

    Ties in similarity go to the lower index. At most floor(n/k) complete
    groups are emitted; any leftover streams form one final incomplete group.
    """
    s = _check_args(s_dd, k)
    n = s.shape[0]
    visited = np.zeros(n, dtype=bool)
    groups: list[RawGroup] = []
    remaining = n
    for row in range(n):
        if visited[row] or remaining < k:
            continue
        free = np.flatnonzero(~visited)
        order = np.argsort(-s[row, free], kind="stable")
        chosen = free[order[:k]]
        visited[chosen] = True
        remaining -= k
        groups.append(RawGroup(members=tuple(int(c) for c in chosen), complete=True))
    leftover = np.flatnonzero(~visited)
    if len(leftover):
        groups.append(RawGroup(members=tuple(int(c) for c in leftover), complete=False))
    return groups


def group_spectral(
    s_dd: np.ndarray, k: int, seed: int = DEFAULT_KMEANS_SEED
) -> list[RawGroup]:
    """Laplacian-embedding + k-means grouping.

    The generalized eigenproblem of the unnormalized Laplacian is solved
    through its symmetric normalization: eigenvectors y of
    D^{-1/2} (D - S) D^{-1/2} give generalized eigenvectors v = D^{-1/2} y.
    The m = floor(n/k) smallest-eigenvalue vectors form the embedding
    columns (sign fixed so each column's largest-magnitude entry is
    positive; zero-degree streams sit at the origin). k-means then yields
    m clusters, split or flagged to match the target size k.
    """
    s = _check_args(s_dd, k)
    n = s.shape[0]
    m = n // k
    degrees = s.sum(axis=1)
    laplacian = np.diag(degrees) - s
    inv_sqrt = np.where(degrees > 0, 1.0 / np.sqrt(np.where(degrees > 0, degrees, 1.0)), 0.0)
    l_sym = laplacian * inv_sqrt[:, None] * inv_sqrt[None, :]
    _, y = kernels.jacobi_eigh(l_sym)
    embedding = inv_sqrt[:, None] * y[:, :m]
    for col in range(embedding.shape[1]):
        extreme = np.argmax(np.abs(embedding[:, col]))
        if embedding[extreme, col] < 0:
            embedding[:, col] = -embedding[:, col]
    labels = _kmeans(embedding, m, seed)
    clusters = [np.flatnonzero(labels == c) for c in range(m)]
    clusters = [c for c in clusters if len(c)]
    clusters.sort(key=lambda c: int(c[0]))
    groups: list[RawGroup] = []
    for cluster in clusters:
        groups.extend(_split_cluster([int(i) for i in cluster], s, k))
    return groups


def _split_cluster(members: list[int], s: np.ndarray, k: int) -> list[RawGroup]:
    """Reconcile a cluster to size-k groups.

    Oversized clusters are split by repeatedly extracting a k-subset built
    greedily around the highest-similarity pair; undersized remainders are
    emitted incomplete.
    """
    out: list[RawGroup] = []
    remaining = sorted(members)
    while len(remaining) > k:
        if k == 1:
            subset = [remaining[0]]
        else:
            subset = _extract_dense_subset(remaining, s, k)
        out.append(RawGroup(members=tuple(sorted(subset)), complete=True))
        remaining = [i for i in remaining if i not in subset]
    if remaining:
        out.append(RawGroup(members=tuple(remaining), complete=len(remaining) == k))
    return out


def _extract_dense_subset(pool: list[int], s: np.ndarray, k: int) -> list[int]:
    best_pair = None
    best_val = -1.0
    for a_pos, a in enumerate(pool):
        for b in pool[a_pos + 1 :]:
            if s[a, b] > best_val:
                best_val = s[a, b]
                best_pair = [a, b]
    chosen = list(best_pair)  # type: ignore[arg-type]
    while len(chosen) < k:
        best_member = None
        best_val = -1.0
        for c in pool:
            if c in chosen:
                continue
            val = float(np.sum(s[c, chosen]))
            if val > best_val:
                best_val = val
                best_member = c
        chosen.append(best_member)  # type: ignore[arg-type]
    return chosen


def _kmeans(
    points: np.ndarray, n_clusters: int, seed: int, max_iter: int = 100, tol: float = 1e-6
) -> np.ndarray:
    """Plain k-means with k-means++ seeding; empty clusters jump to the farthest point."""
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(points, n_clusters, rng)
    for _ in range(max_iter):
        dists = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = dists.argmin(axis=1)
        moved = 0.0
        for c in range(n_clusters):
            mask = labels == c
            if mask.any():
                target = points[mask].mean(axis=0)
            else:
                target = points[np.argmax(dists.min(axis=1))]
            moved = max(moved, float(np.linalg.norm(target - centroids[c])))
            centroids[c] = target
        if moved <= tol:
            break
    dists = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return dists.argmin(axis=1)


def _plusplus_init(points: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((n_clusters, points.shape[1]))
    centroids[0] = points[int(rng.integers(n))]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, n_clusters):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centroids[i] = points[idx]
        closest = np.minimum(closest, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def validate_group(
    ordered_members: Sequence[int],
    s_rd: np.ndarray,
    s_dd: np.ndarray,
    thresholds: GroupingThresholds,
    complete: bool = True,
) -> ValidationReport:
    """Apply the four strict grouping inequalities to an ordered group.

    Position i of the group is compared against reference row i. The two
    pairwise criteria are vacuously true for k=1. Incomplete groups are
    rejected outright with reason "incomplete".
    """
    if not complete:
        return ValidationReport(passed=False, checks=(), reason="incomplete")
    k = len(ordered_members)
    gammas = np.array([s_rd[pos, mem] for pos, mem in enumerate(ordered_members)])
    checks = [
        CriterionCheck(
            "group_mean", float(gammas.mean()), thresholds.t_group,
            bool(gammas.mean() > thresholds.t_group),
        ),
        CriterionCheck(
            "stream_min", float(gammas.min()), thresholds.t_stream,
            bool(gammas.min() > thresholds.t_stream),
        ),
    ]
    if k >= 2:
        pairs = np.array(
            [
                s_dd[a, b]
                for pos, a in enumerate(ordered_members)
                for b in list(ordered_members)[pos + 1 :]
            ]
        )
        checks.append(
            CriterionCheck(
                "pair_mean", float(pairs.mean()), thresholds.s_allpair,
                bool(pairs.mean() > thresholds.s_allpair),
            )
        )
        checks.append(
            CriterionCheck(
                "pair_min", float(pairs.min()), thresholds.s_pair,
                bool(pairs.min() > thresholds.s_pair),
            )
        )
    else:
        checks.append(CriterionCheck("pair_mean", None, thresholds.s_allpair, True))
        checks.append(CriterionCheck("pair_min", None, thresholds.s_pair, True))
    return ValidationReport(
        passed=all(c.passed for c in checks), checks=tuple(checks), reason=None
    )

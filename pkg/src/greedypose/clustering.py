"""Spatial reduction of per-class candidates to roughly one representative per person."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AssignmentConfig, Candidate


@dataclass
class ClusterResult:
    centers: np.ndarray  # (k, 2)
    labels: np.ndarray  # (n,) center index per input point
    inertia_history: list[float]  # within-cluster sum of squares after each assignment step


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, 2), dtype=float)
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[i] = points[idx]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans(points, k: int, iterations: int = 100, seed: int = 0) -> ClusterResult:
    """Lloyd's algorithm with k-means++ seeding, deterministic for a given seed.

    Runs until the assignment stabilizes or the iteration cap is hit. Empty
    clusters are re-seeded from the point farthest from its current center,
    so the effective cluster count stays as close to k as the data allows.
    If k exceeds the number of points it is clamped down.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must be an (n, 2) array, got shape {pts.shape}")
    if len(pts) == 0:
        raise ValueError("cannot cluster an empty point set")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    k = min(k, len(pts))

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(pts, k, rng)
    labels = np.full(len(pts), -1, dtype=int)
    history: list[float] = []

    for _ in range(iterations):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(pts)), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                centers[j] = pts[labels == j].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if len(empties) > 0:
            assigned_d2 = d2[np.arange(len(pts)), labels]
            taken: set[int] = set()
            for j in empties:
                order = np.argsort(-assigned_d2, kind="stable")
                src = next(int(i) for i in order if int(i) not in taken)
                taken.add(src)
                centers[j] = pts[src]

    return ClusterResult(centers=centers, labels=labels, inertia_history=history)


def reduce_candidates(
    cands: list[Candidate], n_people: int, config: AssignmentConfig
) -> list[Candidate]:
    """Pick at most n_people + extra representatives for one part class.

    Clusters the candidate positions and returns, per non-empty cluster, the
    member nearest its center; distance ties go to the higher unary, then the
    lower id. With candidate clustering disabled the input passes through
    untouched (the ablation baseline).
    """
    if not cands:
        return []
    klass = cands[0].part
    for c in cands:
        if c.part is not klass:
            raise ValueError(f"mixed part classes: {klass.label} vs {c.part.label}")
    if not config.enable_candidate_clustering:
        return list(cands)

    k = max(1, min(n_people + config.extra_clusters, len(cands)))
    seed = config.rng_seed * 10_007 + int(klass)
    result = kmeans(
        [c.position for c in cands], k, iterations=config.kmeans_iterations, seed=seed
    )

    reps: list[Candidate] = []
    for j in range(len(result.centers)):
        members = [c for c, lab in zip(cands, result.labels) if lab == j]
        if not members:
            continue
        cx, cy = result.centers[j]
        reps.append(
            min(members, key=lambda c: ((c.x - cx) ** 2 + (c.y - cy) ** 2, -c.unary, c.id))
        )
    return reps

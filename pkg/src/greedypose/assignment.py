"""The greedy assignment pipeline: seed person clusters from heads, then walk the
kinematic chain one part class at a time, reducing candidates, gating clusters by
anthropometric reach, committing parts by affinity, spawning clusters from strong
orphans, and suppressing structurally weak parts."""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import fmean
from typing import Mapping, Sequence

from .association import AssociationProvider
from .clustering import reduce_candidates
from .model import (
    AnthropometricTable,
    AssignmentConfig,
    Candidate,
    DEFAULT_ANTHROPOMETRY,
    DEFAULT_PREDECESSORS,
    PartClass,
    PredecessorTable,
    chain_order,
    distance,
    expected_radius,
)


@dataclass
class PersonCluster:
    """A person hypothesis: one slot per part class, plus its seed or spawn anchor.

    The anchor is the head position for seeded clusters and the spawn part's
    position otherwise; it is what proximity gating measures against.
    """

    h: int
    parts: dict[PartClass, Candidate] = field(default_factory=dict)
    spawned: bool = False
    anchor: tuple[float, float] = (0.0, 0.0)
    anchor_class: PartClass = PartClass.HEAD


@dataclass
class StageTrace:
    """Per-stage diagnostics, populated when assemble() runs with trace=True."""

    part_class: PartClass
    n_candidates: int = 0
    representative_ids: list[str] = field(default_factory=list)
    clusters_before: int = 0
    clusters_after: int = 0
    gate_radius: float | None = None
    gated: dict[str, list[int]] = field(default_factory=dict)
    gating_fallback: dict[str, bool] = field(default_factory=dict)
    affinities: list[tuple[str, int, float]] = field(default_factory=list)
    assigned: list[tuple[str, int]] = field(default_factory=list)
    spawned_ids: list[str] = field(default_factory=list)
    suppressed: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "part_class": self.part_class.label,
            "n_candidates": self.n_candidates,
            "representative_ids": self.representative_ids,
            "clusters_before": self.clusters_before,
            "clusters_after": self.clusters_after,
            "gate_radius": self.gate_radius,
            "gated": self.gated,
            "gating_fallback": self.gating_fallback,
            "affinities": [[p, h, a] for p, h, a in self.affinities],
            "assigned": [[p, h] for p, h in self.assigned],
            "spawned_ids": self.spawned_ids,
            "suppressed": [[p, s] for p, s in self.suppressed],
        }


@dataclass
class AssignmentResult:
    clusters: list[PersonCluster]
    unassigned: list[Candidate]
    suppressed: list[tuple[Candidate, float]]
    estimated_head_length: float | None = None
    trace: list[StageTrace] | None = None


def seed_clusters(head_cands: Sequence[Candidate], config: AssignmentConfig) -> list[PersonCluster]:
    """One cluster per head whose unary clears the NMS threshold."""
    for c in head_cands:
        if c.part is not PartClass.HEAD:
            raise ValueError(f"seed candidate {c.id!r} is {c.part.label}, not Head")
    clusters = []
    for c in head_cands:
        if c.unary >= config.head_nms_threshold:
            clusters.append(
                PersonCluster(
                    h=len(clusters) + 1,
                    parts={PartClass.HEAD: c},
                    spawned=False,
                    anchor=c.position,
                    anchor_class=PartClass.HEAD,
                )
            )
    return clusters


def _predecessor_parts(
    part_class: PartClass, cluster: PersonCluster, preds: PredecessorTable
) -> list[Candidate]:
    return [cluster.parts[t] for t in preds.predecessors(part_class) if t in cluster.parts]


def cluster_affinity(
    part: Candidate,
    cluster: PersonCluster,
    preds: PredecessorTable = DEFAULT_PREDECESSORS,
    assoc: AssociationProvider | None = None,
) -> float:
    """Mean pairwise probability between a part and the cluster's assigned predecessors.

    Falls back to the part's own unary when the cluster holds none of its
    predecessor classes (a freshly spawned cluster, typically): the mean is
    undefined and the unary is the only remaining evidence.
    """
    if part.part in cluster.parts:
        raise ValueError(
            f"cluster {cluster.h} already holds a {part.part.label}; affinity undefined"
        )
    if assoc is None:
        raise ValueError("an association provider is required")
    anchors = _predecessor_parts(part.part, cluster, preds)
    if not anchors:
        return part.unary
    return fmean(assoc.pairwise(part, q) for q in anchors)


def estimate_head_length(
    clusters: Sequence[PersonCluster],
    table: AnthropometricTable = DEFAULT_ANTHROPOMETRY,
) -> float | None:
    """Image scale as mean head length in pixels, or None when no cluster has head+neck.

    Head length is reconstructed from the head-neck distance via the ratio of
    the chin and neck fractions, since the radius formula is anchored at the chin.
    """
    spans = [
        distance(cl.parts[PartClass.HEAD].position, cl.parts[PartClass.NECK].position)
        for cl in clusters
        if PartClass.HEAD in cl.parts and PartClass.NECK in cl.parts
    ]
    if not spans:
        return None
    return fmean(spans) * table.chin_alpha / table.alpha_for(PartClass.NECK)


def _gate(
    part: Candidate,
    clusters: Sequence[PersonCluster],
    y_px: float,
    table: AnthropometricTable,
    config: AssignmentConfig,
) -> tuple[list[PersonCluster], bool]:
    gate = config.radius_multiplier * expected_radius(part.part, y_px, table)
    within = [cl for cl in clusters if distance(part.position, cl.anchor) <= gate]
    if within:
        return within, False
    if not clusters:
        return [], False
    nearest = min(clusters, key=lambda cl: (distance(part.position, cl.anchor), cl.h))
    return [nearest], True


def proximal_clusters(
    part: Candidate,
    clusters: Sequence[PersonCluster],
    y_px: float,
    table: AnthropometricTable = DEFAULT_ANTHROPOMETRY,
    config: AssignmentConfig = AssignmentConfig(),
) -> list[PersonCluster]:
    """Clusters whose anchor lies within the gating radius of the part.

    An empty gate falls back to the single nearest cluster, so scale-estimation
    error can never orphan a part. With gating disabled, all clusters pass.
    """
    if not config.enable_proximal_gating:
        return list(clusters)
    gated, _ = _gate(part, clusters, y_px, table, config)
    return gated


def assign_part_class(
    parts_cj: Sequence[Candidate],
    clusters: list[PersonCluster],
    y_px: float | None,
    assoc: AssociationProvider,
    anthropometry: AnthropometricTable = DEFAULT_ANTHROPOMETRY,
    predecessors: PredecessorTable = DEFAULT_PREDECESSORS,
    config: AssignmentConfig = AssignmentConfig(),
    trace: StageTrace | None = None,
) -> tuple[list[PersonCluster], list[Candidate]]:
    """Commit one part class into the clusters, greedily by descending affinity.

    All (part, gated cluster) affinities are scored first, then pairs commit in
    descending-affinity order under the occupancy constraint (one part per class
    per cluster). Ties break by higher part unary, then lower cluster id. Parts
    that never commit are returned as leftovers.
    """
    if not parts_cj:
        return clusters, []
    klass = parts_cj[0].part
    for p in parts_cj:
        if p.part is not klass:
            raise ValueError(f"mixed part classes: {klass.label} vs {p.part.label}")

    # Anthropometric gating needs a scale estimate and only makes sense once the
    # head-neck pairing is settled, i.e. from the shoulders on.
    use_gate = (
        config.enable_proximal_gating and y_px is not None and int(klass) >= int(PartClass.R_SHOULDER)
    )
    if trace is not None and use_gate:
        trace.gate_radius = config.radius_multiplier * expected_radius(klass, y_px, anthropometry)

    by_id = {cl.h: cl for cl in clusters}
    pairs: list[tuple[float, float, int, int]] = []  # (affinity, unary, cluster id, part index)
    for pi, part in enumerate(parts_cj):
        if use_gate:
            gated, fell_back = _gate(part, clusters, y_px, anthropometry, config)
        else:
            gated, fell_back = list(clusters), False
        if trace is not None:
            trace.gated[part.id] = [cl.h for cl in gated]
            trace.gating_fallback[part.id] = fell_back
        for cl in gated:
            a = cluster_affinity(part, cl, predecessors, assoc)
            pairs.append((a, part.unary, cl.h, pi))
            if trace is not None:
                trace.affinities.append((part.id, cl.h, a))

    pairs.sort(key=lambda t: (-t[0], -t[1], t[2], t[3]))
    taken: set[int] = set()
    for _, _, h, pi in pairs:
        if pi in taken:
            continue
        cl = by_id[h]
        if klass in cl.parts:
            continue
        cl.parts[klass] = parts_cj[pi]
        taken.add(pi)
        if trace is not None:
            trace.assigned.append((parts_cj[pi].id, h))

    leftover = [p for i, p in enumerate(parts_cj) if i not in taken]
    return clusters, leftover


def spawn_clusters(
    leftover: Sequence[Candidate],
    clusters: list[PersonCluster],
    config: AssignmentConfig = AssignmentConfig(),
) -> tuple[list[PersonCluster], list[Candidate]]:
    """Turn significant unassigned parts into new person clusters.

    Each leftover at or above the spawn threshold starts a cluster anchored at
    its own position (a person whose head was never detected); the rest are
    returned as rejects for the unassigned pool.
    """
    if not config.enable_spawning:
        return clusters, list(leftover)
    rejected = []
    for part in leftover:
        if part.unary >= config.spawn_threshold:
            clusters.append(
                PersonCluster(
                    h=len(clusters) + 1,
                    parts={part.part: part},
                    spawned=True,
                    anchor=part.position,
                    anchor_class=part.part,
                )
            )
        else:
            rejected.append(part)
    return clusters, rejected


def suppress_hallucinations(
    clusters: list[PersonCluster],
    stage: PartClass,
    assoc: AssociationProvider,
    preds: PredecessorTable = DEFAULT_PREDECESSORS,
    config: AssignmentConfig = AssignmentConfig(),
) -> tuple[list[PersonCluster], list[tuple[Candidate, float]]]:
    """Drop stage parts whose structural score falls below the retention threshold.

    The score averages the part's unary with its affinity to its own cluster.
    Seed heads and spawn anchors are exempt: their predecessor affinity is
    undefined. Runs per stage so a suppressed part never serves as a predecessor.
    """
    if not config.enable_suppression:
        return clusters, []
    removed: list[tuple[Candidate, float]] = []
    for cl in clusters:
        part = cl.parts.get(stage)
        if part is None or cl.anchor_class is stage:
            continue
        anchors = _predecessor_parts(stage, cl, preds)
        pi = fmean(assoc.pairwise(part, q) for q in anchors) if anchors else part.unary
        score = 0.5 * (part.unary + pi)
        if score < config.hallucination_threshold:
            del cl.parts[stage]
            removed.append((part, score))
    return clusters, removed


def _validate_detections(detections: Mapping[PartClass, Sequence[Candidate]]) -> None:
    seen: set[str] = set()
    for klass, cands in detections.items():
        for c in cands:
            if c.part is not klass:
                raise ValueError(
                    f"candidate {c.id!r} is {c.part.label} but listed under {klass.label}"
                )
            if c.id in seen:
                raise ValueError(f"duplicate candidate id {c.id!r}")
            seen.add(c.id)


def assemble(
    detections: Mapping[PartClass, Sequence[Candidate]],
    assoc: AssociationProvider,
    config: AssignmentConfig = AssignmentConfig(),
    anthropometry: AnthropometricTable = DEFAULT_ANTHROPOMETRY,
    predecessors: PredecessorTable = DEFAULT_PREDECESSORS,
    trace: bool = False,
) -> AssignmentResult:
    """Run the full pipeline over one image's detections.

    Seeds clusters from significant heads, then processes every remaining part
    class down the chain: reduce candidates, score and commit against gated
    clusters, spawn clusters from strong leftovers, suppress weak assignments.
    The head-length scale for gating is estimated once the neck stage completes.
    Deterministic for fixed inputs and config.
    """
    _validate_detections(detections)

    heads = list(detections.get(PartClass.HEAD, ()))
    clusters = seed_clusters(heads, config)
    unassigned = [c for c in heads if c.unary < config.head_nms_threshold]
    suppressed: list[tuple[Candidate, float]] = []
    traces: list[StageTrace] | None = [] if trace else None
    y_px: float | None = None

    for klass in chain_order()[1:]:
        cands = list(detections.get(klass, ()))
        st = StageTrace(part_class=klass, n_candidates=len(cands)) if trace else None
        if st is not None:
            st.clusters_before = len(clusters)

        if cands:
            reps = reduce_candidates(cands, n_people=len(clusters), config=config)
            rep_ids = {c.id for c in reps}
            unassigned.extend(c for c in cands if c.id not in rep_ids)
            if st is not None:
                st.representative_ids = [c.id for c in reps]

            clusters, leftover = assign_part_class(
                reps, clusters, y_px, assoc, anthropometry, predecessors, config, trace=st
            )
            clusters, rejected = spawn_clusters(leftover, clusters, config)
            unassigned.extend(rejected)
            if st is not None:
                st.spawned_ids = [c.id for c in leftover if c not in rejected]

            clusters, removed = suppress_hallucinations(clusters, klass, assoc, predecessors, config)
            suppressed.extend(removed)
            if st is not None:
                st.suppressed = [(c.id, s) for c, s in removed]

        if st is not None:
            st.clusters_after = len(clusters)
            traces.append(st)
        if klass is PartClass.NECK:
            y_px = estimate_head_length(clusters, anthropometry)

    return AssignmentResult(
        clusters=clusters,
        unassigned=unassigned,
        suppressed=suppressed,
        estimated_head_length=y_px,
        trace=traces,
    )

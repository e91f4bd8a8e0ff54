"""Body-part domain model: kinematic chain, anthropometric ratios, run configuration."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Sequence


class PartClass(IntEnum):
    """The 14 body-part classes, numbered in kinematic-chain order (head first)."""

    HEAD = 1
    NECK = 2
    R_SHOULDER = 3
    L_SHOULDER = 4
    R_ELBOW = 5
    L_ELBOW = 6
    R_WRIST = 7
    L_WRIST = 8
    R_HIP = 9
    L_HIP = 10
    R_KNEE = 11
    L_KNEE = 12
    R_ANKLE = 13
    L_ANKLE = 14

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "PartClass":
        try:
            return _BY_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown part class {label!r}") from None


_LABELS = {
    PartClass.HEAD: "Head",
    PartClass.NECK: "Neck",
    PartClass.R_SHOULDER: "RShoulder",
    PartClass.L_SHOULDER: "LShoulder",
    PartClass.R_ELBOW: "RElbow",
    PartClass.L_ELBOW: "LElbow",
    PartClass.R_WRIST: "RWrist",
    PartClass.L_WRIST: "LWrist",
    PartClass.R_HIP: "RHip",
    PartClass.L_HIP: "LHip",
    PartClass.R_KNEE: "RKnee",
    PartClass.L_KNEE: "LKnee",
    PartClass.R_ANKLE: "RAnkle",
    PartClass.L_ANKLE: "LAnkle",
}
_BY_LABEL = {label: part for part, label in _LABELS.items()}


def chain_order() -> list[PartClass]:
    """All part classes in head-to-ankle processing order."""
    return list(PartClass)


@dataclass(frozen=True)
class Candidate:
    """A detected keypoint: position plus the detector's confidence for its class.

    Ids are opaque strings, unique within one scene's detection set.
    """

    id: str
    part: PartClass
    x: float
    y: float
    unary: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.unary <= 1.0:
            raise ValueError(f"candidate {self.id!r}: unary {self.unary} outside [0, 1]")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"candidate {self.id!r}: non-finite position")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class AnthropometricTable:
    """Normalized distance of each part from the top of the head, as a fraction of body height.

    The head top is the measurement origin, so the head's own entry is 0.
    ``chin_alpha`` is the chin's fraction; head length in pixels divided by it
    recovers the body height scale.
    """

    alpha: Mapping[PartClass, float]
    chin_alpha: float = 0.130

    def __post_init__(self) -> None:
        missing = [p for p in PartClass if p not in self.alpha]
        if missing:
            raise ValueError(f"anthropometric table missing classes: {missing}")
        for part, a in self.alpha.items():
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha for {part.label} out of range: {a}")
        if not 0.0 < self.chin_alpha <= 1.0:
            raise ValueError(f"chin_alpha out of range: {self.chin_alpha}")

    def alpha_for(self, part: PartClass) -> float:
        return self.alpha[part]

    @classmethod
    def default(cls) -> "AnthropometricTable":
        return cls(alpha=dict(_DEFAULT_ALPHA))

    @classmethod
    def from_dict(cls, doc: Mapping[str, object]) -> "AnthropometricTable":
        alpha = dict(_DEFAULT_ALPHA)
        for label, value in dict(doc.get("alpha", {})).items():
            alpha[PartClass.from_label(str(label))] = float(value)  # type: ignore[arg-type]
        chin = float(doc.get("chin_alpha", 0.130))  # type: ignore[arg-type]
        return cls(alpha=alpha, chin_alpha=chin)


_DEFAULT_ALPHA = {
    PartClass.HEAD: 0.0,
    PartClass.NECK: 0.182,
    PartClass.R_SHOULDER: 0.224,
    PartClass.L_SHOULDER: 0.224,
    PartClass.R_ELBOW: 0.410,
    PartClass.L_ELBOW: 0.410,
    PartClass.R_WRIST: 0.556,
    PartClass.L_WRIST: 0.556,
    PartClass.R_HIP: 0.481,
    PartClass.L_HIP: 0.481,
    PartClass.R_KNEE: 0.726,
    PartClass.L_KNEE: 0.726,
    PartClass.R_ANKLE: 0.972,
    PartClass.L_ANKLE: 0.972,
}

DEFAULT_ANTHROPOMETRY = AnthropometricTable.default()


@dataclass(frozen=True)
class PredecessorTable:
    """Which already-assigned part classes anchor the affinity score of each new part."""

    preds: Mapping[PartClass, tuple[PartClass, ...]]

    def __post_init__(self) -> None:
        for part in PartClass:
            if part not in self.preds:
                raise ValueError(f"predecessor table missing {part.label}")
            for p in self.preds[part]:
                if int(p) >= int(part):
                    raise ValueError(
                        f"{p.label} cannot precede {part.label}: chain index not smaller"
                    )

    def predecessors(self, part: PartClass) -> tuple[PartClass, ...]:
        return self.preds[part]

    @classmethod
    def default(cls) -> "PredecessorTable":
        return cls(preds=dict(_DEFAULT_PREDECESSORS))

    @classmethod
    def full_chain(cls) -> "PredecessorTable":
        """Every earlier class is a predecessor (the unrestricted-context baseline)."""
        order = chain_order()
        return cls(preds={p: tuple(order[: int(p) - 1]) for p in order})

    @classmethod
    def from_dict(cls, doc: Mapping[str, Sequence[str]]) -> "PredecessorTable":
        preds = dict(_DEFAULT_PREDECESSORS)
        for label, names in doc.items():
            preds[PartClass.from_label(label)] = tuple(PartClass.from_label(n) for n in names)
        return cls(preds=preds)


_P = PartClass
_DEFAULT_PREDECESSORS: dict[PartClass, tuple[PartClass, ...]] = {
    _P.HEAD: (),
    _P.NECK: (_P.HEAD,),
    _P.R_SHOULDER: (_P.HEAD, _P.NECK),
    _P.L_SHOULDER: (_P.HEAD, _P.NECK, _P.R_SHOULDER),
    _P.R_ELBOW: (_P.HEAD, _P.NECK, _P.R_SHOULDER),
    _P.L_ELBOW: (_P.HEAD, _P.NECK, _P.L_SHOULDER),
    _P.R_WRIST: (_P.HEAD, _P.NECK, _P.R_SHOULDER, _P.R_ELBOW),
    _P.L_WRIST: (_P.HEAD, _P.NECK, _P.L_SHOULDER, _P.L_ELBOW),
    _P.R_HIP: (_P.HEAD, _P.NECK, _P.L_SHOULDER, _P.R_SHOULDER),
    _P.L_HIP: (_P.HEAD, _P.NECK, _P.R_SHOULDER, _P.L_SHOULDER),
    _P.R_KNEE: (_P.HEAD, _P.NECK, _P.R_SHOULDER, _P.L_SHOULDER, _P.R_HIP),
    _P.L_KNEE: (_P.HEAD, _P.NECK, _P.R_SHOULDER, _P.L_SHOULDER, _P.L_HIP),
    _P.R_ANKLE: (_P.R_HIP, _P.R_KNEE),
    _P.L_ANKLE: (_P.L_HIP, _P.L_KNEE),
}

DEFAULT_PREDECESSORS = PredecessorTable.default()


def expected_radius(
    part: PartClass,
    head_length_px: float,
    table: AnthropometricTable = DEFAULT_ANTHROPOMETRY,
) -> float:
    """Maximum displacement of a part from its head at the given head-length scale.

    The bound is reached when the body plane is parallel to the image plane:
    body height is head_length / chin fraction, and the part sits at its
    normalized distance down that height.
    """
    if head_length_px <= 0:
        raise ValueError(f"head length must be positive, got {head_length_px}")
    return head_length_px / table.chin_alpha * table.alpha_for(part)


@dataclass(frozen=True)
class AssignmentConfig:
    """Thresholds and toggles for one assignment run.

    The enable_* flags exist for ablation; production runs leave them all on.
    """

    head_nms_threshold: float = 0.5
    spawn_threshold: float = 0.35
    hallucination_threshold: float = 0.6
    radius_multiplier: float = 1.5
    kmeans_iterations: int = 100
    extra_clusters: int = 2
    rng_seed: int = 0
    enable_proximal_gating: bool = True
    enable_candidate_clustering: bool = True
    enable_spawning: bool = True
    enable_suppression: bool = True

    def __post_init__(self) -> None:
        for name in ("head_nms_threshold", "spawn_threshold", "hallucination_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.radius_multiplier <= 0:
            raise ValueError(f"radius_multiplier must be positive, got {self.radius_multiplier}")
        if self.kmeans_iterations < 1:
            raise ValueError(f"kmeans_iterations must be >= 1, got {self.kmeans_iterations}")
        if self.extra_clusters < 0:
            raise ValueError(f"extra_clusters must be >= 0, got {self.extra_clusters}")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError(f"rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}")

    def replace(self, **overrides) -> "AssignmentConfig":
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping[str, object]) -> "AssignmentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)  # type: ignore[arg-type]

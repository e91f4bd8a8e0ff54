"""Pairwise co-occurrence probability providers.

A provider answers "how likely do these two candidates belong to the same
person" in [0, 1]. It must be symmetric and return 1 for a candidate paired
with itself.
"""

from __future__ import annotations

import math
from typing import Mapping, Protocol

from .model import AnthropometricTable, Candidate, DEFAULT_ANTHROPOMETRY, PartClass


class AssociationProvider(Protocol):
    def pairwise(self, a: Candidate, b: Candidate) -> float: ...


class SparseAssociation:
    """Probability table keyed by candidate-id pairs.

    A single direction implies both; a pair absent from the table scores 0.
    Conflicting values for the two directions of one pair are rejected.
    """

    def __init__(self, probs: Mapping[tuple[str, str], float]):
        table: dict[frozenset[str], float] = {}
        for (a, b), p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"pairwise probability for ({a!r}, {b!r}) out of range: {p}")
            key = frozenset((a, b))
            if key in table and table[key] != p:
                raise ValueError(f"conflicting probabilities for pair ({a!r}, {b!r})")
            table[key] = p
        self._table = table

    def pairwise(self, a: Candidate, b: Candidate) -> float:
        if a.id == b.id:
            return 1.0
        return self._table.get(frozenset((a.id, b.id)), 0.0)


class GeometricAssociation:
    """Distance-consistency model at a fixed image scale.

    Scores how well the observed gap between two candidates matches the
    anthropometric expectation for their classes: exp of the squared mismatch
    over 2 sigma^2, with sigma a fraction of the body height implied by the
    head length.
    """

    def __init__(
        self,
        head_length: float,
        pairwise_sigma: float = 0.15,
        table: AnthropometricTable = DEFAULT_ANTHROPOMETRY,
    ):
        if head_length <= 0:
            raise ValueError(f"head_length must be positive, got {head_length}")
        if pairwise_sigma <= 0:
            raise ValueError(f"pairwise_sigma must be positive, got {pairwise_sigma}")
        self.head_length = head_length
        self.pairwise_sigma = pairwise_sigma
        self._table = table
        self._body_height = head_length / table.chin_alpha
        self._sigma = pairwise_sigma * self._body_height

    def expected_distance(self, a: PartClass, b: PartClass) -> float:
        return abs(self._table.alpha_for(a) - self._table.alpha_for(b)) * self._body_height

    def pairwise(self, a: Candidate, b: Candidate) -> float:
        if a.id == b.id:
            return 1.0
        d = math.hypot(a.x - b.x, a.y - b.y)
        mu = self.expected_distance(a.part, b.part)
        z = (d - mu) / self._sigma
        return math.exp(-0.5 * z * z)

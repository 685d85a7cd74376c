"""Physics-consistency filtering of recorded sample pairs.

A pair (state, successor) is kept when the recorded successor lies within a
Euclidean ball of radius ``threshold`` around the nominal physics prediction
at that state.  Pairs exactly on the boundary are kept.  The filter never
re-simulates anything: it only compares recorded successors against the
physics map, so applying it is pure and repeatable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ModelMismatchError
from .models import SystemModel
from .sampling import Dataset


@dataclass(frozen=True)
class FilterConfig:
    """Admissible deviation ``threshold`` (strictly positive)."""

    threshold: float

    def __post_init__(self):
        if not (self.threshold > 0):
            raise ValueError("threshold must be strictly positive")


@dataclass(frozen=True, eq=False)
class FilterOutcome:
    retained: Dataset
    retained_count: int
    discarded_count: int
    discrepancies: np.ndarray  # per input pair, in input order
    threshold: float

    @property
    def mask(self) -> np.ndarray:
        """True where the input pair was kept."""
        return self.discrepancies <= self.threshold


@dataclass(frozen=True, eq=False)
class DiscrepancyProfile:
    states: np.ndarray
    discrepancies: np.ndarray
    discarded_mask: np.ndarray
    # Longest contiguous run of discarded pairs, as (start index, length);
    # None when nothing was discarded.  For ordered 1-D grids this run is the
    # widest data gap the filter opens up.
    max_jump: Optional[Tuple[int, int]]


def _discrepancies(dataset: Dataset, physics: SystemModel) -> np.ndarray:
    if physics.dimension != dataset.dimension:
        raise ModelMismatchError(
            f"physics model is {physics.dimension}-dimensional, "
            f"dataset is {dataset.dimension}-dimensional"
        )
    predicted = physics.step_many(dataset.states)
    return np.linalg.norm(predicted - dataset.successors, axis=1)


def apply_filter(dataset: Dataset, physics: SystemModel, config: FilterConfig) -> FilterOutcome:
    """Keep pairs whose recorded successor is physics-consistent.

    Order is preserved and the retained dataset is flagged ``filtered``.
    An all-discarding threshold is legal and yields an empty retained set.
    """
    disc = _discrepancies(dataset, physics)
    keep = disc <= config.threshold
    retained = dataset.take(keep, filtered=True)
    return FilterOutcome(
        retained=retained,
        retained_count=int(keep.sum()),
        discarded_count=int((~keep).sum()),
        discrepancies=disc,
        threshold=config.threshold,
    )


def discrepancy_profile(
    dataset: Dataset, physics: SystemModel, config: FilterConfig
) -> DiscrepancyProfile:
    """Per-pair discrepancies plus the longest contiguous discarded run."""
    disc = _discrepancies(dataset, physics)
    discarded = disc > config.threshold
    return DiscrepancyProfile(
        states=dataset.states,
        discrepancies=disc,
        discarded_mask=discarded,
        max_jump=_longest_run(discarded),
    )


def _longest_run(mask: np.ndarray) -> Optional[Tuple[int, int]]:
    if not mask.any():
        return None
    padded = np.concatenate([[False], mask, [False]])
    edges = np.diff(padded.astype(int))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0]
    lengths = ends - starts
    best = int(np.argmax(lengths))  # first maximal run wins ties
    return int(starts[best]), int(lengths[best])

"""Data-driven Lipschitz constant estimation for fitted certificates.

Two slope families matter: the barrier map ``x -> B(x)`` and the flow
expression ``x -> B(successor(x)) - decay * B(x)`` evaluated on recorded
pairs.  Both estimators below work on finite-difference slopes between
randomly drawn sample pairs and return the maximum of the two per-family
constants, which is what the certification conditions consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barrier import BarrierCertificate
from .errors import DegenerateDataError, ModelMismatchError
from .sampling import Dataset

METHOD_PAIRWISE = "pairwise-max"
METHOD_EXTREME = "extreme-value"


@dataclass(frozen=True)
class LipschitzConfig:
    pair_budget: int = 1_000_000
    seed: int = 0
    multiplier: float = 1.1  # headroom on top of the pairwise maximum
    batches: int = 50  # extreme-value method only
    shape: float = 1.0  # assumed tail shape for the extreme-value fit

    def __post_init__(self):
        if self.pair_budget < 1:
            raise ValueError("pair_budget must be positive")
        if self.multiplier < 1.0:
            raise ValueError("multiplier must be at least 1")
        if self.batches < 2:
            raise ValueError("need at least 2 batches")
        if self.shape <= 0:
            raise ValueError("shape must be positive")


@dataclass(frozen=True)
class LipschitzEstimate:
    barrier: float  # constant for B itself
    flow: float  # constant for the decay-discounted flow expression
    method: str
    samples_used: int
    safety_multiplier: float

    @property
    def overall(self) -> float:
        return max(self.barrier, self.flow)


def _pair_slopes(certificate: BarrierCertificate, dataset: Dataset, config: LipschitzConfig):
    """Finite-difference slopes over random distinct sample pairs."""
    if certificate.template.dimension != dataset.dimension:
        raise ModelMismatchError("certificate and dataset dimensions differ")
    if dataset.count < 2:
        raise DegenerateDataError("need at least two states to form slope pairs")
    barrier_vals = certificate.evaluate(dataset.states)
    flow_vals = certificate.evaluate(dataset.successors) - certificate.decay * barrier_vals

    rng = np.random.default_rng(config.seed)
    left = rng.integers(0, dataset.count, size=config.pair_budget)
    right = rng.integers(0, dataset.count, size=config.pair_budget)
    keep = left != right
    left, right = left[keep], right[keep]
    gaps = np.linalg.norm(dataset.states[left] - dataset.states[right], axis=1)
    keep = gaps > 0.0
    if not keep.any():
        raise DegenerateDataError("all drawn state pairs coincide")
    left, right, gaps = left[keep], right[keep], gaps[keep]
    barrier_slopes = np.abs(barrier_vals[left] - barrier_vals[right]) / gaps
    flow_slopes = np.abs(flow_vals[left] - flow_vals[right]) / gaps
    return barrier_slopes, flow_slopes


def estimate_pairwise(
    certificate: BarrierCertificate, dataset: Dataset, config: LipschitzConfig
) -> LipschitzEstimate:
    """Maximum observed slope times a safety multiplier."""
    barrier_slopes, flow_slopes = _pair_slopes(certificate, dataset, config)
    return LipschitzEstimate(
        barrier=config.multiplier * float(barrier_slopes.max()),
        flow=config.multiplier * float(flow_slopes.max()),
        method=METHOD_PAIRWISE,
        samples_used=barrier_slopes.size,
        safety_multiplier=config.multiplier,
    )


def _reverse_weibull_location(maxima: np.ndarray, shape: float) -> float:
    """Moment-matched location of a reverse-Weibull fit to batch maxima.

    With ``X = loc - scale * W`` and ``W`` Weibull(shape), matching the first
    two moments gives ``loc = mean + scale * g1`` with
    ``scale = std / sqrt(g2 - g1^2)``.  A zero spread collapses to the mean.
    """
    g1 = math.gamma(1.0 + 1.0 / shape)
    g2 = math.gamma(1.0 + 2.0 / shape)
    spread = float(np.std(maxima))
    if spread == 0.0:
        return float(np.mean(maxima))
    scale = spread / math.sqrt(g2 - g1 * g1)
    return float(np.mean(maxima)) + scale * g1


def estimate_extreme_value(
    certificate: BarrierCertificate, dataset: Dataset, config: LipschitzConfig
) -> LipschitzEstimate:
    """Extreme-value estimate: fit batch maxima, report the distribution's endpoint.

    Slope observations are split into ``config.batches`` equal batches; the
    fitted location can never fall below the raw observed maximum.
    """
    barrier_slopes, flow_slopes = _pair_slopes(certificate, dataset, config)
    if barrier_slopes.size < 2 * config.batches:
        raise DegenerateDataError(
            f"{barrier_slopes.size} slope observations cannot fill "
            f"{config.batches} batches of at least 2"
        )
    batch_size = barrier_slopes.size // config.batches
    used = config.batches * batch_size

    def endpoint(slopes: np.ndarray) -> float:
        maxima = slopes[:used].reshape(config.batches, batch_size).max(axis=1)
        return max(_reverse_weibull_location(maxima, config.shape), float(slopes.max()))

    return LipschitzEstimate(
        barrier=endpoint(barrier_slopes),
        flow=endpoint(flow_slopes),
        method=METHOD_EXTREME,
        samples_used=used,
        safety_multiplier=1.0,
    )

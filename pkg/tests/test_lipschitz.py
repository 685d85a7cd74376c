import numpy as np
import pytest

from physbc.barrier import BarrierCertificate, BarrierTemplate
from physbc.errors import DegenerateDataError, ModelMismatchError
from physbc.lipschitz import (
    METHOD_EXTREME,
    METHOD_PAIRWISE,
    LipschitzConfig,
    estimate_extreme_value,
    estimate_pairwise,
)
from physbc.models import RegionBox, supply_demand
from physbc.sampling import SCHEME_GRID, Dataset, sample_grid

DOMAIN = RegionBox.interval(0.5, 2.7)


def linear_barrier(slope, decay=0.83):
    """B(x) = slope * x over the affine template (x, 1)."""
    return BarrierCertificate(
        template=BarrierTemplate.from_degree(1, 1),
        coefficients=np.array([slope, 0.0]),
        decay=decay,
        initial_level=0.0,
        unsafe_level=1.0,
    )


def test_linear_barrier_slopes_are_exact():
    data = sample_grid(supply_demand(), DOMAIN, 200)
    config = LipschitzConfig(pair_budget=20_000, seed=1, multiplier=1.0)
    estimate = estimate_pairwise(linear_barrier(3.0), data, config)
    # every finite difference of B(x) = 3x has slope exactly 3
    assert estimate.barrier == pytest.approx(3.0, rel=1e-12)
    # flow expression: 3(0.8x + 0.5) - 0.83 * 3x has slope |2.4 - 2.49|
    assert estimate.flow == pytest.approx(0.09, rel=1e-9)
    assert estimate.overall == pytest.approx(3.0)
    assert estimate.method == METHOD_PAIRWISE


def test_multiplier_scales_the_estimate():
    data = sample_grid(supply_demand(), DOMAIN, 150)
    base = LipschitzConfig(pair_budget=10_000, seed=2, multiplier=1.0)
    padded = LipschitzConfig(pair_budget=10_000, seed=2, multiplier=1.1)
    lo = estimate_pairwise(linear_barrier(3.0), data, base)
    hi = estimate_pairwise(linear_barrier(3.0), data, padded)
    assert hi.barrier == pytest.approx(1.1 * lo.barrier)
    assert hi.safety_multiplier == 1.1


def test_quadratic_barrier_estimate_brackets_true_constant():
    template = BarrierTemplate.quadratic(1)
    cert = BarrierCertificate(template, np.array([1.0, 0.0, 0.0]), 0.83, 0.0, 1.0)
    box = RegionBox.interval(0.0, 1.0)

    class Identity:
        dimension = 1

        @staticmethod
        def step_many(x):
            return x.copy()

    data = sample_grid(Identity(), box, 600)
    config = LipschitzConfig(pair_budget=300_000, seed=3, multiplier=1.1)
    estimate = estimate_pairwise(cert, data, config)
    # sup |B'| = 2 on [0, 1]; secant slopes approach but never exceed it
    assert 1.8 <= estimate.barrier / 1.1 <= 2.0
    assert estimate.barrier <= 2.0 * 1.1 + 1e-9


def test_pairwise_is_deterministic_per_seed():
    data = sample_grid(supply_demand(), DOMAIN, 100)
    cert = linear_barrier(2.0)
    a = estimate_pairwise(cert, data, LipschitzConfig(pair_budget=5_000, seed=9))
    b = estimate_pairwise(cert, data, LipschitzConfig(pair_budget=5_000, seed=9))
    assert (a.barrier, a.flow, a.samples_used) == (b.barrier, b.flow, b.samples_used)


def test_extreme_value_never_undercuts_observed_max():
    data = sample_grid(supply_demand(), DOMAIN, 400)
    template = BarrierTemplate.quadratic(1)
    cert = BarrierCertificate(template, np.array([2.0, -1.0, 0.5]), 0.83, 0.0, 1.0)
    config = LipschitzConfig(pair_budget=50_000, seed=4, batches=40)
    extreme = estimate_extreme_value(cert, data, config)
    raw = estimate_pairwise(cert, data, LipschitzConfig(pair_budget=50_000, seed=4,
                                                        multiplier=1.0))
    assert extreme.barrier >= raw.barrier - 1e-12
    assert extreme.flow >= raw.flow - 1e-12
    assert extreme.method == METHOD_EXTREME
    assert extreme.safety_multiplier == 1.0


def test_extreme_value_collapses_to_mean_for_constant_slopes():
    # linear barrier: every batch maximum equals 3, spread is zero
    data = sample_grid(supply_demand(), DOMAIN, 300)
    config = LipschitzConfig(pair_budget=30_000, seed=5, batches=30)
    estimate = estimate_extreme_value(linear_barrier(3.0), data, config)
    assert estimate.barrier == pytest.approx(3.0, rel=1e-12)


def test_extreme_value_needs_enough_observations():
    data = sample_grid(supply_demand(), DOMAIN, 5)
    config = LipschitzConfig(pair_budget=20, seed=6, batches=50)
    with pytest.raises(DegenerateDataError):
        estimate_extreme_value(linear_barrier(1.0), data, config)


def test_degenerate_datasets_are_rejected():
    cert = linear_barrier(1.0)
    one = Dataset(np.array([[1.0]]), np.array([[1.3]]), SCHEME_GRID, DOMAIN)
    with pytest.raises(DegenerateDataError):
        estimate_pairwise(cert, one, LipschitzConfig(pair_budget=100, seed=0))
    same = Dataset(np.full((5, 1), 1.0), np.full((5, 1), 1.3), SCHEME_GRID, DOMAIN)
    with pytest.raises(DegenerateDataError):
        estimate_pairwise(cert, same, LipschitzConfig(pair_budget=100, seed=0))


def test_dimension_mismatch_is_rejected():
    square = RegionBox(np.zeros(2), np.ones(2))
    xs = np.array([[0.1, 0.2], [0.8, 0.9]])
    data = Dataset(xs, xs, SCHEME_GRID, square)
    with pytest.raises(ModelMismatchError):
        estimate_pairwise(linear_barrier(1.0), data, LipschitzConfig(pair_budget=100, seed=0))


def test_config_validation():
    with pytest.raises(ValueError):
        LipschitzConfig(pair_budget=0)
    with pytest.raises(ValueError):
        LipschitzConfig(multiplier=0.9)
    with pytest.raises(ValueError):
        LipschitzConfig(batches=1)
    with pytest.raises(ValueError):
        LipschitzConfig(shape=0.0)

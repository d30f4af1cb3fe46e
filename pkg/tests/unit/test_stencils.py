"""Tests for nonuniform three-point derivatives."""

from __future__ import annotations

import numpy as np
import pytest

from wavebreak.core.errors import ImminentCrossingError
from wavebreak.solvers.stencils import (
    check_spacing,
    neighbour_pattern,
    nonuniform_derivative,
    spacings,
)


@pytest.fixture
def irregular_nodes() -> np.ndarray:
    rng = np.random.default_rng(7)
    return np.sort(rng.uniform(-1.0, 1.0, 40))


def test_exact_on_quadratics(irregular_nodes):
    x = irregular_nodes
    v = 3.0 * x**2 - 2.0 * x + 0.5
    np.testing.assert_allclose(nonuniform_derivative(x, v), 6.0 * x - 2.0, atol=1e-9)


def test_periodic_wrap_on_sine():
    L = 2.0 * np.pi
    x = np.linspace(0.0, L, 200, endpoint=False)
    x = x + 0.01 * np.sin(x)
    derivative = nonuniform_derivative(x, np.sin(x), period=L)
    np.testing.assert_allclose(derivative, np.cos(x), atol=1e-3)


def test_second_order_convergence():
    errors = []
    for n in (50, 100):
        x = np.linspace(0.0, 1.0, n) ** 1.5
        errors.append(np.max(np.abs(nonuniform_derivative(x, np.exp(x)) - np.exp(x))))
    assert errors[0] / errors[1] > 3.0


def test_spacings_include_wrap_gap():
    x = np.array([0.0, 0.5, 1.5])
    np.testing.assert_allclose(spacings(x, None), [0.5, 1.0])
    np.testing.assert_allclose(spacings(x, 2.0), [0.5, 1.0, 0.5])


def test_crossing_is_reported_with_its_index():
    x = np.array([0.0, 0.3, 0.3 + 1e-12, 0.8])
    with pytest.raises(ImminentCrossingError) as excinfo:
        check_spacing(x, None, floor=1e-10)
    assert excinfo.value.index == 1
    assert excinfo.value.spacing == pytest.approx(1e-12)


def test_wrap_gap_counts_as_a_crossing():
    x = np.array([0.0, 0.5, 1.0 - 1e-13])
    with pytest.raises(ImminentCrossingError) as excinfo:
        check_spacing(x, 1.0, floor=1e-10)
    assert excinfo.value.index == 2


def test_ordered_nodes_pass():
    check_spacing(np.linspace(0.0, 1.0, 11), 1.0 + 0.1, floor=1e-10)


@pytest.mark.parametrize("periodic", [True, False])
def test_pattern_shape(periodic):
    pattern = neighbour_pattern(10, 3, periodic)
    assert pattern.shape == (30, 30)
    dense = pattern.toarray()
    assert dense[0, 2] == 1.0
    assert dense[0, 3] == 0.0
    assert dense[0, 12] == 1.0
    assert bool(dense[0, 9] == 1.0) is periodic


def test_zero_reach_couples_fields_of_one_node_only():
    dense = neighbour_pattern(6, 4, periodic=True, reach=0).toarray()
    assert dense.shape == (24, 24)
    assert dense.sum() == 6 * 16
    assert dense[0, 18] == 1.0
    assert dense[0, 1] == 0.0
    assert dense[0, 5] == 0.0


def test_negative_reach_rejected():
    with pytest.raises(ValueError, match="reach"):
        neighbour_pattern(6, 2, periodic=False, reach=-1)

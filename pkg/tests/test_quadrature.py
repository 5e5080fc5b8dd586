import numpy as np
import pytest

from blockdiff.quadrature import QuadratureRule, apply, midpoint_rule


@pytest.mark.parametrize("a, b, N, points, weights", [
    (0, 1, 2, [0.25, 0.75], [0.5, 0.5]),
    (0, 1, 4, [0.125, 0.375, 0.625, 0.875], [0.25] * 4),
    (1, 3, 2, [1.5, 2.5], [1.0, 1.0]),
])
def test_midpoint_rule_values(a, b, N, points, weights):
    rule = midpoint_rule(a, b, N)
    assert np.allclose(rule.points, points, atol=1e-15)
    assert np.allclose(rule.weights, weights, atol=1e-15)
    assert rule.N == N


@pytest.mark.parametrize("a, b, N", [(0, 1, 1), (0, 0, 4), (1, 0, 4)])
def test_midpoint_rule_rejects(a, b, N):
    with pytest.raises(ValueError):
        midpoint_rule(a, b, N)


def test_abscissas_avoid_endpoints():
    rule = midpoint_rule(-0.3, 0.7, 5)
    assert rule.points.min() > -0.3 and rule.points.max() < 0.7
    assert np.all(np.diff(rule.points) > 0)
    assert rule.weights.sum() == pytest.approx(1.0)


def test_apply_examples():
    rule4 = midpoint_rule(0, 1, 4)
    assert apply(rule4, np.ones(4)) == pytest.approx(1.0)
    rule2 = midpoint_rule(0, 1, 2)
    assert apply(rule2, rule2.points) == pytest.approx(0.5)
    assert abs(apply(rule4, np.cos(np.pi * rule4.points))) < 1e-15


def test_apply_matches_direct_sum():
    rule = midpoint_rule(0, 1, 4)
    samples = np.cos(np.pi * rule.points)
    assert rule.apply(samples) == pytest.approx(sum(0.25 * s for s in samples), abs=1e-16)


def test_apply_length_mismatch():
    with pytest.raises(ValueError):
        midpoint_rule(0, 1, 4).apply(np.ones(3))


def test_rule_is_frozen():
    assert isinstance(midpoint_rule(0, 1, 2), QuadratureRule)
    with pytest.raises(AttributeError):
        midpoint_rule(0, 1, 2).N = 3

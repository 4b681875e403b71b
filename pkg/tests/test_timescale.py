import numpy as np
import pytest

import tsvarlab as tv
from tsvarlab.timescale import EXACT_DISCRETE, SAMPLED_CONTINUUM

from helpers import random_grid


def test_integers_constructor():
    g = tv.make_timescale("integers", a=0, b=5)
    assert g.points == (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    assert all(tv.mu(g, t) == 1.0 for t in g.points[:-1])


def test_power2_constructor():
    g = tv.make_timescale("power2", n0=0, n1=3)
    assert g.points == (1.0, 2.0, 4.0, 8.0)


def test_explicit_rejects_non_monotone():
    with pytest.raises(ValueError, match="strictly increasing"):
        tv.explicit([3, 1, 2])


def test_too_few_points_rejected():
    with pytest.raises(ValueError):
        tv.integers(2, 2)
    with pytest.raises(ValueError):
        tv.explicit([1.0])


def test_nonpositive_step_rejected():
    with pytest.raises(ValueError):
        tv.uniform(0, 1, 0)
    with pytest.raises(ValueError):
        tv.sampled(0, 1, -0.5)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown time scale kind"):
        tv.make_timescale("cantor", a=0, b=1)


def test_sigma_examples():
    g = tv.integers(0, 5)
    assert tv.sigma(g, 2) == 3
    p2 = tv.power2(0, 3)
    assert tv.sigma(p2, 4) == 8
    assert tv.sigma(p2, 8) == 8  # fixed point at the maximum


def test_rho_examples():
    g = tv.integers(0, 5)
    assert tv.rho(g, 3) == 2
    assert tv.rho(g, 0) == 0  # fixed point at the minimum
    p2 = tv.power2(0, 3)
    assert tv.rho(p2, 8) == 4


def test_mu_examples():
    g = tv.integers(0, 5)
    assert tv.mu(g, 2) == 1
    p2 = tv.power2(0, 3)
    assert tv.mu(p2, 4) == 4
    assert tv.mu(p2, 8) == 0


def test_membership_is_exact():
    g = tv.power2(0, 3)
    with pytest.raises(ValueError, match="not a point"):
        tv.sigma(g, 3.0)
    with pytest.raises(ValueError, match="not a point"):
        tv.mu(g, 4.0000001)


def test_kappa_truncation():
    g = tv.explicit([0, 1, 2, 3])
    assert tv.kappa(g).points == (0.0, 1.0, 2.0)
    p2 = tv.power2(0, 3)
    assert tv.kappa(tv.kappa(p2)).points == (1.0, 2.0)
    two = tv.explicit([0, 1])
    once = tv.kappa(two)
    with pytest.raises(ValueError, match="empty"):
        tv.kappa(once)


def test_classify_interior_and_endpoints():
    g = tv.integers(0, 4)
    mid = tv.classify(g, 2)
    assert mid.isolated and mid.right_scattered and mid.left_scattered
    first = tv.classify(g, 0)
    assert first.left_dense and first.right_scattered and not first.isolated
    last = tv.classify(g, 4)
    assert last.right_dense and last.left_scattered and not last.dense


def test_classify_sampled_intent():
    g = tv.sampled(0, 1, 0.01)
    t = g.points[50]
    assert t == 0.5
    rec = tv.classify(g, t)
    assert rec.isolated
    assert rec.intent == SAMPLED_CONTINUUM
    assert tv.classify(tv.integers(0, 3), 1).intent == EXACT_DISCRETE


def test_sampled_clips_final_step():
    g = tv.sampled(0, 1, 0.3)
    assert g.points[-1] == 1.0
    assert len(g.points) == 5  # 0, .3, .6, .9, 1
    assert g.points[-1] - g.points[-2] < 0.3


def test_sampled_no_micro_cell_on_divisible_span():
    g = tv.sampled(0, 1, 0.1)
    assert len(g.points) == 11
    assert min(np.diff(g.array)) > 0.09


def test_integers_equals_unit_uniform():
    assert tv.integers(-3, 7).points == tv.uniform(-3, 7, 1).points


def test_jump_round_trip_on_interior():
    rng = np.random.default_rng(42)
    for _ in range(20):
        g = random_grid(rng, max_points=20)
        for t in g.points[1:-1]:
            assert tv.rho(g, tv.sigma(g, t)) == t
            assert tv.sigma(g, tv.rho(g, t)) == t


def test_sigma_returns_stored_point():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = random_grid(rng, max_points=20)
        for i, t in enumerate(g.points[:-1]):
            assert tv.sigma(g, t) is g.points[i + 1] or tv.sigma(g, t) == g.points[i + 1]
            assert tv.mu(g, t) == g.points[i + 1] - g.points[i]


def test_grid_is_immutable_value_object():
    g = tv.integers(0, 3)
    assert g == tv.integers(0, 3)
    with pytest.raises(Exception):
        g.points = (0.0,)
    arr = g.array
    with pytest.raises(ValueError):
        arr[0] = 5.0

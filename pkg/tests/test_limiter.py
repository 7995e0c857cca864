from __future__ import annotations

import numpy as np
import pytest

from esdgsem.errors import ConfigurationError, LimiterFailure
from esdgsem.limiter import (
    LimiterBounds,
    PositivityLimiter,
    apply_limiter,
    cell_averages,
    compute_bounds,
    limiter_theta,
    make_limiter,
)
from esdgsem.sbp import build_sbp
from esdgsem.systems import make_system

BN = make_system("baer_nunziato", {"kappa": 1.0, "gamma1": 1.4, "gamma2": 1.2})


def bn_field(prim):
    return BN.from_primitive(np.asarray(prim, dtype=float))


def wide_bounds(n, eps=1e-8):
    return LimiterBounds(np.zeros(n), np.ones(n), eps)


def test_identity_within_bounds():
    op = build_sbp(3)
    rng = np.random.default_rng(0)
    prim = np.stack(
        [
            rng.uniform(0.3, 0.6, (5, 4)),
            rng.uniform(0.5, 2, (5, 4)),
            rng.uniform(-1, 1, (5, 4)),
            rng.uniform(0.5, 2, (5, 4)),
            rng.uniform(-1, 1, (5, 4)),
        ],
        -1,
    )
    U = bn_field(prim)
    bounds = LimiterBounds(np.full(5, 0.3), np.full(5, 0.6))
    limited, theta = apply_limiter(BN, op, U, bounds)
    np.testing.assert_array_equal(theta, 1.0)
    np.testing.assert_array_equal(limited, U)


def test_density_floor_theta():
    # phase-1 partial density (1.1, -0.1): average 0.5, minimum -0.1
    op = build_sbp(1)
    a = 0.5
    U = np.array([[[a, 1.1, 0.0, 0.5, 0.0], [a, -0.1, 0.0, 0.5, 0.0]]])
    theta, _ = limiter_theta(BN, op, U, wide_bounds(1))
    # the floor acts on alpha rho >= eps alpha, exact per node
    assert theta[0] == pytest.approx((0.5 - 1e-8 * a) / 0.6, rel=1e-14)
    assert theta[0] == pytest.approx(0.83333332, abs=1e-8)
    limited, _ = apply_limiter(BN, op, U, wide_bounds(1))
    assert limited[0, :, 1].min() == pytest.approx(1e-8 * a, rel=1e-6)


def test_alpha_bounds_theta_and_means():
    op = build_sbp(2)
    U = bn_field([[[0.05, 1, 0, 1, 0], [0.5, 1, 0, 1, 0], [0.95, 1, 0, 1, 0]]])
    bounds = LimiterBounds(np.array([0.2]), np.array([0.8]))
    limited, theta = apply_limiter(BN, op, U, bounds)
    abar = cell_averages(op, U)[0, 0]
    assert 0.0 < theta[0] < 1.0
    assert limited[0, :, 0].min() >= 0.2 - 1e-15
    assert limited[0, :, 0].max() <= 0.8 + 1e-15
    np.testing.assert_allclose(cell_averages(op, limited), cell_averages(op, U), atol=1e-15)
    assert min(limited[0, :, 0].min() - 0.2, 0.8 - limited[0, :, 0].max()) < 1e-14
    assert abar == pytest.approx(0.5)


def test_theta_is_maximal():
    op = build_sbp(3)
    rng = np.random.default_rng(1)
    for _ in range(20):
        prim = np.stack(
            [
                rng.uniform(0.1, 0.9, 4),
                rng.uniform(0.5, 2, 4),
                rng.uniform(-1, 1, 4),
                rng.uniform(0.5, 2, 4),
                rng.uniform(-1, 1, 4),
            ],
            -1,
        )
        U = bn_field(prim)[None]
        U[0, 1, 1] = -0.2 * U[0, 1, 0]
        avg = cell_averages(op, U)
        if avg[0, 1] <= 0:
            continue
        bounds = LimiterBounds(np.array([0.2]), np.array([0.85]))
        if not 0.2 <= avg[0, 0] <= 0.85:
            continue
        theta, _ = limiter_theta(BN, op, U, bounds)
        t = theta[0]
        probe = (min(1.0, t * 1.0001 + 1e-6) * (U - avg[:, None]) + avg[:, None])[0]
        ok = lambda V: (
            V[:, 0].min() >= 0.2 - 1e-14
            and V[:, 0].max() <= 0.85 + 1e-14
            and np.all(V[:, 1] >= 1e-8 * V[:, 0] - 1e-15)
            and np.all(V[:, 3] >= 1e-8 * (1 - V[:, 0]) - 1e-15)
        )
        assert ok((t * (U - avg[:, None]) + avg[:, None])[0])
        if t < 1.0:
            assert not ok(probe)


def test_entropy_contraction():
    op = build_sbp(3)
    U = bn_field(
        [[[0.1, 1.0, 0.5, 2.0, -0.3], [0.7, 0.6, -0.2, 1.1, 0.4], [0.3, 1.5, 0.1, 0.9, 0.0], [0.9, 0.8, 0.3, 1.0, 0.2]]]
    )
    bounds = LimiterBounds(np.array([0.25]), np.array([0.75]))
    limited, theta = apply_limiter(BN, op, U, bounds)
    assert theta[0] < 1.0
    mean_eta = lambda V: 0.5 * op.weights @ BN.entropy(V[0])
    assert mean_eta(limited) <= mean_eta(U) + 1e-14


def test_uniform_velocity_pressure_kept():
    op = build_sbp(3)
    U = bn_field([[[0.05, 1, 1, 1, 1], [0.9, 1, 1, 1, 1], [0.5, 1, 1, 1, 1], [0.99, 1, 1, 1, 1]]])
    limited, theta = apply_limiter(BN, op, U, LimiterBounds(np.array([0.3]), np.array([0.8])))
    assert theta[0] < 1.0
    prim = BN.to_primitive(limited)
    np.testing.assert_allclose(prim[..., [1, 2, 3, 4, 5, 6]], 1.0, atol=1e-14)


def test_precondition_failure_identifies_cell():
    op = build_sbp(1)
    good = [[0.5, 0.5, 0, 0.5, 0], [0.5, 0.5, 0, 0.5, 0]]
    bad = [[0.5, -0.5, 0, 0.5, 0], [0.5, -0.4, 0, 0.5, 0]]
    U = np.array([good, bad])
    with pytest.raises(LimiterFailure) as info:
        limiter_theta(BN, op, U, wide_bounds(2))
    assert info.value.cell == 1
    with pytest.raises(LimiterFailure):
        limiter_theta(BN, op, np.array([good]), LimiterBounds(np.array([0.6]), np.array([0.9])))


def test_compute_bounds_stencil():
    a = np.array([[0.1, 0.2], [0.5, 0.4], [0.3, 0.9], [0.6, 0.7]])
    U = np.zeros((4, 2, 5))
    U[..., 0] = a
    b = compute_bounds(U)
    np.testing.assert_allclose(b.alpha_min, [0.2, 0.3])
    np.testing.assert_allclose(b.alpha_max, [0.5, 0.9])


def test_configuration_checks():
    with pytest.raises(ConfigurationError):
        LimiterBounds(np.array([0.6]), np.array([0.5]))
    with pytest.raises(ConfigurationError):
        PositivityLimiter(0.0)
    assert make_limiter(make_system("burgers"), True) is None
    assert make_limiter(BN, False) is None
    assert isinstance(make_limiter(BN, True), PositivityLimiter)

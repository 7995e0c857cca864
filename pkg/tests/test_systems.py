from __future__ import annotations

import numpy as np
import pytest

from conftest import ALL_SYSTEMS, random_pairs
from esdgsem.errors import ConfigurationError, DomainError
from esdgsem.systems import make_system


def test_burgers_example():
    s = make_system("burgers")
    u = np.array([2.0])
    np.testing.assert_allclose(s.a_product(u, np.array([0.7])), [1.4])
    assert s.entropy(u) == pytest.approx(2.0)
    assert s.entropy_flux(u) == pytest.approx(8 / 3)


def test_ld2x2_wave_speed():
    s = make_system("ld2x2")
    assert s.max_wave_speed(np.array([3.0, 0.5])) == pytest.approx(3.5)


def test_bn_polytropic_gamma_two():
    s = make_system("baer_nunziato", {"kappa": 1.0, "gamma1": 2.0, "gamma2": 2.0})
    rho = 3.0
    assert s.pressure(rho, 1) == pytest.approx(9.0)
    assert s.sound_speed2(rho, 1) == pytest.approx(6.0)
    assert s.enthalpy(rho, 1) == pytest.approx(6.0)
    assert s.energy(rho, 1) == pytest.approx(3.0)


def test_bn_entropy_examples():
    s = make_system("baer_nunziato", {"kappa": 1.0, "gamma1": 2.0, "gamma2": 2.0})
    u = s.from_primitive([0.5, 1.0, 0.0, 1.0, 0.0])
    eta, q, _ = s.entropy_pair(u)
    assert eta == pytest.approx(1.0)
    assert q == 0.0
    rest = s.from_primitive([[0.2, 2.0, 0.0, 0.7, 0.0], [0.9, 0.3, 0.0, 4.0, 0.0]])
    np.testing.assert_array_equal(s.entropy_flux(rest), 0.0)


def test_bn_entropy_pair_rejects_inadmissible():
    s = make_system("baer_nunziato")
    with pytest.raises(DomainError):
        s.entropy_pair(np.array([1.2, 1.0, 0.0, 1.0, 0.0]))
    with pytest.raises(DomainError):
        s.entropy_pair(np.array([0.5, -1.0, 0.0, 1.0, 0.0]))


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_entropy_variables_match_finite_differences(name):
    s, u, _ = random_pairs(name, 20, seed=1)
    step = 1e-6
    ev = s.entropy_variables(u)
    for c in range(s.ncomp):
        e = np.zeros(s.ncomp)
        e[c] = step
        fd = (s.entropy(u + e) - s.entropy(u - e)) / (2 * step)
        scale = np.maximum(1.0, np.abs(ev[:, c]))
        assert np.max(np.abs(fd - ev[:, c]) / scale) < 1e-6


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_entropy_compatibility(name):
    # eta'(u)^T A(u) w equals the directional derivative of q along w
    s, u, w = random_pairs(name, 50, seed=2)
    rng = np.random.default_rng(3)
    w = rng.normal(size=u.shape)
    step = 1e-6
    lhs = np.sum(s.entropy_variables(u) * s.a_product(u, w), axis=-1)
    rhs = (s.entropy_flux(u + step * w) - s.entropy_flux(u - step * w)) / (2 * step)
    assert np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))) < 1e-6


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_entropy_convexity(name):
    s, u, _ = random_pairs(name, 20, seed=4)
    step = 1e-4
    n = s.ncomp
    for state in u:
        H = np.empty((n, n))
        for c in range(n):
            e = np.zeros(n)
            e[c] = step
            H[:, c] = (s.entropy_variables(state + e) - s.entropy_variables(state - e)) / (2 * step)
        H = 0.5 * (H + H.T)
        lam = np.linalg.eigvalsh(H)
        assert lam.min() > -1e-6 * max(1.0, abs(lam).max())


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_a_matrix_consistent_with_product(name):
    s, u, _ = random_pairs(name, 10, seed=5)
    w = np.random.default_rng(6).normal(size=u.shape)
    np.testing.assert_allclose(
        np.einsum("nij,nj->ni", s.a_matrix(u), w), s.a_product(u, w), rtol=1e-12, atol=1e-12
    )


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_primitive_round_trip(name):
    s, u, _ = random_pairs(name, 10, seed=7)
    prim = s.to_primitive(u)
    np.testing.assert_allclose(s.from_primitive(prim), u, rtol=1e-13, atol=1e-14)


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_sampled_states_admissible(name):
    s, u, _ = random_pairs(name, 100, seed=8)
    assert np.all(s.is_admissible(u))
    s.check_admissible(u)


@pytest.mark.parametrize(
    "name,state",
    [
        ("ld2x2", [-1.0, 0.0]),
        ("euler_lagrange", [-1.0, 0.0, 1.0]),
        ("baer_nunziato", [0.0, 1.0, 0.0, 1.0, 0.0]),
        ("burgers", [np.nan]),
    ],
)
def test_inadmissible_states_rejected(name, state):
    s = make_system(name)
    assert not s.is_admissible(np.array(state))
    with pytest.raises(DomainError):
        s.check_admissible(np.array(state))


@pytest.mark.parametrize(
    "name,params",
    [
        ("baer_nunziato", {"kappa": 0.0}),
        ("baer_nunziato", {"gamma1": 1.0}),
        ("spray", {"delta": 2.5}),
        ("spray", {"rho_l": -1.0}),
        ("euler_lagrange", {"gamma": 0.9}),
        ("burgers", {"gamma": 1.4}),
        ("unknown", {}),
    ],
)
def test_invalid_parameters(name, params):
    with pytest.raises(ConfigurationError):
        make_system(name, params)

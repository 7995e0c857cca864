from __future__ import annotations

import numpy as np
import pytest

from conftest import ALL_SYSTEMS, random_pairs
from esdgsem import fluxes as F
from esdgsem.diagnostics import interface_entropy_production
from esdgsem.errors import ConfigurationError, ContractViolation
from esdgsem.systems import make_system


def test_burgers_ec_examples():
    pair = F.entropy_conservative_pair(make_system("burgers"))
    dm, dp = pair(np.array([1.0]), np.array([1.0]))
    assert dm[0] == 0.0 and dp[0] == 0.0
    dm, dp = pair(np.array([1.0]), np.array([2.0]))
    assert dm[0] == pytest.approx(2 / 3)
    assert dp[0] == pytest.approx(5 / 6)


def test_ld2x2_ec_example():
    dm, _ = F.ec_flux_ld2x2(np.array([1.0, 0.0]), np.array([2.0, 1.0]))
    np.testing.assert_allclose(dm, [5 / 6, -0.5], rtol=1e-15)


def test_bn_ec_abgrall_reduction():
    s = make_system("baer_nunziato", {"kappa": 1.0, "gamma1": 1.4, "gamma2": 1.2})
    um = s.from_primitive([0.5, 1.0, 1.0, 1.0, 1.0])
    up = s.from_primitive([0.6, 1.0, 1.0, 1.0, 1.0])
    dm, dp = F.ec_flux_bn(s, um, up, 2.0)
    np.testing.assert_allclose(dm, [-0.05, -0.05, -0.05, 0.05, 0.05], atol=1e-15)
    np.testing.assert_allclose(dp, 0.05 * 3.0 * np.array([1, 1, 1, -1, -1]), atol=1e-15)


def test_density_mean_gamma_two():
    assert F.polytropic_density_mean(1.0, 3.0, 2.0) == pytest.approx(2.0)


def test_density_mean_small_jump_limit():
    rho = 1.7
    for g in (1.2, 1.4, 3.0):
        near = F.polytropic_density_mean(rho, rho * (1 + 1e-9), g)
        assert near == pytest.approx(rho, rel=1e-8)


def test_euler_lagrange_consistency():
    s = make_system("euler_lagrange")
    u = s.from_primitive([1.3, 0.4, 2.0])
    dm, dp = F.entropy_conservative_pair(s)(u, u)
    np.testing.assert_array_equal(dm, 0.0)
    np.testing.assert_array_equal(dp, 0.0)


@pytest.mark.parametrize("name", ALL_SYSTEMS)
@pytest.mark.parametrize("kind", ["ec", "es"])
def test_pairs_consistent(name, kind):
    s, u, _ = random_pairs(name, 200, seed=10)
    pair = F.interface_pair(s, kind, 0.5)
    beta = s.max_wave_speed(u) if pair.requires_beta else None
    dm, dp = pair(u, u, beta)
    assert np.max(np.abs(dm)) < 1e-12 and np.max(np.abs(dp)) < 1e-12


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_ec_identity(name):
    s, um, up = random_pairs(name, 2000, seed=11)
    pair = F.entropy_conservative_pair(s)
    beta = np.full(len(um), 2.0) if pair.requires_beta else None
    prod = interface_entropy_production(s, pair, um, up, beta)
    assert np.max(np.abs(prod)) < 1e-10 * max(1.0, float(np.max(np.abs(s.entropy_flux(um)))))


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_es_inequality(name):
    s, um, up = random_pairs(name, 2000, seed=12)
    pair = F.entropy_stable_pair(s, 0.5)
    beta = np.maximum(s.max_wave_speed(um), s.max_wave_speed(up)) if pair.requires_beta else None
    assert np.max(interface_entropy_production(s, pair, um, up, beta)) < 1e-10


def test_ld2x2_es_with_ec_beta_is_conservative():
    s, um, up = random_pairs("ld2x2", 2000, seed=13)
    beta = F.ld2x2_entropy_conservative_beta(um, up)
    pair = F.FluctuationFluxPair(
        "t", F.ENTROPY_STABLE, lambda a, b, beta=None: F.es_flux_ld2x2(a, b, beta, 0.0)
    )
    prod = interface_entropy_production(s, pair, um, up, beta)
    assert np.max(np.abs(prod)) < 1e-11 * np.max(np.abs(s.entropy_flux(um)))


def test_bn_es_dissipation_quadratic_form():
    s, um, up = random_pairs("baer_nunziato", 500, seed=14)
    beta = np.maximum(s.max_wave_speed(um), s.max_wave_speed(up))
    eps_v = 0.7
    prod = interface_entropy_production(s, F.entropy_stable_pair(s, eps_v), um, up, beta)
    jump = s.entropy_variables(up) - s.entropy_variables(um)
    form = eps_v * beta * np.sum(jump * F.bn_viscosity_matrix(s, um, up) * jump, axis=-1)
    np.testing.assert_allclose(-prod, form, rtol=1e-8, atol=1e-10)
    assert np.all(F.bn_viscosity_matrix(s, um, up) >= 0.0)


def test_bn_requires_beta():
    s, um, up = random_pairs("baer_nunziato", 3, seed=15)
    with pytest.raises(ContractViolation):
        F.entropy_conservative_pair(s)(um, up)
    with pytest.raises(ContractViolation):
        F.entropy_stable_pair(s, 0.5)(um, up)


def test_bn_es_requires_positive_eps():
    with pytest.raises(ConfigurationError):
        F.entropy_stable_pair(make_system("baer_nunziato"), 0.0)


@pytest.mark.parametrize("name", ALL_SYSTEMS)
def test_conserved_rows(name):
    s, um, up = random_pairs(name, 500, seed=16)
    pair = F.entropy_conservative_pair(s)
    beta = np.full(len(um), 1.5) if pair.requires_beta else None
    dm, dp = pair(um, up, beta)
    c = np.array(s.conserved_combinations, dtype=float).reshape(-1, s.ncomp)
    if c.size:
        jump = s.combination_flux(up) - s.combination_flux(um)
        np.testing.assert_allclose((dm + dp) @ c.T, jump, rtol=1e-12, atol=1e-12)


def test_volume_kernel_bn_closed_form():
    s, um, up = random_pairs("baer_nunziato", 500, seed=17)
    pair = F.entropy_conservative_pair(s)
    for beta in (0.0, 3.0):
        b = np.full(len(um), beta)
        dm, _ = pair(um, up, b)
        _, dp = pair(up, um, b)
        np.testing.assert_allclose(
            F.volume_kernel(s).d_tilde(um, up), dm - dp, rtol=1e-12, atol=1e-12
        )


def test_splitting_matches_burgers_ec():
    s, um, up = random_pairs("burgers", 500, seed=18)
    np.testing.assert_allclose(
        np.stack(F.splitting_flux(s, 2 / 3)(um, up)),
        np.stack(F.ec_flux_burgers(um, up)),
        rtol=1e-13,
        atol=1e-14,
    )


def test_splitting_matrices_conditions():
    s, um, up = random_pairs("coupled_burgers", 50, seed=19)
    alpha = 0.3
    Am, Ap = F.splitting_matrices(s, alpha, um, up)
    # consistency A+(u,u) + A-(u,u) = A(u), and symmetry A-(a,b) = A+(b,a)
    Am0, Ap0 = F.splitting_matrices(s, alpha, um, um)
    np.testing.assert_allclose(Am0 + Ap0, s.a_matrix(um), atol=1e-14)
    Bm, Bp = F.splitting_matrices(s, alpha, up, um)
    np.testing.assert_allclose(Am, Bp, atol=1e-14)
    dm, dp = F.splitting_flux(s, alpha)(um, up)
    np.testing.assert_allclose(dm, np.einsum("nij,nj->ni", Am, up - um), atol=1e-13)


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_splitting_alpha_range(alpha):
    with pytest.raises(ConfigurationError):
        F.splitting_flux(make_system("burgers"), alpha)


def test_bridge_with_tadmor_matches_burgers_pair():
    s, um, up = random_pairs("burgers", 10_000, seed=20)
    bridge = F.conservative_bridge(F.tadmor_flux_burgers, F.burgers_flux)
    via_bridge = F.VolumeKernel(bridge).d_tilde(um, up)
    direct = F.volume_kernel(s).d_tilde(um, up)
    assert np.max(np.abs(via_bridge - direct)) < 1e-13
    dm, dp = bridge(um, um)
    assert np.max(np.abs(dm)) < 1e-15 and np.max(np.abs(dp)) < 1e-15


def test_unknown_flux_kind():
    with pytest.raises(ConfigurationError):
        F.interface_pair(make_system("burgers"), "roe")


def test_mismatched_state_sizes():
    with pytest.raises(ContractViolation):
        F.entropy_conservative_pair(make_system("burgers"))(np.ones(1), np.ones(2))

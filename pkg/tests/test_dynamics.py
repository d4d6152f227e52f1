"""Seeded Euler-Maruyama simulation: Brownian, OU and Mirror Langevin oracles."""
import math

import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from bridgelab import DomainError, UsageError
from bridgelab.dynamics import (
    BLOCK,
    BlockNormals,
    SdeSpec,
    block_uniforms,
    ks_statistic,
    mirror_langevin_simulate,
    mld_drift_consistency,
    moment_scaling,
    path_relative_entropy_rate,
    pushforward_pair,
    sample_measure,
    simulate,
    stationary_pair,
)
from bridgelab.geometry import SHIPPED, make_chart
from bridgelab.measures import Grid, GridMeasure, Potential

N = 100_000
FLAT = make_chart("flat")


# random streams

def test_block_normals_independent_of_chunking_and_ensemble_size():
    a = BlockNormals(7, 3000, 2, chunk=64)
    b = BlockNormals(7, 3000, 2, chunk=5)
    for _ in range(70):
        assert np.array_equal(a.next(), b.next())
    small = BlockNormals(7, 10, 2).next()
    assert np.array_equal(small, BlockNormals(7, 3000, 2).next()[:10])


def test_uniform_streams_are_keyed_by_trajectory():
    u = block_uniforms(3, 2 * BLOCK + 5)
    assert np.array_equal(u[:100], block_uniforms(3, 100))
    assert not np.array_equal(u[:100], block_uniforms(4, 100))
    assert np.all((u > 0) & (u < 1))


def test_simulation_is_deterministic_given_seed():
    spec = SdeSpec(FLAT, Potential.gaussian(0.0, 1.0), 0.1, 0.005, 2000, 11)
    a, b = simulate(spec, 0.3), simulate(spec, 0.3)
    assert np.array_equal(a.terminal, b.terminal)
    c = simulate(SdeSpec(FLAT, Potential.gaussian(0.0, 1.0), 0.1, 0.005, 2000, 12), 0.3)
    assert not np.array_equal(a.terminal, c.terminal)


def test_sample_measure_matches_target():
    g = Grid.uniform(-8.0, 8.0, 4097)
    mu = GridMeasure.from_log_density(g, lambda x: -x[:, 0] ** 2 / 2)
    x = sample_measure(mu, 20_000, 5)
    assert ks_statistic(x, mu) <= 0.015


def test_step_constraint():
    with pytest.raises(DomainError):
        SdeSpec(FLAT, Potential.zero(), 0.1, 0.01, 10, 0)


# simulate

def test_brownian_increment_variance():
    eps = 0.1
    ens = simulate(SdeSpec(FLAT, Potential.zero(), eps, eps / 20, N, 42), 0.0)
    d = (ens.terminal - ens.initial)[:, 0]
    se = eps * math.sqrt(2.0 / N)
    assert abs(d.var(ddof=1) - eps) <= 3 * se
    assert ens.clip_fraction == 0.0


def test_ou_conditional_mean():
    # U = x^2 (+ const) gives drift -x and E[X_eps | X_0 = x] = exp(-eps) x
    eps, x0 = 0.1, 1.0
    ens = simulate(SdeSpec(FLAT, Potential.gaussian(0.0, 0.5), eps, eps / 20, N, 42), x0)
    se = ens.terminal[:, 0].std(ddof=1) / math.sqrt(N)
    # Euler with h = eps/20 has mean (1 - h)^20 x0; allow that bias on top of 3 se
    bias = abs((1 - eps / 20) ** 20 - math.exp(-eps)) * x0
    assert abs(ens.terminal[:, 0].mean() - math.exp(-eps) * x0) <= 3 * se + bias


def test_quartic_long_run_marginal():
    q = make_chart("quartic1d")
    U = Potential.gaussian(0.0, 1.0).against_volume(q)
    ens = simulate(SdeSpec(q, U, 10.0, 0.01, 20_000, 3), 0.0)
    target = GridMeasure.from_log_density(Grid.uniform(-8, 8, 4097), lambda x: -x[:, 0] ** 2 / 2)
    assert ks_statistic(ens.terminal, target) <= 0.02


# stationary pairs

def test_ou_stationary_pair_correlation_and_exchangeability():
    eps = 0.1
    ens = stationary_pair(FLAT, Potential.gaussian(0.0, 0.5), eps, eps / 20, N, 42)
    a, b = ens.initial[:, 0], ens.terminal[:, 0]
    r = np.corrcoef(a, b)[0, 1]
    se_r = (1 - r * r) / math.sqrt(N)
    assert abs(r - math.exp(-eps)) <= 3 * se_r + 1e-3
    d = a * a * b - b * b * a
    assert abs(d.mean()) <= 3 * d.std(ddof=1) / math.sqrt(N)


def test_brownian_second_moment():
    # E|X_eps - X_0|^2 = eps for U = 0
    eps = 0.1
    _, m, se = moment_scaling(FLAT, Potential.zero(), 2, [eps], 20, N, 42, init=0.0)[0]
    assert abs(m - eps) <= 3 * se


def test_pushforward_pair_affine():
    ch = make_chart("affine:2,1")
    f = Potential.gaussian(0.5, 1.0)
    ens = pushforward_pair(stationary_pair(ch, f.against_volume(ch), 0.1, 0.005, N, 42), ch)
    y = ens.terminal[:, 0]
    assert abs(y.mean() - (2 * 0.5 + 1)) <= 3 * y.std(ddof=1) / math.sqrt(N)
    # image law exp(-h) = N(2, 4)
    g = Grid.uniform(-14.0, 18.0, 4097)
    h = GridMeasure.from_log_density(g, lambda v: -(v[:, 0] - 2.0) ** 2 / 8)
    assert ks_statistic(y, h) <= 0.01


def test_pushforward_pair_flat_is_identity():
    ens = stationary_pair(FLAT, Potential.gaussian(0.0, 1.0), 0.1, 0.005, 1000, 0)
    assert np.array_equal(pushforward_pair(ens, FLAT).terminal, ens.terminal)


# Mirror Langevin

def test_mld_flat_is_euclidean_langevin():
    f = Potential.gaussian(0.0, 1.0)
    lo, hi = FLAT.window
    start = GridMeasure.from_log_density(Grid.uniform(lo, hi, 4097), lambda x: -f.value(x))
    a = mirror_langevin_simulate(FLAT, f, 0.5, 0.01, 5000, 9)
    b = simulate(SdeSpec(FLAT, f, 0.5, 0.01, 5000, 9), start)
    assert np.allclose(a.terminal, b.terminal, atol=1e-12)


def test_mld_affine_lyapunov_covariance():
    ch = make_chart("affine:2 4,0 0")
    S = np.diag([2.0, 4.0])
    f = Potential.gaussian(np.zeros(2), np.eye(2))
    ens = mirror_langevin_simulate(ch, f, 2.0, 0.01, 50_000, 42)
    # dX = -S^{-1} X / 2 dt + S^{-1/2} dB
    A = -0.5 * np.linalg.inv(S)
    cov = solve_continuous_lyapunov(A, -np.linalg.inv(S))
    emp = np.cov(ens.terminal.T)
    se = np.sqrt((cov**2 + np.outer(np.diag(cov), np.diag(cov))) / ens.n)
    assert np.all(np.abs(emp - cov) <= 3 * se + 5e-3)


def test_mld_stationarity_ks():
    q = make_chart("quartic1d")
    f = Potential.gaussian(0.0, 1.0)
    g = Grid.uniform(-8.0, 8.0, 4097)
    ens = mirror_langevin_simulate(q, f, 10.0, 0.01, N, 42, g)
    mu = GridMeasure.from_log_density(g, lambda x: -x[:, 0] ** 2 / 2)
    assert ks_statistic(ens.terminal, mu) <= 0.01
    assert ens.clip_fraction < 1e-4


def test_mld_drift_consistency_examples():
    f1 = Potential.gaussian(0.0, 1.0)
    assert mld_drift_consistency(FLAT, f1, 0.7) == 0.0
    assert mld_drift_consistency(make_chart("quartic1d"), f1, 0.5) <= 1e-6
    assert mld_drift_consistency(make_chart("affine:2,1"), f1, -1.3) <= 1e-15


@pytest.mark.parametrize("name", SHIPPED)
def test_mld_drift_consistency_shipped(name):
    ch = make_chart(name)
    f = Potential.gaussian(np.zeros(ch.dim), np.eye(ch.dim))
    x = np.random.default_rng(0).uniform(-5, 5, (100, ch.dim))
    assert np.max(mld_drift_consistency(ch, f, x)) <= 1e-6


# path entropy and moments

def test_path_entropy_identical_potentials_is_zero():
    U = Potential.gaussian(0.0, 1.0)
    est, se = path_relative_entropy_rate(FLAT, U, U, 0.2, 0.01, 1000, 0)
    assert est == 0.0 and se == 0.0


@pytest.mark.parametrize("var, target", [(1.0, 0.025), (4.0, 0.00625)])
def test_path_entropy_gaussian(var, target):
    est, se = path_relative_entropy_rate(FLAT, Potential.gaussian(0.0, var), Potential.zero(), 0.2, 0.01, N, 42)
    assert abs(est - target) <= 3 * se


def test_moments_brownian():
    out = moment_scaling(FLAT, Potential.zero(), 4, [0.4, 0.2, 0.1], 20, N, 42, init=0.0)
    for eps, m, se in out:
        assert abs(m - 3 * eps**2) <= 3 * se


def test_moments_reject_odd_power():
    with pytest.raises(UsageError):
        moment_scaling(FLAT, Potential.zero(), 3, [0.4, 0.2, 0.1], 20, 10, 0, init=0.0)

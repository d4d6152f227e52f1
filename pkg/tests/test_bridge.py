"""Reference kernels, Sinkhorn, bridge quantities and grid diffusion couplings."""
import math

import numpy as np
import pytest

from bridgelab import ConvergenceError, DomainError, ShapeError
from bridgelab.bridge import (
    GridDiffusion,
    KernelMatrix,
    barycentric_projection,
    conditional_generator,
    const_metric_kernel,
    coupling_relative_entropy,
    diffusion_coupling_grid,
    entropic_cost,
    entropic_interpolation,
    gaussian_kernel,
    heat_kernel_1d,
    pushforward_kernel,
    schrodinger_score,
    sinkhorn,
    varadhan_expansion,
)
from bridgelab.geometry import make_chart
from bridgelab.measures import Grid, GridMeasure, NodeSet, Potential, fisher_information

FLAT = make_chart("flat")
QUARTIC = make_chart("quartic1d")
G = Grid.uniform(-6.0, 6.0, 512)
X = G.axes[0]
MU = GridMeasure.from_log_density(G, lambda p: -p[:, 0] ** 2 / 2)
LADDER = [0.4, 0.2, 0.1, 0.05]
TWO = NodeSet(np.array([-1.0, 1.0]), np.ones(2))


@pytest.fixture(scope="module")
def flat_bridges():
    return {eps: sinkhorn(MU, MU, gaussian_kernel(G, eps), tol=1e-13) for eps in LADDER}


def l2_mu(v):
    return float(np.sqrt(MU.mass @ (np.asarray(v) ** 2)))


# kernels

def test_gaussian_kernel_examples():
    one = NodeSet(np.array([0.0]), np.ones(1))
    assert gaussian_kernel(one, 0.5).log_values[0, 0] == pytest.approx(math.log(1 / math.sqrt(math.pi)), abs=1e-15)
    assert gaussian_kernel(one, 0.5).log_values[0, 0] == pytest.approx(-0.5724, abs=1e-4)
    K = gaussian_kernel(G, 0.3)
    assert np.array_equal(K.log_values, K.log_values.T)
    for eps in (0.05, 0.5):
        inner = np.abs(X) <= 6 - 4 * math.sqrt(eps)
        assert np.abs(gaussian_kernel(G, eps).row_sums() - 1)[inner].max() <= 1e-4


def test_const_metric_kernel_examples():
    assert np.array_equal(const_metric_kernel(np.eye(1), G, 0.3).log_values, gaussian_kernel(G, 0.3).log_values)
    one = NodeSet(np.array([0.0]), np.ones(1))
    val = const_metric_kernel(np.array([[2.0]]), one, 0.5).log_values[0, 0]
    assert val == pytest.approx(math.log(math.sqrt(2) / math.sqrt(math.pi)), abs=1e-15)
    assert val == pytest.approx(-0.2258, abs=1e-4)
    g2 = Grid.uniform([-2, -2], [2, 2], 9)
    p = g2.points
    C = const_metric_kernel(np.diag([2.0, 4.0]), g2, 0.3).log_values
    A = const_metric_kernel(np.array([[2.0]]), NodeSet(p[:, :1], np.ones(81)), 0.3).log_values
    B = const_metric_kernel(np.array([[4.0]]), NodeSet(p[:, 1:], np.ones(81)), 0.3).log_values
    assert np.abs(C - (A + B)).max() <= 1e-12


def test_kernel_shape_validation():
    with pytest.raises(ShapeError):
        KernelMatrix(TWO, TWO, np.zeros((2, 3)), 1.0, "euclidean_gaussian")
    with pytest.raises(DomainError):
        KernelMatrix(TWO, TWO, np.zeros((2, 2)), 1.0, "no-such-tag")


def test_heat_kernel_flat_matches_gaussian():
    K = np.exp(heat_kernel_1d(FLAT, G, 0.1).log_values)
    Q = np.exp(gaussian_kernel(G, 0.1).log_values)
    inner = np.abs(X) <= 5.5
    assert (np.abs(K - Q)[inner] / Q[inner].max(axis=1, keepdims=True)).max() <= 1e-6


def test_heat_kernel_detailed_balance_and_conservation():
    assert heat_kernel_1d(FLAT, G, 0.1).detailed_balance_error() <= 1e-8
    Kq = heat_kernel_1d(QUARTIC, G, 0.1)
    assert Kq.detailed_balance_error() <= 1e-8
    inner = np.abs(X) <= 5.5
    assert np.abs(Kq.row_sums() - 1)[inner].max() <= 1e-3


def test_varadhan_expansion_examples():
    assert varadhan_expansion(FLAT, X[100], X[130], 0.1) == pytest.approx(
        gaussian_kernel(G, 0.1).log_values[100, 130], abs=1e-13)
    # one-dimensional c0 is identically 1, so the leading term already matches to solver precision
    i, j = int(np.argmin(np.abs(X))), int(np.argmin(np.abs(X - 0.5)))
    for eps in (0.2, 0.1, 0.05, 0.025):
        exact = heat_kernel_1d(QUARTIC, G, eps).log_values[i, j]
        assert abs(exact - varadhan_expansion(QUARTIC, X[i], X[j], eps)) <= 1e-7


def test_pushforward_kernel_examples():
    K = gaussian_kernel(G, 0.1)
    same = pushforward_kernel(K, FLAT)
    assert np.array_equal(same.log_values, K.log_values)
    aff = make_chart("affine:2,1")
    P = pushforward_kernel(K, aff)
    y = P.grid_z.points[:, 0]
    # density of Y = 2 Z + 1 with Z ~ q_eps(x, .)
    zz = (y - 1) / 2
    expected = -0.5 * math.log(2 * math.pi * 0.1) - (zz[None, :] - X[:, None]) ** 2 / 0.2 - math.log(2)
    assert np.abs(P.log_values - expected).max() <= 1e-10
    assert np.abs(P.row_sums() - K.row_sums()).max() <= 1e-10


# sinkhorn

def test_sinkhorn_two_point():
    half = np.array([0.5, 0.5])
    sol = sinkhorn(half, half, gaussian_kernel(TWO, 1.0), tol=1e-15)
    k = math.exp(-2.0)
    diag, off = 1 / (2 * (1 + k)), k / (2 * (1 + k))
    assert np.allclose(sol.coupling, [[diag, off], [off, diag]], atol=1e-15)
    # k = exp(-2) gives 0.44040 and 0.05960
    assert diag == pytest.approx(0.44040, abs=1e-5) and off == pytest.approx(0.05960, abs=1e-5)
    # H(pi | m R) by hand: the reference is (1/2)(1/2) q(x, z) with unit node weights
    q = np.exp(gaussian_kernel(TWO, 1.0).log_values)
    hand = sum(p * math.log(p / (0.5 * qq)) for p, qq in zip(sol.coupling.ravel(), q.ravel()))
    assert entropic_cost(sol, mu_ref=half) == pytest.approx(hand, abs=1e-10)


def test_sinkhorn_single_node():
    m = np.zeros(G.size)
    m[100] = 1.0
    sol = sinkhorn(m, m, gaussian_kernel(G, 0.1))
    assert sol.coupling[100, 100] == pytest.approx(1.0, abs=1e-15)
    assert sol.coupling.sum() == pytest.approx(1.0, abs=1e-15)


def test_sinkhorn_fixed_point():
    K = heat_kernel_1d(FLAT, G, 0.1)
    R = np.exp(K.log_measure())
    sol = sinkhorn(R.sum(1), R.sum(0), K)
    assert sol.iterations <= 2
    assert np.ptp(sol.log_a) <= 1e-12 and np.ptp(sol.log_b) <= 1e-12
    assert entropic_cost(sol) == pytest.approx(0.0, abs=1e-12)


def test_sinkhorn_marginals_and_symmetry(flat_bridges):
    for sol in flat_bridges.values():
        assert sol.symmetric
        assert max(sol.marginal_errors()) <= 1e-12
        assert np.array_equal(sol.coupling, sol.coupling.T)


def test_sinkhorn_asymmetric_warm_start():
    nu = GridMeasure.from_log_density(G, lambda p: -(p[:, 0] - 1) ** 2 / 2)
    cold = sinkhorn(MU, nu, gaussian_kernel(G, 0.1), tol=1e-12)
    prev = sinkhorn(MU, nu, gaussian_kernel(G, 0.2), tol=1e-12)
    warm = sinkhorn(MU, nu, gaussian_kernel(G, 0.1), tol=1e-12, init=prev.warm_start(0.1))
    assert not cold.symmetric
    assert np.abs(warm.coupling - cold.coupling).sum() <= 1e-10
    # canonical gauge E_mu[log a] = 0
    assert abs(MU.mass @ cold.log_a) <= 1e-10


def test_sinkhorn_convergence_error():
    nu = GridMeasure.from_log_density(G, lambda p: -(p[:, 0] - 1) ** 2 / 2)
    with pytest.raises(ConvergenceError) as exc:
        sinkhorn(MU, nu, gaussian_kernel(G, 0.05), tol=1e-15, max_iter=3)
    assert exc.value.iterations == 3


def test_sinkhorn_shape_error():
    with pytest.raises(ShapeError):
        sinkhorn(np.ones(3) / 3, np.ones(2) / 2, gaussian_kernel(TWO, 1.0))


# bridge quantities

def test_entropic_cost_near_eps_over_eight(flat_bridges):
    H = entropic_cost(flat_bridges[0.1], mu_ref=MU)
    assert 0.0115 <= H <= 0.0135


def test_score_examples(flat_bridges):
    K = heat_kernel_1d(FLAT, G, 0.1)
    R = np.exp(K.log_measure())
    exact = sinkhorn(R.sum(1), R.sum(0), K)
    assert np.abs(schrodinger_score(exact, FLAT)).max() <= 1e-10
    errs = [l2_mu(schrodinger_score(flat_bridges[e], FLAT)[:, 0] + X / 2) for e in LADDER]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 0.05


def test_barycentric_examples(flat_bridges):
    lv = np.full((G.size, G.size), -np.inf)
    np.fill_diagonal(lv, 0.0)
    diag = sinkhorn(MU, MU, KernelMatrix(G, G, lv, 0.1, "euclidean_gaussian"))
    bp = barycentric_projection(diag, FLAT)
    assert np.abs(bp.values[bp.valid]).max() <= 1e-12
    flat = barycentric_projection(flat_bridges[0.05], FLAT)
    assert l2_mu(flat.values[:, 0] + X / 2) <= 0.05


def test_barycentric_quartic():
    sol = sinkhorn(MU, MU, heat_kernel_1d(QUARTIC, G, 0.05), tol=1e-13)
    bp = barycentric_projection(sol, QUARTIC).values[:, 0]
    g = 1 + X**2
    # (1/2) g^{-1} (d log(dmu/dvol) - d log g / 2) with dmu/dvol = exp(-x^2/2) / sqrt(g)
    target = 0.5 / g * (-X - 2 * X / g)
    assert l2_mu(bp - target) <= 0.1 * l2_mu(target)


def test_generator_examples(flat_bridges):
    sol = flat_bridges[0.05]
    const = conditional_generator(sol, lambda p: np.full(len(p), 3.0), FLAT)
    assert np.abs(const.values[const.valid]).max() <= 1e-10
    gx = conditional_generator(sol, lambda p: p[:, 0], FLAT)
    assert l2_mu(gx.values + X / 2) <= 0.08
    e = {eps: l2_mu(conditional_generator(flat_bridges[eps], lambda p: p[:, 0] ** 2, FLAT).values - (1 - X**2))
         for eps in (0.2, 0.05)}
    assert e[0.05] < e[0.2]
    arr = conditional_generator(sol, X**2, FLAT)
    assert np.allclose(arr.values, conditional_generator(sol, lambda p: p[:, 0] ** 2, FLAT).values)


def test_entropic_interpolation_examples():
    sol = sinkhorn(MU, MU, heat_kernel_1d(FLAT, G, 0.1), tol=1e-13)
    assert np.abs(entropic_interpolation(sol, FLAT, 0.0).mass - MU.mass).sum() <= 1e-6
    assert np.abs(entropic_interpolation(sol, FLAT, 1.0).mass - MU.mass).sum() <= 1e-6
    for t in (0.15, 0.3):
        a = entropic_interpolation(sol, FLAT, t).mass
        b = entropic_interpolation(sol, FLAT, 1 - t).mass
        assert np.abs(a - b).sum() <= 1e-10
    leb = GridMeasure.lebesgue(G)
    ts = np.linspace(0, 1, 21)
    fisher = [fisher_information(FLAT, entropic_interpolation(sol, FLAT, t), leb) for t in ts]
    assert ts[int(np.argmin(fisher))] == pytest.approx(0.5)


def test_entropic_interpolation_needs_symmetric_bridge():
    nu = GridMeasure.from_log_density(G, lambda p: -(p[:, 0] - 1) ** 2 / 2)
    sol = sinkhorn(MU, nu, gaussian_kernel(G, 0.2))
    with pytest.raises(DomainError):
        entropic_interpolation(sol, FLAT, 0.5)


def test_coupling_relative_entropy_examples():
    p = np.array([[0.4, 0.1], [0.2, 0.3]])
    q = np.array([[0.25, 0.25], [0.25, 0.25]])
    assert coupling_relative_entropy(p, p) == 0.0
    hand = sum(v * math.log(v / 0.25) for v in p.ravel())
    assert coupling_relative_entropy(p, q) == pytest.approx(hand, abs=1e-12)
    # tensorization
    a, b = np.array([0.7, 0.3]), np.array([0.2, 0.8])
    c, d = np.array([0.5, 0.5]), np.array([0.6, 0.4])
    kl = lambda u, v: float(np.sum(u * np.log(u / v)))
    assert coupling_relative_entropy(np.outer(a, b), np.outer(c, d)) == pytest.approx(kl(a, c) + kl(b, d), abs=1e-14)
    assert math.isinf(coupling_relative_entropy(p, np.array([[0.5, 0.5], [0.0, 0.0]])))
    with pytest.raises(ShapeError):
        coupling_relative_entropy(p, np.ones((3, 3)))


# grid diffusion couplings

def test_diffusion_coupling_flat_zero_potential_is_heat_kernel():
    for eps in (0.1, 0.4):
        ell = diffusion_coupling_grid(FLAT, Potential.zero().on_grid(FLAT, G), eps)
        P = ell / ell.sum(1, keepdims=True) / G.weights[None, :]
        K = np.exp(heat_kernel_1d(FLAT, G, eps).log_values)
        # the grid diffusion reflects at the window; compare away from it
        inner = np.abs(X) <= 6 - 6 * math.sqrt(eps)
        assert (np.abs(P - K)[inner] / K[inner].max(1, keepdims=True)).max() <= 1e-6


def test_diffusion_coupling_ou_transition():
    eps = 0.1
    field = Potential.gaussian(0.0, 1.0).on_grid(FLAT, G)
    P = GridDiffusion(FLAT, field).transition(eps) / G.weights[None, :]
    r = math.exp(-eps / 2)
    s2 = 1 - r * r
    exact = np.exp(-(X[None, :] - r * X[:, None]) ** 2 / (2 * s2)) / math.sqrt(2 * math.pi * s2)
    core = np.abs(X) <= 4.0
    assert (np.abs(P - exact)[core] / exact[core].max(1, keepdims=True)).max() <= 1e-4


def test_diffusion_coupling_detailed_balance():
    ell = diffusion_coupling_grid(QUARTIC, Potential.gaussian(0.0, 1.0).against_volume(QUARTIC).on_grid(QUARTIC, G), 0.1)
    assert np.abs(ell - ell.T).max() <= 1e-10 * ell.max()
    assert ell.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.abs(ell.sum(1) - MU.mass).sum() <= 1e-6


def test_symmetric_kl_decays_faster_than_eps_squared(flat_bridges):
    field = Potential.gaussian(0.0, 1.0).on_grid(FLAT, G)
    vals = [coupling_relative_entropy(diffusion_coupling_grid(FLAT, field, e), flat_bridges[e].coupling,
                                      symmetric=True, floor=1e-13) for e in LADDER]
    ratios = [v / e**2 for v, e in zip(vals, LADDER)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert np.polyfit(np.log(LADDER), np.log(vals), 1)[0] >= 1.8

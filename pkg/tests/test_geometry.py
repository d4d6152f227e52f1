"""Hessian chart: metric quantities, duality, divergences and geodesics."""
import numpy as np
import pytest
from scipy.integrate import quad

from bridgelab import DomainError, UsageError
from bridgelab.geometry import SHIPPED, check_potential, fd_hess, get_potential, make_chart


@pytest.fixture(scope="module")
def flat():
    return make_chart("flat")


@pytest.fixture(scope="module")
def quartic():
    # phi = x^2/2 + x^4/12, g = 1 + x^2
    return make_chart("quartic1d")


@pytest.fixture(scope="module")
def diag24():
    return make_chart("affine:2 4,0 0")


def test_metric_examples(flat, quartic):
    assert np.allclose(flat.metric(0.7), 1.0)
    assert quartic.metric(1.0).item() == pytest.approx(2.0, abs=1e-12)
    # finite-difference oracle of grad phi, step 1e-5
    assert fd_hess(quartic.potential, np.array([1.0]), 1e-5).item() == pytest.approx(2.0, abs=1e-8)
    f2 = make_chart("flat2d")
    assert np.allclose(f2.metric(np.array([[1.0, 2.0], [3.0, -4.0]])), np.eye(2))


def test_cometric_examples(flat, quartic, diag24):
    assert np.allclose(flat.cometric(-3.0), 1.0)
    assert quartic.cometric(1.0).item() == pytest.approx(0.5, abs=1e-14)
    assert np.allclose(diag24.cometric(np.array([0.3, 0.1])), np.diag([0.5, 0.25]), atol=1e-15)


def test_christoffel_examples(flat, quartic):
    assert np.all(flat.christoffel(1.3) == 0)
    assert quartic.christoffel(1.0).item() == pytest.approx(0.5, abs=1e-14)
    # Gamma = g'/(2g) with g' by central differences
    h = 1e-5
    gp = (quartic.metric(1.0 + h) - quartic.metric(1.0 - h)).item() / (2 * h)
    assert quartic.christoffel(1.0).item() == pytest.approx(gp / (2 * 2.0), abs=1e-9)


@pytest.mark.parametrize("name", SHIPPED)
def test_christoffel_symmetric_lower_indices(name):
    ch = make_chart(name)
    rng = np.random.default_rng(0)
    x = rng.uniform(-2, 2, (10, ch.dim))
    gam = ch.christoffel(x)
    assert np.allclose(gam, np.swapaxes(gam, -1, -2), atol=1e-14)


def test_legendre_dual_examples(flat, quartic, diag24):
    assert np.asarray(flat.legendre_dual(0.3)).item() == pytest.approx(0.3)
    assert np.asarray(quartic.legendre_dual(4.0 / 3.0)).item() == pytest.approx(1.0, abs=1e-12)
    aff = make_chart("affine:2 4,1 -1")
    x0 = np.array([0.3, -0.7])
    y = np.array([2.0, 4.0]) * x0 + np.array([1.0, -1.0])
    assert np.allclose(aff.legendre_dual(y), x0, atol=1e-13)


@pytest.mark.parametrize("name", SHIPPED)
def test_duality_round_trip(name):
    ch = make_chart(name)
    x = np.random.default_rng(1).uniform(-3, 3, (20, ch.dim))
    assert np.allclose(ch.legendre_dual(ch.dual(x)), x, atol=1e-10)


def test_geodesic_distance_examples(flat, quartic):
    assert flat.geodesic_distance(0.0, 3.0) == pytest.approx(3.0)
    oracle, _ = quad(lambda s: np.sqrt(1 + s * s), 0.0, 1.0, epsabs=1e-14)
    assert oracle == pytest.approx(1.1478, abs=1e-4)
    assert quartic.geodesic_distance(0.0, 1.0) == pytest.approx(oracle, abs=1e-12)
    for x in (-2.0, 0.0, 1.5):
        assert quartic.geodesic_distance(x, x) == 0.0


def test_riemannian_log_examples(flat, quartic):
    assert np.allclose(flat.riemannian_log(0.2, 1.7), 1.5)
    assert np.allclose(quartic.riemannian_log(0.4, 0.4), 0.0)
    # log_x z - (z - x) - Gamma (z - x)^2 / 2 is third order in |z - x|
    x0 = 0.5
    gam = quartic.christoffel(x0).item()
    ds = np.array([0.2, 0.1, 0.05, 0.025])
    err = [abs(quartic.riemannian_log(x0, x0 + d).item() - d - 0.5 * gam * d * d) for d in ds]
    slope = np.polyfit(np.log(ds), np.log(err), 1)[0]
    assert slope >= 2.8


def test_exp_log_inverse_2d():
    an = make_chart("aniso2d")
    x, z = np.array([0.0, 0.0]), np.array([0.5, 0.3])
    v = an.riemannian_log(x, z)
    assert np.allclose(an.exp_map(x, v), z, atol=1e-8)
    # |log_x z|_g equals the distance
    g = an.metric(x)
    assert np.sqrt(v @ g @ v) == pytest.approx(an.geodesic_distance(x, z), rel=1e-6)


def test_bregman_examples(flat, quartic):
    assert flat.bregman(0.0, 2.0) == pytest.approx(2.0)
    assert quartic.bregman(0.0, 1.0) == pytest.approx(1 / 2 + 1 / 12, abs=1e-14)
    for x in (-1.0, 0.3, 2.0):
        assert quartic.bregman(x, x) == 0.0
    assert quartic.bregman(2.0, -1.0) >= 0


def test_symmetrized_bregman_examples(flat, quartic):
    assert flat.symmetrized_bregman(0.0, 2.0) == pytest.approx(4.0)
    assert quartic.symmetrized_bregman(0.0, 1.0) == pytest.approx(4.0 / 3.0, abs=1e-14)
    assert quartic.symmetrized_bregman(0.7, 0.7) == 0.0


def test_bregman_approximates_squared_distance_to_fourth_order(flat, quartic):
    ds = np.array([0.4, 0.2, 0.1, 0.05])
    err = [abs(quartic.symmetrized_bregman(1.0, 1.0 + d) - quartic.geodesic_distance(1.0, 1.0 + d) ** 2)
           for d in ds]
    assert np.polyfit(np.log(ds), np.log(err), 1)[0] >= 3.8
    for d in ds:
        assert abs(flat.symmetrized_bregman(0.0, d) - flat.geodesic_distance(0.0, d) ** 2) <= 1e-12


def test_volume_density_examples(flat, quartic, diag24):
    assert flat.volume_density(2.0) == pytest.approx(1.0)
    assert quartic.volume_density(1.0) == pytest.approx(np.sqrt(2.0), abs=1e-14)
    assert diag24.volume_density(np.zeros(2)) == pytest.approx(np.sqrt(8.0), abs=1e-14)


def test_van_vleck_diagonal():
    an = make_chart("aniso2d")
    z = np.array([0.3, -0.2])
    assert an.van_vleck(z, z) == pytest.approx(1.0, abs=1e-10)
    h = 1e-4
    for e in np.eye(2):
        d = (np.log(an.van_vleck(z + h * e, z)) - np.log(an.van_vleck(z - h * e, z))) / (2 * h)
        assert abs(d) <= 1e-4


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_potentials_meet_invariants(name):
    inv = check_potential(get_potential(name))
    assert inv["hess_asymmetry"] <= 1e-12
    assert inv["bound_violation"] <= 1e-12
    assert inv["third_asymmetry"] <= 1e-12
    assert inv["third_fd_error"] <= 1e-5


def test_errors(quartic):
    with pytest.raises(UsageError):
        make_chart("no-such-potential")
    with pytest.raises(DomainError):
        quartic.metric(100.0)

import math
from fractions import Fraction

import numpy as np
import pytest

from blq.catalog import holder_identity, loomis_whitney
from blq.data import derive_adjoint_exponents
from blq.entropy import (
    DiscreteDensity,
    default_theta,
    entropic_bl_margin,
    entropy_power,
    log_lambda,
    p_entropy_probe,
    power_curvature_exact,
    power_curvature_fd,
    renyi_entropy,
    shannon_entropy,
)
from blq.errors import MassError
from blq.grid import GridFunction, gaussian_grid, grid_pushforward

BOX2 = ((-8.0, 8.0), (-8.0, 8.0))


def test_uniform_density_entropy_is_log_m():
    f = DiscreteDensity(np.full(7, 1.0))
    for p in (0.3, 1.0, 2.5):
        assert renyi_entropy(f, p) == pytest.approx(math.log(7), rel=1e-12)


def test_two_point_density():
    f = DiscreteDensity(np.array([0.5, 0.5]))
    for p in (0.5, 1.0, 4.0):
        assert renyi_entropy(f, p) == pytest.approx(math.log(2), rel=1e-12)


def test_gaussian_differential_entropy():
    # N(0, I_d) has entropy (d/2) log(2 pi e) = 1.41894 d
    for d, res in ((1, 4096), (2, 256)):
        quad = np.eye(d) / (2.0 * math.pi)
        f = gaussian_grid(quad, ((-12.0, 12.0),) * d, (res,) * d)
        assert shannon_entropy(f) == pytest.approx(1.4189385332 * d, abs=1e-3)


def test_renyi_tends_to_shannon():
    f = gaussian_grid(np.eye(2), BOX2, (128, 128))
    h1 = shannon_entropy(f)
    slopes = []
    for eps in (1e-2, 1e-3):
        slopes.append(abs(renyi_entropy(f, 1.0 - eps) - h1) / eps)
    assert slopes[0] == pytest.approx(slopes[1], rel=0.2)
    assert abs(renyi_entropy(f, 1.0 + 1e-3) - h1) <= 2 * slopes[1] * 1e-3


def test_zero_mass_rejected():
    with pytest.raises(MassError):
        shannon_entropy(DiscreteDensity(np.zeros(4)))


def test_entropic_margin_product_gaussian_is_zero():
    lw = loomis_whitney(2)
    f = gaussian_grid(np.eye(2), BOX2, (256, 256))
    assert abs(entropic_bl_margin(f, lw, 1.0)) < 1e-3


def test_entropic_margin_holder_identity_exact():
    datum = holder_identity(2)
    f = gaussian_grid(np.diag([1.0, 2.0]), BOX2, (128, 128))
    assert entropic_bl_margin(f, datum, 1.0) == pytest.approx(0.0, abs=1e-9)


def test_entropic_margin_correlated_gaussian_is_mutual_information():
    lw = loomis_whitney(2)
    sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
    f = gaussian_grid(np.linalg.inv(sigma) / (2.0 * math.pi), ((-10.0, 10.0),) * 2, (256, 256))
    margin = entropic_bl_margin(f, lw, 1.0)
    assert margin == pytest.approx(-0.5 * math.log(np.linalg.det(sigma)), abs=1e-3)
    assert margin > 0


def test_probe_indicator_nonpositive():
    lw = loomis_whitney(2)
    f = GridFunction.indicator_box(((0.0, 2.0), (0.0, 0.75)), ((-4.0, 4.0),) * 2, (128, 128))
    assert p_entropy_probe(f, 0.5, lw, bl_value=1.0) <= 1e-9


def test_entropy_power_monotone_in_p():
    f = gaussian_grid(np.eye(2), BOX2, (128, 128))
    values = [entropy_power(f, p) for p in (0.3, 0.5, 0.7, 0.9, 1.0)]
    assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))


def test_counterexample_curvature_to_1e12():
    fd = power_curvature_fd(Fraction(1, 4))
    assert abs(fd - 0.4096) < 1e-12
    assert power_curvature_exact(Fraction(1, 4)) == 0.4096
    # curvature is positive below 1/2 (the convexity failure window)
    assert power_curvature_fd(Fraction(1, 3)) > 0
    assert power_curvature_fd(Fraction(3, 4)) < 0


def test_derivative_identity_of_the_quotient():
    # p^2 d/dp log Lambda = log(bl) - H(f^p/..) + sum c_i H(f_i^{p_i}/..)
    lw = loomis_whitney(2)
    bl = 1.0
    f = gaussian_grid(np.array([[1.3, 0.2], [0.2, 0.9]]), ((-6.0, 6.0),) * 2, (128, 128))
    theta = (0.4, 0.6)
    p0 = 0.7
    h = 1e-4
    lam = []
    for p in (p0 - h, p0 + h):
        lam.append(log_lambda(f, lw, derive_adjoint_exponents(lw, theta, p), bl))
    lhs = p0**2 * (lam[1] - lam[0]) / (2 * h)
    params0 = derive_adjoint_exponents(lw, theta, p0)
    rhs = math.log(bl) - entropy_power(f, p0)
    for c, b, q in zip(lw.exponents, lw.maps, params0.p_i):
        rhs += c * entropy_power(grid_pushforward(f, b), q)
    assert lhs == pytest.approx(rhs, rel=1e-3)


def test_default_theta_sums_to_one():
    lw = loomis_whitney(3)
    theta = default_theta(lw)
    assert sum(theta) == pytest.approx(1.0, abs=1e-14)
    params = derive_adjoint_exponents(lw, theta, 0.5)
    assert params.mode == "forward"

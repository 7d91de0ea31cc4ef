import math

import numpy as np
import pytest
import scipy.integrate

from blq.errors import ParameterDomainError
from blq.grid import GridFunction, gaussian_grid, lp_norm, random_grid_function
from blq.tomography import (
    DirectionSet,
    averaged_projection_margin,
    gauss_wedge_integral_mc,
    haar_planes,
    kplane_entropy_sequence,
    kplane_transform,
    projection_shadow_measure,
    radial_moment_factor,
    restricted_xray_constant,
    scaling_exponent_q,
    tomography_lower_bound_margin,
    wedge_moment,
    xray_transform,
    xx_constant_via_mc,
    xx_gamma_constant,
    xx_inequality_margin,
    xx_r_exponent,
)

BOX = ((-2.0, 2.0), (-2.0, 2.0))


def test_direction_set_validation():
    with pytest.raises(ValueError):
        DirectionSet(np.array([[1.0, 1.0]]), np.array([1.0]))
    with pytest.raises(ValueError):
        DirectionSet(np.array([[1.0, 0.0]]), np.array([0.5]))
    ds = DirectionSet.uniform_circle(8)
    assert len(ds) == 8 and ds.weights.sum() == pytest.approx(1.0)


def test_xray_unit_square_chords():
    f = GridFunction.indicator_box(((0, 1), (0, 1)), BOX, (128, 128))
    tom = xray_transform(f, DirectionSet.uniform_circle(4))
    # the support of each profile has measure ~1 and interior height ~1
    for i in range(4):
        profile = tom.values[i]
        assert profile.max() == pytest.approx(1.0, abs=2e-2)
        support = float(np.sum(profile > 0.5) * tom.offset_cell_volume)
        assert support == pytest.approx(1.0, abs=0.05)


def test_xray_disk_chord_lengths():
    f = GridFunction.from_callable(
        lambda x, y: (x**2 + y**2 <= 1.0).astype(float), BOX, (256, 256)
    )
    tom = xray_transform(f, DirectionSet.uniform_circle(8))
    ax = tom.offsets_axes[0]
    sel = np.abs(ax) <= 0.8
    chord = 2.0 * np.sqrt(1.0 - ax[sel] ** 2)
    assert np.max(np.abs(tom.values[0][sel] - chord) / chord) < 2e-2


@pytest.mark.parametrize("method", ["sample", "deposit"])
def test_xray_l1_invariance(method):
    rng = np.random.default_rng(4)
    for seed in rng.integers(0, 1 << 30, size=3):
        f = random_grid_function(((-4, 4), (-4, 4)), (128, 128), seed=int(seed))
        tom = xray_transform(f, DirectionSet.uniform_circle(90), method=method)
        assert tom.l1() / f.mass == pytest.approx(1.0, abs=1e-3)
    g = gaussian_grid(np.eye(2), ((-6, 6), (-6, 6)), (128, 128))
    tom = xray_transform(g, DirectionSet.uniform_circle(90), method=method)
    assert tom.l1() / g.mass == pytest.approx(1.0, abs=1e-3)


def test_xray_rotation_equivariance():
    f = random_grid_function(BOX, (64, 64), seed=2)
    dirs = DirectionSet.uniform_circle(8)
    base = xray_transform(f, dirs)
    rotated = xray_transform(GridFunction(f.box, f.resolution, np.rot90(f.values)), dirs)
    assert np.max(np.abs(rotated.values - np.roll(base.values, 2, axis=0))) < 1e-9


def test_xray_empty_directions_rejected():
    f = random_grid_function(BOX, (16, 16), seed=0)
    with pytest.raises(ValueError):
        xray_transform(f, DirectionSet(np.zeros((0, 2)), np.zeros(0)))


def test_kplane_k1_d2_coincides_with_xray():
    f = random_grid_function(BOX, (48, 48), seed=6)
    dirs = DirectionSet.uniform_circle(12)
    frames = [np.array([[v[0]], [v[1]]]) for v in dirs.vectors]
    tom_x = xray_transform(f, dirs)
    tom_k = kplane_transform(f, 1, frames)
    assert np.array_equal(tom_x.values, tom_k.values)


def test_kplane_gaussian_profiles_are_gaussian():
    f = gaussian_grid(np.eye(3), ((-4, 4),) * 3, (48,) * 3)
    tom = kplane_transform(f, 2, 16, seed=3)
    ax = tom.offsets_axes[0]
    closed = np.exp(-math.pi * ax**2)
    for i in range(len(tom.weights)):
        err = np.sum(np.abs(tom.values[i] - closed)) * tom.offset_cell_volume
        assert err < 2e-2


def test_kplane_scaling_linearity():
    f = random_grid_function(BOX, (32, 32), seed=9)
    lam = 2.5
    g = GridFunction(f.box, f.resolution, lam * f.values)
    frames = haar_planes(2, 1, 6, seed=1)
    a = kplane_transform(f, 1, frames)
    b = kplane_transform(g, 1, frames)
    assert np.allclose(b.values, lam * a.values, rtol=1e-12, atol=1e-12)


def test_kplane_scope_errors():
    f = random_grid_function(BOX, (8, 8), seed=0)
    with pytest.raises(ValueError):
        kplane_transform(f, 2, 4)  # k must satisfy k <= d-1


def test_scaling_line_solver():
    q = scaling_exponent_q(0.5, 2)
    assert q == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert scaling_exponent_q(1.0, 3, k=2) == pytest.approx(1.0)


def test_lower_bound_margin_p_equals_one():
    f = random_grid_function(BOX, (64, 64), seed=11)
    m = tomography_lower_bound_margin(f, 1.0, 1.0, dirs=DirectionSet.uniform_circle(60))
    assert abs(m.margin) <= m.quadrature_estimate


def test_lower_bound_margin_square_indicator():
    f = GridFunction.indicator_box(((0, 1), (0, 1)), BOX, (128, 128))
    q = scaling_exponent_q(0.5, 2)
    m = tomography_lower_bound_margin(f, 0.5, q, dirs=DirectionSet.uniform_circle(360))
    assert m.certified
    assert m.margin > 0


def test_off_line_exponents_rejected():
    f = random_grid_function(BOX, (16, 16), seed=1)
    with pytest.raises(ParameterDomainError, match="scaling line"):
        tomography_lower_bound_margin(f, 0.5, 0.9)


def test_restricted_constant_p_one():
    mu = DirectionSet.fibonacci_sphere(32)
    est = restricted_xray_constant(mu, 1.0, 1.0, 3, 1000, seed=0)
    assert est.value == 1.0 and est.stderr == 0.0


def test_restricted_constant_great_circle_vanishes():
    mu = DirectionSet.great_circle(64)
    p = 0.5
    est = restricted_xray_constant(mu, p, scaling_exponent_q(p, 3), 3, 20000, seed=1)
    assert est.value < 1e-3


def test_restricted_constant_uniform_matches_sin_moment():
    p = 0.5
    d = 2
    q = scaling_exponent_q(p, d)
    a = d * q * (1.0 / p - 1.0) / (d - 1)
    oracle = scipy.integrate.quad(lambda t: math.sin(t) ** a / math.pi, 0.0, math.pi)[0]
    mu = DirectionSet.uniform_circle(512)
    est = restricted_xray_constant(mu, p, q, d, 200_000, seed=5)
    assert est.mean == pytest.approx(oracle, abs=4.0 * est.mean_stderr + 1e-4)


@pytest.mark.parametrize("q", [0.1 * i for i in range(1, 10)])
def test_wedge_moment_matches_sin_oracle(q):
    oracle = scipy.integrate.quad(
        lambda t: math.sin(t) ** (1.0 - q) / math.pi, 0.0, math.pi
    )[0]
    assert abs(wedge_moment(2, q) - oracle) < 1e-10


def test_gamma_constant_limits():
    assert xx_gamma_constant(2, 2.0, 1.0 - 1e-9) == pytest.approx(1.0, abs=1e-6)
    # d=2, q -> 0: the inner moment tends to the mean of |sin|, which is 2/pi
    assert wedge_moment(2, 1e-9) == pytest.approx(2.0 / math.pi, rel=1e-6)
    with pytest.raises(ParameterDomainError):
        xx_gamma_constant(2, 0.5, 0.5)


def test_gauss_wedge_integral_matches_closed_form():
    for d in (2, 3):
        a = 0.5
        closed = 1.0
        for ell in range(d):
            closed *= radial_moment_factor(d - ell, a)
        est = gauss_wedge_integral_mc(d, a, 100_000, seed=2)
        assert est.mean == pytest.approx(closed, abs=4.0 * est.mean_stderr + 1e-5)


def test_gamma_constant_vs_mc():
    for d in (2, 3):
        exact = xx_gamma_constant(d, 2.0, 0.5)
        mc = xx_constant_via_mc(d, 2.0, 0.5, 200_000, seed=7)
        assert mc.value == pytest.approx(exact, rel=0.01)


def test_xx_r_exponent_on_condition():
    d, p, q = 2, 2.0, 0.5
    r = xx_r_exponent(d, p, q)
    lhs = (1.0 / q - 1.0 / p) * (1.0 - 1.0 / r)
    rhs = (1.0 / (d - 1)) * (1.0 - 1.0 / p) * (1.0 / q - 1.0)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_xx_three_norm_inequality_seeded():
    rng = np.random.default_rng(13)
    dirs = DirectionSet.uniform_circle(60)
    for _ in range(100):
        f = random_grid_function(BOX, (64, 64), seed=int(rng.integers(1 << 30)), smooth=1)
        m = xx_inequality_margin(f, 2.0, 0.5, dirs)
        assert m.margin >= -m.quadrature_estimate


def test_gaussian_entropy_sequence_constant_d2():
    f = gaussian_grid(np.eye(2), ((-6.0, 6.0), (-6.0, 6.0)), (256, 256))
    seq = kplane_entropy_sequence(f, dirs=DirectionSet.uniform_circle(180))
    assert len(seq) == 2
    assert seq[0] == pytest.approx(0.5, abs=1e-6)
    assert abs(seq[1] - seq[0]) < 1e-3


def test_entropy_sequence_shape_and_mixture_monotone_d3():
    base = gaussian_grid(np.eye(3) * 1.3, ((-4.0, 4.0),) * 3, (48,) * 3)
    bump = gaussian_grid(np.eye(3) * 0.6, ((-4.0, 4.0),) * 3, (48,) * 3)
    f = GridFunction(base.box, base.resolution, base.values + 0.6 * bump.values)
    seq = kplane_entropy_sequence(f, n_planes=96, dirs=DirectionSet.fibonacci_sphere(96))
    assert len(seq) == 3
    assert all(math.isfinite(s) for s in seq)
    coarse = kplane_entropy_sequence(
        f.coarsen(2), n_planes=48, dirs=DirectionSet.fibonacci_sphere(48)
    )
    tol = [abs(a - b) + 1e-4 for a, b in zip(seq, coarse)]
    assert seq[1] >= seq[0] - (tol[0] + tol[1])
    assert seq[2] >= seq[1] - (tol[1] + tol[2])


def test_norm_monotonicity_chain_d3():
    f = random_grid_function(((-2.0, 2.0),) * 3, (32,) * 3, seed=11, smooth=1)
    p = 0.7
    t1 = xray_transform(f, DirectionSet.fibonacci_sphere(96), method="deposit")
    t2 = kplane_transform(f, 2, 96, seed=5)
    n0 = lp_norm(f, p)
    n1 = t1.lq(scaling_exponent_q(p, 3, 1))
    n2 = t2.lq(scaling_exponent_q(p, 3, 2))
    assert n0 <= n1 <= n2


def test_projection_shadow_exact_box():
    f = GridFunction.indicator_box(((0, 1), (0, 0.5)), BOX, (64, 64))
    # axis direction: shadow of the box on the line orthogonal to e1 has
    # length equal to the x-extent including the half-cell skirt of the cells
    shadow = projection_shadow_measure(f, np.array([0.0, 1.0]))
    assert shadow == pytest.approx(1.0, abs=2 * f.cell_sizes[0])


def test_averaged_projection_inequality_box_unions():
    rng = np.random.default_rng(19)
    for _ in range(20):
        vals = np.zeros((64, 64))
        for _ in range(int(rng.integers(1, 4))):
            x0, y0 = rng.integers(5, 40, size=2)
            w, h = rng.integers(4, 20, size=2)
            vals[x0 : x0 + w, y0 : y0 + h] = 1.0
        f = GridFunction(BOX, (64, 64), vals)
        m = averaged_projection_margin(f, DirectionSet.uniform_circle(180))
        assert m.margin >= -m.quadrature_estimate


def test_tomogram_csv_export(tmp_path):
    f = random_grid_function(BOX, (16, 16), seed=3)
    tom = xray_transform(f, DirectionSet.uniform_circle(4), t_resolution=8)
    path = tmp_path / "tomogram.csv"
    tom.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "direction_index,offset_0,value"
    assert len(lines) == 1 + 4 * 8


def test_threaded_transform_is_identical(monkeypatch):
    f = random_grid_function(BOX, (48, 48), seed=21)
    dirs = DirectionSet.uniform_circle(16)
    single = xray_transform(f, dirs)
    monkeypatch.setenv("BLQ_THREADS", "4")
    multi = xray_transform(f, dirs)
    assert np.array_equal(single.values, multi.values)

import numpy as np
import pytest

from _oracles import catalog, random_points
from finslerwarp.catalog import catalog_metric
from finslerwarp.curvature import curvature_report, e_tensor, f_hessian, s_curvature, trace_density
from finslerwarp.equivalence import fit_isotropy_constant
from finslerwarp.metric import PointTangent, make_metric
from finslerwarp.spray import spray_vector
from finslerwarp.verify import fd_e_tensor, geodesic_s_curvature

EUCLID = make_metric(3, "s^2+1")
RIEMANN = make_metric(3, "s^2+r^2")
RANDERS = catalog_metric("randers_warp,f=r,eps=0.5")
PT_110 = PointTangent.from_vector(1.0, (1.0, 1.0, 0.0))


@pytest.mark.parametrize("mode", ["printed", "definitional"])
def test_euclid_trace_vanishes(mode):
    assert trace_density(EUCLID, 1.2, 0.4, mode).T == 0.0


def test_riemann_trace_values():
    assert trace_density(RIEMANN, 2.0, 1.0, "definitional").T == pytest.approx(1.0, abs=1e-13)
    assert trace_density(RIEMANN, 2.0, 1.0, "printed").T == pytest.approx(1.5, abs=1e-13)


def _jacobian_trace(spec, r, s, h=1e-5):
    """sum_m dG^m/dv^m by central differences of spray_vector at alpha_bar = 1."""
    v = np.array([s, 1.0, 0.0])
    tot = 0.0
    for m in range(3):
        e = np.zeros(3)
        e[m] = h
        gp = spray_vector(spec, PointTangent.from_vector(r, v + e), check_domain=False)[m]
        gm = spray_vector(spec, PointTangent.from_vector(r, v - e), check_domain=False)[m]
        tot += (gp - gm) / (2 * h)
    return tot


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_definitional_trace_is_the_spray_divergence(spec, rng):
    for _ in range(4):
        r, s = rng.uniform(0.7, 2.8), rng.uniform(-1.8, 1.8)
        T = trace_density(spec, r, s).T
        assert T == pytest.approx(_jacobian_trace(spec, r, s), rel=1e-7, abs=1e-7)


def test_f_hessian_examples():
    H = f_hessian(EUCLID, PointTangent.from_vector(1.0, (0.0, 1.0, 0.0)))
    assert H[0, 0] == pytest.approx(1.0, abs=1e-15)
    v = np.array([1.0, 1.0, 0.0])
    H = f_hessian(EUCLID, PointTangent.from_vector(1.0, v))
    F = np.linalg.norm
    h = 1e-4
    fd = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            ei, ej = np.eye(3)[i] * h, np.eye(3)[j] * h
            fd[i, j] = (F(v + ei + ej) - F(v + ei - ej) - F(v - ei + ej) + F(v - ei - ej)) / (4 * h * h)
    np.testing.assert_allclose(H, fd, atol=1e-6)


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_hessians_annihilate_the_tangent(spec, rng):
    for r, v in random_points(spec, 6, rng):
        pt = PointTangent.from_vector(r, v)
        np.testing.assert_allclose(f_hessian(spec, pt) @ v, 0.0, atol=1e-10)
        E = e_tensor(spec, pt)
        np.testing.assert_array_equal(E, E.T)
        np.testing.assert_allclose(E @ v, 0.0, atol=1e-9)
        # the printed closed form annihilates v only on the unit alpha_bar sphere
        unit = pt.scaled(1.0 / pt.alpha_bar)
        E = e_tensor(spec, unit, "printed")
        np.testing.assert_array_equal(E, E.T)
        np.testing.assert_allclose(E @ unit.vector, 0.0, atol=1e-9)


def test_printed_off_diagonal_block_has_the_wrong_homogeneity():
    pt = PointTangent.from_vector(1.0, (1.0, 1.0, 0.0))
    E1, E2 = e_tensor(RANDERS, pt, "printed"), e_tensor(RANDERS, pt.scaled(2.0), "printed")
    assert E2[0, 0] == pytest.approx(0.5 * E1[0, 0], rel=1e-12)
    assert E2[0, 1] == pytest.approx(E1[0, 1], rel=1e-12)  # 0-homogeneous, not -1
    assert np.abs(E2 @ pt.scaled(2.0).vector).max() > 1e-3


def test_e_tensor_examples():
    assert not np.any(e_tensor(EUCLID, PT_110))
    np.testing.assert_allclose(e_tensor(RIEMANN, PointTangent.from_vector(2.0, (0.3, 1.0, -0.4))), 0.0, atol=1e-9)
    np.testing.assert_allclose(e_tensor(RANDERS, PT_110), fd_e_tensor(RANDERS, PT_110), atol=1e-5)


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_scaling(spec, rng):
    for r, v in random_points(spec, 4, rng):
        pt = PointTangent.from_vector(r, v)
        np.testing.assert_allclose(e_tensor(spec, pt.scaled(2.0)), 0.5 * e_tensor(spec, pt), rtol=1e-8, atol=1e-12)
        assert s_curvature(spec, pt.scaled(2.0)) == pytest.approx(2 * s_curvature(spec, pt), rel=1e-8, abs=1e-12)


def test_s_curvature_examples():
    assert s_curvature(EUCLID, PT_110, "BH") == 0.0
    assert s_curvature(RIEMANN, PointTangent.from_vector(2.2, (0.4, 0.0, 1.3)), "BH") == pytest.approx(0, abs=1e-8)
    assert s_curvature(RANDERS, PT_110, "BH") == pytest.approx(geodesic_s_curvature(RANDERS, PT_110, "BH"), abs=1e-5)


@pytest.mark.parametrize("f", ["r", "1+r^2", "exp(r)"])
def test_riemannian_grid_vanishing(f):
    spec = catalog_metric(f"riemann_warp,f={f}")
    for r in np.linspace(0.5, 3.0, 17):
        for s in np.linspace(-2.0, 2.0, 17):
            pt = PointTangent(float(r), float(s), (1.0, 0.0))
            np.testing.assert_allclose(e_tensor(spec, pt), 0.0, atol=1e-8)
            assert abs(s_curvature(spec, pt, "BH")) <= 1e-8


def test_report_bundles_the_pieces():
    rep = curvature_report(RANDERS, PT_110, "ht")
    assert rep.volume_kind == "HT"
    np.testing.assert_array_equal(rep.E, e_tensor(RANDERS, PT_110))
    assert rep.S == s_curvature(RANDERS, PT_110, "HT")
    assert set(rep.as_dict()) >= {"E", "S", "F_hessian"}


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_tensor_and_scalar_isotropy_are_consistent(spec):
    """E - ((n+1)/2) c F_vv is bounded by the scalar E-fit residual."""
    s_grid = np.linspace(-1.5, 1.5, 13)
    for r in (0.8, 1.7, 2.6):
        fit = fit_isotropy_constant(spec, "E", r, s_grid)
        for s in s_grid[::3]:
            pt = PointTangent(r, float(s), (0.6, 0.8))
            gap = e_tensor(spec, pt) - 0.5 * fit.kappa_fit * f_hessian(spec, pt)
            assert np.abs(gap).max() <= 10 * fit.max_residual + 1e-12

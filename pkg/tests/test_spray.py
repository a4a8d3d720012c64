import math

import numpy as np
import pytest

from _oracles import catalog, random_points
from finslerwarp.catalog import catalog_metric
from finslerwarp.errors import InvalidInputError
from finslerwarp.metric import PointTangent, make_metric
from finslerwarp.spray import (
    spray_discrepancy,
    spray_scalars,
    spray_scalars_definitional,
    spray_scalars_printed,
    spray_vector,
)
from finslerwarp.verify import fd_spray

EUCLID = make_metric(3, "s^2+1")
RIEMANN = make_metric(3, "s^2+r^2")
FIELDS = ("Phi", "Phi_s", "Phi_ss", "Phi_sss", "Psi", "Psi_s", "Psi_ss", "Psi_sss")


@pytest.mark.parametrize("mode", ["printed", "definitional"])
def test_euclid_spray_vanishes(mode):
    sc = spray_scalars(EUCLID, 1.3, 0.7, mode)
    assert all(abs(getattr(sc, f)) < 1e-14 for f in FIELDS)
    assert sc.mode == mode


def test_printed_riemann_values():
    sc = spray_scalars_printed(RIEMANN, 2.0, 1.0)
    assert sc.Phi == -2.03125
    # the printed Psi carries s chi_r (W + X) / 4 = 1 * 8 * 0.125 / 4
    assert sc.Psi == pytest.approx(0.25, abs=1e-15)
    assert spray_scalars_printed(RIEMANN, 1.0, 1.0).Phi == -1.25


def test_definitional_riemann_values():
    sc = spray_scalars_definitional(RIEMANN, 2.0, 1.0)
    assert sc.Phi == pytest.approx(-1.0, abs=1e-13)
    assert sc.Psi == pytest.approx(0.5, abs=1e-13)
    assert sc.Phi_s == pytest.approx(0.0, abs=1e-13)
    assert sc.Psi_s == pytest.approx(0.5, abs=1e-13)
    assert sc.Psi_ss == pytest.approx(0.0, abs=1e-12)


def test_spray_vector_examples():
    pt = PointTangent.from_vector(2.0, (1.0, 1.0, 0.0))
    np.testing.assert_allclose(spray_vector(RIEMANN, pt), [-1.0, 0.5, 0.0], atol=1e-13)
    np.testing.assert_array_equal(spray_vector(EUCLID, pt), np.zeros(3))


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_spray_is_two_homogeneous(spec, rng):
    for r, v in random_points(spec, 5, rng):
        pt = PointTangent.from_vector(r, v)
        np.testing.assert_allclose(spray_vector(spec, pt.scaled(2.0)), 4 * spray_vector(spec, pt), rtol=1e-10,
                                   atol=1e-12)


def test_unknown_mode():
    with pytest.raises(InvalidInputError):
        spray_scalars(EUCLID, 1.0, 0.0, "verbatim")


def test_discrepancy_report():
    assert max(spray_discrepancy(EUCLID, [1.0, 2.0], [-1.0, 1.0]).max_abs.values()) == 0.0
    rep = spray_discrepancy(RIEMANN, [2.0], [1.0])
    assert rep.max_abs["Phi"] == pytest.approx(1.03125, abs=1e-13)
    flat = catalog_metric("randers_warp,f=1,eps=0.5")
    assert max(spray_discrepancy(flat, np.linspace(0.5, 3, 4), np.linspace(-2, 2, 5)).max_abs.values()) < 1e-13


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_matches_finite_difference_spray(spec, rng):
    for r, v in random_points(spec, 8, rng, margin=0.2):
        pt = PointTangent.from_vector(r, v)
        np.testing.assert_allclose(spray_vector(spec, pt), fd_spray(spec, pt), rtol=0, atol=1e-6)


@pytest.mark.parametrize("spec", catalog(4), ids=lambda s: s.source)
def test_rotational_symmetry(spec, rng):
    for _ in range(5):
        r, s = rng.uniform(0.6, 2.9), rng.uniform(-1.9, 1.9)
        base = spray_scalars(spec, r, s)
        for _ in range(2):
            vb = rng.standard_normal(3)
            vb /= np.linalg.norm(vb)
            pt = PointTangent(r, s, tuple(vb), tuple(rng.standard_normal(3)))
            G = spray_vector(spec, pt)
            assert G[0] == pytest.approx(base.Phi, abs=1e-10)
            np.testing.assert_allclose(G[1:], base.Psi * vb, atol=1e-10)


@pytest.mark.parametrize("f, fprime", [("r", lambda r: 1.0), ("1+r^2", lambda r: 2 * r), ("exp(r)", math.exp)])
def test_riemannian_geodesic_coefficient(f, fprime, rng):
    spec = catalog_metric(f"riemann_warp,f={f}")
    fval = {"r": lambda r: r, "1+r^2": lambda r: 1 + r * r, "exp(r)": math.exp}[f]
    for _ in range(7):
        r, v = random_points(spec, 1, rng)[0]
        pt = PointTangent.from_vector(r, v)
        expected = -0.5 * fval(r) * fprime(r) * pt.alpha_bar**2
        assert spray_vector(spec, pt)[0] == pytest.approx(expected, rel=1e-8)


def _richardson_derivative(fn, x, k, h=5e-2, levels=3):
    stencil = [(k / 2 - m, (-1) ** m * math.comb(k, m)) for m in range(k + 1)]
    ests = []
    for lev in range(levels + 1):
        hh = h / 2**lev
        ests.append(sum(w * fn(x + a * hh) for a, w in stencil) / hh**k)
    for m in range(1, len(ests)):
        ests = [ests[i + 1] + (ests[i + 1] - ests[i]) / (4**m - 1) for i in range(len(ests) - 1)]
    return ests[0]


@pytest.mark.parametrize("spec", catalog()[3:], ids=lambda s: s.source)
def test_jet_derivatives_match_differences_in_s(spec, rng):
    for _ in range(3):
        r, s = rng.uniform(0.7, 2.8), rng.uniform(-1.7, 1.7)
        sc = spray_scalars(spec, r, s)
        for name in ("Phi", "Psi"):
            size = max(1.0, abs(getattr(sc, name)))
            fn = lambda x: getattr(spray_scalars(spec, r, x), name)  # noqa: E731
            for k, suffix in enumerate(("_s", "_ss", "_sss"), start=1):
                exact = getattr(sc, name + suffix)
                approx = _richardson_derivative(fn, s, k)
                assert abs(exact - approx) <= 1e-5 * max(size, abs(exact)), (name + suffix, r, s)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import catalog, random_points
from finslerwarp import parse
from finslerwarp.catalog import catalog_metric
from finslerwarp.errors import DegenerateMetricError, InvalidInputError, ValidityError
from finslerwarp.metric import (
    F_value,
    MetricSpec,
    PointTangent,
    det_forms,
    det_fundamental,
    fundamental_tensor,
    make_metric,
    scalar_fields,
    validity_scan,
)

EUCLID = make_metric(3, "s^2+1")
RIEMANN = make_metric(3, "s^2+r^2")
RANDERS = catalog_metric("randers_warp,f=1,eps=0.5")


def test_valid_examples():
    assert EUCLID.n == 3 and RIEMANN.r_domain == (0.5, 3.0)


def test_negative_w_is_rejected_with_location():
    with pytest.raises(ValidityError) as info:
        make_metric(3, "s^2-1")
    d = info.value.details
    assert d["condition"] in ("w_pos", "expression_domain")
    assert abs(d["s"]) <= 1.0


def test_spec_field_checks():
    with pytest.raises(InvalidInputError):
        make_metric(1, "s^2+1")
    with pytest.raises(InvalidInputError):
        make_metric(3, "s^2+1", r_domain=(2.0, 1.0))
    with pytest.raises(InvalidInputError):
        make_metric(3, "s^2+1", given_as="F")


@pytest.mark.parametrize("r, s", [(0.5, -2.0), (1.0, 0.0), (2.7, 1.3)])
def test_euclid_scalars(r, s):
    m = scalar_fields(EUCLID, r, s)
    assert (m.chi, m.chi_s, m.Lambda, m.U, m.V, m.W, m.X, m.W_r) == pytest.approx(
        (2, 0, 4, 1, 0, 0.5, 0, 0), abs=1e-14
    )


def test_riemann_scalars():
    m = scalar_fields(RIEMANN, 2.0, 1.0)
    assert (m.chi, m.Lambda, m.chi_r, m.W, m.W_r, m.U, m.V, m.X) == pytest.approx(
        (8, 16, 8, 0.125, -0.125, 1, 0, 0), abs=1e-14
    )


def test_randers_scalars_at_zero():
    m = scalar_fields(RANDERS, 1.0, 0.0)
    assert (m.phi, m.phi_s, m.w, m.w_s) == pytest.approx((1.0, 0.5, 1.0, 1.0), abs=1e-15)


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_scalar_identities(spec, rng):
    for _ in range(10):
        r, s = rng.uniform(0.5, 3.0), rng.uniform(-2.0, 2.0)
        m = scalar_fields(spec, r, s)
        assert m.chi == pytest.approx(2 * m.w - s * m.w_s, rel=1e-12)
        assert m.Lambda == pytest.approx(2 * m.w * m.w_ss - m.w_s**2, rel=1e-12)
        assert m.phi**2 == pytest.approx(m.w, rel=1e-12)
        assert m.U * m.Lambda == pytest.approx(2 * m.chi - 2 * s * m.chi_s, rel=1e-12, abs=1e-12 * m.chi)


def test_out_of_domain_point_is_rejected():
    with pytest.raises(InvalidInputError):
        scalar_fields(EUCLID, 0.1, 0.0)


def test_fundamental_tensor_examples():
    v = PointTangent.from_vector(1.0, (1.0, 1.0, 0.0))
    np.testing.assert_allclose(fundamental_tensor(EUCLID, v), np.eye(3), atol=1e-15)
    v = PointTangent.from_vector(2.0, (1.0, 1.0, 0.0))
    np.testing.assert_allclose(fundamental_tensor(RIEMANN, v), np.diag([1.0, 4.0, 4.0]), atol=1e-14)


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_tensor_exactly_symmetric(spec, rng):
    for r, v in random_points(spec, 5, rng):
        g = fundamental_tensor(spec, PointTangent.from_vector(r, v))
        assert np.array_equal(g, g.T)


def test_point_tangent_validation():
    with pytest.raises(InvalidInputError):
        PointTangent.from_vector(1.0, (1.0, 0.0, 0.0))
    with pytest.raises(InvalidInputError):
        PointTangent.from_vector(1.0, (np.nan, 1.0))
    with pytest.raises(InvalidInputError):
        fundamental_tensor(EUCLID, PointTangent.from_vector(1.0, (1.0, 1.0)))
    pt = PointTangent.from_vector(1.0, (3.0, 0.0, 4.0))
    assert pt.alpha_bar == 4.0 and pt.s == 0.75 and pt.n == 3


def test_determinant_examples():
    assert det_fundamental(EUCLID, 1.7, -0.3) == pytest.approx(1.0, rel=1e-15)
    assert det_fundamental(RIEMANN, 2.0, 1.0) == pytest.approx(16.0, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_determinant_forms_agree_with_matrix(n, rng):
    for spec in catalog(n):
        for r, v in random_points(spec, 6, rng):
            pt = PointTangent.from_vector(r, v)
            forms = det_forms(spec, r, pt.s)
            assert forms.chi_lambda_form == pytest.approx(forms.phi_form, rel=1e-12)
            # the numerical determinant is of g at unit alpha_bar scaled by alpha_bar^0
            num = np.linalg.det(fundamental_tensor(spec, pt))
            assert num == pytest.approx(det_fundamental(spec, r, pt.s), rel=1e-8)


def test_printed_normalisation_is_twice_the_true_one():
    forms = det_forms(RIEMANN, 2.0, 1.0)
    assert forms.chi_lambda_printed == pytest.approx(2 * forms.chi_lambda_form, rel=1e-15)


def test_degenerate_determinant_detected():
    # phi linear in s has phi_ss = 0; MetricSpec alone skips the validity scan
    linear = MetricSpec(3, parse("1 + 0.5*s"), "phi")
    with pytest.raises(DegenerateMetricError):
        det_fundamental(linear, 1.0, 0.0)


def test_validity_scan_reports():
    assert validity_scan(EUCLID).ok
    report = validity_scan(MetricSpec(3, parse("s^2-1"), "w"))
    assert not report.ok
    assert report.first_failure()[2] in ("w_pos", "expression_domain")
    assert report.summary()["failures"]["w_pos"] > 0


def test_randers_scan_passes_and_fails_past_unit_eps():
    assert validity_scan(catalog_metric("randers_warp,f=r,eps=0.5")).ok
    with pytest.raises(ValidityError):
        catalog_metric("randers_warp,f=r,eps=1.5")


lams = st.sampled_from([0.5, 2.0, 7.3])


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.source)
def test_homogeneity(spec, rng):
    for r, v in random_points(spec, 50, rng):
        pt = PointTangent.from_vector(r, v)
        for lam in (0.5, 2.0, 7.3):
            assert F_value(spec, pt.scaled(lam)) == pytest.approx(lam * F_value(spec, pt), rel=1e-12)


@given(st.integers(0, 10_000), lams)
def test_tensor_is_zero_homogeneous(seed, lam):
    spec = catalog()[6]
    r, v = random_points(spec, 1, np.random.default_rng(seed))[0]
    pt = PointTangent.from_vector(r, v)
    np.testing.assert_allclose(fundamental_tensor(spec, pt.scaled(lam)), fundamental_tensor(spec, pt), rtol=1e-10,
                               atol=1e-12)

import math

import numpy as np
import pytest
from scipy import integrate

from cskor.boundary import (
    build_curve,
    exit_density,
    gamma,
    gamma_direct,
    gamma_prime,
    membership,
    write_curve_csv,
)
from cskor.catalog import closed_form_curve
from cskor.distributions import Atomic, Gaussian
from cskor.embedding import boundary_point, build_map
from cskor.errors import DomainError, NumericalError, ValidationError


class TestGamma:
    def test_uniform_at_zero(self, uniform_curve):
        assert gamma(uniform_curve, 0.0) == pytest.approx(-2 * math.log(2) / math.pi, abs=1e-6)

    def test_arcsine_at_zero(self, arcsine_curve):
        assert gamma(arcsine_curve, 0.0) == pytest.approx(-2 / math.pi, abs=1e-6)

    def test_hypsech_at_one(self, hypsech_curve):
        assert gamma(hypsech_curve, 1.0) == pytest.approx(0.0, abs=1e-3)

    @pytest.mark.parametrize(
        "curve, lo, hi, tol",
        [
            ("uniform_curve", -0.95, 0.95, 1e-5),
            ("arcsine_curve", -0.9, 0.9, 1e-5),
            ("hypsech_curve", -3.0, 3.0, 1e-3),
            ("gross_arcsine_curve", -0.9, 0.9, 1e-6),
        ],
    )
    def test_catalog_agreement(self, curve, lo, hi, tol, request):
        c = request.getfixturevalue(curve)
        x = np.linspace(lo, hi, 801)
        ref = c.reference()
        assert ref is not None
        assert np.max(np.abs(gamma(c, x) - ref(x))) <= tol

    def test_interpolant_reproduces_knots(self, arcsine_curve):
        c = arcsine_curve
        assert np.allclose(c.interpolant(c.x), c.y, rtol=1e-14, atol=1e-14)

    def test_knots_strictly_increasing(self, uniform_curve, hypsech_curve):
        for c in (uniform_curve, hypsech_curve):
            assert np.all(np.diff(c.x) > 0)

    def test_two_paths_agree(self, uniform_curve):
        x = np.linspace(-0.95, 0.95, 97)
        assert np.max(np.abs(gamma(uniform_curve, x) - gamma_direct(uniform_curve, x))) <= 1e-6

    def test_support_ends_are_direct(self, uniform_curve):
        x = 1 - 1e-7
        ref = closed_form_curve("uniform_catenary", uniform_curve.source_map.source)(x)
        assert gamma(uniform_curve, x) == pytest.approx(ref, abs=1e-6)

    @pytest.mark.parametrize("x", [-1.0, 1.0, 2.0])
    def test_outside_support(self, uniform_curve, x):
        with pytest.raises(DomainError):
            gamma(uniform_curve, x)

    def test_tail_metadata(self, uniform_curve, hypsech_curve):
        assert not uniform_curve.tail_truncated
        meta = hypsech_curve.metadata()
        assert meta["tail_truncated"] and meta["tail_delta"] == 1e-5
        assert meta["closed_form"] == "hypsech_parabola"
        lo, hi = hypsech_curve.x_range
        assert hypsech_curve.source_map.source.cdf(lo) == pytest.approx(1e-5, rel=1e-6)
        assert hypsech_curve.source_map.source.cdf(hi) == pytest.approx(1 - 1e-5, rel=1e-6)

    def test_atomic_rejected(self):
        m = build_map(Atomic([-1, 1], [0.5, 0.5]), 64)
        with pytest.raises(ValidationError):
            build_curve(m)

    def test_non_catalog_law(self):
        m = build_map(Gaussian(0.0, 1.0), 256)
        c = build_curve(m, quad_grid=96, x_step=0.25)
        assert c.closed_form is None and c.reference() is None
        # even law: curve is symmetric about x = 0
        x = np.array([0.5, 1.0, 2.0])
        assert np.allclose(gamma(c, x), gamma(c, -x), atol=1e-6)


class TestDerivative:
    def test_uniform_matches_tangent(self, uniform_curve):
        x = np.array([-0.8, -0.3, 0.0, 0.4, 0.9])
        assert np.allclose(gamma_prime(uniform_curve, x), np.tan(math.pi * x / 2), atol=1e-5)

    def test_too_close_to_end(self, uniform_curve):
        with pytest.raises(NumericalError, match="non-differentiable point"):
            gamma_prime(uniform_curve, 1 - 1e-7)


class TestDensity:
    def test_uniform(self, uniform_curve, uniform):
        assert exit_density(uniform_curve, uniform, 0.0) == pytest.approx(0.5, abs=1e-6)

    def test_uniform_gross(self, uniform_curve, uniform):
        assert exit_density(uniform_curve, uniform, 0.0, variant="gross") == pytest.approx(0.25, abs=1e-6)

    def test_arcsine_gross(self, gross_arcsine_curve, arcsine):
        assert exit_density(gross_arcsine_curve, arcsine, 0.0) == pytest.approx(1 / (2 * math.pi), abs=1e-6)

    def test_unavailable(self, uniform_curve):
        with pytest.raises(ValidationError, match="density unavailable"):
            exit_density(uniform_curve, Atomic([-1, 1], [0.5, 0.5]), 0.0)

    def test_normalization(self, uniform_curve, uniform):
        def integrand(x):
            return exit_density(uniform_curve, uniform, x) * math.sqrt(1 + gamma_prime(uniform_curve, x) ** 2)

        total, _ = integrate.quad(integrand, -1 + 1e-5, 1 - 1e-5, limit=200)
        assert total == pytest.approx(1.0, abs=1e-4)


class TestMembership:
    def test_examples(self, uniform_curve):
        assert membership(uniform_curve, (0, 0)) == "inside"
        assert membership(uniform_curve, (0, -1)) == "outside"
        assert membership(uniform_curve, (2, 0)) == "outside"

    def test_boundary_points_are_in_band(self, arcsine_curve, arcsine_map):
        c = arcsine_curve
        for t, x, y in zip(c.theta[::97], c.x[::97], c.y[::97]):
            assert membership(c, (x, y)) == "boundary-band"
            bx, by = boundary_point(arcsine_map, t)
            assert (bx, by) == pytest.approx((x, y), abs=1e-12)

    def test_gross_is_symmetric(self, gross_arcsine_curve):
        c = gross_arcsine_curve
        assert membership(c, (0.0, 0.9)) == "inside"
        assert membership(c, (0.0, 1.1)) == "outside"
        assert membership(c, (0.0, -1.1)) == "outside"

    def test_truncated_tail_is_outside(self, hypsech_curve):
        assert membership(hypsech_curve, (50.0, 1e6)) == "outside"


def test_curve_csv(tmp_path, uniform_curve):
    write_curve_csv(uniform_curve, tmp_path / "curve.csv")
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "x,gamma(x)" and len(lines) == uniform_curve.x.size + 1
    x, y = (float(v) for v in lines[1].split(","))
    assert (x, y) == (uniform_curve.x[0], uniform_curve.y[0])

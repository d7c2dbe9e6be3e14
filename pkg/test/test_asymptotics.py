"""
Tests for the limit forms and the asymptotic ratio checks.
"""
import math

import pytest
from scipy import integrate

from app.core.exceptions import DomainError
from app.schemas.asymptotics import Regime
from app.schemas.model import GRAPH_THETA, GraphKind, ModelParams
from app.services.asymptotics import (
    G_sigma,
    f_inf_branch_inverse,
    f_inf_derivatives,
    f_infinity,
    limit_length_p2,
    pinfty_mu_limits,
    pinfty_theta1_limit,
)


class TestNearTwo:
    def test_f_infinity_values(self):
        assert abs(f_infinity(math.sqrt(math.e))) < 1e-15
        assert f_infinity(1.0) == pytest.approx(0.25, abs=1e-15)

    def test_f_infinity_derivatives(self):
        z, h = 0.7, 1e-6
        d1, d2 = f_inf_derivatives(z)
        assert d1 == pytest.approx((f_infinity(z + h) - f_infinity(z - h)) / (2.0 * h), rel=1e-8)
        assert d2 == pytest.approx((f_inf_derivatives(z + h)[0] - f_inf_derivatives(z - h)[0]) / (2.0 * h), rel=1e-7)

    def test_branch_inverse(self):
        for v in (0.25, 0.1, 0.0, -2.0):
            t = f_inf_branch_inverse(v)
            assert t >= 1.0
            assert f_infinity(t) == pytest.approx(v, abs=1e-13)
        with pytest.raises(DomainError):
            f_inf_branch_inverse(0.3)

    def test_length_scaling(self, ground_state):
        """√(p-2)·L approaches its limit, so L doubles when p - 2 drops by four."""
        z = 1.0
        ratio = ground_state.length_L(2.0025, 2.0, z) / ground_state.length_L(2.01, 2.0, z)
        assert ratio == pytest.approx(2.0, rel=0.05)
        limit = limit_length_p2(2.0, z)
        assert math.sqrt(0.0025) * ground_state.length_L(2.0025, 2.0, z) == pytest.approx(limit, rel=0.05)

    def test_limit_domain(self):
        with pytest.raises(DomainError):
            limit_length_p2(2.0, 2.0)


class TestLargeExponent:
    @pytest.mark.parametrize("theta,z", [(2.0, 0.5), (0.5, 0.5), (2.0, 0.1)])
    def test_G_sigma_is_the_integral(self, theta, z):
        sigma = -(1.0 - theta * theta) * z * z
        expected, _ = integrate.quad(lambda t: 1.0 / math.sqrt(t * t + sigma), z, 1.0, epsabs=1e-13, epsrel=1e-13)
        assert G_sigma(theta, sigma) == pytest.approx(expected, rel=1e-10)

    def test_G_sigma_domain(self):
        with pytest.raises(DomainError):
            G_sigma(2.0, 0.0)
        with pytest.raises(DomainError):
            G_sigma(2.0, -1.5)

    def test_mu_limits_consistent(self):
        theta, z, h = 2.0, 0.4, 1e-6
        lo, mid, hi = (pinfty_mu_limits(theta, s) for s in (z - h, z, z + h))
        for name in ("L", "mu1", "mu2"):
            fd = (hi[name] - lo[name]) / (2.0 * h)
            key = "dL_dz" if name == "L" else f"d{name}_dz"
            assert mid[key] == pytest.approx(fd, rel=1e-6)

    def test_theta1_limit_closed_form(self):
        for graph, k in ((GraphKind.T_GRAPH, 0.5), (GraphKind.TADPOLE, 1.0)):
            theta = GRAPH_THETA[graph]
            z = 0.5
            sigma = -(1.0 - theta * theta) * z * z
            g = G_sigma(theta, sigma)
            value, slope = pinfty_theta1_limit(graph, z)
            assert value == pytest.approx(k * (math.sqrt(1.0 + sigma) - sigma * g), rel=1e-12)
            assert slope == pytest.approx(2.0 * k * (sigma / (z * math.sqrt(1.0 + sigma)) - g * sigma / z), rel=1e-12)

    def test_theta1_limit_needs_a_mass_decomposition(self):
        with pytest.raises(DomainError):
            pinfty_theta1_limit(GraphKind.RAW_THETA, 0.5)

    def test_length_ratio_at_large_p(self, ground_state):
        limit = pinfty_mu_limits(2.0, 0.5)["L"]
        assert 0.95 < ground_state.length_L(100.0, 2.0, 0.5) / limit < 1.05

    def test_tadpole_mass_ratio_at_large_p(self, ground_state):
        value, _ = pinfty_theta1_limit(GraphKind.TADPOLE, 0.5)
        assert 0.9 < ground_state.mass_theta1(ModelParams.tadpole(100.0), 0.5) / value < 1.1


class TestChecks:
    def test_lambda_large_t_graph(self, asymptotics):
        check = asymptotics.check_lambda_asymptotes(ModelParams.t_graph(4.0), Regime.LAMBDA_LARGE)
        assert check.passed, [a.name for a in check.assertions if not a.passed]
        assert check.model_dump(by_alias=True)["pass"] is True

    def test_lambda_small_tadpole_supercritical(self, asymptotics):
        check = asymptotics.check_lambda_asymptotes(ModelParams.tadpole(7.0), Regime.LAMBDA_SMALL)
        assert check.passed, [a.name for a in check.assertions if not a.passed]

    def test_lambda_checks_exclude_critical(self, asymptotics):
        with pytest.raises(DomainError):
            asymptotics.check_lambda_asymptotes(ModelParams.t_graph(6.0), Regime.LAMBDA_SMALL)

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [3.0, 4.0, 5.0, 7.0, 8.0])
    @pytest.mark.parametrize("side", [Regime.LAMBDA_SMALL, Regime.LAMBDA_LARGE])
    def test_lambda_corners(self, asymptotics, graph_params, p, side):
        check = asymptotics.check_lambda_asymptotes(graph_params(p), side)
        assert check.passed, [a.name for a in check.assertions if not a.passed]

    @pytest.mark.slow
    @pytest.mark.parametrize("graph", [GraphKind.T_GRAPH, GraphKind.TADPOLE])
    def test_p2_regime(self, asymptotics, graph):
        check = asymptotics.check_p2_regime(graph)
        assert check.passed, [a.name for a in check.assertions if not a.passed]

    @pytest.mark.slow
    @pytest.mark.parametrize("graph", [GraphKind.T_GRAPH, GraphKind.TADPOLE])
    def test_pinfty_regime(self, asymptotics, graph):
        check = asymptotics.run(Regime.P_LARGE, graph)
        assert check.passed, [a.name for a in check.assertions if not a.passed]
        assert check.regime is Regime.P_LARGE

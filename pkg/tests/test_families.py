# -*- coding: utf-8 -*-
"""Тесты семейств потерь, сожаления и констант регулярности."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats
from scipy.special import expit

from qlasso.exceptions import DomainError, ValidationError
from qlasso.families import (
    BinaryLinkFamily,
    GaussianFamily,
    GenericQuasiFamily,
    HuberLoss,
    LADLoss,
    LogisticFamily,
    QuantileLoss,
    average_regret,
    check_convexity,
    check_link_monotone,
    check_lipschitz,
    estimate_condition_constants,
    is_canonical,
    loss,
    loss_derivative,
    regret,
)
from qlasso.interfaces import Interval


def poisson_family():
    return GenericQuasiFamily(
        variance_fn=lambda u: u,
        inverse_link=math.exp,
        link_derivative=math.exp,
        reference_point=1.0,
        mean_domain=Interval(0.0, math.inf),
        name='poisson',
    )


class TestGaussian:
    def test_loss_and_derivative(self):
        family = GaussianFamily()
        assert float(loss(family, 1.0, 0.0)) == pytest.approx(0.5)
        assert float(loss_derivative(family, 2.0, 0.0)) == pytest.approx(-2.0)

    def test_regret(self):
        assert float(regret(GaussianFamily(), 1.0, 0.0)) == pytest.approx(0.5)

    def test_canonical_link_quantities(self):
        family = GaussianFamily(reference_point=0.5)
        assert float(family.H(2.0)) == pytest.approx(1.5)
        assert is_canonical(family)

    def test_average_regret(self):
        value = average_regret(GaussianFamily(), np.array([1.0, 2.0]), np.zeros(2))
        assert value == pytest.approx(1.25)

    def test_average_regret_shape_mismatch(self):
        with pytest.raises(ValidationError):
            average_regret(GaussianFamily(), np.zeros(3), np.zeros(2))


class TestLogistic:
    def test_derivative_at_zero(self):
        assert float(LogisticFamily().derivative(1.0, 0.0)) == pytest.approx(-0.5)

    def test_loss_includes_entropy_offset(self):
        family = LogisticFamily()
        assert float(family.loss(1.0, 0.0)) == pytest.approx(math.log(2.0))
        assert float(family.loss(0.5, 0.0)) == pytest.approx(math.log(2.0) + math.log(0.5))

    def test_regret_is_kullback_leibler(self):
        family = LogisticFamily()
        mu, mu0 = 0.5, 0.25
        expected, _ = integrate.quad(lambda u: (u - mu0) / (u * (1.0 - u)), mu0, mu)
        assert float(family.regret(mu, mu0)) == pytest.approx(expected, rel=1e-10)
        assert float(family.regret(mu0, mu0)) == pytest.approx(0.0, abs=1e-15)

    def test_reference_point(self):
        family = LogisticFamily(reference_point=0.5)
        assert float(family.H(0.3)) == pytest.approx(0.3)
        with pytest.raises(ValidationError):
            LogisticFamily(reference_point=1.0)

    def test_response_outside_unit_interval(self):
        with pytest.raises(DomainError):
            LogisticFamily().validate_response([0.0, 2.0])

    def test_lipschitz_in_z(self, rng):
        y = rng.integers(0, 2, size=500).astype(float)
        z = rng.uniform(-10, 10, size=500)
        z_tilde = rng.uniform(-10, 10, size=500)
        assert check_lipschitz(LogisticFamily(), y, z, z_tilde) == 0.0

    def test_canonical(self):
        assert is_canonical(LogisticFamily())


class TestBinaryLink:
    @pytest.mark.parametrize("dist", ["norm", "logistic", "laplace"])
    def test_convex_links_accepted(self, dist):
        family = BinaryLinkFamily(dist=dist)
        assert check_link_monotone(family, np.linspace(-5, 5, 101))

    def test_heavy_tailed_link_rejected(self):
        with pytest.raises(ValidationError):
            BinaryLinkFamily(dist='cauchy')

    def test_student_link_requires_df(self):
        with pytest.raises(ValidationError):
            BinaryLinkFamily(dist='t')

    def test_unknown_distribution(self):
        with pytest.raises(ValidationError):
            BinaryLinkFamily(dist='gamma')

    def test_probit_derivative_matches_finite_difference(self):
        family = BinaryLinkFamily(dist='norm')
        z = np.linspace(-3, 3, 13)
        step = 1e-6
        for y in (0.0, 1.0, 0.3):
            numeric = (family.loss(y, z + step) - family.loss(y, z - step)) / (2 * step)
            assert_allclose(family.derivative(y, z), numeric, rtol=1e-5, atol=1e-7)

    def test_probit_is_not_canonical(self):
        family = BinaryLinkFamily(dist='norm')
        assert not is_canonical(family)
        assert_allclose(family.inverse_link([0.0, 1.0]), stats.norm.cdf([0.0, 1.0]))


class TestGenericQuasi:
    def test_matches_gaussian(self):
        family = GenericQuasiFamily(lambda u: 1.0, lambda z: z, lambda z: 1.0, reference_point=0.0)
        assert float(family.quasi_likelihood(1.0, 0.0)) == pytest.approx(-0.5)
        assert float(family.regret(1.0, 0.0)) == pytest.approx(0.5)
        assert float(family.loss(1.0, 0.0)) == pytest.approx(0.5)

    def test_poisson_regret_closed_form(self):
        family = poisson_family()
        assert float(family.regret(2.0, 1.0)) == pytest.approx(1.0 - math.log(2.0), rel=1e-9)
        assert float(family.gamma(math.e)) == pytest.approx(1.0, rel=1e-9)
        assert is_canonical(family, np.linspace(-2, 2, 21))

    def test_mean_outside_domain(self):
        with pytest.raises(DomainError):
            poisson_family().regret(-1.0, 1.0)

    def test_reference_point_outside_domain(self):
        with pytest.raises(ValidationError):
            GenericQuasiFamily(lambda u: u, math.exp, math.exp, reference_point=-1.0,
                               mean_domain=Interval(0.0, math.inf))


class TestRobustLosses:
    def test_quantile_values(self):
        family = QuantileLoss(alpha=0.3)
        assert_allclose(family.loss([1.0, -1.0], 0.0), [0.3, 0.7])
        assert_allclose(family.derivative([1.0, -1.0, 0.0], 0.0), [-0.3, 0.7, 0.2])

    def test_quantile_kink_subdifferential(self):
        lower, upper = QuantileLoss(alpha=0.3).subgradient_bounds(np.array([0.0, 1.0]), 0.0, kink_tol=1e-9)
        assert_allclose(lower, [-0.3, -0.3])
        assert_allclose(upper, [0.7, -0.3])

    def test_smoothed_quantile(self):
        family = QuantileLoss(alpha=0.3)
        mu = 0.1
        assert_allclose(family.smoothed_derivative([1.0, -1.0, 0.0], 0.0, mu), [-0.3, 0.7, 0.0])
        # огибающая Моро не превосходит потерю и отличается не более чем на mu/2
        r = np.linspace(-2, 2, 41)
        gap = family.loss(r, 0.0) - family.smoothed_loss(r, 0.0, mu)
        assert np.all(gap >= -1e-15)
        assert np.all(gap <= 0.5 * mu + 1e-15)

    def test_lad_is_symmetric(self):
        family = LADLoss()
        assert_allclose(family.loss([2.0, -2.0], 0.0), [2.0, 2.0])
        assert family.lipschitz_constant == 1.0

    def test_huber_values(self):
        family = HuberLoss(k=0.5)
        assert_allclose(family.loss([2.0, 0.2], 0.0), [0.875, 0.02])
        assert_allclose(family.derivative([2.0, -0.2], 0.0), [-0.5, 0.2])
        assert family.lipschitz_constant == 0.5

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2])
    def test_quantile_level_validated(self, alpha):
        with pytest.raises(ValidationError):
            QuantileLoss(alpha=alpha)

    def test_regret_only_for_quasi_likelihood(self):
        with pytest.raises(ValidationError):
            regret(LADLoss(), 1.0, 0.0)


class TestCheckers:
    @pytest.mark.parametrize("family", [GaussianFamily(), LogisticFamily(), QuantileLoss(0.3), HuberLoss(1.0)])
    def test_convex_losses(self, family):
        ys = np.array([0.0, 0.5, 1.0])
        assert check_convexity(family, ys, np.linspace(-4, 4, 81)) == pytest.approx(0.0, abs=1e-9)

    def test_gaussian_is_not_lipschitz(self):
        excess = check_lipschitz(GaussianFamily(), np.zeros(1), np.array([10.0]), np.array([0.0]))
        assert excess == pytest.approx(40.0)


class TestConditionConstants:
    def test_gaussian(self):
        c = estimate_condition_constants(GaussianFamily(), K_X=1.0, K_0=2.0)
        assert c.C_h == pytest.approx(1.0)
        assert c.C_V == pytest.approx(2.0)
        assert c.L_h == pytest.approx(0.0)
        assert c.L_g == pytest.approx(0.0)
        assert c.C_l is None
        assert c.interval_radius == pytest.approx(3.0)

    def test_logistic(self):
        radius = 1.5
        c = estimate_condition_constants(LogisticFamily(), K_X=1.0, K_0=0.5)
        g_min = expit(radius) * expit(-radius)
        assert c.C_h == pytest.approx(1.0)
        assert c.C_V == pytest.approx(2.0 / g_min)
        assert c.C_l == pytest.approx(2.0 / g_min)

    def test_quantile_with_gaussian_errors(self):
        c = estimate_condition_constants(QuantileLoss(alpha=0.5), K_X=1.0, K_0=0.0,
                                         conditional_law=stats.norm())
        assert c.C_h is None
        assert c.C_l == pytest.approx(2.0 / stats.norm.pdf(1.0), rel=1e-5)

    def test_robust_loss_requires_law(self):
        with pytest.raises(ValidationError):
            estimate_condition_constants(LADLoss(), K_X=1.0, K_0=0.0)

    def test_grid_too_coarse(self):
        with pytest.raises(ValidationError):
            estimate_condition_constants(GaussianFamily(), K_X=1.0, K_0=0.0, grid_points=10)


def _finite_difference(family, y, z, step):
    return (family.loss(y, z + step) - family.loss(y, z - step)) / (2 * step)


class TestLossAlgebra:
    SAMPLES = 1000

    @pytest.mark.parametrize("family, y_range, z_range", [
        (GaussianFamily(), (-5.0, 5.0), (-5.0, 5.0)),
        (LogisticFamily(), (0.0, 1.0), (-8.0, 8.0)),
        (BinaryLinkFamily(dist='norm'), (0.0, 1.0), (-4.0, 4.0)),
        (BinaryLinkFamily(dist='logistic'), (0.0, 1.0), (-6.0, 6.0)),
    ])
    def test_derivative_matches_finite_difference(self, rng, family, y_range, z_range):
        y = rng.uniform(*y_range, size=self.SAMPLES)
        z = rng.uniform(*z_range, size=self.SAMPLES)
        assert_allclose(family.derivative(y, z), _finite_difference(family, y, z, 1e-5),
                        rtol=1e-6, atol=1e-8)

    def test_quasi_derivative_matches_finite_difference(self, rng):
        family = poisson_family()
        y = rng.uniform(0.1, 5.0, size=self.SAMPLES)
        z = rng.uniform(-2.0, 2.0, size=self.SAMPLES)
        assert_allclose(family.derivative(y, z), _finite_difference(family, y, z, 1e-4),
                        rtol=1e-6, atol=1e-6)

    @pytest.mark.parametrize("family", [
        QuantileLoss(alpha=0.3),
        QuantileLoss(alpha=0.9),
        LADLoss(),
        HuberLoss(k=0.5),
        HuberLoss(k=1.0),
        HuberLoss(k=3.0),
    ])
    def test_robust_losses_are_one_lipschitz(self, rng, family):
        assert family.lipschitz_constant <= 1.0
        y = rng.standard_normal(self.SAMPLES) * 5
        z = rng.standard_normal(self.SAMPLES) * 5
        z_tilde = rng.standard_normal(self.SAMPLES) * 5
        assert check_lipschitz(family, y, z, z_tilde) == pytest.approx(0.0, abs=1e-12)

    def test_logistic_is_one_lipschitz(self, rng):
        y = rng.uniform(0.0, 1.0, size=self.SAMPLES)
        z = rng.uniform(-20, 20, size=self.SAMPLES)
        z_tilde = rng.uniform(-20, 20, size=self.SAMPLES)
        assert check_lipschitz(LogisticFamily(), y, z, z_tilde) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("family", [GaussianFamily(), LogisticFamily()])
    def test_canonical_link_identity(self, family):
        z = np.linspace(-5, 5, 201)
        assert_allclose(family.H(z), z, rtol=0, atol=1e-12)
        assert_allclose(family.gamma(family.inverse_link(z)), z, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("family", [GaussianFamily(), LogisticFamily(), BinaryLinkFamily(dist='norm')])
    def test_regret_nonnegative(self, rng, family):
        lo, hi = (-5.0, 5.0) if isinstance(family, GaussianFamily) else (0.01, 0.99)
        mu = rng.uniform(lo, hi, size=self.SAMPLES)
        mu0 = rng.uniform(lo, hi, size=self.SAMPLES)
        values = family.regret(mu, mu0)
        assert np.all(values >= -1e-15)
        assert np.all(values[np.abs(mu - mu0) > 1e-3] > 0)
        assert_allclose(family.regret(mu0, mu0), 0.0, atol=1e-15)

    def test_quasi_regret_nonnegative(self, rng):
        family = poisson_family()
        mu = rng.uniform(0.1, 5.0, size=200)
        mu0 = rng.uniform(0.1, 5.0, size=200)
        assert np.all(family.regret(mu, mu0) >= -1e-12)

    def test_huber_normalized_above_one(self):
        family = HuberLoss(k=2.0)
        assert family.lipschitz_constant == 1.0
        assert_allclose(family.loss([3.0, 1.0], 0.0), [2.0, 0.25])
        assert_allclose(family.derivative([3.0, -1.0], 0.0), [-1.0, 0.5])

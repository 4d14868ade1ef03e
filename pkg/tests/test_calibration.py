# -*- coding: utf-8 -*-
"""Тесты калибровки: уровни настройки, предпосылки, оракульные границы."""

import math

import pytest

from qlasso.calibration import (
    BoundReport,
    CalibrationInputs,
    TheoryConstants,
    calibrate,
    check_preconditions,
    estimate_error_moments,
    gamma_budget,
    oracle_bounds,
    precondition_table,
    scaled_sparsities,
    true_positive_lower_bound,
    tuning_levels,
)
from qlasso.exceptions import ValidationError

# Gamma = 16 C_hV Gamma_eff = 16 * 2 * 6.5
GAMMA = 208.0


class TestConstants:
    def test_derived(self):
        c = TheoryConstants(C_h=2.0, C_V=3.0, L_h=0.5, L_g=1.0, K_X=2.0)
        assert c.C_hV == pytest.approx(12.0)
        assert c.C_hX == pytest.approx(64.0)
        assert c.L_hV == pytest.approx((1.0 + 0.5 * 3.0) * 2.0)
        assert c.L_hX == pytest.approx(16.0 * 0.5 * 4.0)

    def test_robust_only(self):
        c = TheoryConstants(C_h=None, C_V=None, L_h=None, L_g=None, C_l=4.0)
        assert not c.is_quasi
        assert c.C_hV is None and c.L_hV is None
        assert scaled_sparsities(c, 6.5).Gamma_robust == pytest.approx(16 * 4.0 * 6.5)

    @pytest.mark.parametrize("field, value", [("sigma", 0.0), ("kappa", -1.0), ("C_h", math.inf)])
    def test_invalid(self, field, value):
        with pytest.raises(ValidationError):
            TheoryConstants(**{field: value})

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            TheoryConstants.from_dict({'C_X': 1.0})


class TestLevels:
    def test_tuning_levels(self):
        c = TheoryConstants(sigma=1.0, kappa=0.0, K_X=1.0)
        levels = tuning_levels(c, n=100, p=10, t=2.0)
        root = math.sqrt(2 * (2.0 + math.log(10)) / 100)
        assert levels.lambda_eps == pytest.approx(16.0 * root)
        assert levels.lambda_eps_robust == pytest.approx(16.0 * root)
        assert levels.lambda_0 == pytest.approx(0.0)
        assert levels.alpha_oracle == pytest.approx(3 * math.exp(-2.0))
        assert levels.alpha_select == pytest.approx(9 * math.exp(-2.0))

    def test_moment_term(self):
        c = TheoryConstants(sigma=1.0, kappa=2.0 ** 0.25)
        levels = tuning_levels(c, n=50, p=4, t=1.0)
        assert levels.alpha_oracle == pytest.approx(3 * math.exp(-1.0) + 3 * 2.0 / 50)

    def test_scaled_sparsities(self):
        sp = scaled_sparsities(TheoryConstants(), 6.5)
        assert sp.Gamma == pytest.approx(GAMMA)
        assert sp.Gamma_eps == sp.Gamma
        assert sp.Gamma_0 == pytest.approx(0.0)
        assert sp.Gamma_robust is None

    def test_gamma_budget(self):
        budget = gamma_budget(0.1, 0.4)
        assert budget['gamma_1'] == pytest.approx(0.25)
        assert budget['gamma_eps'] == pytest.approx(0.25)
        assert budget['gamma'] == pytest.approx(0.75)


class TestBounds:
    def test_least_squares_bound(self):
        bound = oracle_bounds('thm1', TheoryConstants(), 0.1, 6.5)
        assert bound.combined_bound == pytest.approx(0.26)
        assert bound.prediction_bound == pytest.approx(0.26)

    def test_quasi_likelihood_bound(self):
        bound = oracle_bounds('thm2', TheoryConstants(), 0.1, 6.5)
        assert bound.ell1_bound == pytest.approx(0.1 * GAMMA / 2)
        assert bound.prediction_bound == pytest.approx(3.12)

    def test_robust_bound(self):
        c = TheoryConstants(C_l=2.0)
        bound = oracle_bounds('thm4', c, 0.1, 6.5)
        assert bound.ell1_bound == pytest.approx(0.1 * GAMMA / 2)
        assert bound.prediction_bound == pytest.approx(0.75 * 2.0 * 0.01 * GAMMA)
        with pytest.raises(ValidationError):
            oracle_bounds('thm4', TheoryConstants(), 0.1, 6.5)

    def test_random_design_bound(self):
        bound = oracle_bounds('random_design', TheoryConstants(), 0.1, 6.5, lambda_X=0.01)
        assert bound.prediction_bound == pytest.approx(6 * 8 * 0.01 * 6.5)
        assert bound.sup_bound == pytest.approx(0.1 * 0.01 * GAMMA / 2)
        assert oracle_bounds('random_design', TheoryConstants(), 0.1, 6.5).sup_bound is None

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            oracle_bounds('thm9', TheoryConstants(), 0.1, 6.5)

    def test_true_positive_lower_bound(self):
        assert true_positive_lower_bound([1.0, 0.5, 0.0], ell1_error=0.1, lambda_=0.5, eta=1.0) == pytest.approx(1.8)


class TestPreconditions:
    @staticmethod
    def _at_ratio(scale):
        # lambda_eps = 16 sqrt(2 (t + log p) / n) = 1/832 при t + log 2 = 1, n = 2 * 13312^2
        n = 2 * 13312 ** 2 / scale
        return check_preconditions(TheoryConstants(), n=n, p=2, t=1.0 - math.log(2.0),
                                   lambda_=0.001, gamma_eff=6.5)

    def test_s0_equality_passes(self):
        entry = self._at_ratio(1.0)[0]
        assert entry.name == '(s0)'
        assert entry.lhs == pytest.approx(0.25, rel=1e-12)
        assert entry.satisfied

    def test_s0_violated(self):
        entry = self._at_ratio(2.0)[0]
        assert entry.lhs == pytest.approx(0.25 * math.sqrt(2.0))
        assert not entry.satisfied

    def test_order_and_optional_entries(self):
        c = TheoryConstants(C_l=2.0)
        entries = check_preconditions(c, n=1000, p=10, t=1.0, lambda_=0.01, gamma_eff=2.0,
                                      theta=0.1, lambda_X=0.01)
        names = [e.name for e in entries]
        assert names == ['(s0)', 'lambda-range', '(s02)', 'lambda-range-robust', '(s0-select)',
                         '(s03)', '(s04)', 'theta-threshold', '(s05)']
        lambda_range = entries[1]
        assert lambda_range.lower is not None

    @staticmethod
    def _selection(ratio):
        lam_eps = tuning_levels(TheoryConstants(), n=100, p=10, t=1.0).lambda_eps
        entries = check_preconditions(TheoryConstants(), n=100, p=10, t=1.0, lambda_=ratio * lam_eps,
                                      gamma_eff=1e-6, theta=0.0)
        return {e.name: e for e in entries}

    def test_selection_requires_quarter_budget(self):
        entries = self._selection(2.0)
        entry = entries['(s0-select)']
        assert entry.lhs == pytest.approx(0.5)
        assert entry.rhs == pytest.approx(0.25)
        assert entry.lower is not None and entry.lower < entry.lhs
        assert not entry.satisfied

    def test_selection_budget_at_quarter(self):
        entry = self._selection(4.0)['(s0-select)']
        assert entry.lhs == pytest.approx(0.25)
        assert entry.satisfied
        assert self._selection(8.0)['(s0-select)'].satisfied

    def test_invalid_lambda(self):
        with pytest.raises(ValidationError):
            check_preconditions(TheoryConstants(), n=100, p=10, t=1.0, lambda_=0.0, gamma_eff=1.0)


class TestMoments:
    def test_two_point(self):
        moments = estimate_error_moments([1.0, -1.0])
        assert moments.sigma_hat == pytest.approx(1.0)
        assert moments.kappa_hat == pytest.approx(0.0)

    def test_groups(self):
        moments = estimate_error_moments([1.0, -1.0, 2.0, -2.0], groups=['a', 'a', 'b', 'b'])
        assert moments.sigma_hat == pytest.approx(2.0)
        assert moments.groups == 2
        # квадраты 1, 1, 4, 4: среднее 2.5, kappa^4 = 2.25
        assert moments.kappa_hat == pytest.approx(2.25 ** 0.25)

    def test_too_few(self):
        with pytest.raises(ValidationError):
            estimate_error_moments([1.0])


class TestReport:
    def test_calibrate(self):
        inputs = CalibrationInputs(constants=TheoryConstants(), n=400, p=20, lambda_=0.1, gamma_eff=6.5)
        assert inputs.t == pytest.approx(math.log(400))
        report = calibrate(inputs)
        assert set(report.bounds) == {'thm2', 'random_design'}
        assert report.prediction_bound == pytest.approx(3.12)
        assert report.ell1_bound == pytest.approx(10.4)
        # lambda = 0.1 > 1 / Gamma: диапазон lambda нарушен
        assert not report.all_satisfied

    def test_dict_round_trip(self):
        inputs = CalibrationInputs(constants=TheoryConstants(C_l=2.0), n=400, p=20, lambda_=0.01,
                                   gamma_eff=1.5, theta=0.2)
        report = calibrate(inputs)
        data = report.to_dict()
        assert data['inputs']['lambda'] == 0.01
        restored = BoundReport.from_dict(data)
        assert restored.inputs == inputs
        assert restored.bounds == report.bounds
        assert restored.preconditions == report.preconditions

    def test_inputs_from_dict(self):
        inputs = CalibrationInputs.from_dict({
            'constants': {'sigma': 1.0, 'kappa': 0.0},
            'n': 100, 'p': 10, 'lambda': 0.05, 'gamma_eff': 2.0, 't': 3.0,
        })
        assert inputs.lambda_ == 0.05
        assert inputs.t == 3.0
        with pytest.raises(ValidationError):
            CalibrationInputs.from_dict({'n': 100, 'p': 10, 'lambda': 0.05, 'gamma_eff': 2.0, 'mu': 1})

    def test_table(self):
        inputs = CalibrationInputs(constants=TheoryConstants(), n=400, p=20, lambda_=0.1, gamma_eff=6.5)
        table = precondition_table(calibrate(inputs).preconditions)
        assert 'FAIL' in table
        assert '(s0)' in table

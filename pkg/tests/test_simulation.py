# -*- coding: utf-8 -*-
"""Тесты Монте-Карло сценариев, проверок теорем и исследования масштабирования."""

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import expit

from qlasso.diagnostics import gram_sup_distance
from qlasso.exceptions import ConvergenceError, ValidationError
from qlasso.factory import DesignCache
from qlasso.families import QuantileLoss
from qlasso.interfaces import FamilySpec
from qlasso.io_formats import read_json
from qlasso import simulation
from qlasso.simulation import (
    BetaSpec,
    DesignLaw,
    ErrorLaw,
    LambdaRule,
    RunRecord,
    ScenarioConfig,
    allowed_violation_rate,
    bernoulli_moments,
    design_constants,
    generate_instance,
    run_replication,
    run_scenario,
    scaling_study,
    verify_theorems,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def small_config():
    return ScenarioConfig(
        name='small',
        n=40, p=6, s0=2,
        design=DesignLaw(kind='gaussian'),
        error=ErrorLaw(kind='gaussian', sigma=0.5),
        beta=BetaSpec(magnitude=2.0, placement='first', signs='positive'),
        lambda_rule=LambdaRule(kind='event'),
        replications=3,
        master_seed=7,
    )


class TestLaws:
    def test_toeplitz_covariance(self):
        law = DesignLaw(kind='gaussian', rho=0.5)
        assert_allclose(law.covariance_matrix(3)[0], [1.0, 0.5, 0.25])
        assert_allclose(DesignLaw(kind='uniform', bound=3.0).population_gram(2), 3.0 * np.eye(2))
        assert DesignLaw(kind='fixed', matrix=[[1.0, 0.0], [0.0, 1.0]]).population_gram(2) is None

    def test_design_validation(self):
        with pytest.raises(ValidationError):
            DesignLaw(kind='gaussian', rho=1.0)
        with pytest.raises(ValidationError):
            DesignLaw(kind='fixed')

    def test_gaussian_moments(self):
        sigma, kappa = ErrorLaw(kind='gaussian', sigma=2.0).moments()
        assert sigma == 2.0
        assert kappa ** 4 == pytest.approx(2 * 2.0 ** 4)

    def test_student_moments_match_scipy(self):
        law = ErrorLaw(kind='student_t', sigma=1.0, df=6)
        frozen = law.frozen()
        _, kappa = law.moments()
        assert frozen.var() == pytest.approx(1.0)
        assert kappa ** 4 == pytest.approx(frozen.moment(4) - 1.0)
        assert kappa ** 4 == pytest.approx(5.0)

    def test_student_requires_fourth_moment(self):
        with pytest.raises(ValidationError):
            ErrorLaw(kind='student_t', df=4)

    def test_centered_for_quantile(self):
        law = ErrorLaw(kind='gaussian', sigma=1.0).centered(QuantileLoss(alpha=0.3))
        assert law.cdf(0.0) == pytest.approx(0.3)

    def test_bernoulli_moments(self):
        sigma, kappa = bernoulli_moments([0.5, 0.5])
        assert sigma == pytest.approx(0.5)
        assert kappa == pytest.approx(0.0)

    def test_lambda_rules(self):
        assert LambdaRule(kind='sqrt_log', c=2.0).resolve(100, 10) == pytest.approx(2 * math.sqrt(math.log(10) / 100))
        assert LambdaRule(kind='event', margin=0.0).resolve(100, 10, noise_sup=0.1) == pytest.approx(0.2)
        assert LambdaRule(kind='fixed', value=0.3).resolve(100, 10) == 0.3
        with pytest.raises(ValidationError):
            LambdaRule(kind='theory').resolve(100, 10)
        with pytest.raises(ValidationError):
            LambdaRule(kind='fixed')


class TestScenarioConfig:
    def test_round_trip(self, small_config):
        assert ScenarioConfig.from_dict(small_config.to_dict()) == small_config

    def test_family_as_string(self):
        config = ScenarioConfig.from_dict({'family': 'quantile:alpha=0.3', 'n': 50, 'p': 5, 's0': 1})
        assert config.family == FamilySpec.create('quantile', alpha=0.3)
        assert config.t_value == pytest.approx(math.log(50))

    @pytest.mark.parametrize("data", [
        {'family': 'logistic'},
        {'family': 'gaussian', 'error': {'kind': 'model'}},
        {'family': 'quantile', 'lambda_rule': {'kind': 'event'}},
        {'lambda_rule': {'kind': 'theory'}, 'theory': False},
        {'p': 3, 's0': 1, 'beta': {'values': [1.0, 0.0]}},
        {'p': 3, 's0': 1, 'beta': {'values': [1.0, 1.0, 0.0]}},
        {'s0': 40},
        {'unknown_field': 1},
    ])
    def test_invalid(self, data):
        with pytest.raises(ValidationError):
            ScenarioConfig.from_dict(data)

    @pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_bundled_scenarios_load(self, path):
        data = read_json(path)
        grid = data.pop('grid', None)
        config = ScenarioConfig.from_dict(data)
        assert config.name == path.stem
        if grid is not None:
            assert len(grid) >= 4


class TestInstances:
    def test_reproducible(self, small_config):
        first = generate_instance(small_config, 1)
        second = generate_instance(small_config, 1)
        for a, b in zip(first.as_tuple(), second.as_tuple()):
            assert_array_equal(getattr(a, 'X', a), getattr(b, 'X', b))
        assert first.seed == second.seed

    def test_independent_replications(self, small_config):
        a = generate_instance(small_config, 0)
        b = generate_instance(small_config, 1)
        assert not np.array_equal(a.X.X, b.X.X)
        assert a.seed != b.seed

    def test_support_and_response(self, small_config):
        inst = generate_instance(small_config, 0)
        assert inst.support.indices == (0, 1)
        assert_allclose(inst.beta0[:2], [2.0, 2.0])
        assert_allclose(inst.Y, inst.X.X @ inst.beta0 + inst.epsilon)

    def test_binary_response(self):
        config = ScenarioConfig(family=FamilySpec.create('logistic'), error=ErrorLaw(kind='model'),
                                n=50, p=4, s0=1, design=DesignLaw(kind='uniform'))
        inst = generate_instance(config, 0)
        assert set(np.unique(inst.Y)) <= {0.0, 1.0}
        assert_allclose(inst.mu0, expit(inst.f0))
        assert_allclose(inst.epsilon, inst.Y - inst.mu0)

    def test_negative_index(self, small_config):
        with pytest.raises(ValidationError):
            generate_instance(small_config, -1)

    def test_design_constants_cached(self, small_config):
        inst = generate_instance(small_config, 0)
        cache = DesignCache()
        first = design_constants(inst.X, inst.support, small_config, cache)
        second = design_constants(inst.X, inst.support, small_config, cache)
        assert first == second
        assert cache.hits == 1 and cache.misses == 1
        assert first.gamma_eff == pytest.approx(2 / first.phi_sq)


class TestReplications:
    def test_deterministic(self, small_config):
        assert run_replication(small_config, 2).to_dict() == run_replication(small_config, 2).to_dict()

    def test_least_squares_oracle_inequality(self, small_config):
        record = run_replication(small_config, 0)
        check = record.check('thm1')
        assert check.hypothesis
        assert check.conclusion
        assert check.lhs <= check.rhs
        assert record.lambda_ == pytest.approx((4 * record.noise_sup + 1e-3) / 2)

    def test_selection_event(self, small_config):
        record = run_replication(small_config, 1)
        assert record.lambda_0 == pytest.approx(0.5 * record.lambda_)
        assert record.check('thm6').hypothesis
        names = [c.name for c in record.checks]
        assert 'true_positive(eta=0.5)' in names and 'true_positive(eta=2)' in names

    def test_record_round_trip(self, small_config):
        record = run_replication(small_config, 0)
        data = record.to_dict()
        assert 'lambda' in data and 'lambda_' not in data
        assert RunRecord.from_dict(data) == record

    def test_solver_failure_excluded(self, small_config, monkeypatch):
        def failing_fit(problem, config=None):
            raise ConvergenceError("нет сходимости")

        monkeypatch.setattr(simulation, 'fit', failing_fit)
        record = run_replication(small_config, 0)
        assert record.excluded
        assert record.error.startswith('ConvergenceError')
        summary = verify_theorems([record, record], small_config)
        assert summary.excluded == 2
        assert summary.theorems == ()


class TestScenario:
    def test_threads_do_not_change_records(self, small_config):
        single = [r.to_dict() for r in run_scenario(small_config, threads=1)]
        parallel = [r.to_dict() for r in run_scenario(small_config, threads=3)]
        assert single == parallel
        assert [r['replication'] for r in single] == [0, 1, 2]

    def test_on_record_callback(self, small_config):
        seen = []
        run_scenario(small_config, on_record=seen.append)
        assert len(seen) == small_config.replications

    def test_summary(self, small_config):
        records = run_scenario(small_config)
        summary = verify_theorems(records, small_config)
        thm1 = summary.theorem('thm1')
        assert thm1.deterministic
        assert thm1.hypothesis_count == 3
        assert thm1.failures == 0
        assert thm1.passed is True
        assert summary.excluded == 0
        assert 'thm1' in summary.table()

    def test_allowed_violation_rate(self):
        assert allowed_violation_rate(0.05, 100) == pytest.approx(0.05 + 3 * math.sqrt(0.05 * 0.95 / 100))

    def test_empty_records(self):
        with pytest.raises(ValidationError):
            verify_theorems([])


class TestScaling:
    def test_degenerate_grid(self, small_config):
        with pytest.raises(ValidationError):
            scaling_study([(40, 6, 2), (80, 6, 4), (80, 6, 2)], small_config)

    def test_slopes(self, small_config):
        template = replace(small_config, lambda_rule=LambdaRule(kind='sqrt_log', c=2.0),
                           theory=False, oracle=False, replications=2, p=8)
        report = scaling_study([(40, 8, 2), (80, 8, 2), (160, 8, 2), (320, 8, 2)], template)
        assert len(report.points) == 4
        assert report.prediction_slope is not None
        assert report.ell1_slope is not None
        assert '8' in report.note
        assert [pt.replications for pt in report.points] == [2, 2, 2, 2]


@pytest.mark.slow
@pytest.mark.parametrize("name, check", [
    ("theorem1_gaussian", "thm1"),
    ("theorem5_selection", "thm6"),
])
def test_bundled_deterministic_scenarios(name, check):
    data = read_json(SCENARIO_DIR / f"{name}.json")
    config = ScenarioConfig.from_dict(data)
    summary = verify_theorems(run_scenario(config, threads=4), config)
    result = summary.theorem(check)
    assert result.hypothesis_count > 0
    assert result.failures == 0


@pytest.mark.slow
def test_bundled_logistic_oracle_scenario():
    config = ScenarioConfig.from_dict(read_json(SCENARIO_DIR / "theorem2_logistic.json"))
    summary = verify_theorems(run_scenario(config, threads=4), config)
    result = summary.theorem('thm2')
    assert result.runs > 0
    assert result.allowed_violation_rate is not None
    assert result.violation_rate <= result.allowed_violation_rate
    assert result.passed is True


@pytest.mark.slow
def test_bundled_scaling_scenario():
    data = read_json(SCENARIO_DIR / "scaling_gaussian.json")
    grid = data.pop('grid')
    report = scaling_study(grid, ScenarioConfig.from_dict(data), threads=4)
    assert [pt.replications for pt in report.points] == [200] * 4
    assert 0.7 <= report.prediction_slope <= 1.3
    assert 0.7 <= report.ell1_slope <= 1.3


@pytest.mark.slow
def test_gram_deviation_of_gaussian_design():
    n, p = 2000, 50
    law = DesignLaw(kind='gaussian', rho=0.0)
    level = 4.0 * math.sqrt(math.log(p) / n)
    hits = 0
    for seed in range(200):
        X = law.sample(simulation.make_rng(20240104, seed), n, p)
        hits += gram_sup_distance(X.T @ X / n, law.population_gram(p)) <= level
    assert hits >= 190

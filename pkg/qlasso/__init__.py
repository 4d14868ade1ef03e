# -*- coding: utf-8 -*-
"""
qlasso: l1-штрафованное квазиправдоподобие и робастные потери для
многомерных обобщенных линейных моделей.

Предоставляет семейства потерь, решатель с сертификатом ККТ, точные
константы плана (совместимость, эффективная разреженность,
непредставимость), калибровку теоретических уровней и Монте-Карло
проверку оракульных неравенств.

Использование:
    from qlasso import make_family, PenalizedProblem, fit, compatibility_constant

    family = make_family("logistic")
    result = fit(PenalizedProblem(X, Y, family, lambda_=0.05))
    phi = compatibility_constant(X, S=[0, 1, 2])

Логирование при импорте не настраивается; для консольного вывода
вызовите setup_logging(log_level="INFO").
"""

__version__ = "1.0.0"
__license__ = "MIT"

from .exceptions import (
    QLassoError,
    ValidationError,
    DomainError,
    NumericalError,
    ConvergenceError,
    QuadratureError,
    CompatibilityError,
    ConditionFailureError,
    DivergenceError,
    SingularMatrixError,
)

from .interfaces import (
    FamilySpec,
    IndexSet,
    DesignMatrix,
    LossFamily,
    QuasiFamily,
    RobustLoss,
)

from .families import (
    GaussianFamily,
    LogisticFamily,
    BinaryLinkFamily,
    GenericQuasiFamily,
    QuantileLoss,
    LADLoss,
    HuberLoss,
    ConditionConstants,
    loss,
    loss_derivative,
    regret,
    average_regret,
    is_canonical,
    check_convexity,
    check_lipschitz,
    estimate_condition_constants,
)

from .factory import (
    FamilyFactory,
    DesignCache,
    make_family,
)

from .diagnostics import (
    CompatibilityResult,
    compatibility_constant,
    compatibility_from_gram,
    restricted_eigenvalue,
    effective_sparsity,
    weighted_gram,
    irrepresentable_theta,
    gram_sup_distance,
    selection_kkt_check,
)

from .solver import (
    SolverConfig,
    PenalizedProblem,
    FitResult,
    fit,
    kkt_residual,
    restricted_fit,
    soft_threshold_fit,
    lambda_max,
    solve_path,
)

from .calibration import (
    TheoryConstants,
    BoundReport,
    CalibrationInputs,
    tuning_levels,
    scaled_sparsities,
    check_preconditions,
    oracle_bounds,
    estimate_error_moments,
    calibrate,
)

from .simulation import (
    ScenarioConfig,
    RunRecord,
    Summary,
    generate_instance,
    run_replication,
    run_scenario,
    verify_theorems,
    scaling_study,
)

from .logging_config import (
    setup_logging,
    get_logger,
    LogContext,
    PerformanceLogger,
    ColoredFormatter,
)

# Экспортируемые имена
__all__ = [
    # Версия
    '__version__',

    # Исключения
    'QLassoError',
    'ValidationError',
    'DomainError',
    'NumericalError',
    'ConvergenceError',
    'QuadratureError',
    'CompatibilityError',
    'ConditionFailureError',
    'DivergenceError',
    'SingularMatrixError',

    # Интерфейсы и типы
    'FamilySpec',
    'IndexSet',
    'DesignMatrix',
    'LossFamily',
    'QuasiFamily',
    'RobustLoss',

    # Семейства потерь
    'GaussianFamily',
    'LogisticFamily',
    'BinaryLinkFamily',
    'GenericQuasiFamily',
    'QuantileLoss',
    'LADLoss',
    'HuberLoss',
    'ConditionConstants',
    'loss',
    'loss_derivative',
    'regret',
    'average_regret',
    'is_canonical',
    'check_convexity',
    'check_lipschitz',
    'estimate_condition_constants',

    # Фабрики
    'FamilyFactory',
    'DesignCache',
    'make_family',

    # Диагностика плана
    'CompatibilityResult',
    'compatibility_constant',
    'compatibility_from_gram',
    'restricted_eigenvalue',
    'effective_sparsity',
    'weighted_gram',
    'irrepresentable_theta',
    'gram_sup_distance',
    'selection_kkt_check',

    # Решатель
    'SolverConfig',
    'PenalizedProblem',
    'FitResult',
    'fit',
    'kkt_residual',
    'restricted_fit',
    'soft_threshold_fit',
    'lambda_max',
    'solve_path',

    # Калибровка
    'TheoryConstants',
    'BoundReport',
    'CalibrationInputs',
    'tuning_levels',
    'scaled_sparsities',
    'check_preconditions',
    'oracle_bounds',
    'estimate_error_moments',
    'calibrate',

    # Симуляция
    'ScenarioConfig',
    'RunRecord',
    'Summary',
    'generate_instance',
    'run_replication',
    'run_scenario',
    'verify_theorems',
    'scaling_study',

    # Логирование
    'setup_logging',
    'get_logger',
    'LogContext',
    'PerformanceLogger',
    'ColoredFormatter',
]

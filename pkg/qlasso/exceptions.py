# -*- coding: utf-8 -*-
"""
Исключения библиотеки qlasso.

Две ветви: ошибки валидации входных данных (код выхода CLI 1)
и численные отказы (код выхода CLI 2).
"""

from typing import Optional


class QLassoError(Exception):
    """Базовое исключение библиотеки."""

    exit_status: int = 2


class ValidationError(QLassoError, ValueError):
    """Некорректные параметры, форма или тип входных данных."""

    exit_status = 1


class DomainError(ValidationError):
    """Значение вне области определения (среднее вне mean_domain и т.п.)."""


class NumericalError(QLassoError, RuntimeError):
    """Численный отказ алгоритма."""

    exit_status = 2


class ConvergenceError(NumericalError):
    """Итерационный метод не сошелся за отведенное число итераций."""


class QuadratureError(NumericalError):
    """Адаптивная квадратура не достигла требуемой точности."""


class CompatibilityError(NumericalError):
    """Константа совместимости равна нулю: условие совместимости нарушено."""


class ConditionFailureError(NumericalError):
    """Константы условий регулярности бесконечны на заданном интервале."""


class DivergenceError(NumericalError):
    """Норма коэффициентов превысила допустимый предел (разделимые данные)."""


class SingularMatrixError(NumericalError):
    """Матрица вырождена или плохо обусловлена."""

    def __init__(self, message: str, smallest_eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue

# -*- coding: utf-8 -*-
"""
Семейства функций потерь: квазиправдоподобие и робастные потери.

Содержит встроенные семейства (гауссовское, логистическое, бинарное с
произвольной симметричной связью, квантильное, LAD, Хьюбера), общее
семейство квазиправдоподобия по пользовательским V, G, g, а также оценку
констант регулярности на отрезке |z| <= K_X + K_0.
"""

from dataclasses import dataclass, asdict
from typing import Any, Callable, Dict, Optional, Tuple, Union
import logging
import math

import numpy as np
from scipy import integrate, stats
from scipy.special import expit, logit, xlogy

from .exceptions import ConditionFailureError, DomainError, QuadratureError, ValidationError
from .interfaces import FamilySpec, Interval, LossFamily, QuasiFamily, RobustLoss

logger = logging.getLogger(__name__)

# Точность адаптивной квадратуры
QUAD_RELATIVE_TOLERANCE = 1e-10
QUAD_ABSOLUTE_TOLERANCE = 1e-14

# Минимальное число узлов сетки для оценки констант
MIN_GRID_POINTS = 64

# Симметричные распределения, допустимые для binary_link
SYMMETRIC_LINKS = ('norm', 'logistic', 'laplace', 't', 'cauchy')

ConditionalLaw = Union[Any, Callable[[float], Any]]


def _quad(func: Callable[[float], float], lower: float, upper: float) -> float:
    """Адаптивная квадратура с контролем сходимости."""
    if lower == upper:
        return 0.0
    result = integrate.quad(
        func, lower, upper,
        epsrel=QUAD_RELATIVE_TOLERANCE,
        epsabs=QUAD_ABSOLUTE_TOLERANCE,
        limit=200,
        full_output=1,
    )
    if len(result) > 3:
        raise QuadratureError(
            f"Квадратура на [{lower}, {upper}] не сошлась: {result[3]}"
        )
    return float(result[0])


# ============================================================================
# КВАЗИПРАВДОПОДОБИЕ
# ============================================================================

class GaussianFamily(QuasiFamily):
    """Наименьшие квадраты: V(u) = 1, G(z) = z, rho(y, z) = (y - z)^2 / 2."""

    kind = 'gaussian'

    def __init__(self, reference_point: float = 0.0):
        self.reference_point = float(reference_point)
        self.mean_domain = Interval()

    @property
    def spec(self) -> FamilySpec:
        if self.reference_point == 0.0:
            return FamilySpec.create(self.kind)
        return FamilySpec.create(self.kind, y0=self.reference_point)

    def variance(self, u: Any) -> np.ndarray:
        return np.ones_like(np.asarray(u, dtype=float))

    def inverse_link(self, z: Any) -> np.ndarray:
        return np.asarray(z, dtype=float)

    def link_derivative(self, z: Any) -> np.ndarray:
        return np.ones_like(np.asarray(z, dtype=float))

    def quasi_likelihood(self, y: Any, mu: Any) -> np.ndarray:
        return -0.5 * (np.asarray(y, dtype=float) - np.asarray(mu, dtype=float)) ** 2

    def gamma(self, mu: Any) -> np.ndarray:
        return np.asarray(mu, dtype=float) - self.reference_point

    def H(self, z: Any) -> np.ndarray:
        return np.asarray(z, dtype=float) - self.reference_point

    def h(self, z: Any) -> np.ndarray:
        return np.ones_like(np.asarray(z, dtype=float))

    def regret(self, mu: Any, mu0: Any) -> np.ndarray:
        return 0.5 * (np.asarray(mu, dtype=float) - np.asarray(mu0, dtype=float)) ** 2

    def loss(self, y: Any, z: Any) -> np.ndarray:
        return 0.5 * (np.asarray(y, dtype=float) - np.asarray(z, dtype=float)) ** 2

    def derivative(self, y: Any, z: Any) -> np.ndarray:
        return np.asarray(z, dtype=float) - np.asarray(y, dtype=float)

    def curvature(self, y: Any, z: Any) -> np.ndarray:
        return np.ones(np.broadcast(np.asarray(y), np.asarray(z)).shape)


class _BernoulliQuasi:
    """
    Общая часть бинарных семейств: V(u) = u(1 - u) на (0, 1).

    Q(y, mu) = y log mu + (1 - y) log(1 - mu) - y log y - (1 - y) log(1 - y),
    B(mu, mu0) - форма Кульбака-Лейблера.
    """

    mean_domain = Interval(0.0, 1.0)

    def variance(self, u: Any) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u * (1.0 - u)

    def quasi_likelihood(self, y: Any, mu: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        mu = self.check_mean(mu)
        return (xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu)
                - xlogy(y, y) - xlogy(1.0 - y, 1.0 - y))

    def gamma(self, mu: Any) -> np.ndarray:
        return logit(self.check_mean(mu)) - logit(self.reference_point)

    def regret(self, mu: Any, mu0: Any) -> np.ndarray:
        mu = self.check_mean(mu)
        mu0 = self.check_mean(mu0)
        return (xlogy(mu0, mu0) - xlogy(mu0, mu)
                + xlogy(1.0 - mu0, 1.0 - mu0) - xlogy(1.0 - mu0, 1.0 - mu))

    @staticmethod
    def _entropy_offset(y: np.ndarray) -> np.ndarray:
        return xlogy(y, y) + xlogy(1.0 - y, 1.0 - y)


class LogisticFamily(_BernoulliQuasi, QuasiFamily, RobustLoss):
    """
    Логистическая регрессия с канонической связью.

    Одновременно семейство квазиправдоподобия и робастная потеря
    (|d rho / dz| = |G(z) - y| <= 1 при y в [0, 1]).
    """

    kind = 'logistic'
    lipschitz_constant = 1.0

    def __init__(self, reference_point: float = 0.5):
        if not 0.0 < reference_point < 1.0:
            raise ValidationError(f"y0 должна лежать в (0, 1), получено {reference_point}")
        self.reference_point = float(reference_point)

    @property
    def spec(self) -> FamilySpec:
        if self.reference_point == 0.5:
            return FamilySpec.create(self.kind)
        return FamilySpec.create(self.kind, y0=self.reference_point)

    def inverse_link(self, z: Any) -> np.ndarray:
        return expit(np.asarray(z, dtype=float))

    def link_derivative(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return expit(z) * expit(-z)

    def H(self, z: Any) -> np.ndarray:
        return np.asarray(z, dtype=float) - logit(self.reference_point)

    def h(self, z: Any) -> np.ndarray:
        return np.ones_like(np.asarray(z, dtype=float))

    def loss(self, y: Any, z: Any) -> np.ndarray:
        # log(1 + e^z) - yz + const(y)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.logaddexp(0.0, z) - y * z + self._entropy_offset(y)

    def derivative(self, y: Any, z: Any) -> np.ndarray:
        return expit(np.asarray(z, dtype=float)) - np.asarray(y, dtype=float)

    def curvature(self, y: Any, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.broadcast_to(self.link_derivative(z), np.broadcast(np.asarray(y), z).shape)

    def expected_derivative(self, law: Any, z: float) -> float:
        return float(expit(z) - law.mean())


class BinaryLinkFamily(_BernoulliQuasi, QuasiFamily):
    """
    Бинарный отклик с обратной связью G - функцией распределения
    симметричного закона scipy.stats (пробит, лаплас, t и т.д.).

    Выпуклость потерь проверяется на сетке при создании: для симметричного
    G она следует из монотонности риска g/(1 - G), что для тяжелых хвостов
    (t, cauchy) нарушается вдали от нуля.
    """

    kind = 'binary_link'

    def __init__(
        self,
        dist: str = 'norm',
        df: Optional[float] = None,
        reference_point: float = 0.5,
        convexity_radius: float = 8.0,
    ):
        if dist not in SYMMETRIC_LINKS:
            raise ValidationError(
                f"Неподдерживаемое распределение связи: {dist}. "
                f"Доступные: {list(SYMMETRIC_LINKS)}"
            )
        if dist == 't':
            if df is None or df <= 0:
                raise ValidationError("Для связи 't' необходим параметр df > 0")
            self._rv = stats.t(df)
        else:
            if df is not None:
                raise ValidationError(f"Параметр df не применим к связи '{dist}'")
            self._rv = getattr(stats, dist)()
        if not 0.0 < reference_point < 1.0:
            raise ValidationError(f"y0 должна лежать в (0, 1), получено {reference_point}")
        self.dist = dist
        self.df = df
        self.reference_point = float(reference_point)
        self.convexity_radius = float(convexity_radius)
        self._check_link()

    def _check_link(self) -> None:
        zs = np.linspace(-self.convexity_radius, self.convexity_radius, 801)
        if abs(float(self._rv.cdf(0.0)) - 0.5) > 1e-12 or not np.allclose(
                self._rv.logpdf(zs), self._rv.logpdf(-zs), atol=1e-10):
            raise ValidationError(f"Распределение '{self.dist}' не симметрично")
        worst = max(check_convexity(self, np.array([0.0, 1.0]), zs), 0.0)
        if worst > 1e-9:
            raise ValidationError(
                f"Потери для связи '{self.dist}' не выпуклы на "
                f"[-{self.convexity_radius}, {self.convexity_radius}] (нарушение {worst:.3e})"
            )
        logger.debug(f"Связь '{self.dist}' прошла проверку выпуклости")

    @property
    def spec(self) -> FamilySpec:
        params: Dict[str, Any] = {'dist': self.dist}
        if self.df is not None:
            params['df'] = self.df
        if self.reference_point != 0.5:
            params['y0'] = self.reference_point
        return FamilySpec.create(self.kind, **params)

    def inverse_link(self, z: Any) -> np.ndarray:
        return self._rv.cdf(np.asarray(z, dtype=float))

    def link_derivative(self, z: Any) -> np.ndarray:
        return self._rv.pdf(np.asarray(z, dtype=float))

    def h(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.exp(self._rv.logpdf(z) - self._rv.logcdf(z) - self._rv.logsf(z))

    def loss(self, y: Any, z: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        # xlogy-подобная запись: 0 * (-inf) = 0 на хвостах
        pos = np.where(y > 0, -y * self._rv.logcdf(z), 0.0)
        neg = np.where(y < 1, -(1.0 - y) * self._rv.logsf(z), 0.0)
        return pos + neg + self._entropy_offset(y)

    def derivative(self, y: Any, z: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        logpdf = self._rv.logpdf(z)
        return (-y * np.exp(logpdf - self._rv.logcdf(z))
                + (1.0 - y) * np.exp(logpdf - self._rv.logsf(z)))


class GenericQuasiFamily(QuasiFamily):
    """
    Квазиправдоподобие по пользовательским функциям V, G, g.

    Q, gamma и B вычисляются адаптивной квадратурой. Функции должны
    принимать скаляры; векторизация выполняется здесь.
    """

    kind = 'quasi'

    def __init__(
        self,
        variance_fn: Callable[[float], float],
        inverse_link: Callable[[float], float],
        link_derivative: Callable[[float], float],
        reference_point: float,
        mean_domain: Interval = Interval(),
        name: str = 'custom',
    ):
        if not mean_domain.contains(reference_point):
            raise ValidationError(
                f"Опорная точка y0={reference_point} вне области {mean_domain.to_dict()}"
            )
        self._V = variance_fn
        self._G = inverse_link
        self._g = link_derivative
        self.reference_point = float(reference_point)
        self.mean_domain = mean_domain
        self.name = name
        self._gamma = np.vectorize(self._gamma_scalar, otypes=[float])
        self._q = np.vectorize(self._q_scalar, otypes=[float])

    @property
    def spec(self) -> FamilySpec:
        return FamilySpec.create(self.kind, name=self.name)

    def _call(self, fn: Callable[[float], float], x: Any) -> np.ndarray:
        return np.vectorize(lambda v: float(fn(v)), otypes=[float])(np.asarray(x, dtype=float))

    def variance(self, u: Any) -> np.ndarray:
        return self._call(self._V, u)

    def inverse_link(self, z: Any) -> np.ndarray:
        return self._call(self._G, z)

    def link_derivative(self, z: Any) -> np.ndarray:
        return self._call(self._g, z)

    def _positive_variance(self, u: float) -> float:
        v = float(self._V(u))
        if not v > 0:
            raise DomainError(f"V({u}) = {v} <= 0 для семейства {self.name}")
        return v

    def _gamma_scalar(self, mu: float) -> float:
        return _quad(lambda u: 1.0 / self._positive_variance(u), self.reference_point, mu)

    def _q_scalar(self, y: float, mu: float) -> float:
        return _quad(lambda u: (y - u) / self._positive_variance(u), y, mu)

    def quasi_likelihood(self, y: Any, mu: Any) -> np.ndarray:
        return self._q(np.asarray(y, dtype=float), self.check_mean(mu))

    def gamma(self, mu: Any) -> np.ndarray:
        return self._gamma(self.check_mean(mu))

    def regret(self, mu: Any, mu0: Any) -> np.ndarray:
        # B(mu, mu0) = -Q(mu0, mu)
        return -self._q(self.check_mean(mu0), self.check_mean(mu))


# ============================================================================
# РОБАСТНЫЕ ПОТЕРИ
# ============================================================================

class _CheckLoss(RobustLoss):
    """
    Кусочно-линейная потеря от остатка r = y - z с наклонами a (r > 0)
    и b (r < 0). В точке излома выбирается середина субдифференциала.
    """

    is_smooth = False
    residual_based = True

    def __init__(self, upper_slope: float, lower_slope: float):
        self.a = float(upper_slope)
        self.b = float(lower_slope)
        self.lipschitz_constant = max(self.a, self.b)

    def loss(self, y: Any, z: Any) -> np.ndarray:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        return np.where(r > 0, self.a * r, -self.b * r)

    def derivative(self, y: Any, z: Any) -> np.ndarray:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        return np.where(r > 0, -self.a, np.where(r < 0, self.b, 0.5 * (self.b - self.a)))

    def subgradient_bounds(self, y: Any, z: Any, kink_tol: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        kink = np.abs(r) <= kink_tol
        d = self.derivative(y, z)
        return np.where(kink, -self.a, d), np.where(kink, self.b, d)

    def smoothed_loss(self, y: Any, z: Any, mu: float) -> np.ndarray:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        upper = self.a * r - 0.5 * self.a ** 2 * mu
        lower = -self.b * r - 0.5 * self.b ** 2 * mu
        return np.where(r > self.a * mu, upper,
                        np.where(r < -self.b * mu, lower, r ** 2 / (2.0 * mu)))

    def smoothed_derivative(self, y: Any, z: Any, mu: float) -> np.ndarray:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        return -np.clip(r / mu, -self.b, self.a)

    def expected_derivative(self, law: Any, z: float) -> float:
        """l'(z) = -a P(Y > z) + b P(Y < z) для непрерывного закона Y."""
        return float(-self.a * law.sf(z) + self.b * law.cdf(z))


class QuantileLoss(_CheckLoss):
    """Квантильная потеря: rho(r) = alpha r при r > 0, (1 - alpha)|r| при r <= 0."""

    kind = 'quantile'

    def __init__(self, alpha: float = 0.5):
        if not 0.0 < alpha < 1.0:
            raise ValidationError(f"Уровень квантиля должен лежать в (0, 1), получено {alpha}")
        self.alpha = float(alpha)
        super().__init__(self.alpha, 1.0 - self.alpha)

    @property
    def spec(self) -> FamilySpec:
        return FamilySpec.create(self.kind, alpha=self.alpha)


class LADLoss(_CheckLoss):
    """Наименьшие абсолютные отклонения |y - z|."""

    kind = 'lad'

    def __init__(self):
        super().__init__(1.0, 1.0)

    @property
    def spec(self) -> FamilySpec:
        return FamilySpec.create(self.kind)


class HuberLoss(RobustLoss):
    """
    Потеря Хьюбера с порогом k, деленная на max(k, 1).

    При k <= 1 это обычная потеря Хьюбера с константой Липшица k; при k > 1
    деление приводит константу Липшица к 1: оценка при lambda совпадает
    с оценкой для ненормированной потери при lambda * k.
    """

    kind = 'huber'
    residual_based = True

    def __init__(self, k: float = 1.0):
        if not k > 0:
            raise ValidationError(f"Порог Хьюбера должен быть положительным, получено {k}")
        self.k = float(k)
        self.scale = max(self.k, 1.0)
        self.lipschitz_constant = self.k / self.scale

    @property
    def spec(self) -> FamilySpec:
        return FamilySpec.create(self.kind, k=self.k)

    def loss(self, y: Any, z: Any) -> np.ndarray:
        r = np.abs(np.asarray(y, dtype=float) - np.asarray(z, dtype=float))
        return np.where(r <= self.k, 0.5 * r ** 2, self.k * r - 0.5 * self.k ** 2) / self.scale

    def derivative(self, y: Any, z: Any) -> np.ndarray:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        return -np.clip(r, -self.k, self.k) / self.scale

    def curvature(self, y: Any, z: Any) -> np.ndarray:
        r = np.asarray(y, dtype=float) - np.asarray(z, dtype=float)
        return (np.abs(r) <= self.k).astype(float) / self.scale

    def expected_derivative(self, law: Any, z: float) -> float:
        k = self.k
        inner = law.expect(lambda y: y - z, lb=z - k, ub=z + k)
        return float(-(inner + k * law.sf(z + k) - k * law.cdf(z - k)) / self.scale)


# ============================================================================
# ОПЕРАЦИИ НАД СЕМЕЙСТВАМИ
# ============================================================================

def loss(family: LossFamily, y: Any, z: Any) -> np.ndarray:
    """Значение rho(y, z) для любого семейства."""
    return family.loss(y, z)


def loss_derivative(family: LossFamily, y: Any, z: Any) -> np.ndarray:
    """d rho / dz; в изломе робастной потери - середина субдифференциала."""
    return family.derivative(y, z)


def regret(family: LossFamily, mu: Any, mu0: Any) -> np.ndarray:
    """Сожаление B(mu, mu0) >= 0."""
    if not isinstance(family, QuasiFamily):
        raise ValidationError(f"Сожаление определено только для квазиправдоподобия, не для {family.kind}")
    return family.regret(mu, mu0)


def average_regret(family: LossFamily, f: Any, mu0: Any) -> float:
    """
    Среднее сожаление (1/n) sum_i B(G(f_i), mu0_i) для линейного
    предиктора f и истинных средних mu0.
    """
    f = np.asarray(f, dtype=float)
    mu0 = np.asarray(mu0, dtype=float)
    if f.shape != mu0.shape:
        raise ValidationError(f"Размерности f {f.shape} и mu0 {mu0.shape} не совпадают")
    if not isinstance(family, QuasiFamily):
        raise ValidationError(f"Сожаление определено только для квазиправдоподобия, не для {family.kind}")
    return float(np.mean(family.regret(family.inverse_link(f), mu0)))


def is_canonical(family: QuasiFamily, zs: Any = None, tol: float = 1e-8) -> bool:
    """Связь каноническая, если h = dH/dz = 1 на сетке."""
    zs = np.linspace(-5.0, 5.0, 201) if zs is None else np.asarray(zs, dtype=float)
    return bool(np.max(np.abs(family.h(zs) - 1.0)) <= tol)


def check_link_monotone(family: QuasiFamily, zs: Any) -> bool:
    """G строго возрастает на отсортированной сетке zs."""
    G = family.inverse_link(np.sort(np.asarray(zs, dtype=float)))
    return bool(np.all(np.diff(G) > 0))


def check_convexity(family: LossFamily, ys: Any, zs: Any) -> float:
    """
    Худшее нарушение выпуклости z -> rho(y, z) на сетке zs для каждого y.

    Сравниваются наклоны соседних хорд; возвращает max(0, наибольшее
    убывание наклона). Ноль означает выпуклость на сетке.
    """
    zs = np.sort(np.asarray(zs, dtype=float))
    worst = 0.0
    for y in np.atleast_1d(np.asarray(ys, dtype=float)):
        values = np.asarray(family.loss(y, zs), dtype=float)
        slopes = np.diff(values) / np.diff(zs)
        if slopes.size > 1:
            worst = max(worst, float(np.max(slopes[:-1] - slopes[1:])))
    return max(worst, 0.0)


def check_lipschitz(family: LossFamily, y: Any, z: Any, z_tilde: Any,
                    constant: float = 1.0) -> float:
    """max(0, max |rho(y,z) - rho(y,z~)| - constant |z - z~|) по выборке троек."""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    z_tilde = np.asarray(z_tilde, dtype=float)
    excess = np.abs(family.loss(y, z) - family.loss(y, z_tilde)) - constant * np.abs(z - z_tilde)
    return max(float(np.max(excess)), 0.0)


# ============================================================================
# КОНСТАНТЫ РЕГУЛЯРНОСТИ
# ============================================================================

@dataclass(frozen=True)
class ConditionConstants:
    """
    Константы условий регулярности на отрезке |z| <= K_X + K_0.

    C_h, C_V, L_h, L_g заданы для квазиправдоподобия; C_l - для робастных
    потерь при известном условном законе (или канонической связи).
    """
    C_h: Optional[float]
    C_V: Optional[float]
    L_h: Optional[float]
    L_g: Optional[float]
    C_l: Optional[float]
    interval_radius: float
    grid_points: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _max_difference_quotient(values: np.ndarray, zs: np.ndarray) -> float:
    return float(np.max(np.abs(np.diff(values)) / np.diff(zs)))


def _quasi_constants(family: QuasiFamily, zs: np.ndarray) -> Dict[str, float]:
    h = np.asarray(family.h(zs), dtype=float)
    vg = np.asarray(family.variance(family.inverse_link(zs)), dtype=float)
    g = np.asarray(family.link_derivative(zs), dtype=float)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(vg)) and np.all(np.isfinite(g))):
        raise ConditionFailureError(f"h, V o G или g не конечны на сетке для семейства {family.kind}")
    if np.min(h) <= 0:
        raise ConditionFailureError(f"h обращается в ноль на отрезке: C_h бесконечна ({family.kind})")
    if np.min(vg) <= 0:
        raise ConditionFailureError(f"V o G обращается в ноль на отрезке: C_V бесконечна ({family.kind})")
    return {
        'C_h': max(float(np.max(h)), 1.0 / float(np.min(h))),
        'C_V': max(2.0 * float(np.max(vg)), 2.0 / float(np.min(vg))),
        'L_h': _max_difference_quotient(h, zs),
        'L_g': 2.0 * _max_difference_quotient(g, zs),
    }


def _law_for(conditional_law: ConditionalLaw, f0_i: float, residual_based: bool):
    """Возвращает (закон, сдвиг) так, что l_i(z) = E rho(Y, z) вычисляется в точке z - сдвиг."""
    if callable(conditional_law) and not hasattr(conditional_law, 'cdf'):
        return conditional_law(f0_i), 0.0
    if not residual_based:
        raise ValidationError(
            "Закон ошибки со сдвигом применим только к потерям от остатка y - z; "
            "передайте функцию f0 -> закон Y"
        )
    return conditional_law, f0_i


def _expected_derivative(family: RobustLoss, law: Any, z: float) -> float:
    custom = getattr(family, 'expected_derivative', None)
    if custom is not None:
        return custom(law, z)
    if isinstance(law.dist, stats.rv_continuous):
        def integrand(y: float) -> float:
            return float(family.derivative(y, z))
        return float(law.expect(integrand, ub=z) + law.expect(integrand, lb=z))
    return float(law.expect(lambda y: float(family.derivative(y, z))))


def _robust_curvature_bound(
    family: RobustLoss,
    zs: np.ndarray,
    conditional_law: ConditionalLaw,
    f0: np.ndarray,
    step: float,
) -> float:
    """inf_i inf_z l_i''(z) через центральные разности l_i'."""
    residual_based = bool(getattr(family, 'residual_based', False))
    lowest = math.inf
    for f0_i in np.unique(f0):
        law, shift = _law_for(conditional_law, float(f0_i), residual_based)
        for z in zs:
            zc = float(z) - shift
            second = (_expected_derivative(family, law, zc + step)
                      - _expected_derivative(family, law, zc - step)) / (2.0 * step)
            lowest = min(lowest, second)
    return lowest


def estimate_condition_constants(
    family: LossFamily,
    K_X: float,
    K_0: float,
    grid_points: int = 256,
    conditional_law: Optional[ConditionalLaw] = None,
    f0: Optional[Any] = None,
) -> ConditionConstants:
    """
    Оценивает C_h, C_V, L_h, L_g и C_l на равномерной сетке отрезка
    [-(K_X + K_0), K_X + K_0].

    Args:
        family: Семейство потерь
        K_X: Верхняя граница max |x_ij|
        K_0: Верхняя граница max |f0(x_i)|
        grid_points: Число узлов сетки (не менее 64)
        conditional_law: Замороженный закон ошибки scipy.stats (Y = f0_i + eps)
            или функция f0_i -> закон Y_i; нужен для C_l робастных потерь
        f0: Значения истинного предиктора f0(x_i); по умолчанию 0

    Raises:
        ValidationError: Некорректные аргументы
        ConditionFailureError: Константа бесконечна (h, V o G или l'' обращаются в ноль)
    """
    if not isinstance(family, (QuasiFamily, RobustLoss)):
        raise ValidationError(f"Неизвестный тип семейства: {type(family).__name__}")
    if grid_points < MIN_GRID_POINTS:
        raise ValidationError(f"grid_points должно быть >= {MIN_GRID_POINTS}, получено {grid_points}")
    if K_X < 0 or K_0 < 0 or not math.isfinite(K_X + K_0):
        raise ValidationError(f"K_X и K_0 должны быть конечными и неотрицательными: {K_X}, {K_0}")
    radius = float(K_X + K_0)
    zs = np.linspace(-radius, radius, grid_points) if radius > 0 else np.linspace(-1e-6, 1e-6, grid_points)

    quasi: Dict[str, Optional[float]] = {'C_h': None, 'C_V': None, 'L_h': None, 'L_g': None}
    if isinstance(family, QuasiFamily):
        quasi.update(_quasi_constants(family, zs))

    C_l: Optional[float] = None
    if isinstance(family, RobustLoss):
        if conditional_law is not None:
            f0_arr = np.zeros(1) if f0 is None else np.atleast_1d(np.asarray(f0, dtype=float))
            step = max(1e-4, 1e-4 * radius)
            lowest = _robust_curvature_bound(family, zs, conditional_law, f0_arr, step)
            if not lowest > 0:
                raise ConditionFailureError(
                    f"inf l''(z) = {lowest:.3e} <= 0 на отрезке: C_l бесконечна ({family.kind})"
                )
            C_l = 2.0 / lowest
        elif isinstance(family, QuasiFamily) and is_canonical(family, zs):
            # при канонической связи l_i'' = g независимо от закона Y
            C_l = 2.0 / float(np.min(family.link_derivative(zs)))
    elif conditional_law is not None:
        logger.warning(f"Условный закон игнорируется: {family.kind} не робастная потеря")

    if isinstance(family, RobustLoss) and not isinstance(family, QuasiFamily) and C_l is None:
        raise ValidationError(f"Для робастной потери {family.kind} нужен conditional_law для оценки C_l")

    constants = ConditionConstants(
        C_h=quasi['C_h'], C_V=quasi['C_V'], L_h=quasi['L_h'], L_g=quasi['L_g'],
        C_l=C_l, interval_radius=radius, grid_points=grid_points,
    )
    logger.info(f"Константы регулярности для {family.kind} на |z| <= {radius:.4g}: {constants.to_dict()}")
    return constants

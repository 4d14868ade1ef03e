# -*- coding: utf-8 -*-
"""
Интерфейсы, базовые типы данных и абстрактные классы qlasso.
Обеспечивают контракты между семействами потерь, решателем и диагностикой.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Iterable, Literal, Tuple
import json
import logging
import math

import numpy as np

from .exceptions import DomainError, ValidationError

logger = logging.getLogger(__name__)

# Типы семейств и методов
FamilyKind = Literal['gaussian', 'logistic', 'binary_link', 'quantile', 'lad', 'huber', 'quasi']
CompatibilityMethod = Literal['exact_qp_enumeration', 'projected_search']
TheoremKind = Literal['thm1', 'thm2', 'thm4', 'random_design']


@dataclass(frozen=True)
class Interval:
    """Открытый интервал (lower, upper); бесконечные концы допустимы."""
    lower: float = -math.inf
    upper: float = math.inf

    def contains(self, values: Any) -> np.ndarray:
        """Поэлементная проверка принадлежности открытому интервалу."""
        arr = np.asarray(values, dtype=float)
        return (arr > self.lower) & (arr < self.upper)

    def contains_closure(self, values: Any) -> np.ndarray:
        """Проверка принадлежности замыканию интервала."""
        arr = np.asarray(values, dtype=float)
        return (arr >= self.lower) & (arr <= self.upper)

    def to_dict(self) -> Dict[str, float]:
        return {'lower': self.lower, 'upper': self.upper}


@dataclass(frozen=True)
class FamilySpec:
    """
    Текстовое описание семейства: вид плюс числовые параметры.

    Формат строки: ``kind`` или ``kind:key=value,key=value``,
    например ``quantile:alpha=0.3`` или ``binary_link:dist=norm``.
    """
    kind: str
    params: Tuple[Tuple[str, Any], ...] = ()

    @classmethod
    def create(cls, kind: str, **params: Any) -> 'FamilySpec':
        return cls(kind=kind, params=tuple(sorted(params.items())))

    @property
    def param_dict(self) -> Dict[str, Any]:
        return dict(self.params)

    @classmethod
    def parse(cls, text: str) -> 'FamilySpec':
        """
        Разбирает описание семейства из строки или JSON-объекта.

        Raises:
            ValidationError: Если строка не соответствует формату
        """
        text = text.strip()
        if not text:
            raise ValidationError("Пустое описание семейства")
        if text.startswith('{'):
            try:
                return cls.from_dict(json.loads(text))
            except json.JSONDecodeError as e:
                raise ValidationError(f"Некорректный JSON семейства: {e}") from e
        kind, _, rest = text.partition(':')
        params: Dict[str, Any] = {}
        for item in filter(None, (part.strip() for part in rest.split(','))):
            key, sep, value = item.partition('=')
            if not sep:
                raise ValidationError(f"Ожидалось key=value в описании семейства, получено '{item}'")
            params[key.strip()] = _coerce_param(value.strip())
        return cls.create(kind.strip(), **params)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FamilySpec':
        if 'kind' not in data:
            raise ValidationError("В описании семейства отсутствует поле 'kind'")
        return cls.create(str(data['kind']), **dict(data.get('params', {})))

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'params': self.param_dict}

    def __str__(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ':' + ','.join(f"{k}={v}" for k, v in self.params)


def _coerce_param(value: str) -> Any:
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


@dataclass(frozen=True)
class IndexSet:
    """
    Упорядоченное множество индексов столбцов (нумерация с нуля).

    Внешние форматы (CLI, отчеты) используют нумерацию с единицы,
    см. ``from_one_based`` / ``one_based``.
    """
    indices: Tuple[int, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(set(int(i) for i in self.indices)))
        if any(i < 0 for i in ordered):
            raise ValidationError(f"Отрицательный индекс в множестве {ordered}")
        object.__setattr__(self, 'indices', ordered)

    @classmethod
    def of(cls, indices: Iterable[int]) -> 'IndexSet':
        return cls(tuple(indices))

    @classmethod
    def from_one_based(cls, indices: Iterable[int]) -> 'IndexSet':
        values = [int(i) for i in indices]
        if any(i < 1 for i in values):
            raise ValidationError(f"Индексы должны начинаться с 1, получено {values}")
        return cls(tuple(i - 1 for i in values))

    @classmethod
    def support(cls, beta: np.ndarray) -> 'IndexSet':
        """Носитель вектора: {j : beta_j != 0}."""
        return cls(tuple(int(j) for j in np.flatnonzero(np.asarray(beta) != 0)))

    @property
    def s(self) -> int:
        return len(self.indices)

    @property
    def one_based(self) -> Tuple[int, ...]:
        return tuple(i + 1 for i in self.indices)

    def validate(self, p: int) -> 'IndexSet':
        if self.indices and self.indices[-1] >= p:
            raise ValidationError(f"Индекс {self.indices[-1] + 1} превышает число столбцов p={p}")
        return self

    def complement(self, p: int) -> 'IndexSet':
        members = set(self.indices)
        return IndexSet(tuple(j for j in range(p) if j not in members))

    def mask(self, p: int) -> np.ndarray:
        out = np.zeros(p, dtype=bool)
        out[list(self.indices)] = True
        return out

    def issubset(self, other: 'IndexSet') -> bool:
        return set(self.indices) <= set(other.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Фиксированная матрица плана n x p с метаданными столбцов."""
    X: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        if X.ndim != 2:
            raise ValidationError(f"Матрица плана должна быть двумерной, получено ndim={X.ndim}")
        n, p = X.shape
        if n < 1:
            raise ValidationError("Матрица плана должна содержать хотя бы одно наблюдение")
        if p < 2:
            raise ValidationError(f"Требуется p >= 2, получено p={p}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("Матрица плана содержит нечисловые или бесконечные значения")
        X.setflags(write=False)
        object.__setattr__(self, 'X', X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def column_norms(self) -> np.ndarray:
        """Нормы столбцов ||X_j||_n = sqrt(X_j^T X_j / n)."""
        return np.sqrt(np.sum(self.X ** 2, axis=0) / self.n)

    @cached_property
    def K_X(self) -> float:
        """max_{i,j} |x_ij|."""
        return float(np.max(np.abs(self.X)))

    @cached_property
    def gram(self) -> np.ndarray:
        """Невзвешенная матрица Грама X^T X / n."""
        G = self.X.T @ self.X / self.n
        return (G + G.T) / 2

    def columns(self, S: IndexSet) -> np.ndarray:
        return self.X[:, list(S.indices)]


# ============================================================================
# АБСТРАКТНЫЕ СЕМЕЙСТВА ПОТЕРЬ
# ============================================================================

class LossFamily(ABC):
    """
    Абстрактная функция потерь rho(y, z), выпуклая по z.

    Все методы векторизованы по numpy: y и z транслируются друг на друга.
    """

    kind: str = 'base'
    is_smooth: bool = True

    @property
    @abstractmethod
    def spec(self) -> FamilySpec:
        """Описание семейства для сериализации."""

    @abstractmethod
    def loss(self, y: Any, z: Any) -> np.ndarray:
        """Значение потерь rho(y, z)."""

    @abstractmethod
    def derivative(self, y: Any, z: Any) -> np.ndarray:
        """Производная (или выбранный субградиент) d rho / dz."""

    def curvature(self, y: Any, z: Any) -> np.ndarray:
        """Кривизна d^2 rho / dz^2 (или ее ожидаемая версия) для шагов Ньютона."""
        raise NotImplementedError(f"Кривизна не определена для семейства {self.kind}")

    def subgradient_bounds(self, y: Any, z: Any, kink_tol: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Границы субдифференциала по z; для гладких потерь совпадают."""
        d = self.derivative(y, z)
        return d, d

    def smoothed_loss(self, y: Any, z: Any, mu: float) -> np.ndarray:
        """Огибающая Моро с параметром mu; для гладких потерь - сама потеря."""
        return self.loss(y, z)

    def smoothed_derivative(self, y: Any, z: Any, mu: float) -> np.ndarray:
        return self.derivative(y, z)

    def validate_response(self, y: Any) -> np.ndarray:
        arr = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DomainError("Отклик содержит нечисловые значения")
        return arr

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec})"


class QuasiFamily(LossFamily):
    """
    Семейство квазиправдоподобия: функция дисперсии V, обратная связь G,
    ее производная g и опорная точка y0 для канонической связи gamma.
    """

    reference_point: float = 0.0
    mean_domain: Interval = Interval()

    @abstractmethod
    def variance(self, u: Any) -> np.ndarray:
        """Функция дисперсии V(u) > 0 на mean_domain."""

    @abstractmethod
    def inverse_link(self, z: Any) -> np.ndarray:
        """Обратная функция связи G(z)."""

    @abstractmethod
    def link_derivative(self, z: Any) -> np.ndarray:
        """g(z) = dG/dz."""

    @abstractmethod
    def quasi_likelihood(self, y: Any, mu: Any) -> np.ndarray:
        """Q(y, mu) = int_y^mu (y - u) / V(u) du."""

    @abstractmethod
    def gamma(self, mu: Any) -> np.ndarray:
        """Каноническая связь gamma(mu) = int_{y0}^mu du / V(u)."""

    @abstractmethod
    def regret(self, mu: Any, mu0: Any) -> np.ndarray:
        """Сожаление B(mu, mu0) = int_{mu0}^mu (u - mu0) / V(u) du."""

    def check_mean(self, mu: Any) -> np.ndarray:
        arr = np.asarray(mu, dtype=float)
        if not np.all(self.mean_domain.contains(arr)):
            raise DomainError(
                f"Среднее вне области определения {self.mean_domain.to_dict()} "
                f"для семейства {self.kind}"
            )
        return arr

    def variance_of_mean(self, z: Any) -> np.ndarray:
        """V(G(z)) с проверкой положительности."""
        v = np.asarray(self.variance(self.inverse_link(z)), dtype=float)
        if np.any(v <= 0):
            raise DomainError(f"V(G(z)) <= 0 для семейства {self.kind}")
        return v

    def H(self, z: Any) -> np.ndarray:
        """H = gamma o G."""
        return self.gamma(self.inverse_link(z))

    def h(self, z: Any) -> np.ndarray:
        """h(z) = dH/dz = g(z) / V(G(z))."""
        return np.asarray(self.link_derivative(z), dtype=float) / self.variance_of_mean(z)

    def loss(self, y: Any, z: Any) -> np.ndarray:
        return -self.quasi_likelihood(y, self.inverse_link(z))

    def derivative(self, y: Any, z: Any) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return -(y - self.inverse_link(z)) * self.h(z)

    def curvature(self, y: Any, z: Any) -> np.ndarray:
        """Ожидаемая кривизна g(z) h(z) (скоринг Фишера)."""
        z = np.asarray(z, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.link_derivative(z)) * self.h(z), np.broadcast(y, z).shape)

    def validate_response(self, y: Any) -> np.ndarray:
        arr = super().validate_response(y)
        if not np.all(self.mean_domain.contains_closure(arr)):
            raise DomainError(f"Отклик вне допустимой области семейства {self.kind}")
        return arr


class RobustLoss(LossFamily):
    """Робастная потеря: липшицева по z с константой lipschitz_constant <= 1."""

    lipschitz_constant: float = 1.0

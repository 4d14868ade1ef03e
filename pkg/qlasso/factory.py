# -*- coding: utf-8 -*-
"""
Фабрика семейств потерь и кэш теоретических констант плана.
Обеспечивает единую точку создания семейств по текстовому описанию.
"""

from typing import Any, Callable, Dict, Hashable, Tuple, Type, Union
import hashlib
import logging
import threading

import numpy as np

from .exceptions import ValidationError
from .families import (
    BinaryLinkFamily,
    GaussianFamily,
    GenericQuasiFamily,
    HuberLoss,
    LADLoss,
    LogisticFamily,
    QuantileLoss,
)
from .interfaces import DesignMatrix, FamilySpec, LossFamily

logger = logging.getLogger(__name__)


class FamilyFactory:
    """
    Фабрика семейств потерь.

    Использование:
        family = FamilyFactory.create_family("quantile", alpha=0.3)
        family = FamilyFactory.from_spec(FamilySpec.parse("binary_link:dist=norm"))
    """

    # Реестр видов семейств
    _family_types: Dict[str, Type[LossFamily]] = {
        'gaussian': GaussianFamily,
        'logistic': LogisticFamily,
        'binary_link': BinaryLinkFamily,
        'quantile': QuantileLoss,
        'lad': LADLoss,
        'huber': HuberLoss,
        'quasi': GenericQuasiFamily,
    }

    @classmethod
    def create_family(cls, kind: str, **params: Any) -> LossFamily:
        """
        Создает семейство потерь.

        Args:
            kind: Вид семейства (gaussian, logistic, binary_link, quantile, lad, huber, quasi)
            **params: Параметры семейства
                quantile: alpha (0 < alpha < 1)
                huber: k (k > 0)
                binary_link: dist, df
                gaussian/logistic: y0

        Returns:
            Экземпляр семейства

        Raises:
            ValidationError: Неизвестный вид или некорректные параметры

        Examples:
            >>> FamilyFactory.create_family("gaussian")
            >>> FamilyFactory.create_family("huber", k=0.5)
        """
        if kind not in cls._family_types:
            raise ValidationError(
                f"Неподдерживаемый вид семейства: {kind}. "
                f"Доступные виды: {list(cls._family_types.keys())}"
            )

        if kind == 'quantile':
            alpha = params.get('alpha', 0.5)
            if not isinstance(alpha, (int, float)) or not 0.0 < float(alpha) < 1.0:
                raise ValidationError(f"Для quantile требуется 0 < alpha < 1, получено {alpha}")
        elif kind == 'huber':
            k = params.get('k', 1.0)
            if not isinstance(k, (int, float)) or not float(k) > 0:
                raise ValidationError(f"Для huber требуется k > 0, получено {k}")

        # y0 в текстовом описании соответствует reference_point
        if 'y0' in params:
            params['reference_point'] = params.pop('y0')

        family_class = cls._family_types[kind]
        try:
            family = family_class(**params)
        except TypeError as e:
            raise ValidationError(f"Недопустимые параметры для {kind}: {e}") from e
        logger.debug(f"Создано семейство {family.spec}")
        return family

    @classmethod
    def from_spec(cls, spec: Union[FamilySpec, str]) -> LossFamily:
        """Создает семейство по FamilySpec или его текстовой записи."""
        if isinstance(spec, str):
            spec = FamilySpec.parse(spec)
        return cls.create_family(spec.kind, **spec.param_dict)

    @classmethod
    def register_family_type(cls, kind: str, family_class: Type[LossFamily]) -> None:
        """
        Регистрирует новый вид семейства.

        Args:
            kind: Имя вида
            family_class: Класс семейства
        """
        cls._family_types[kind] = family_class
        logger.info(f"Зарегистрирован новый вид семейства: {kind}")

    @classmethod
    def available_kinds(cls) -> Tuple[str, ...]:
        return tuple(cls._family_types)


def make_family(kind: str, **params: Any) -> LossFamily:
    """Краткая форма FamilyFactory.create_family."""
    return FamilyFactory.create_family(kind, **params)


def design_digest(design: Union[DesignMatrix, np.ndarray]) -> str:
    """Стабильный ключ матрицы плана: форма плюс SHA-256 байтов."""
    X = design.X if isinstance(design, DesignMatrix) else np.ascontiguousarray(design, dtype=float)
    h = hashlib.sha256()
    h.update(repr(X.shape).encode())
    h.update(np.ascontiguousarray(X).tobytes())
    return h.hexdigest()


class DesignCache:
    """
    Кэш теоретических величин плана (phi^2, Gamma_eff, theta) для
    повторного использования между репликациями.

    Ограничен по размеру, вытесняет наименее используемую запись,
    потокобезопасен.
    """

    def __init__(self, max_entries: int = 64):
        """
        Args:
            max_entries: Максимальное число записей
        """
        if max_entries < 1:
            raise ValidationError(f"max_entries должно быть >= 1, получено {max_entries}")
        self.max_entries = max_entries
        self._entries: Dict[Hashable, Any] = {}
        self._usage: Dict[Hashable, int] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        logger.debug(f"Инициализирован кэш плана (макс: {max_entries})")

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """
        Возвращает значение из кэша или вычисляет и сохраняет его.

        Вычисление выполняется вне блокировки; при гонке сохраняется
        первое записанное значение.
        """
        with self._lock:
            if key in self._entries:
                self._usage[key] += 1
                self.hits += 1
                logger.debug(f"Попадание в кэш плана (использований: {self._usage[key]})")
                return self._entries[key]
            self.misses += 1

        value = compute()

        with self._lock:
            if key in self._entries:
                self._usage[key] += 1
                return self._entries[key]
            if len(self._entries) >= self.max_entries:
                least_used = min(self._usage, key=self._usage.get)
                self._evict(least_used)
            self._entries[key] = value
            self._usage[key] = 1
        return value

    def _evict(self, key: Hashable) -> None:
        del self._entries[key]
        del self._usage[key]
        logger.debug("Запись вытеснена из кэша плана")

    def release(self, key: Hashable) -> None:
        with self._lock:
            if key in self._entries:
                self._evict(key)

    def clear(self) -> None:
        """Очищает кэш."""
        with self._lock:
            self._entries.clear()
            self._usage.clear()
        logger.debug("Кэш плана очищен")

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: Hashable) -> bool:
        return key in self._entries

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.clear()


def cache_key(design: Union[DesignMatrix, np.ndarray], *parts: Hashable) -> Tuple[Hashable, ...]:
    """Ключ кэша: дайджест плана и дополнительные параметры (S, L, ...)."""
    return (design_digest(design),) + tuple(parts)

# -*- coding: utf-8 -*-
"""
Монте-Карло проверка оракульных неравенств и теорем об отборе переменных.

Сценарий (ScenarioConfig) задает размеры задачи, семейство потерь, закон
плана, закон ошибок, истинный вектор beta0 и правило выбора lambda.
Каждая репликация детерминирована парой (master_seed, index): генератор
Philox инициализируется SeedSequence со spawn_key=(index,), поэтому
результат не зависит от порядка параллельного выполнения.

Нормировка: библиотечная квадратичная потеря равна (y - z)^2 / 2, поэтому
решение с параметром lambda совпадает с Лассо для ||Y - X b||_n^2 с
параметром 2 lambda. Проверка детерминированной оракульной границы для
наименьших квадратов ведется в ее собственной нормировке (lambda_ls = 2 lambda),
а событие отбора для гауссовской модели - в библиотечной:
lambda_0 >= max_j |eps^T X_j| / n.
"""

from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass, field, asdict, replace
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import linalg, stats

from .calibration import (
    TheoryConstants,
    TuningLevels,
    ScaledSparsities,
    check_preconditions,
    default_t,
    oracle_bounds,
    scaled_sparsities,
    true_positive_lower_bound,
    tuning_levels,
)
from .diagnostics import (
    compatibility_constant,
    gram_sup_distance,
    irrepresentable_theta,
    selection_kkt_check,
    weighted_gram,
)
from .exceptions import (
    CompatibilityError,
    ConditionFailureError,
    NumericalError,
    SingularMatrixError,
    ValidationError,
)
from .factory import DesignCache, FamilyFactory, cache_key
from .families import MIN_GRID_POINTS, average_regret, estimate_condition_constants
from .interfaces import DesignMatrix, FamilySpec, IndexSet, LossFamily, QuasiFamily, RobustLoss
from .logging_config import LogContext, PerformanceLogger
from .solver import PenalizedProblem, SolverConfig, fit, restricted_fit

logger = logging.getLogger(__name__)

DesignKind = Literal['fixed', 'gaussian', 'uniform']
ErrorKind = Literal['gaussian', 'student_t', 'model']
LambdaKind = Literal['fixed', 'sqrt_log', 'theory', 'event']
Placement = Literal['random', 'first']
SignRule = Literal['random', 'positive']

DESIGN_KINDS = ('fixed', 'gaussian', 'uniform')
ERROR_KINDS = ('gaussian', 'student_t', 'model')
LAMBDA_KINDS = ('fixed', 'sqrt_log', 'theory', 'event')

MIN_STUDENT_DF = 5.0
DEFAULT_S_EXACT = 8
DEFAULT_ETAS = (0.5, 1.0, 2.0)
DEFAULT_CACHE_ENTRIES = 256
CONCLUSION_TOLERANCE = 1e-9
BINARY_KINDS = ('logistic', 'binary_link')
QUIET_LOGGERS = ('qlasso.families', 'qlasso.diagnostics', 'qlasso.solver')
RESIDUAL_KINDS = ('quantile', 'lad', 'huber')

# Детерминированные импликации: при выполненной гипотезе вывод обязан выполняться
DETERMINISTIC_CHECKS = ('thm1', 'thm5', 'thm6')


def _tuple_matrix(value: Any) -> Optional[Tuple[Tuple[float, ...], ...]]:
    if value is None:
        return None
    return tuple(tuple(float(x) for x in row) for row in value)


def _strict_fields(cls, data: Dict[str, Any], what: str) -> None:
    unknown = set(data) - set(cls.__dataclass_fields__)
    if unknown:
        raise ValidationError(f"Неизвестные поля {what}: {sorted(unknown)}")


# ============================================================================
# ЗАКОНЫ И ПРАВИЛА СЦЕНАРИЯ
# ============================================================================

@dataclass(frozen=True)
class DesignLaw:
    """
    Закон плана.

    fixed - заданная матрица (одна для всех репликаций);
    gaussian - i.i.d. строки N(0, Sigma), Sigma задана или Теплица rho^|j-k|;
    uniform - i.i.d. элементы U[-bound, bound], тогда K_X <= bound.
    """
    kind: DesignKind = 'gaussian'
    rho: float = 0.0
    covariance: Optional[Tuple[Tuple[float, ...], ...]] = None
    bound: float = 1.0
    matrix: Optional[Tuple[Tuple[float, ...], ...]] = None

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValidationError(f"Неизвестный закон плана: {self.kind}. Доступные: {list(DESIGN_KINDS)}")
        object.__setattr__(self, 'covariance', _tuple_matrix(self.covariance))
        object.__setattr__(self, 'matrix', _tuple_matrix(self.matrix))
        if not -1.0 < self.rho < 1.0:
            raise ValidationError(f"Корреляция rho должна лежать в (-1, 1), получено {self.rho}")
        if not self.bound > 0:
            raise ValidationError(f"Граница равномерного плана должна быть > 0, получено {self.bound}")
        if self.kind == 'fixed' and self.matrix is None:
            raise ValidationError("Для фиксированного плана нужна матрица 'matrix'")

    @property
    def is_random(self) -> bool:
        return self.kind != 'fixed'

    def covariance_matrix(self, p: int) -> np.ndarray:
        if self.covariance is not None:
            cov = np.asarray(self.covariance, dtype=float)
            if cov.shape != (p, p):
                raise ValidationError(f"Ковариация должна иметь размер ({p}, {p}), получено {cov.shape}")
            if float(np.linalg.eigvalsh((cov + cov.T) / 2)[0]) < -1e-12:
                raise ValidationError("Ковариация плана не является неотрицательно определенной")
            return cov
        return linalg.toeplitz(self.rho ** np.arange(p))

    def population_gram(self, p: int) -> Optional[np.ndarray]:
        """E x x^T для случайного плана; None для фиксированного."""
        if self.kind == 'gaussian':
            return self.covariance_matrix(p)
        if self.kind == 'uniform':
            return np.eye(p) * self.bound ** 2 / 3.0
        return None

    def sample(self, rng: np.random.Generator, n: int, p: int) -> np.ndarray:
        if self.kind == 'fixed':
            X = np.asarray(self.matrix, dtype=float)
            if X.shape != (n, p):
                raise ValidationError(f"Матрица плана имеет размер {X.shape}, ожидалось ({n}, {p})")
            return X.copy()
        if self.kind == 'uniform':
            return rng.uniform(-self.bound, self.bound, size=(n, p))
        return rng.multivariate_normal(np.zeros(p), self.covariance_matrix(p), size=n, method='eigh')

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ('covariance', 'matrix'):
            if data[key] is not None:
                data[key] = [list(row) for row in data[key]]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DesignLaw':
        _strict_fields(cls, data, 'закона плана')
        return cls(**data)


@dataclass(frozen=True)
class ErrorLaw:
    """
    Закон ошибок с конечным четвертым моментом.

    gaussian - N(0, sigma^2); student_t - t(df) с масштабом, дающим
    дисперсию sigma^2 (df >= 5); model - ошибки, порожденные моделью
    (бинарный отклик Y ~ Bernoulli(G(f0))).
    """
    kind: ErrorKind = 'gaussian'
    sigma: float = 1.0
    df: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise ValidationError(f"Неизвестный закон ошибок: {self.kind}. Доступные: {list(ERROR_KINDS)}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"sigma должно быть > 0, получено {self.sigma}")
        if self.kind == 'student_t':
            if self.df is None or self.df < MIN_STUDENT_DF:
                raise ValidationError(
                    f"Для закона Стьюдента нужно df >= {MIN_STUDENT_DF:g} (конечный четвертый момент), получено {self.df}"
                )

    def frozen(self, shift: float = 0.0) -> Any:
        """Замороженный закон scipy.stats для ошибки (со сдвигом loc=shift)."""
        if self.kind == 'gaussian':
            return stats.norm(loc=shift, scale=self.sigma)
        if self.kind == 'student_t':
            scale = self.sigma * math.sqrt((self.df - 2.0) / self.df)
            return stats.t(self.df, loc=shift, scale=scale)
        raise ValidationError("Закон 'model' не имеет явного распределения ошибки")

    def centered(self, family: LossFamily) -> Any:
        """
        Закон ошибки для семейства: для потерь от остатка сдвинут так, что
        0 - квантиль уровня alpha (медиана для lad и huber), иначе без сдвига.
        """
        base = self.frozen()
        if family.kind not in RESIDUAL_KINDS:
            return base
        alpha = getattr(family, 'alpha', 0.5)
        return self.frozen(shift=-float(base.ppf(alpha)))

    def moments(self) -> Tuple[float, float]:
        """Аналитические (sigma, kappa): E eps^2 = sigma^2, Var(eps^2) = kappa^4."""
        if self.kind == 'gaussian':
            return self.sigma, (2.0 * self.sigma ** 4) ** 0.25
        if self.kind == 'student_t':
            df = self.df
            if df <= 4.0:
                raise ValidationError("Четвертый момент закона Стьюдента бесконечен при df <= 4")
            return self.sigma, (self.sigma ** 4 * (2.0 * df - 2.0) / (df - 4.0)) ** 0.25
        raise ValidationError("Моменты закона 'model' зависят от истинных средних")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ErrorLaw':
        _strict_fields(cls, data, 'закона ошибок')
        return cls(**data)


def bernoulli_moments(mu0: Any) -> Tuple[float, float]:
    """
    sigma^2 = max_i mu_i (1 - mu_i), kappa^4 = mean_i Var(eps_i^2)
    = mean_i mu_i (1 - mu_i) (1 - 2 mu_i)^2 для eps = Y - mu.
    """
    mu = np.asarray(mu0, dtype=float)
    var = mu * (1.0 - mu)
    sigma = math.sqrt(float(np.max(var)))
    kappa4 = float(np.mean(var * (1.0 - 2.0 * mu) ** 2))
    return sigma, kappa4 ** 0.25


@dataclass(frozen=True)
class BetaSpec:
    """
    Истинный вектор beta0.

    values - явный вектор длины p; иначе s0 ненулевых коэффициентов
    величины magnitude (или beta_min_factor * lambda * Gamma_eff(S0)),
    размещение random или first, знаки random или positive.
    """
    magnitude: float = 1.0
    placement: Placement = 'random'
    signs: SignRule = 'random'
    values: Optional[Tuple[float, ...]] = None
    beta_min_factor: Optional[float] = None

    def __post_init__(self):
        if self.values is not None:
            object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if self.placement not in ('random', 'first'):
            raise ValidationError(f"Неизвестное размещение носителя: {self.placement}")
        if self.signs not in ('random', 'positive'):
            raise ValidationError(f"Неизвестное правило знаков: {self.signs}")
        if not (math.isfinite(self.magnitude) and self.magnitude > 0):
            raise ValidationError(f"magnitude должно быть > 0, получено {self.magnitude}")
        if self.beta_min_factor is not None and not self.beta_min_factor > 0:
            raise ValidationError(f"beta_min_factor должно быть > 0, получено {self.beta_min_factor}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if data['values'] is not None:
            data['values'] = list(data['values'])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BetaSpec':
        _strict_fields(cls, data, 'описания beta0')
        return cls(**data)


@dataclass(frozen=True)
class LambdaRule:
    """
    Правило выбора lambda (в нормировке библиотеки).

    fixed - value; sqrt_log - c sqrt(log p / n);
    theory - multiplier * lambda_eps(t) (для робастных потерь - робастный уровень);
    event - наименьшее lambda, при котором выполнено событие оракульной
    границы наименьших квадратов, плюс margin: 2 lambda = 4 max_j |eps^T X_j|/n + margin.
    """
    kind: LambdaKind = 'sqrt_log'
    value: Optional[float] = None
    c: float = 2.0
    multiplier: float = 4.0
    margin: float = 1e-3

    def __post_init__(self):
        if self.kind not in LAMBDA_KINDS:
            raise ValidationError(f"Неизвестное правило lambda: {self.kind}. Доступные: {list(LAMBDA_KINDS)}")
        if self.kind == 'fixed' and not (self.value is not None and self.value > 0):
            raise ValidationError("Правило 'fixed' требует value > 0")
        if not (self.c > 0 and self.multiplier > 0 and self.margin >= 0):
            raise ValidationError("Требуется c > 0, multiplier > 0, margin >= 0")

    def resolve(
        self,
        n: int,
        p: int,
        levels: Optional[TuningLevels] = None,
        noise_sup: Optional[float] = None,
        robust: bool = False,
    ) -> float:
        if self.kind == 'fixed':
            return float(self.value)
        if self.kind == 'sqrt_log':
            return self.c * math.sqrt(math.log(p) / n)
        if self.kind == 'event':
            if noise_sup is None:
                raise ValidationError("Правило 'event' требует наблюдаемые ошибки")
            return (4.0 * noise_sup + self.margin) / 2.0
        if levels is None:
            raise ValidationError("Правило 'theory' требует вычисленные уровни настройки")
        base = levels.lambda_eps_robust if robust or levels.lambda_eps is None else levels.lambda_eps
        return self.multiplier * base

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LambdaRule':
        _strict_fields(cls, data, 'правила lambda')
        return cls(**data)


# ============================================================================
# СЦЕНАРИЙ
# ============================================================================

@dataclass(frozen=True)
class ScenarioConfig:
    """
    Сценарий Монте-Карло.

    Attributes:
        name: Имя сценария
        n, p, s0: Размеры задачи и число ненулевых коэффициентов
        family: Семейство потерь
        design: Закон плана
        error: Закон ошибок
        beta: Описание beta0
        lambda_rule: Правило выбора lambda
        t: Параметр уровня доверия (по умолчанию log n)
        replications: Число репликаций
        master_seed: Главное зерно
        lambda0_fraction: lambda_0 = lambda0_fraction * lambda в проверке отбора
        etas: Значения eta для нижней границы числа верных включений
        s_exact: Предел точного перебора знаков при вычислении phi^2
        grid_points: Число узлов сетки для констант регулярности
        theory: Вычислять константы теории (phi^2, Gamma, theta) в каждой репликации
        oracle: Строить оракульную оценку на S0
        solver: Параметры решателя
    """
    name: str = 'scenario'
    n: int = 100
    p: int = 30
    s0: int = 3
    family: FamilySpec = field(default_factory=lambda: FamilySpec.create('gaussian'))
    design: DesignLaw = field(default_factory=DesignLaw)
    error: ErrorLaw = field(default_factory=ErrorLaw)
    beta: BetaSpec = field(default_factory=BetaSpec)
    lambda_rule: LambdaRule = field(default_factory=LambdaRule)
    t: Optional[float] = None
    replications: int = 100
    master_seed: int = 0
    lambda0_fraction: float = 0.5
    etas: Tuple[float, ...] = DEFAULT_ETAS
    s_exact: int = DEFAULT_S_EXACT
    grid_points: int = MIN_GRID_POINTS
    theory: bool = True
    oracle: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, 'family', FamilySpec.parse(self.family))
        object.__setattr__(self, 'etas', tuple(float(e) for e in self.etas))
        if self.n < 1:
            raise ValidationError(f"Требуется n >= 1, получено {self.n}")
        if self.p < 2:
            raise ValidationError(f"Требуется p >= 2, получено {self.p}")
        if not 0 <= self.s0 <= self.p:
            raise ValidationError(f"Требуется 0 <= s0 <= p, получено s0={self.s0}, p={self.p}")
        if self.replications < 1:
            raise ValidationError(f"Требуется хотя бы одна репликация, получено {self.replications}")
        if self.t is not None and not self.t >= 0:
            raise ValidationError(f"Требуется t >= 0, получено {self.t}")
        if not 0.0 < self.lambda0_fraction < 1.0:
            raise ValidationError(f"lambda0_fraction должно лежать в (0, 1), получено {self.lambda0_fraction}")
        if any(not eta > 0 for eta in self.etas):
            raise ValidationError(f"Все eta должны быть > 0, получено {self.etas}")
        if self.s_exact < 1:
            raise ValidationError(f"s_exact должно быть >= 1, получено {self.s_exact}")

        kind = self.family.kind
        family = self.make_family()
        if kind in BINARY_KINDS:
            if self.error.kind != 'model':
                raise ValidationError(f"Для семейства {kind} закон ошибок должен быть 'model'")
        elif kind == 'gaussian' or kind in RESIDUAL_KINDS:
            if self.error.kind == 'model':
                raise ValidationError(f"Закон 'model' применим только к бинарному отклику, не к {kind}")
        else:
            raise ValidationError(f"Семейство {kind} не поддерживается в симуляции")
        if not isinstance(family, (QuasiFamily, RobustLoss)):
            raise ValidationError(f"Неизвестный тип семейства {kind}")

        if self.beta.values is not None:
            if len(self.beta.values) != self.p:
                raise ValidationError(f"beta0 должен иметь длину {self.p}, получено {len(self.beta.values)}")
            nonzero = sum(v != 0 for v in self.beta.values)
            if nonzero != self.s0:
                raise ValidationError(f"Число ненулевых beta0 ({nonzero}) не совпадает с s0={self.s0}")
        if self.beta.beta_min_factor is not None and self.lambda_rule.kind not in ('fixed', 'sqrt_log'):
            raise ValidationError("beta_min_factor совместим только с правилами lambda 'fixed' и 'sqrt_log'")
        if self.lambda_rule.kind == 'event' and kind != 'gaussian':
            raise ValidationError("Правило lambda 'event' определено только для гауссовского семейства")
        if self.lambda_rule.kind == 'theory' and not self.theory:
            raise ValidationError("Правило lambda 'theory' требует theory=True")
        if self.design.kind == 'fixed':
            shape = (len(self.design.matrix), len(self.design.matrix[0]) if self.design.matrix else 0)
            if shape != (self.n, self.p):
                raise ValidationError(f"Матрица плана имеет размер {shape}, ожидалось ({self.n}, {self.p})")

    @property
    def t_value(self) -> float:
        return default_t(self.n) if self.t is None else float(self.t)

    def make_family(self) -> LossFamily:
        return FamilyFactory.from_spec(self.family)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'n': self.n,
            'p': self.p,
            's0': self.s0,
            'family': self.family.to_dict(),
            'design': self.design.to_dict(),
            'error': self.error.to_dict(),
            'beta': self.beta.to_dict(),
            'lambda_rule': self.lambda_rule.to_dict(),
            't': self.t,
            'replications': self.replications,
            'master_seed': self.master_seed,
            'lambda0_fraction': self.lambda0_fraction,
            'etas': list(self.etas),
            's_exact': self.s_exact,
            'grid_points': self.grid_points,
            'theory': self.theory,
            'oracle': self.oracle,
            'solver': self.solver.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ScenarioConfig':
        _strict_fields(cls, data, 'сценария')
        data = dict(data)
        family = data.get('family')
        if isinstance(family, str):
            data['family'] = FamilySpec.parse(family)
        elif isinstance(family, dict):
            data['family'] = FamilySpec.from_dict(family)
        nested = {
            'design': DesignLaw,
            'error': ErrorLaw,
            'beta': BetaSpec,
            'lambda_rule': LambdaRule,
            'solver': SolverConfig,
        }
        for key, klass in nested.items():
            if isinstance(data.get(key), dict):
                data[key] = klass.from_dict(data[key])
        if 'etas' in data:
            data['etas'] = tuple(data['etas'])
        return cls(**data)


# ============================================================================
# ЗЕРНА И ГЕНЕРАЦИЯ
# ============================================================================

def seed_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


def replication_seed(master_seed: int, index: int) -> int:
    """Числовой идентификатор зерна репликации (для записи в отчет)."""
    return int(seed_sequence(master_seed, index).generate_state(1, dtype=np.uint64)[0])


def make_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, index)))


@dataclass(frozen=True, eq=False)
class Instance:
    """Синтетическая задача одной репликации."""
    X: DesignMatrix
    beta0: np.ndarray
    Y: np.ndarray
    epsilon: np.ndarray
    f0: np.ndarray
    support: IndexSet
    K_0: float
    seed: int
    mu0: Optional[np.ndarray] = None
    error_law: Any = None

    def as_tuple(self) -> Tuple[DesignMatrix, np.ndarray, np.ndarray, np.ndarray]:
        return self.X, self.beta0, self.Y, self.epsilon


@dataclass(frozen=True)
class DesignConstants:
    """Константы плана на S0: phi^2(3, S0), Gamma_eff и theta для X^T X / n."""
    phi_sq: Optional[float]
    gamma_eff: Optional[float]
    theta: Optional[float]
    method: Optional[str]
    fallback: bool = False


def design_constants(X: DesignMatrix, S0: IndexSet, config: ScenarioConfig,
                     cache: Optional[DesignCache] = None) -> DesignConstants:
    """
    phi^2(3, S0), Gamma_eff(S0) и theta на матрице Грама X^T X / n.

    При s0 > s_exact используется проекционный поиск (результат помечается).
    Значения кэшируются по содержимому плана и S0.
    """
    if S0.s == 0:
        return DesignConstants(phi_sq=None, gamma_eff=None, theta=None, method=None)

    def compute() -> DesignConstants:
        method = 'exact_qp_enumeration' if S0.s <= config.s_exact else 'projected_search'
        result = compatibility_constant(X, S0, s_max=config.s_exact, method=method,
                                        seed=config.master_seed)
        gamma_eff = S0.s / result.phi_sq if result.phi_sq > max(1e-9, result.certificate_gap) else None
        try:
            theta = irrepresentable_theta(X.gram, S0)
        except SingularMatrixError:
            theta = None
        return DesignConstants(phi_sq=result.phi_sq, gamma_eff=gamma_eff, theta=theta,
                               method=result.method, fallback=method == 'projected_search')

    if cache is None:
        return compute()
    return cache.get_or_compute(cache_key(X, S0.indices, config.s_exact, config.master_seed), compute)


def generate_instance(config: ScenarioConfig, replication_index: int,
                      cache: Optional[DesignCache] = None) -> Instance:
    """
    Детерминированно по (master_seed, replication_index) генерирует план,
    beta0, отклик и ошибки. Порядок случайных выборок фиксирован: план,
    носитель, знаки, ошибки (или бинарный отклик).
    """
    if replication_index < 0:
        raise ValidationError(f"Индекс репликации должен быть >= 0, получено {replication_index}")
    family = config.make_family()
    rng = make_rng(config.master_seed, replication_index)
    n, p, s0 = config.n, config.p, config.s0
    X = DesignMatrix(config.design.sample(rng, n, p))

    spec = config.beta
    if spec.values is not None:
        beta0 = np.asarray(spec.values, dtype=float)
    else:
        if spec.placement == 'random':
            support = np.sort(rng.choice(p, size=s0, replace=False))
        else:
            support = np.arange(s0)
        signs = rng.choice([-1.0, 1.0], size=s0) if spec.signs == 'random' else np.ones(s0)
        magnitude = spec.magnitude
        if spec.beta_min_factor is not None and s0 > 0:
            constants = design_constants(X, IndexSet.of(support), config, cache)
            if constants.gamma_eff is None:
                raise CompatibilityError("beta_min_factor: Gamma_eff(S0) бесконечна на сгенерированном плане")
            lam = config.lambda_rule.resolve(n, p)
            magnitude = spec.beta_min_factor * lam * constants.gamma_eff
        beta0 = np.zeros(p)
        beta0[support] = signs * magnitude
    S0 = IndexSet.support(beta0)
    f0 = X.X @ beta0
    K_0 = float(np.max(np.abs(f0))) if f0.size else 0.0

    mu0 = None
    error_law = None
    if family.kind in BINARY_KINDS:
        mu0 = np.asarray(family.inverse_link(f0), dtype=float)
        Y = (rng.random(n) < mu0).astype(float)
        epsilon = Y - mu0
    else:
        error_law = config.error.centered(family)
        epsilon = np.asarray(error_law.rvs(size=n, random_state=rng), dtype=float)
        Y = f0 + epsilon
        if isinstance(family, QuasiFamily):
            mu0 = np.asarray(family.inverse_link(f0), dtype=float)
    return Instance(
        X=X, beta0=beta0, Y=Y, epsilon=epsilon, f0=f0, support=S0, K_0=K_0,
        seed=replication_seed(config.master_seed, replication_index),
        mu0=mu0, error_law=error_law,
    )


# ============================================================================
# РЕПЛИКАЦИЯ
# ============================================================================

@dataclass(frozen=True)
class TheoremCheck:
    """
    Проверка одной теоремы в одной репликации.

    hypothesis - выполнены ли предпосылки (событие); conclusion - выполнен
    ли вывод (None, если вывод не вычислим). Для вероятностных теорем
    lhs - наибольшее отношение реализованной величины к границе, rhs = 1.
    """
    name: str
    hypothesis: bool
    conclusion: Optional[bool]
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    alpha: Optional[float] = None

    @property
    def violated(self) -> bool:
        return self.hypothesis and self.conclusion is False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TheoremCheck':
        return cls(**data)


@dataclass(frozen=True)
class RunRecord:
    """Результат одной репликации."""
    replication: int
    seed: int
    n: int
    p: int
    s0: int
    lambda_: Optional[float] = None
    lambda_0: Optional[float] = None
    K_X: Optional[float] = None
    K_0: Optional[float] = None
    prediction_error: Optional[float] = None
    ell1_error: Optional[float] = None
    active_set: Tuple[int, ...] = ()
    true_positives: Optional[int] = None
    false_positives: Optional[int] = None
    kkt_sup_violation: Optional[float] = None
    converged: Optional[bool] = None
    iterations: Optional[int] = None
    noise_sup: Optional[float] = None
    phi_sq: Optional[float] = None
    gamma_eff: Optional[float] = None
    theta: Optional[float] = None
    compatibility_method: Optional[str] = None
    lambda_X: Optional[float] = None
    regret: Optional[float] = None
    oracle_prediction_error: Optional[float] = None
    oracle_ell1_error: Optional[float] = None
    oracle_regret: Optional[float] = None
    oracle_error: Optional[str] = None
    checks: Tuple[TheoremCheck, ...] = ()
    error: Optional[str] = None

    @property
    def excluded(self) -> bool:
        return self.error is not None

    def check(self, name: str) -> Optional[TheoremCheck]:
        for item in self.checks:
            if item.name == name:
                return item
        return None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['lambda'] = data.pop('lambda_')
        data['active_set'] = list(self.active_set)
        data['checks'] = [c.to_dict() for c in self.checks]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunRecord':
        data = dict(data)
        data['lambda_'] = data.pop('lambda', None)
        data['active_set'] = tuple(data.get('active_set', ()))
        data['checks'] = tuple(TheoremCheck.from_dict(c) for c in data.get('checks', ()))
        _strict_fields(cls, data, 'записи репликации')
        return cls(**data)


@dataclass(frozen=True)
class _Theory:
    design: DesignConstants
    constants: Optional[TheoryConstants]
    levels: Optional[TuningLevels]
    sparsities: Optional[ScaledSparsities]
    theta_weighted: Optional[float]


def _error_moments(config: ScenarioConfig, inst: Instance) -> Tuple[float, float]:
    if config.error.kind == 'model':
        return bernoulli_moments(inst.mu0)
    return config.error.moments()


def _theory(config: ScenarioConfig, family: LossFamily, inst: Instance,
            cache: Optional[DesignCache]) -> _Theory:
    dc = design_constants(inst.X, inst.support, config, cache)
    sigma, kappa = _error_moments(config, inst)
    K_X = inst.X.K_X
    law = inst.error_law if family.kind in RESIDUAL_KINDS else None
    f0_range = np.array([np.min(inst.f0), np.max(inst.f0)])
    try:
        cond = estimate_condition_constants(family, K_X, inst.K_0, config.grid_points,
                                            conditional_law=law, f0=f0_range)
        constants = TheoryConstants.from_condition_constants(cond, sigma, kappa, K_X, inst.K_0)
    except ConditionFailureError as e:
        logger.debug(f"Константы регулярности бесконечны: {e}")
        constants = None
    levels = tuning_levels(constants, config.n, config.p, config.t_value) if constants else None
    sparsities = (scaled_sparsities(constants, dc.gamma_eff)
                  if constants is not None and dc.gamma_eff is not None else None)

    theta_weighted = None
    if isinstance(family, QuasiFamily) and inst.support.s > 0:
        if family.kind == 'gaussian':
            theta_weighted = dc.theta
        else:
            try:
                theta_weighted = irrepresentable_theta(weighted_gram(inst.X, inst.beta0, family), inst.support)
            except SingularMatrixError:
                theta_weighted = None
    return _Theory(design=dc, constants=constants, levels=levels,
                   sparsities=sparsities, theta_weighted=theta_weighted)


def _ratio(value: float, bound: float) -> float:
    if bound > 0:
        return value / bound
    return 0.0 if value <= 0 else math.inf


def _within(value: float, bound: float) -> bool:
    return value <= bound * (1.0 + CONCLUSION_TOLERANCE) + CONCLUSION_TOLERANCE


def _all_named(entries, names: Sequence[str]) -> bool:
    by_name = {e.name: e.satisfied for e in entries}
    return all(by_name.get(name, False) for name in names)


def _theorem_checks(
    config: ScenarioConfig,
    family: LossFamily,
    inst: Instance,
    theory: Optional[_Theory],
    lam: float,
    lam0: float,
    beta_hat: np.ndarray,
    prediction_error: float,
    ell1_error: float,
    noise_sup: float,
    active: IndexSet,
    lambda_X: Optional[float],
) -> List[TheoremCheck]:
    checks: List[TheoremCheck] = []
    selected_ok = active.issubset(inst.support)

    if theory is not None and inst.support.s > 0:
        dc = theory.design
        c, levels, sp = theory.constants, theory.levels, theory.sparsities
        gamma_eff = dc.gamma_eff

        if family.kind == 'gaussian':
            # оракульная граница наименьших квадратов в нормировке ||Y - X b||_n^2
            lam_ls = 2.0 * lam
            hypothesis = gamma_eff is not None and lam_ls >= 4.0 * noise_sup
            if gamma_eff is not None:
                bound = oracle_bounds('thm1', c or TheoryConstants(), lam_ls, gamma_eff)
                lhs = prediction_error + lam_ls * ell1_error
                checks.append(TheoremCheck('thm1', hypothesis, _within(lhs, bound.combined_bound),
                                           lhs=lhs, rhs=bound.combined_bound))
            else:
                checks.append(TheoremCheck('thm1', False, None))

            threshold = (lam - lam0) / (lam + lam0)
            event = lam0 >= noise_sup
            hypothesis = event and dc.theta is not None and dc.theta < threshold
            checks.append(TheoremCheck('thm5', hypothesis, selected_ok, lhs=dc.theta, rhs=threshold))
            selection = selection_kkt_check(beta_hat, inst.beta0, inst.X.gram, lam, lam0,
                                            tol=config.solver.kkt_tolerance)
            checks.append(TheoremCheck('thm6', event, selection.holds))

        if c is not None and sp is not None and gamma_eff is not None:
            entries = check_preconditions(c, config.n, config.p, config.t_value, lam, gamma_eff,
                                          theta=theory.theta_weighted, lambda_X=lambda_X)
            if c.is_quasi:
                bound = oracle_bounds('thm2', c, lam, gamma_eff)
                worst = max(_ratio(ell1_error, bound.ell1_bound), _ratio(prediction_error, bound.prediction_bound))
                hypothesis = _all_named(entries, ('(s0)', 'lambda-range'))
                checks.append(TheoremCheck('thm2', hypothesis, _within(worst, 1.0),
                                           lhs=worst, rhs=1.0, alpha=levels.alpha_oracle))

                hypothesis = _all_named(entries, ('(s0-select)', '(s03)', '(s04)', 'theta-threshold'))
                checks.append(TheoremCheck('thm7', hypothesis, selected_ok, alpha=levels.alpha_select))

                if family.kind == 'gaussian' and lambda_X is not None:
                    rd = oracle_bounds('random_design', c, lam, gamma_eff, lambda_X=lambda_X)
                    delta = beta_hat - inst.beta0
                    population = config.design.population_gram(config.p)
                    quad = float(delta @ inst.X.gram @ delta)
                    sup = float(np.max(np.abs((inst.X.gram - population) @ delta)))
                    worst = max(_ratio(quad, rd.prediction_bound), _ratio(sup, rd.sup_bound))
                    hypothesis = _all_named(entries, ('(s0)', 'lambda-range', '(s05)'))
                    checks.append(TheoremCheck('random_design', hypothesis, _within(worst, 1.0),
                                               lhs=worst, rhs=1.0, alpha=levels.alpha_oracle))

            if c.C_l is not None and isinstance(family, RobustLoss):
                bound = oracle_bounds('thm4', c, lam, gamma_eff)
                worst = max(_ratio(ell1_error, bound.ell1_bound), _ratio(prediction_error, bound.prediction_bound))
                hypothesis = _all_named(entries, ('(s02)', 'lambda-range-robust'))
                checks.append(TheoremCheck('thm4', hypothesis, _within(worst, 1.0),
                                           lhs=worst, rhs=1.0, alpha=levels.alpha_robust))

    for eta in config.etas:
        strong = np.abs(inst.beta0) >= lam / eta
        found = int(np.sum(strong & (beta_hat != 0)))
        bound = true_positive_lower_bound(inst.beta0, ell1_error, lam, eta)
        checks.append(TheoremCheck(f"true_positive(eta={eta:g})", True,
                                   found >= bound - CONCLUSION_TOLERANCE, lhs=float(found), rhs=bound))
    return checks


def _oracle(config: ScenarioConfig, problem: PenalizedProblem, inst: Instance,
            family: LossFamily) -> Dict[str, Any]:
    try:
        beta_or = restricted_fit(problem, inst.support, config.solver)
    except NumericalError as e:
        return {'oracle_error': str(e)}
    delta = beta_or - inst.beta0
    out = {
        'oracle_prediction_error': float(np.mean((inst.X.X @ delta) ** 2)),
        'oracle_ell1_error': float(np.sum(np.abs(delta))),
    }
    if isinstance(family, QuasiFamily) and inst.mu0 is not None:
        out['oracle_regret'] = average_regret(family, inst.X.X @ beta_or, inst.mu0)
    return out


def run_replication(config: ScenarioConfig, replication_index: int,
                    cache: Optional[DesignCache] = None) -> RunRecord:
    """
    Генерирует задачу, решает ее, сравнивает с оракулом и проверяет
    теоремы. Ошибка решателя не прерывает сценарий: запись помечается и
    исключается из условных частот.
    """
    family = config.make_family()
    base = {
        'replication': replication_index,
        'seed': replication_seed(config.master_seed, replication_index),
        'n': config.n, 'p': config.p, 's0': config.s0,
    }
    try:
        inst = generate_instance(config, replication_index, cache)
        X = inst.X
        noise_sup = float(np.max(np.abs(X.X.T @ inst.epsilon))) / config.n
        theory = _theory(config, family, inst, cache) if config.theory and inst.support.s > 0 else None
        lam = config.lambda_rule.resolve(
            config.n, config.p,
            levels=theory.levels if theory is not None else None,
            noise_sup=noise_sup,
            robust=not isinstance(family, QuasiFamily),
        )
        problem = PenalizedProblem(X, inst.Y, family, lam)
        result = fit(problem, config.solver)
    except NumericalError as e:
        logger.warning(f"Репликация {replication_index}: ошибка решения ({e}); запись исключена")
        return RunRecord(**base, error=f"{type(e).__name__}: {e}")

    beta_hat = result.beta_hat
    delta = beta_hat - inst.beta0
    prediction_error = float(np.mean((X.X @ delta) ** 2))
    ell1_error = float(np.sum(np.abs(delta)))
    active = result.active_set
    true_pos = len(set(active.indices) & set(inst.support.indices))
    lam0 = config.lambda0_fraction * lam

    lambda_X = None
    population = config.design.population_gram(config.p)
    if population is not None:
        lambda_X = gram_sup_distance(X.gram, population)

    checks = _theorem_checks(config, family, inst, theory, lam, lam0, beta_hat,
                             prediction_error, ell1_error, noise_sup, active, lambda_X)

    extra: Dict[str, Any] = {}
    if config.oracle and inst.support.s > 0:
        extra.update(_oracle(config, problem, inst, family))
    if isinstance(family, QuasiFamily) and inst.mu0 is not None:
        extra['regret'] = average_regret(family, X.X @ beta_hat, inst.mu0)
    if theory is not None:
        extra.update(phi_sq=theory.design.phi_sq, gamma_eff=theory.design.gamma_eff,
                     theta=theory.theta_weighted, compatibility_method=theory.design.method)

    return RunRecord(
        **base,
        lambda_=lam,
        lambda_0=lam0,
        K_X=X.K_X,
        K_0=inst.K_0,
        prediction_error=prediction_error,
        ell1_error=ell1_error,
        active_set=active.one_based,
        true_positives=true_pos,
        false_positives=active.s - true_pos,
        kkt_sup_violation=result.kkt_sup_violation,
        converged=result.converged,
        iterations=result.iterations,
        noise_sup=noise_sup,
        lambda_X=lambda_X,
        checks=tuple(checks),
        **extra,
    )


def _quiet_context() -> ExitStack:
    """Подробности констант по репликациям скрыты, если не включен DEBUG."""
    stack = ExitStack()
    if logger.getEffectiveLevel() > logging.DEBUG:
        for name in QUIET_LOGGERS:
            stack.enter_context(LogContext(logging.WARNING, logging.getLogger(name)))
    return stack


def run_scenario(
    config: ScenarioConfig,
    threads: int = 1,
    cache: Optional[DesignCache] = None,
    on_record: Optional[Callable[[RunRecord], None]] = None,
) -> List[RunRecord]:
    """
    Прогоняет все репликации сценария. Порядок записей совпадает с
    порядком индексов независимо от числа потоков.
    """
    if threads < 1:
        raise ValidationError(f"Число потоков должно быть >= 1, получено {threads}")
    cache = cache if cache is not None else DesignCache(max_entries=DEFAULT_CACHE_ENTRIES)
    indices = range(config.replications)

    def run(index: int) -> RunRecord:
        return run_replication(config, index, cache)

    with PerformanceLogger(f"Сценарий {config.name} ({config.replications} репликаций)", logger), _quiet_context():
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(run, indices))
        else:
            records = [run(index) for index in indices]
    if on_record is not None:
        for record in records:
            on_record(record)
    excluded = sum(r.excluded for r in records)
    logger.info(f"Сценарий {config.name}: репликаций {len(records)}, исключено {excluded}, "
                f"кэш плана: попаданий {cache.hits}, промахов {cache.misses}")
    return records


# ============================================================================
# СВОДКА
# ============================================================================

@dataclass(frozen=True)
class TheoremSummary:
    """
    Сводка по одной теореме.

    event_frequency - доля неисключенных репликаций с выполненной
    гипотезой; conditional_pass_rate - доля выполненного вывода среди них
    (None при пустом событии); для вероятностных теорем violation_rate
    сравнивается с alpha + 3 sqrt(alpha (1 - alpha) / R).
    """
    name: str
    deterministic: bool
    runs: int
    hypothesis_count: int
    event_frequency: float
    failures: int
    conditional_pass_rate: Optional[float]
    violation_rate: float
    alpha: Optional[float] = None
    target_frequency: Optional[float] = None
    allowed_violation_rate: Optional[float] = None
    passed: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Summary:
    """Сводка сценария."""
    scenario: str
    replications: int
    excluded: int
    theorems: Tuple[TheoremSummary, ...]
    median_prediction_error: Optional[float]
    median_ell1_error: Optional[float]
    mean_true_positives: Optional[float]
    mean_false_positives: Optional[float]

    def theorem(self, name: str) -> Optional[TheoremSummary]:
        for item in self.theorems:
            if item.name == name:
                return item
        return None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['theorems'] = [t.to_dict() for t in self.theorems]
        return data

    def table(self) -> str:
        """Текстовая таблица сводки."""
        header = f"{'Проверка':<24} {'Событие':>8} {'Вывод':>8} {'Нарушения':>10} {'Допуск':>8}  Итог"
        lines = [f"Сценарий {self.scenario}: репликаций {self.replications}, исключено {self.excluded}",
                 header, "-" * len(header)]
        for t in self.theorems:
            rate = "n/a" if t.conditional_pass_rate is None else f"{t.conditional_pass_rate:.3f}"
            allowed = "-" if t.allowed_violation_rate is None else f"{t.allowed_violation_rate:.3f}"
            status = "n/a" if t.passed is None else ("PASS" if t.passed else "FAIL")
            lines.append(f"{t.name:<24} {t.event_frequency:>8.3f} {rate:>8} "
                         f"{t.violation_rate:>10.3f} {allowed:>8}  {status}")
        return "\n".join(lines)


def allowed_violation_rate(alpha: float, replications: int) -> float:
    """alpha + 3 sqrt(alpha (1 - alpha) / R)."""
    a = min(max(alpha, 0.0), 1.0)
    return alpha + 3.0 * math.sqrt(a * (1.0 - a) / replications)


def _median(values: List[float]) -> Optional[float]:
    return float(np.median(values)) if values else None


def verify_theorems(records: Sequence[RunRecord], config: Optional[ScenarioConfig] = None) -> Summary:
    """
    Сводит проверки по репликациям: частота события, условная доля
    выполненного вывода и сравнение доли нарушений с допуском alpha(t).
    """
    if not records:
        raise ValidationError("Для сводки нужна хотя бы одна запись")
    valid = [r for r in records if not r.excluded]
    R = len(valid)

    names: List[str] = []
    for record in valid:
        for check in record.checks:
            if check.name not in names:
                names.append(check.name)

    theorems = []
    for name in names:
        checks = [c for c in (r.check(name) for r in valid) if c is not None]
        hyp = [c for c in checks if c.hypothesis]
        failures = sum(c.violated for c in checks)
        deterministic = name in DETERMINISTIC_CHECKS or name.startswith('true_positive')
        pass_rate = None if not hyp else sum(c.conclusion is True for c in hyp) / len(hyp)
        violation_rate = failures / R if R else 0.0
        alphas = [c.alpha for c in checks if c.alpha is not None]
        alpha = max(alphas) if alphas else None
        if deterministic:
            passed = None if not hyp else failures == 0
            allowed = None
        else:
            allowed = None if alpha is None or R == 0 else allowed_violation_rate(alpha, R)
            passed = None if allowed is None else violation_rate <= allowed
        theorems.append(TheoremSummary(
            name=name, deterministic=deterministic, runs=len(checks),
            hypothesis_count=len(hyp), event_frequency=len(hyp) / len(checks) if checks else 0.0,
            failures=failures, conditional_pass_rate=pass_rate, violation_rate=violation_rate,
            alpha=alpha, target_frequency=None if alpha is None else max(0.0, 1.0 - alpha),
            allowed_violation_rate=allowed, passed=passed,
        ))

    scenario = config.name if config is not None else 'scenario'
    summary = Summary(
        scenario=scenario,
        replications=len(records),
        excluded=len(records) - R,
        theorems=tuple(theorems),
        median_prediction_error=_median([r.prediction_error for r in valid]),
        median_ell1_error=_median([r.ell1_error for r in valid]),
        mean_true_positives=float(np.mean([r.true_positives for r in valid])) if valid else None,
        mean_false_positives=float(np.mean([r.false_positives for r in valid])) if valid else None,
    )
    failed = [t.name for t in theorems if t.passed is False]
    if failed:
        logger.warning(f"Сценарий {scenario}: проверки не пройдены: {failed}")
    return summary


# ============================================================================
# ЗАКОН МАСШТАБИРОВАНИЯ
# ============================================================================

@dataclass(frozen=True)
class ScalingPoint:
    n: int
    p: int
    s0: int
    rate: float
    ell1_rate: float
    median_prediction_error: Optional[float]
    median_ell1_error: Optional[float]
    replications: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ScalingReport:
    """
    Наклоны log(медианной ошибки) по log(s0 log p / n) для ошибки прогноза
    и по log(s0 sqrt(log p / n)) для l1-ошибки; None, если наклон не определен.
    """
    points: Tuple[ScalingPoint, ...]
    prediction_slope: Optional[float]
    ell1_slope: Optional[float]
    note: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'points': [p.to_dict() for p in self.points],
            'prediction_slope': self.prediction_slope,
            'ell1_slope': self.ell1_slope,
            'note': self.note,
        }


def _loglog_slope(rates: Sequence[float], values: Sequence[Optional[float]]) -> Optional[float]:
    pairs = [(r, v) for r, v in zip(rates, values) if v is not None and v > 0 and r > 0]
    if len(pairs) < 2 or len({r for r, _ in pairs}) < 2:
        return None
    x = np.log([r for r, _ in pairs])
    y = np.log([v for _, v in pairs])
    return float(np.polyfit(x, y, 1)[0])


def scaling_study(
    grid: Sequence[Tuple[int, int, int]],
    template: ScenarioConfig,
    threads: int = 1,
    cache: Optional[DesignCache] = None,
) -> ScalingReport:
    """
    Прогоняет шаблон сценария на сетке (n, p, s0) и оценивает наклоны
    медианных ошибок в логарифмическом масштабе.

    Raises:
        ValidationError: В сетке меньше четырех различных значений s0 log p / n
    """
    grid = [tuple(int(v) for v in point) for point in grid]
    if not grid:
        raise ValidationError("Пустая сетка (n, p, s0)")
    rates = [s0 * math.log(p) / n for n, p, s0 in grid]
    if all(s0 == 0 for _, _, s0 in grid):
        note = "s0 = 0 во всех точках: ошибки около нуля, наклон не определен"
    else:
        distinct = {round(r, 15) for r in rates if r > 0}
        if len(distinct) < 4:
            raise ValidationError(f"Вырожденная сетка: {len(distinct)} различных значений s0 log p / n, нужно >= 4")
        span = max(distinct) / min(distinct)
        note = ''
        if span < 10.0:
            note = f"диапазон s0 log p / n охватывает множитель {span:.3g} < 10"
            logger.warning(f"Сетка масштабирования: {note}")

    cache = cache if cache is not None else DesignCache(max_entries=DEFAULT_CACHE_ENTRIES)
    points = []
    for n, p, s0 in grid:
        config = replace(template, name=f"{template.name}[n={n},p={p},s0={s0}]", n=n, p=p, s0=s0)
        records = [r for r in run_scenario(config, threads=threads, cache=cache) if not r.excluded]
        points.append(ScalingPoint(
            n=n, p=p, s0=s0,
            rate=s0 * math.log(p) / n,
            ell1_rate=s0 * math.sqrt(math.log(p) / n),
            median_prediction_error=_median([r.prediction_error for r in records]),
            median_ell1_error=_median([r.ell1_error for r in records]),
            replications=len(records),
        ))

    prediction_slope = _loglog_slope([pt.rate for pt in points], [pt.median_prediction_error for pt in points])
    ell1_slope = _loglog_slope([pt.ell1_rate for pt in points], [pt.median_ell1_error for pt in points])
    if prediction_slope is None and not note:
        note = "наклон не определен: медианные ошибки равны нулю"
    logger.info(f"Масштабирование: наклон ошибки прогноза {prediction_slope}, l1-ошибки {ell1_slope}")
    return ScalingReport(points=tuple(points), prediction_slope=prediction_slope,
                         ell1_slope=ell1_slope, note=note)

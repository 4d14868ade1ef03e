# -*- coding: utf-8 -*-
"""
Константы теории, уровни настройки, доверительные уровни, проверка
предпосылок и правые части оракульных неравенств.

Обозначения:
    C_hV = C_V C_h^2,            C_hX = 16 C_h K_X,
    L_hV = (L_g + L_h C_V) C_h,  L_hX = 16 L_h K_X^2,
    Gamma = 16 C_hV Gamma_eff,   Gamma_0 = 6 L_hV C_hV^2 Gamma_eff,
    Gamma_robust = 16 C_l Gamma_eff.

Все функции чистые; нарушенные предпосылки возвращаются как данные,
исключения бросаются только при некорректных аргументах.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Literal, Optional, Sequence
import logging
import math

import numpy as np

from .exceptions import ValidationError
from .families import ConditionConstants

logger = logging.getLogger(__name__)

DEFAULT_GAMMA_X = 0.25
RELATIVE_TOLERANCE = 1e-12
S0_LIMIT = 0.25

BoundKind = Literal['thm1', 'thm2', 'thm4', 'random_design']
BOUND_KINDS = ('thm1', 'thm2', 'thm4', 'random_design')

# L_hX в источнике напечатано как "L_hX + 16 L_h K_X^2"; используется 16 L_h K_X^2
L_HX_NOTE = "L_hX := 16 L_h K_X^2 (опечатка '+' в исходной формуле исправлена)"


def _finite(name: str, value: float, positive: bool = False) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0 or (positive and value == 0):
        sign = "> 0" if positive else ">= 0"
        raise ValidationError(f"{name} должно быть конечным и {sign}, получено {value}")
    return value


def _optional(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(value)


@dataclass(frozen=True)
class TheoryConstants:
    """
    Первичные константы условий регулярности.

    Производные константы (C_hV, C_hX, L_hV, L_hX) не хранятся, а
    вычисляются из первичных при каждом обращении. Константы
    квазиправдоподобия равны None для чисто робастных потерь, C_l - None,
    если условный закон отклика не задан.
    """
    sigma: float = 1.0
    kappa: float = 0.0
    K_X: float = 1.0
    K_0: float = 0.0
    C_h: Optional[float] = 1.0
    C_V: Optional[float] = 2.0
    L_h: Optional[float] = 0.0
    L_g: Optional[float] = 0.0
    C_l: Optional[float] = None

    def __post_init__(self):
        _finite('sigma', self.sigma, positive=True)
        _finite('kappa', self.kappa)
        _finite('K_X', self.K_X)
        _finite('K_0', self.K_0)
        for name in ('C_h', 'C_V', 'C_l'):
            value = getattr(self, name)
            if value is not None:
                _finite(name, value, positive=True)
        for name in ('L_h', 'L_g'):
            value = getattr(self, name)
            if value is not None:
                _finite(name, value)

    @classmethod
    def from_condition_constants(
        cls,
        constants: ConditionConstants,
        sigma: float,
        kappa: float,
        K_X: float,
        K_0: float,
    ) -> 'TheoryConstants':
        return cls(
            sigma=sigma, kappa=kappa, K_X=K_X, K_0=K_0,
            C_h=constants.C_h, C_V=constants.C_V,
            L_h=constants.L_h, L_g=constants.L_g, C_l=constants.C_l,
        )

    @property
    def is_quasi(self) -> bool:
        return self.C_h is not None and self.C_V is not None

    @property
    def C_hV(self) -> Optional[float]:
        if not self.is_quasi:
            return None
        return self.C_V * self.C_h ** 2

    @property
    def C_hX(self) -> Optional[float]:
        if self.C_h is None:
            return None
        return 16.0 * self.C_h * self.K_X

    @property
    def L_hV(self) -> Optional[float]:
        if not self.is_quasi or self.L_h is None or self.L_g is None:
            return None
        return (self.L_g + self.L_h * self.C_V) * self.C_h

    @property
    def L_hX(self) -> Optional[float]:
        if self.L_h is None:
            return None
        return 16.0 * self.L_h * self.K_X ** 2

    def derived(self) -> Dict[str, Optional[float]]:
        return {'C_hV': self.C_hV, 'C_hX': self.C_hX, 'L_hV': self.L_hV, 'L_hX': self.L_hX}

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TheoryConstants':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"Неизвестные константы: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TuningLevels:
    """Уровни lambda_eps(t), lambda_0(t) и дополнения доверительных уровней alpha(t)."""
    lambda_eps: Optional[float]
    lambda_0: Optional[float]
    lambda_eps_robust: float
    alpha_oracle: float
    alpha_robust: float
    alpha_select: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ScaledSparsities:
    """Масштабированные эффективные разреженности."""
    Gamma: Optional[float]
    Gamma_eps: Optional[float]
    Gamma_0: Optional[float]
    Gamma_robust: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Precondition:
    """
    Одна предпосылка: lhs <= rhs (или lower <= lhs <= rhs для диапазона lambda,
    lhs < rhs для порога theta).
    """
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    lower: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {'name': self.name, 'lhs': self.lhs, 'rhs': self.rhs, 'satisfied': self.satisfied}
        if self.lower is not None:
            data['lower'] = self.lower
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Precondition':
        return cls(
            name=str(data['name']), lhs=float(data['lhs']), rhs=float(data['rhs']),
            satisfied=bool(data['satisfied']),
            lower=None if data.get('lower') is None else float(data['lower']),
        )


@dataclass(frozen=True)
class OracleBound:
    """Правые части оракульного неравенства."""
    kind: BoundKind
    ell1_bound: float
    prediction_bound: float
    combined_bound: Optional[float] = None
    sup_bound: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ErrorMoments:
    """Эмпирические заменители sigma и kappa (не популяционные константы)."""
    sigma_hat: float
    kappa_hat: float
    groups: int = 1
    surrogate: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ============================================================================
# УРОВНИ НАСТРОЙКИ И РАЗРЕЖЕННОСТИ
# ============================================================================

def _check_sizes(n: float, p: float, t: float) -> None:
    if not n >= 1:
        raise ValidationError(f"Требуется n >= 1, получено {n}")
    if not p >= 2:
        raise ValidationError(f"Требуется p >= 2, получено {p}")
    if math.isnan(t) or t < 0:
        raise ValidationError(f"Требуется t >= 0, получено {t}")


def default_t(n: int) -> float:
    """t = log n: тогда alpha(t) порядка 1/n."""
    return math.log(n) if n > 1 else 1.0


def tuning_levels(constants: TheoryConstants, n: float, p: float, t: float) -> TuningLevels:
    """
    lambda_eps(t) = C_hX sigma sqrt(2(t + log p)/n),
    lambda_0(t) = L_hX sigma sqrt(2(t + 2 log p)/n),
    lambda_eps_robust(t) = 16 K_X sqrt(2(t + log p)/n),
    alpha_oracle = 3 e^{-t} + 3 kappa^4/(n sigma^4), alpha_robust = 3 e^{-t},
    alpha_select = 9 e^{-t} + 9 kappa^4/(n sigma^4).
    """
    _check_sizes(n, p, t)
    log_p = math.log(p)
    root = math.sqrt(2.0 * (t + log_p) / n)
    root_0 = math.sqrt(2.0 * (t + 2.0 * log_p) / n)
    sigma = constants.sigma
    C_hX, L_hX = constants.C_hX, constants.L_hX
    moment = constants.kappa ** 4 / (n * sigma ** 4)
    tail = math.exp(-t)
    return TuningLevels(
        lambda_eps=None if C_hX is None else C_hX * sigma * root,
        lambda_0=None if L_hX is None else L_hX * sigma * root_0,
        lambda_eps_robust=16.0 * constants.K_X * root,
        alpha_oracle=3.0 * tail + 3.0 * moment,
        alpha_robust=3.0 * tail,
        alpha_select=9.0 * tail + 9.0 * moment,
    )


def scaled_sparsities(constants: TheoryConstants, gamma_eff: float) -> ScaledSparsities:
    """Gamma = Gamma_eps = 16 C_hV Gamma_eff, Gamma_0 = 6 L_hV C_hV^2 Gamma_eff, Gamma_robust = 16 C_l Gamma_eff."""
    gamma_eff = _finite('gamma_eff', gamma_eff, positive=True)
    C_hV, L_hV = constants.C_hV, constants.L_hV
    Gamma = None if C_hV is None else 16.0 * C_hV * gamma_eff
    return ScaledSparsities(
        Gamma=Gamma,
        Gamma_eps=Gamma,
        Gamma_0=None if L_hV is None else 6.0 * L_hV * C_hV ** 2 * gamma_eff,
        Gamma_robust=None if constants.C_l is None else 16.0 * constants.C_l * gamma_eff,
    )


# ============================================================================
# ПРЕДПОСЫЛКИ
# ============================================================================

def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + RELATIVE_TOLERANCE * max(abs(lhs), abs(rhs), 1e-300)


def _entry(name: str, lhs: float, rhs: float) -> Precondition:
    return Precondition(name=name, lhs=float(lhs), rhs=float(rhs), satisfied=_leq(lhs, rhs))


def _range_entry(name: str, lower: float, value: float, upper: float) -> Precondition:
    return Precondition(
        name=name, lhs=float(value), rhs=float(upper), lower=float(lower),
        satisfied=_leq(lower, value) and _leq(value, upper),
    )


def gamma_budget(lambda_eps: float, lambda_: float) -> Dict[str, float]:
    """
    gamma_1 = lambda_eps/lambda, gamma_eps = gamma_0 = (1 - gamma_1)/3,
    gamma = gamma_eps + gamma_0 + gamma_1.
    """
    gamma_1 = lambda_eps / lambda_
    share = (1.0 - gamma_1) / 3.0
    return {
        'gamma_1': gamma_1,
        'gamma_eps': share,
        'gamma_0': share,
        'gamma': gamma_1 + 2.0 * share,
    }


def check_preconditions(
    constants: TheoryConstants,
    n: float,
    p: float,
    t: float,
    lambda_: float,
    gamma_eff: float,
    theta: Optional[float] = None,
    lambda_X: Optional[float] = None,
    gamma_X: float = DEFAULT_GAMMA_X,
) -> List[Precondition]:
    """
    Проверяет предпосылки оракульных теорем и теоремы отбора.

    Пункты, для которых не хватает данных (константы квазиправдоподобия,
    C_l, theta, lambda_X), пропускаются.

    Returns:
        Список Precondition в фиксированном порядке: (s0), lambda-range,
        (s02), lambda-range-robust, (s0-select), (s03), (s04),
        theta-threshold, (s05)
    """
    if not (math.isfinite(lambda_) and lambda_ > 0):
        raise ValidationError(f"Требуется lambda > 0, получено {lambda_}")
    levels = tuning_levels(constants, n, p, t)
    sparsity = scaled_sparsities(constants, gamma_eff)
    entries: List[Precondition] = []

    lam_eps, Gamma = levels.lambda_eps, sparsity.Gamma
    if lam_eps is not None and Gamma is not None:
        entries.append(_entry('(s0)', lam_eps * Gamma, S0_LIMIT))
        entries.append(_range_entry('lambda-range', 4.0 * lam_eps, lambda_, 1.0 / Gamma))

    if sparsity.Gamma_robust is not None:
        lam_r, Gamma_r = levels.lambda_eps_robust, sparsity.Gamma_robust
        entries.append(_entry('(s02)', lam_r * Gamma_r, S0_LIMIT))
        entries.append(_range_entry('lambda-range-robust', 4.0 * lam_r, lambda_, 1.0 / Gamma_r))

    if lam_eps is not None and Gamma is not None:
        budget = gamma_budget(lam_eps, lambda_)
        # lambda_eps Gamma_eps <= gamma_1 <= 1/4
        entries.append(_range_entry('(s0-select)', lam_eps * sparsity.Gamma_eps, budget['gamma_1'], S0_LIMIT))
        if sparsity.Gamma_0 is not None:
            entries.append(_entry('(s03)', lam_eps * sparsity.Gamma_0, budget['gamma_1'] * budget['gamma_eps']))
        if levels.lambda_0 is not None:
            entries.append(_entry('(s04)', levels.lambda_0 * sparsity.Gamma_eps, budget['gamma_0']))
        if theta is not None:
            gamma = budget['gamma']
            threshold = (1.0 - gamma) / (1.0 + gamma)
            entries.append(Precondition(
                name='theta-threshold', lhs=float(theta), rhs=threshold,
                satisfied=bool(theta < threshold),
            ))
        if lambda_X is not None:
            entries.append(_entry('(s05)', lambda_X * Gamma, gamma_X))

    failed = [e.name for e in entries if not e.satisfied]
    logger.debug(f"Предпосылки: проверено {len(entries)}, нарушены {failed}")
    return entries


# ============================================================================
# ОРАКУЛЬНЫЕ ГРАНИЦЫ
# ============================================================================

def oracle_bounds(
    kind: BoundKind,
    constants: TheoryConstants,
    lambda_: float,
    gamma_eff: float,
    lambda_X: Optional[float] = None,
) -> OracleBound:
    """
    Правые части оракульных неравенств.

    thm1 (квадратичная потеря ||Y - X b||_n^2):
        ||f - f0||_n^2 + lambda ||b - b0||_1 <= 4 lambda^2 Gamma_eff
    thm2: ||b - b0||_1 <= lambda Gamma / 2,  ||f - f0||_n^2 <= 3/4 C_hV lambda^2 Gamma
    thm4: ||b - b0||_1 <= lambda Gamma_robust / 2,  ||f - f0||_n^2 <= 3/4 C_l lambda^2 Gamma_robust
    random_design: (b - b0)^T Sigma^ (b - b0) <= 6 C_hV^3 lambda^2 Gamma_eff и, при
        заданном lambda_X, ||(Sigma^ - Sigma)(b - b0)||_inf <= lambda lambda_X Gamma / 2
    """
    if kind not in BOUND_KINDS:
        raise ValidationError(f"Неизвестный вид границы: {kind}. Доступные: {list(BOUND_KINDS)}")
    lam = _finite('lambda', lambda_)
    gamma_eff = _finite('gamma_eff', gamma_eff, positive=True)

    if kind == 'thm1':
        combined = 4.0 * lam ** 2 * gamma_eff
        return OracleBound(kind=kind, ell1_bound=4.0 * lam * gamma_eff,
                           prediction_bound=combined, combined_bound=combined)

    sparsity = scaled_sparsities(constants, gamma_eff)
    if kind == 'thm4':
        if constants.C_l is None:
            raise ValidationError("Граница для робастной потери требует константу C_l")
        Gamma_r = sparsity.Gamma_robust
        return OracleBound(kind=kind, ell1_bound=lam * Gamma_r / 2.0,
                           prediction_bound=0.75 * constants.C_l * lam ** 2 * Gamma_r)

    if sparsity.Gamma is None:
        raise ValidationError(f"Граница {kind} требует константы C_h и C_V")
    C_hV, Gamma = constants.C_hV, sparsity.Gamma
    if kind == 'thm2':
        return OracleBound(kind=kind, ell1_bound=lam * Gamma / 2.0,
                           prediction_bound=0.75 * C_hV * lam ** 2 * Gamma)
    sup_bound = None if lambda_X is None else lam * _finite('lambda_X', lambda_X) * Gamma / 2.0
    return OracleBound(kind=kind, ell1_bound=lam * Gamma / 2.0,
                       prediction_bound=6.0 * C_hV ** 3 * lam ** 2 * gamma_eff,
                       sup_bound=sup_bound)


def true_positive_lower_bound(beta0: Any, ell1_error: float, lambda_: float, eta: float) -> float:
    """
    Нижняя граница числа верно отобранных переменных среди |b0_j| >= lambda/eta:
    #{|b0_j| >= lambda/eta} - eta ||b^ - b0||_1 / lambda.
    """
    if not (lambda_ > 0 and eta > 0):
        raise ValidationError("Требуются lambda > 0 и eta > 0")
    beta0 = np.asarray(beta0, dtype=float)
    strong = int(np.sum(np.abs(beta0) >= lambda_ / eta))
    return strong - eta * float(ell1_error) / lambda_


# ============================================================================
# МОМЕНТЫ ОШИБОК
# ============================================================================

def estimate_error_moments(residuals: Any, groups: Optional[Sequence[Any]] = None) -> ErrorMoments:
    """
    Эмпирические заменители констант sigma и kappa.

    sigma_hat^2 - максимум средних квадратов по группам однородности
    (по умолчанию одна общая группа), kappa_hat^4 - среднее
    (eps_i^2 - mean eps^2)^2.
    """
    eps = np.asarray(residuals, dtype=float).ravel()
    if eps.size < 2:
        raise ValidationError(f"Нужно не менее двух остатков, получено {eps.size}")
    if not np.all(np.isfinite(eps)):
        raise ValidationError("Остатки содержат нечисловые значения")
    squares = eps ** 2
    if groups is None:
        labels = np.zeros(eps.size, dtype=int)
    else:
        labels = np.asarray(groups)
        if labels.shape != eps.shape:
            raise ValidationError(f"Длина групп {labels.shape} не совпадает с числом остатков {eps.shape}")
    unique = np.unique(labels)
    sigma_sq = max(float(np.mean(squares[labels == g])) for g in unique)
    kappa4 = float(np.mean((squares - np.mean(squares)) ** 2))
    return ErrorMoments(sigma_hat=math.sqrt(sigma_sq), kappa_hat=kappa4 ** 0.25, groups=int(unique.size))


# ============================================================================
# ОТЧЕТ
# ============================================================================

@dataclass(frozen=True)
class CalibrationInputs:
    """Входные данные отчета: константы, размеры задачи, lambda и характеристики плана."""
    constants: TheoryConstants
    n: int
    p: int
    lambda_: float
    gamma_eff: float
    t: Optional[float] = None
    theta: Optional[float] = None
    lambda_X: Optional[float] = None
    gamma_X: float = DEFAULT_GAMMA_X

    def __post_init__(self):
        if self.t is None:
            object.__setattr__(self, 't', default_t(self.n))
        _check_sizes(self.n, self.p, self.t)
        if not (math.isfinite(self.lambda_) and self.lambda_ > 0):
            raise ValidationError(f"Требуется lambda > 0, получено {self.lambda_}")
        _finite('gamma_eff', self.gamma_eff, positive=True)
        _finite('gamma_X', self.gamma_X, positive=True)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['lambda'] = data.pop('lambda_')
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CalibrationInputs':
        data = dict(data)
        if 'lambda' in data:
            data['lambda_'] = data.pop('lambda')
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"Неизвестные поля калибровки: {sorted(unknown)}")
        constants = data.pop('constants', {})
        if not isinstance(constants, TheoryConstants):
            constants = TheoryConstants.from_dict(constants)
        return cls(constants=constants, **data)


@dataclass(frozen=True)
class BoundReport:
    """Уровни настройки, разреженности, границы и таблица предпосылок."""
    inputs: CalibrationInputs
    levels: TuningLevels
    sparsities: ScaledSparsities
    bounds: Dict[str, OracleBound]
    preconditions: List[Precondition] = field(default_factory=list)

    @property
    def lambda_eps(self) -> Optional[float]:
        return self.levels.lambda_eps

    @property
    def lambda_0(self) -> Optional[float]:
        return self.levels.lambda_0

    @property
    def ell1_bound(self) -> Optional[float]:
        main = self._main_bound()
        return None if main is None else main.ell1_bound

    @property
    def prediction_bound(self) -> Optional[float]:
        main = self._main_bound()
        return None if main is None else main.prediction_bound

    def _main_bound(self) -> Optional[OracleBound]:
        for kind in ('thm2', 'thm4'):
            if kind in self.bounds:
                return self.bounds[kind]
        return None

    @property
    def all_satisfied(self) -> bool:
        return all(entry.satisfied for entry in self.preconditions)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'inputs': self.inputs.to_dict(),
            'derived_constants': self.inputs.constants.derived(),
            'L_hX_definition': L_HX_NOTE,
            **self.levels.to_dict(),
            **self.sparsities.to_dict(),
            'ell1_bound': self.ell1_bound,
            'prediction_bound': self.prediction_bound,
            'bounds': {kind: bound.to_dict() for kind, bound in self.bounds.items()},
            'preconditions': [entry.to_dict() for entry in self.preconditions],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BoundReport':
        levels = TuningLevels(**{k: data[k] for k in TuningLevels.__dataclass_fields__})
        sparsities = ScaledSparsities(**{k: data[k] for k in ScaledSparsities.__dataclass_fields__})
        return cls(
            inputs=CalibrationInputs.from_dict(data['inputs']),
            levels=levels,
            sparsities=sparsities,
            bounds={kind: OracleBound(**bound) for kind, bound in data.get('bounds', {}).items()},
            preconditions=[Precondition.from_dict(entry) for entry in data.get('preconditions', [])],
        )


def calibrate(inputs: CalibrationInputs) -> BoundReport:
    """Собирает полный отчет для заданных констант и lambda."""
    c = inputs.constants
    levels = tuning_levels(c, inputs.n, inputs.p, inputs.t)
    sparsities = scaled_sparsities(c, inputs.gamma_eff)
    bounds: Dict[str, OracleBound] = {}
    if c.is_quasi:
        bounds['thm2'] = oracle_bounds('thm2', c, inputs.lambda_, inputs.gamma_eff)
        bounds['random_design'] = oracle_bounds('random_design', c, inputs.lambda_,
                                                inputs.gamma_eff, inputs.lambda_X)
    if c.C_l is not None:
        bounds['thm4'] = oracle_bounds('thm4', c, inputs.lambda_, inputs.gamma_eff)
    preconditions = check_preconditions(
        c, inputs.n, inputs.p, inputs.t, inputs.lambda_, inputs.gamma_eff,
        theta=inputs.theta, lambda_X=inputs.lambda_X, gamma_X=inputs.gamma_X,
    )
    report = BoundReport(inputs=inputs, levels=levels, sparsities=sparsities,
                         bounds=bounds, preconditions=preconditions)
    passed = sum(entry.satisfied for entry in preconditions)
    logger.info(f"Калибровка: lambda={inputs.lambda_:.4g}, t={inputs.t:.4g}, "
                f"предпосылки выполнены {passed}/{len(preconditions)}")
    return report


def precondition_table(preconditions: Sequence[Precondition]) -> str:
    """Текстовая таблица PASS/FAIL по предпосылкам."""
    lines = [f"{'Условие':<22} {'Левая часть':>14} {'Правая часть':>14}  Итог"]
    lines.append("-" * len(lines[0]))
    for entry in preconditions:
        lhs = f"{entry.lhs:.6g}"
        if entry.lower is not None:
            lhs = f"{entry.lower:.4g}<={lhs}"
        status = "PASS" if entry.satisfied else "FAIL"
        lines.append(f"{entry.name:<22} {lhs:>14} {entry.rhs:>14.6g}  {status}")
    return "\n".join(lines)

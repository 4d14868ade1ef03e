# -*- coding: utf-8 -*-
"""
Решатель l1-штрафованной задачи эмпирического риска

    min_b  (1/n) sum_i rho(Y_i, x_i^T b) + lambda ||b||_1

для любого выпуклого семейства потерь, сертификат ККТ, оракульная
(ограниченная на S) оценка и замкнутая форма для ортонормального плана.

Алгоритм: монотонный FISTA с поиском шага и адаптивным рестартом,
инициализация в нуле. Для негладких потерь (quantile, lad) - сглаживание
Моро-Иосиды с расписанием mu_k = mu_0 2^{-k}. Критерий остановки -
сертификат ККТ, а не стагнация целевой функции.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Callable, Dict, List, Optional, Tuple
import logging
import math

import numpy as np

from .exceptions import (
    ConvergenceError,
    DivergenceError,
    DomainError,
    NumericalError,
    ValidationError,
)
from .interfaces import DesignMatrix, IndexSet, Interval, LossFamily, QuasiFamily

logger = logging.getLogger(__name__)

CHECK_EVERY = 10
POLISH_EVERY = 25
NEWTON_MAX_ITERATIONS = 100
RESTRICTED_GRADIENT_TOLERANCE = 1e-8
MIN_STEP = 1e-30


@dataclass(frozen=True)
class SolverConfig:
    """
    Параметры решателя.

    Attributes:
        kkt_tolerance: Допуск сертификата ККТ в единицах lambda
        max_iterations: Предел итераций на один уровень сглаживания
        smoothing_start: mu_0 для негладких потерь
        smoothing_floor: Наименьший уровень сглаживания
        backtracking_factor: Множитель уменьшения шага
        polish: Уточнять решение методом Ньютона на активном множестве
        divergence_cap: Предел нормы коэффициентов оракульной оценки
        kink_tolerance: |y - z| ниже порога считается изломом
    """
    kkt_tolerance: float = 1e-6
    max_iterations: int = 20000
    smoothing_start: float = 1.0
    smoothing_floor: float = 1e-8
    backtracking_factor: float = 0.5
    polish: bool = True
    divergence_cap: float = 1e6
    kink_tolerance: float = 1e-7

    def __post_init__(self):
        if not self.kkt_tolerance > 0:
            raise ValidationError(f"kkt_tolerance должен быть > 0, получено {self.kkt_tolerance}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations должно быть >= 1, получено {self.max_iterations}")
        if not 0 < self.smoothing_floor <= self.smoothing_start:
            raise ValidationError("Требуется 0 < smoothing_floor <= smoothing_start")
        if not 0 < self.backtracking_factor < 1:
            raise ValidationError(f"backtracking_factor должен лежать в (0, 1), получено {self.backtracking_factor}")
        if not self.divergence_cap > 0:
            raise ValidationError("divergence_cap должен быть > 0")
        if self.kink_tolerance < 0:
            raise ValidationError("kink_tolerance должен быть >= 0")

    @property
    def smoothing_schedule(self) -> Tuple[float, ...]:
        """Убывающее расписание mu_0 2^{-k} до smoothing_floor включительно."""
        levels = []
        mu = self.smoothing_start
        while mu > self.smoothing_floor:
            levels.append(mu)
            mu /= 2.0
        levels.append(self.smoothing_floor)
        return tuple(levels)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolverConfig':
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"Неизвестные параметры решателя: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PenalizedProblem:
    """Задача: план, отклик, семейство потерь и lambda > 0."""
    design: DesignMatrix
    Y: np.ndarray
    family: LossFamily
    lambda_: float

    def __post_init__(self):
        design = self.design if isinstance(self.design, DesignMatrix) else DesignMatrix(self.design)
        object.__setattr__(self, 'design', design)
        Y = np.array(self.family.validate_response(self.Y), dtype=float)
        if Y.shape != (design.n,):
            raise ValidationError(f"Длина отклика {Y.shape} не совпадает с n={design.n}")
        Y.setflags(write=False)
        object.__setattr__(self, 'Y', Y)
        if not (math.isfinite(self.lambda_) and self.lambda_ > 0):
            raise ValidationError(f"Требуется lambda > 0, получено {self.lambda_}")

    def with_lambda(self, lambda_: float) -> 'PenalizedProblem':
        return PenalizedProblem(self.design, self.Y, self.family, lambda_)

    def risk(self, beta: np.ndarray) -> float:
        return float(np.mean(self.family.loss(self.Y, self.design.X @ beta)))

    def objective(self, beta: np.ndarray) -> float:
        return self.risk(beta) + self.lambda_ * float(np.sum(np.abs(beta)))


@dataclass(frozen=True, eq=False)
class FitResult:
    """Результат решения: коэффициенты, активное множество, сертификат ККТ."""
    beta_hat: np.ndarray
    active_set: IndexSet
    kkt_sup_violation: float
    sign_consistency_ok: bool
    iterations: int
    objective: float
    converged: bool = True
    history: Tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'beta': self.beta_hat.tolist(),
            'active_set': list(self.active_set.one_based),
            'kkt_sup_violation': self.kkt_sup_violation,
            'sign_consistency_ok': self.sign_consistency_ok,
            'iterations': self.iterations,
            'objective': self.objective,
            'converged': self.converged,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FitResult':
        beta = np.asarray(data['beta'], dtype=float)
        return cls(
            beta_hat=beta,
            active_set=IndexSet.from_one_based(data['active_set']),
            kkt_sup_violation=float(data['kkt_sup_violation']),
            sign_consistency_ok=bool(data['sign_consistency_ok']),
            iterations=int(data['iterations']),
            objective=float(data['objective']),
            converged=bool(data.get('converged', True)),
        )


# ============================================================================
# ГРАДИЕНТ И СЕРТИФИКАТ
# ============================================================================

LossFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _loss_parts(family: LossFamily, mu: Optional[float]) -> Tuple[LossFn, LossFn]:
    if mu is None:
        return family.loss, family.derivative
    return (lambda y, z: family.smoothed_loss(y, z, mu),
            lambda y, z: family.smoothed_derivative(y, z, mu))


def _gradient_interval(X: np.ndarray, Y: np.ndarray, family: LossFamily, beta: np.ndarray,
                       kink_tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Центр и полуширина множества субградиентов эмпирического риска по координатам."""
    n = X.shape[0]
    z = X @ beta
    lower, upper = (np.asarray(v, dtype=float) for v in family.subgradient_bounds(Y, z, kink_tol))
    center = X.T @ ((upper + lower) / 2.0) / n
    half = np.abs(X).T @ ((upper - lower) / 2.0) / n
    return center, half


def _stationarity(center: np.ndarray, half: np.ndarray, beta: np.ndarray,
                  lambda_: float) -> Tuple[float, float]:
    """
    Нарушения условий ККТ в единицах градиента:
    box - расстояние интервала до [-lambda, lambda] по всем координатам,
    sign - расстояние -lambda sign(b_j) до интервала на активном множестве.
    """
    lo, hi = center - half, center + half
    box = np.maximum(0.0, np.maximum(lo - lambda_, -lambda_ - hi))
    active = beta != 0
    target = -lambda_ * np.sign(beta[active])
    sign = np.maximum(0.0, np.maximum(lo[active] - target, target - hi[active]))
    return (float(np.max(box)) if box.size else 0.0,
            float(np.max(sign)) if sign.size else 0.0)


def kkt_residual(problem: PenalizedProblem, beta: Any,
                 tol: float = 1e-6, kink_tol: float = 1e-7) -> Tuple[np.ndarray, float, bool]:
    """
    Сертификат ККТ: tau = -grad R_n(b) / lambda.

    Для негладких потерь используется середина субдифференциала, а
    сертификат расширяется на полуширину субдифференциала по наблюдениям
    в изломе.

    Returns:
        (tau, sup_violation = max(0, ||tau||_inf - 1), sign_ok)
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (problem.design.p,) or not np.all(np.isfinite(beta)):
        raise ValidationError(f"beta должен быть конечным вектором длины {problem.design.p}")
    lam = problem.lambda_
    if lam == 0:
        raise ValidationError("Сертификат ККТ не определен при lambda = 0")
    center, half = _gradient_interval(problem.design.X, problem.Y, problem.family, beta, kink_tol)
    box, sign = _stationarity(center, half, beta, lam)
    tau = -center / lam
    return tau, box / lam, bool(sign / lam <= tol)


def lambda_max(design: DesignMatrix, Y: Any, family: LossFamily) -> float:
    """Наименьшее lambda с нулевым решением: max_j |grad_j R_n(0)|."""
    design = design if isinstance(design, DesignMatrix) else DesignMatrix(design)
    Y = family.validate_response(Y)
    center, half = _gradient_interval(design.X, Y, family, np.zeros(design.p), 0.0)
    return float(np.max(np.maximum(np.abs(center) - half, 0.0)))


# ============================================================================
# ПРОКСИМАЛЬНЫЙ ГРАДИЕНТ
# ============================================================================

@dataclass
class _RunState:
    beta: np.ndarray
    objective: float
    iterations: int = 0
    step: float = 1.0
    converged: bool = False
    history: List[float] = field(default_factory=list)


def _soft(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def _smooth_value(X, Y, lossf, beta) -> float:
    return float(np.mean(lossf(Y, X @ beta)))


def _newton_on_support(
    X: np.ndarray,
    Y: np.ndarray,
    family: LossFamily,
    beta: np.ndarray,
    lambda_: float,
    support: np.ndarray,
    signs: np.ndarray,
    gtol: float,
    cap: float,
) -> Optional[np.ndarray]:
    """
    Метод Ньютона (скоринг Фишера) для min R_n(b) + lambda s^T b_A при b_{A^c} = 0.
    Возвращает None, если метод вышел за пределы грани или не сошелся.
    """
    n = X.shape[0]
    XA = X[:, support]
    b = beta[support].copy()

    def phi(v: np.ndarray) -> float:
        return float(np.mean(family.loss(Y, XA @ v))) + lambda_ * float(signs @ v)

    try:
        current = phi(b)
        for _ in range(NEWTON_MAX_ITERATIONS):
            z = XA @ b
            grad = XA.T @ family.derivative(Y, z) / n + lambda_ * signs
            if float(np.max(np.abs(grad))) <= gtol:
                break
            weights = np.asarray(family.curvature(Y, z), dtype=float)
            hess = (XA * weights[:, None]).T @ XA / n
            direction = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            slope = float(grad @ direction)
            if slope >= 0:
                direction, slope = -grad, -float(grad @ grad)
            t = 1.0
            while t > 1e-12:
                candidate = b + t * direction
                value = phi(candidate)
                if value <= current + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                return None
            b, current = candidate, value
            if float(np.max(np.abs(b))) > cap:
                return None
        else:
            return None
    except (DomainError, np.linalg.LinAlgError):
        return None
    if np.any(np.sign(b) != signs):
        return None
    out = np.zeros_like(beta)
    out[support] = b
    return out


class _ProximalSolver:
    """Монотонный FISTA для min f(b) + lambda ||b||_1 на матрице X."""

    def __init__(self, X: np.ndarray, Y: np.ndarray, family: LossFamily,
                 lambda_: float, config: SolverConfig):
        self.X = X
        self.Y = Y
        self.family = family
        self.lambda_ = lambda_
        self.config = config
        self.n = X.shape[0]
        top = float(np.linalg.norm(X, 2)) ** 2 / self.n
        self.initial_step = 1.0 / top if top > 0 else 1.0

    def certificate(self, beta: np.ndarray, mu: Optional[float], kink_tol: float) -> Tuple[float, float]:
        if mu is None:
            center, half = _gradient_interval(self.X, self.Y, self.family, beta, kink_tol)
        else:
            center = self.X.T @ self.family.smoothed_derivative(self.Y, self.X @ beta, mu) / self.n
            half = np.zeros_like(center)
        return _stationarity(center, half, beta, self.lambda_)

    def satisfied(self, beta: np.ndarray, mu: Optional[float], gtol: float) -> bool:
        box, sign = self.certificate(beta, mu, self.config.kink_tolerance)
        return box <= gtol and sign <= gtol

    def run(self, state: _RunState, mu: Optional[float], gtol: float) -> _RunState:
        lossf, derivf = _loss_parts(self.family, mu)
        X, Y, lam, n = self.X, self.Y, self.lambda_, self.n
        factor = self.config.backtracking_factor

        def f(beta: np.ndarray) -> float:
            return _smooth_value(X, Y, lossf, beta)

        def F(beta: np.ndarray) -> float:
            return f(beta) + lam * float(np.sum(np.abs(beta)))

        x = state.beta
        Fx = F(x)
        if self.satisfied(x, mu, gtol):
            state.beta, state.objective, state.converged = x, Fx, True
            return state
        y = x.copy()
        t_mom = 1.0
        step = state.step
        restarted = True
        for k in range(1, self.config.max_iterations + 1):
            state.iterations += 1
            try:
                fy = f(y)
                gy = X.T @ derivf(Y, X @ y) / n
            except DomainError:
                y, t_mom, restarted = x.copy(), 1.0, True
                fy = f(y)
                gy = X.T @ derivf(Y, X @ y) / n

            # поиск шага по квадратичной мажоранте
            while True:
                x_new = _soft(y - step * gy, step * lam)
                d = x_new - y
                try:
                    f_new = f(x_new)
                    ok = f_new <= fy + float(gy @ d) + float(d @ d) / (2.0 * step) + 1e-14 * max(1.0, abs(fy))
                except DomainError:
                    ok = False
                if ok:
                    break
                step *= factor
                if step < MIN_STEP:
                    logger.warning("Шаг стал пренебрежимо мал: допустимая точка не найдена")
                    state.beta, state.objective, state.step = x, Fx, step
                    return state

            F_new = f_new + lam * float(np.sum(np.abs(x_new)))
            if F_new > Fx:
                if restarted:
                    logger.debug(f"Целевая функция не убывает на итерации {state.iterations}: останов")
                    break
                # рестарт импульса: шаг из x без экстраполяции
                y, t_mom, restarted = x.copy(), 1.0, True
                continue
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = x_new + ((t_mom - 1.0) / t_next) * (x_new - x)
            x, Fx, t_mom = x_new, F_new, t_next
            restarted = False
            state.history.append(Fx)

            if k % CHECK_EVERY == 0 and self.satisfied(x, mu, gtol):
                state.converged = True
                break
            if (mu is None and self.config.polish and self.family.is_smooth
                    and k % POLISH_EVERY == 0 and np.any(x != 0)):
                polished = self._polish(x, gtol)
                if polished is not None:
                    F_pol = F(polished)
                    if F_pol <= Fx + 1e-12 * max(1.0, abs(Fx)):
                        x, Fx = polished, F_pol
                        state.history.append(Fx)
                        state.converged = True
                        break
        state.beta, state.objective, state.step = x, Fx, step
        return state

    def _polish(self, beta: np.ndarray, gtol: float) -> Optional[np.ndarray]:
        support = np.flatnonzero(beta)
        candidate = _newton_on_support(
            self.X, self.Y, self.family, beta, self.lambda_, support,
            np.sign(beta[support]), gtol * 1e-2, self.config.divergence_cap,
        )
        if candidate is not None and self.satisfied(candidate, None, gtol):
            return candidate
        return None


def _solve(X: np.ndarray, Y: np.ndarray, family: LossFamily, lambda_: float,
           config: SolverConfig, gtol: float, beta0: Optional[np.ndarray] = None) -> _RunState:
    solver = _ProximalSolver(X, Y, family, lambda_, config)
    beta = np.zeros(X.shape[1]) if beta0 is None else beta0.copy()
    state = _RunState(beta=beta, objective=math.nan, step=solver.initial_step)
    if family.is_smooth:
        return solver.run(state, None, gtol)

    for mu in config.smoothing_schedule:
        state.converged = False
        state.step = max(state.step, solver.initial_step * mu)
        state = solver.run(state, mu, gtol)
        logger.debug(f"Уровень сглаживания mu={mu:.1e}: итераций {state.iterations}")
        if solver.satisfied(state.beta, None, gtol):
            state.converged = True
            break
    else:
        state.converged = solver.satisfied(state.beta, None, gtol)
    # значение исходной (несглаженной) целевой функции
    state.objective = float(np.mean(family.loss(Y, X @ state.beta))) + lambda_ * float(np.sum(np.abs(state.beta)))
    return state


def fit(problem: PenalizedProblem, config: Optional[SolverConfig] = None) -> FitResult:
    """
    Решает l1-штрафованную задачу.

    Returns:
        FitResult с сертификатом ККТ, пересчитанным через kkt_residual.
        При исчерпании итераций возвращается лучшая точка с converged=False.
    """
    config = config or SolverConfig()
    lam = problem.lambda_
    state = _solve(problem.design.X, problem.Y, problem.family, lam, config,
                   gtol=config.kkt_tolerance * lam)
    beta = state.beta
    _, sup_violation, sign_ok = kkt_residual(problem, beta, config.kkt_tolerance, config.kink_tolerance)
    if not state.converged:
        logger.warning(
            f"Решатель не сошелся за {state.iterations} итераций "
            f"(нарушение ККТ {sup_violation:.2e}); возвращена лучшая точка"
        )
    active = IndexSet.support(beta)
    logger.debug(f"fit: lambda={lam:.4g}, |S^|={active.s}, итераций {state.iterations}")
    return FitResult(
        beta_hat=beta,
        active_set=active,
        kkt_sup_violation=sup_violation,
        sign_consistency_ok=sign_ok,
        iterations=state.iterations,
        objective=state.objective,
        converged=state.converged,
        history=tuple(state.history),
    )


# ============================================================================
# ОРАКУЛЬНАЯ ОЦЕНКА И ЗАМКНУТЫЕ ФОРМЫ
# ============================================================================

def restricted_fit(problem: PenalizedProblem, S: IndexSet,
                   config: Optional[SolverConfig] = None) -> np.ndarray:
    """
    Минимизирует нештрафованный эмпирический риск при b_{S^c} = 0.

    Raises:
        DivergenceError: Норма коэффициентов превысила предел (разделимые данные)
        ConvergenceError: Гладкий метод не достиг ||grad||_inf <= 1e-8
    """
    config = config or SolverConfig()
    design, family = problem.design, problem.family
    S = S.validate(design.p)
    beta = np.zeros(design.p)
    if S.s == 0:
        return beta
    if S.s > design.n:
        logger.warning(f"|S| = {S.s} > n = {design.n}: минимум может быть неединственным")
    idx = list(S.indices)
    XS = design.X[:, idx]
    Y = problem.Y

    if family.kind == 'gaussian':
        beta[idx] = np.linalg.lstsq(XS, Y, rcond=None)[0]
        return beta

    if family.is_smooth:
        b = _restricted_newton(XS, Y, family, config.divergence_cap)
        beta[idx] = b
        return beta

    state = _solve(XS, Y, family, 0.0, config, gtol=RESTRICTED_GRADIENT_TOLERANCE)
    if not state.converged:
        logger.warning("Оракульная оценка для негладкой потери: стационарность не достигнута до 1e-8")
    beta[idx] = state.beta
    return beta


def _separates(family: LossFamily, Y: np.ndarray, z: np.ndarray) -> bool:
    """Строгое разделение бинарного отклика знаком предиктора."""
    if not isinstance(family, QuasiFamily) or family.mean_domain != Interval(0.0, 1.0):
        return False
    if not np.all((Y == 0) | (Y == 1)):
        return False
    return bool(np.all((2.0 * Y - 1.0) * z > 0))


def _restricted_newton(XS: np.ndarray, Y: np.ndarray, family: LossFamily, cap: float) -> np.ndarray:
    n = XS.shape[0]
    b = np.zeros(XS.shape[1])

    def risk(v: np.ndarray) -> float:
        return float(np.mean(family.loss(Y, XS @ v)))

    current = risk(b)
    for it in range(NEWTON_MAX_ITERATIONS * 2):
        z = XS @ b
        grad = XS.T @ family.derivative(Y, z) / n
        if float(np.max(np.abs(grad))) <= RESTRICTED_GRADIENT_TOLERANCE:
            if _separates(family, Y, z):
                raise DivergenceError(
                    "Линейный предиктор на S разделяет бинарный отклик: "
                    "минимум риска не достигается (разделимые данные)"
                )
            logger.debug(f"Оракульная оценка: {it} шагов Ньютона")
            return b
        weights = np.asarray(family.curvature(Y, z), dtype=float)
        hess = (XS * weights[:, None]).T @ XS / n
        direction = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        slope = float(grad @ direction)
        if slope >= 0:
            direction, slope = -grad, -float(grad @ grad)
        t = 1.0
        while True:
            candidate = b + t * direction
            try:
                value = risk(candidate)
            except DomainError:
                value = math.inf
            if value <= current + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        b, current = candidate, value
        if float(np.max(np.abs(b))) > cap:
            raise DivergenceError(
                f"Норма оракульной оценки превысила {cap:.0e}: "
                f"минимум не существует (вероятно, разделимые данные)"
            )
    raise ConvergenceError("Оракульная оценка: метод Ньютона не достиг ||grad||_inf <= 1e-8")


def soft_threshold_fit(X: Any, Y: Any, lambda_: float) -> np.ndarray:
    """
    Оценка Лассо для ортонормального плана (X^T X / n = I) и целевой
    функции ||Y - X b||_n^2 + lambda ||b||_1:
    b_j = sign(z_j) max(|z_j| - lambda/2, 0), z = X^T Y / n.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.shape != (X.shape[0],):
        raise ValidationError(f"Несовместимые размерности X {X.shape} и Y {Y.shape}")
    if lambda_ < 0:
        raise ValidationError(f"Требуется lambda >= 0, получено {lambda_}")
    n, p = X.shape
    deviation = float(np.max(np.abs(X.T @ X / n - np.eye(p))))
    if deviation > 1e-8:
        raise ValidationError(f"План не ортонормален: max |X^T X / n - I| = {deviation:.2e}")
    z = X.T @ Y / n
    return np.sign(z) * np.maximum(np.abs(z) - lambda_ / 2.0, 0.0)


def solve_path(problem: PenalizedProblem, lambdas: Any,
               config: Optional[SolverConfig] = None) -> List[FitResult]:
    """Последовательность решений на сетке lambda (для проверок монотонности)."""
    results = []
    for lam in lambdas:
        try:
            results.append(fit(problem.with_lambda(float(lam)), config))
        except NumericalError as e:
            logger.error(f"Ошибка решения при lambda={lam}: {e}")
            raise
    return results

# -*- coding: utf-8 -*-
"""
Диагностика плана: константа совместимости, ограниченное собственное
число, эффективная разреженность, взвешенная матрица Грама, константа
непредставимости и sup-расстояние между матрицами Грама.

Все функции принимают как DesignMatrix (эмпирическая матрица X^T X / n),
так и, в вариантах *_from_gram, произвольную неотрицательно определенную
матрицу Sigma (популяционная постановка).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy import linalg

from .exceptions import CompatibilityError, SingularMatrixError, ValidationError
from .interfaces import CompatibilityMethod, DesignMatrix, IndexSet, QuasiFamily
from .qp import DEFAULT_GAP_TOLERANCE, PatternQP, PatternQPResult

logger = logging.getLogger(__name__)

DEFAULT_L = 3.0
DEFAULT_S_MAX = 12
DEFAULT_RESTARTS = 50
PHI_SQ_ZERO_TOLERANCE = 1e-9
RCOND_LIMIT = 1e-12
RE_MAX_ROUNDS = 50

DesignLike = Union[DesignMatrix, np.ndarray]


def as_design(X: DesignLike) -> DesignMatrix:
    return X if isinstance(X, DesignMatrix) else DesignMatrix(np.asarray(X, dtype=float))


def _as_index_set(S: Union[IndexSet, Sequence[int]], p: int) -> IndexSet:
    S = S if isinstance(S, IndexSet) else IndexSet.of(S)
    return S.validate(p)


def _check_gram(Sigma: Any) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise ValidationError(f"Матрица Грама должна быть квадратной, получено {Sigma.shape}")
    if not np.all(np.isfinite(Sigma)):
        raise ValidationError("Матрица Грама содержит нечисловые значения")
    return (Sigma + Sigma.T) / 2


@dataclass(frozen=True)
class CompatibilityResult:
    """Результат вычисления phi^2(L, S)."""
    phi_sq: float
    minimizer: np.ndarray
    method: CompatibilityMethod
    certificate_gap: float
    S: IndexSet
    L: float
    patterns_evaluated: int
    fallback: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'quantity': 'phi_sq',
            'set': list(self.S.one_based),
            'L': self.L,
            'value': self.phi_sq,
            'method': self.method,
            'certificate_gap': self.certificate_gap,
            'patterns_evaluated': self.patterns_evaluated,
            'fallback': self.fallback,
            'minimizer': self.minimizer.tolist(),
        }


@dataclass(frozen=True)
class WeightedGram:
    """Взвешенная матрица Грама X^T W^2 X / n."""
    Sigma: np.ndarray
    weights: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SelectionCheck:
    """Проверка условий ККТ, из которых следует отсутствие ложных включений."""
    v: np.ndarray
    bound_ok: bool
    sign_ok: bool

    @property
    def holds(self) -> bool:
        return self.bound_ok and self.sign_ok


# ============================================================================
# КОНСТАНТА СОВМЕСТИМОСТИ
# ============================================================================

def _sign_patterns(s: int) -> List[np.ndarray]:
    """Наборы знаков с первым знаком +1 (b и -b дают одно значение)."""
    return [np.array((1.0,) + rest) for rest in product((1.0, -1.0), repeat=s - 1)]


def _solve_patterns(
    Sigma: np.ndarray,
    S: np.ndarray,
    patterns: List[np.ndarray],
    L: float,
    workers: int,
) -> List[PatternQPResult]:
    def run(signs: np.ndarray) -> PatternQPResult:
        return PatternQP(Sigma, S, signs, L).solve()

    if workers > 1 and len(patterns) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, patterns))
    return [run(signs) for signs in patterns]


def _best(results: List[PatternQPResult]) -> int:
    # первый минимум в порядке перебора: результат не зависит от потоков
    return int(np.argmin([r.value for r in results]))


def _projected_search(
    Sigma: np.ndarray,
    S: np.ndarray,
    L: float,
    restarts: int,
    seed: int,
    workers: int,
) -> Tuple[List[np.ndarray], List[PatternQPResult]]:
    """Случайные наборы знаков и жадные перевороты от лучшего из них."""
    s = S.size
    rng = np.random.default_rng(seed)
    seen: Dict[Tuple[float, ...], int] = {}
    patterns: List[np.ndarray] = []
    for _ in range(restarts):
        signs = np.concatenate([[1.0], rng.choice([1.0, -1.0], size=s - 1)])
        key = tuple(signs)
        if key not in seen:
            seen[key] = len(patterns)
            patterns.append(signs)
    results = _solve_patterns(Sigma, S, patterns, L, workers)

    best = _best(results)
    improved = True
    while improved:
        improved = False
        for j in range(1, s):
            signs = patterns[best].copy()
            signs[j] = -signs[j]
            key = tuple(signs)
            if key in seen:
                continue
            seen[key] = len(patterns)
            patterns.append(signs)
            results.append(PatternQP(Sigma, S, signs, L).solve())
            if results[-1].value < results[best].value:
                best = len(results) - 1
                improved = True
    logger.debug(f"Проекционный поиск: рассмотрено {len(patterns)} наборов знаков")
    return patterns, results


def _enumerate(
    Sigma: np.ndarray,
    S: IndexSet,
    L: float,
    s_max: int,
    method: Optional[CompatibilityMethod],
    restarts: int,
    seed: int,
    workers: int,
) -> Tuple[CompatibilityMethod, bool, List[np.ndarray], List[PatternQPResult]]:
    if S.s < 1:
        raise ValidationError("Множество S должно быть непустым")
    if not L > 0:
        raise ValidationError(f"Требуется L > 0, получено {L}")
    if restarts < 1:
        raise ValidationError(f"Число перезапусков должно быть >= 1, получено {restarts}")
    idx = np.asarray(S.indices, dtype=int)
    fallback = False
    if method is None or method == 'exact_qp_enumeration':
        if S.s > s_max:
            logger.warning(
                f"|S| = {S.s} > s_max = {s_max}: точный перебор заменен проекционным поиском "
                f"(результат с пониженной надежностью)"
            )
            method, fallback = 'projected_search', True
        else:
            method = 'exact_qp_enumeration'
    elif method != 'projected_search':
        raise ValidationError(f"Неизвестный метод: {method}")

    if method == 'exact_qp_enumeration':
        patterns = _sign_patterns(S.s)
        results = _solve_patterns(Sigma, idx, patterns, L, workers)
    else:
        patterns, results = _projected_search(Sigma, idx, L, restarts, seed, workers)
    return method, fallback, patterns, results


def compatibility_from_gram(
    Sigma: Any,
    S: Union[IndexSet, Sequence[int]],
    L: float = DEFAULT_L,
    s_max: int = DEFAULT_S_MAX,
    method: Optional[CompatibilityMethod] = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    workers: int = 1,
) -> CompatibilityResult:
    """
    phi^2(L, S) = min { s b^T Sigma b : ||b_S||_1 = 1, ||b_{S^c}||_1 <= L }.

    Для Sigma = X^T X / n совпадает с эмпирической константой
    совместимости; для популяционной Sigma дает ее аналог при случайном плане.

    Args:
        Sigma: Неотрицательно определенная p x p матрица
        S: Множество индексов (нумерация с нуля)
        L: Радиус конуса
        s_max: Порог точного перебора знаков
        method: exact_qp_enumeration, projected_search или None (автовыбор)
        restarts: Число случайных наборов знаков для поиска
        seed: Зерно генератора для поиска
        workers: Число потоков перебора
    """
    Sigma = _check_gram(Sigma)
    S = _as_index_set(S, Sigma.shape[0])
    method, fallback, patterns, results = _enumerate(Sigma, S, L, s_max, method, restarts, seed, workers)
    best = _best(results)
    minimizer = results[best].beta
    phi_sq = max(S.s * results[best].value, 0.0)
    gap = S.s * max(r.gap for r in results)
    if gap > DEFAULT_GAP_TOLERANCE * S.s:
        logger.warning(f"Сертификат phi^2 ослаблен: зазор {gap:.2e}")
    logger.info(f"phi^2({L:g}, S={list(S.one_based)}) = {phi_sq:.10g} [{method}, {len(patterns)} наборов]")
    return CompatibilityResult(
        phi_sq=phi_sq, minimizer=minimizer, method=method, certificate_gap=gap,
        S=S, L=float(L), patterns_evaluated=len(patterns), fallback=fallback,
    )


def compatibility_constant(
    X: DesignLike,
    S: Union[IndexSet, Sequence[int]],
    L: float = DEFAULT_L,
    s_max: int = DEFAULT_S_MAX,
    method: Optional[CompatibilityMethod] = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    workers: int = 1,
) -> CompatibilityResult:
    """Константа совместимости phi^2(L, S) плана X (||f_b||_n^2 = b^T X^T X b / n)."""
    design = as_design(X)
    return compatibility_from_gram(design.gram, S, L, s_max, method, restarts, seed, workers)


# ============================================================================
# ОГРАНИЧЕННОЕ СОБСТВЕННОЕ ЧИСЛО
# ============================================================================

def _re_refine(Sigma: np.ndarray, S: np.ndarray, signs: np.ndarray, L: float,
               start: np.ndarray) -> float:
    """
    Минимизация b^T Sigma b / ||b_S||_2^2 на грани знаков выпукло-вогнутой
    процедурой: вогнутый член линеаризуется в текущей точке, отношение
    монотонно не возрастает.
    """
    beta = start
    ratio = float(beta @ Sigma @ beta) / float(beta[S] @ beta[S])
    for _ in range(RE_MAX_ROUNDS):
        q = np.zeros_like(beta)
        q[S] = -2.0 * ratio * beta[S]
        beta_new = PatternQP(Sigma, S, signs, L, q=q).solve(x0=beta).beta
        new_ratio = float(beta_new @ Sigma @ beta_new) / float(beta_new[S] @ beta_new[S])
        if new_ratio >= ratio - 1e-13 * max(1.0, ratio):
            break
        beta, ratio = beta_new, new_ratio
    return max(ratio, 0.0)


def restricted_eigenvalue_from_gram(
    Sigma: Any,
    S: Union[IndexSet, Sequence[int]],
    L: float = DEFAULT_L,
    s_max: int = DEFAULT_S_MAX,
    method: Optional[CompatibilityMethod] = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """
    phi_RE^2(L, S) = min { b^T Sigma b / ||b_S||_2^2 : ||b_{S^c}||_1 <= L ||b_S||_1 }.

    Перебор знаков тот же, что для phi^2; каждая грань уточняется от
    минимизатора задачи совместимости, поэтому phi_RE^2 <= phi^2.
    """
    Sigma = _check_gram(Sigma)
    S = _as_index_set(S, Sigma.shape[0])
    _, _, patterns, results = _enumerate(Sigma, S, L, s_max, method, restarts, seed, workers)
    idx = np.asarray(S.indices, dtype=int)

    def refine(k: int) -> float:
        return _re_refine(Sigma, idx, patterns[k], L, results[k].beta)

    if workers > 1 and len(patterns) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ratios = list(pool.map(refine, range(len(patterns))))
    else:
        ratios = [refine(k) for k in range(len(patterns))]
    value = min(ratios)
    logger.info(f"phi_RE^2({L:g}, S={list(S.one_based)}) = {value:.10g}")
    return value


def restricted_eigenvalue(
    X: DesignLike,
    S: Union[IndexSet, Sequence[int]],
    L: float = DEFAULT_L,
    s_max: int = DEFAULT_S_MAX,
    method: Optional[CompatibilityMethod] = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Ограниченное собственное число плана X."""
    design = as_design(X)
    return restricted_eigenvalue_from_gram(design.gram, S, L, s_max, method, restarts, seed, workers)


def effective_sparsity(X: DesignLike, S: Union[IndexSet, Sequence[int]], **kwargs: Any) -> float:
    """
    Gamma_eff(S) = s / phi^2(3, S).

    Raises:
        CompatibilityError: phi^2(3, S) = 0 (условие совместимости нарушено)
    """
    result = compatibility_constant(X, S, L=DEFAULT_L, **kwargs)
    return effective_sparsity_from_result(result)


def effective_sparsity_from_result(result: CompatibilityResult) -> float:
    if result.phi_sq <= max(PHI_SQ_ZERO_TOLERANCE, result.certificate_gap):
        raise CompatibilityError(
            f"Условие совместимости нарушено: phi^2(3, S={list(result.S.one_based)}) = "
            f"{result.phi_sq:.3e}, эффективная разреженность бесконечна"
        )
    return result.S.s / result.phi_sq


# ============================================================================
# МАТРИЦЫ ГРАМА И НЕПРЕДСТАВИМОСТЬ
# ============================================================================

def weighted_gram(X: DesignLike, beta0: Any, family: QuasiFamily) -> WeightedGram:
    """
    Sigma = X^T W^2 X / n, w_i^2 = h^2(f_i) V(G(f_i)) = g(f_i) h(f_i), f = X beta0.
    """
    if not isinstance(family, QuasiFamily):
        raise ValidationError(f"Взвешенная матрица Грама требует семейство квазиправдоподобия, не {family.kind}")
    design = as_design(X)
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.shape != (design.p,):
        raise ValidationError(f"beta0 должен иметь длину {design.p}, получено {beta0.shape}")
    f = design.X @ beta0
    weights = np.asarray(family.link_derivative(f), dtype=float) * np.asarray(family.h(f), dtype=float)
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise ValidationError("Веса матрицы Грама не определены на линейном предикторе")
    Sigma = (design.X * weights[:, None]).T @ design.X / design.n
    Sigma = (Sigma + Sigma.T) / 2
    return WeightedGram(Sigma=Sigma, weights=weights)


def irrepresentable_theta(Sigma: Union[WeightedGram, np.ndarray], S: Union[IndexSet, Sequence[int]]) -> float:
    """
    theta = max_{||tau_S||_inf <= 1} ||Sigma_21 Sigma_11^{-1} tau_S||_inf,
    т.е. максимальная сумма модулей по строкам A = Sigma_21 Sigma_11^{-1}.

    Raises:
        SingularMatrixError: Sigma_11 вырождена или обратное число обусловленности < 1e-12
    """
    M = _check_gram(Sigma.Sigma if isinstance(Sigma, WeightedGram) else Sigma)
    S = _as_index_set(S, M.shape[0])
    idx = list(S.indices)
    rest = list(S.complement(M.shape[0]).indices)
    if not rest or not idx:
        return 0.0

    S11 = M[np.ix_(idx, idx)]
    eig = np.linalg.eigvalsh(S11)
    smallest, largest = float(eig[0]), float(eig[-1])
    if largest <= 0 or smallest <= 0 or smallest / largest < RCOND_LIMIT:
        raise SingularMatrixError(
            f"Sigma_11(S) вырождена: наименьшее собственное число {smallest:.3e}",
            smallest_eigenvalue=smallest,
        )
    logger.debug(f"Число обусловленности Sigma_11(S): {largest / smallest:.3e}")
    factor = linalg.cho_factor(S11)
    A = linalg.cho_solve(factor, M[np.ix_(idx, rest)]).T
    return float(np.max(np.sum(np.abs(A), axis=1)))


def gram_sup_distance(SigmaHat: Any, Sigma: Any) -> float:
    """lambda_X = max_{j,k} |SigmaHat_jk - Sigma_jk|."""
    A = np.asarray(SigmaHat, dtype=float)
    B = np.asarray(Sigma, dtype=float)
    if A.shape != B.shape:
        raise ValidationError(f"Размерности матриц не совпадают: {A.shape} и {B.shape}")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A - B)))


def selection_kkt_check(
    beta_hat: Any,
    beta0: Any,
    Sigma: Union[WeightedGram, np.ndarray],
    lambda_: float,
    lambda_0: float,
    tol: float = 1e-9,
) -> SelectionCheck:
    """
    v = -Sigma (beta_hat - beta0); проверяет |v_j| <= lambda + lambda_0 и
    v_j beta_hat_j >= (lambda - lambda_0) |beta_hat_j| для всех j.
    """
    M = _check_gram(Sigma.Sigma if isinstance(Sigma, WeightedGram) else Sigma)
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    v = -M @ (beta_hat - beta0)
    scale = max(1.0, lambda_ + lambda_0)
    bound_ok = bool(np.all(np.abs(v) <= lambda_ + lambda_0 + tol * scale))
    sign_ok = bool(np.all(v * beta_hat >= (lambda_ - lambda_0) * np.abs(beta_hat) - tol * scale * np.abs(beta_hat)))
    return SelectionCheck(v=v, bound_ok=bound_ok, sign_ok=sign_ok)

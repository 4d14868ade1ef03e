# -*- coding: utf-8 -*-
"""
Выпуклая квадратичная задача для фиксированного набора знаков на S:

    min  b^T Sigma b + q^T b
    при  b_S = sigma * u,  u >= 0,  sum(u) = 1,   ||b_{S^c}||_1 <= L.

Решатель: ускоренный проекционный градиент (FISTA) с рестартом,
сертификат - зазор Франк-Вульфа, уточнение на найденной грани через
систему ККТ.
"""

from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_GAP_TOLERANCE = 1e-9
DEFAULT_MAX_ITERATIONS = 20000
POLISH_ROUNDS = 3
GAP_CHECK_EVERY = 20
SUPPORT_THRESHOLD = 1e-10


@dataclass(frozen=True)
class PatternQPResult:
    """Решение задачи для одного набора знаков."""
    beta: np.ndarray
    value: float
    gap: float
    iterations: int
    polished: bool


def project_simplex(w: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Евклидова проекция на {u >= 0, sum(u) = radius} (сортировкой)."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return w.copy()
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - radius
    ind = np.arange(1, w.size + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(w - theta, 0.0)


def project_l1_ball(w: np.ndarray, radius: float) -> np.ndarray:
    """Евклидова проекция на шар {||v||_1 <= radius}."""
    w = np.asarray(w, dtype=float)
    if w.size == 0 or np.sum(np.abs(w)) <= radius:
        return w.copy()
    if radius <= 0:
        return np.zeros_like(w)
    return np.sign(w) * project_simplex(np.abs(w), radius)


class PatternQP:
    """
    Задача для набора знаков sigma на S и радиуса L на дополнении.

    Args:
        Sigma: Симметричная неотрицательно определенная p x p матрица
        S: Индексы множества S (нумерация с нуля)
        signs: Знаки +-1 длины |S|
        L: Радиус l1-шара на дополнении
        q: Линейный член (по умолчанию 0)
    """

    def __init__(self, Sigma: np.ndarray, S: np.ndarray, signs: np.ndarray,
                 L: float, q: Optional[np.ndarray] = None):
        self.Sigma = Sigma
        p = Sigma.shape[0]
        self.S = np.asarray(S, dtype=int)
        self.Sc = np.setdiff1d(np.arange(p), self.S)
        self.signs = np.asarray(signs, dtype=float)
        self.L = float(L)
        self.q = np.zeros(p) if q is None else np.asarray(q, dtype=float)
        top = float(np.linalg.eigvalsh(Sigma)[-1]) if p else 0.0
        self.lipschitz = 2.0 * top

    def objective(self, beta: np.ndarray) -> float:
        return float(beta @ self.Sigma @ beta + self.q @ beta)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        return 2.0 * (self.Sigma @ beta) + self.q

    def project(self, beta: np.ndarray) -> np.ndarray:
        out = np.zeros_like(beta)
        out[self.S] = self.signs * project_simplex(self.signs * beta[self.S])
        out[self.Sc] = project_l1_ball(beta[self.Sc], self.L)
        return out

    def gap(self, beta: np.ndarray) -> float:
        """Зазор Франк-Вульфа: верхняя оценка f(beta) - min f."""
        g = self.gradient(beta)
        linear_min = float(np.min(self.signs * g[self.S]))
        if self.Sc.size:
            linear_min -= self.L * float(np.max(np.abs(g[self.Sc])))
        return max(float(g @ beta) - linear_min, 0.0)

    def start(self) -> np.ndarray:
        beta = np.zeros(self.Sigma.shape[0])
        beta[self.S] = self.signs / self.S.size
        return beta

    def _fista(self, beta: np.ndarray, tol: float, max_iter: int) -> Tuple[np.ndarray, int]:
        step = 1.0 / self.lipschitz if self.lipschitz > 0 else 1.0
        x = beta
        y = beta.copy()
        t = 1.0
        for it in range(1, max_iter + 1):
            x_new = self.project(y - step * self.gradient(y))
            # рестарт импульса по градиентному критерию
            if (y - x_new) @ (x_new - x) > 0:
                t = 1.0
                y = x_new.copy()
            else:
                t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                y = x_new + ((t - 1.0) / t_new) * (x_new - x)
                t = t_new
            x = x_new
            if it % GAP_CHECK_EVERY == 0 and self.gap(x) <= tol:
                return x, it
        return x, max_iter

    def _polish(self, beta: np.ndarray) -> Optional[np.ndarray]:
        """Точное решение на текущей грани; None, если грань неверна."""
        on_S = self.S[self.signs * beta[self.S] > SUPPORT_THRESHOLD]
        on_S_signs = self.signs[self.signs * beta[self.S] > SUPPORT_THRESHOLD]
        v = beta[self.Sc]
        on_c = self.Sc[np.abs(v) > SUPPORT_THRESHOLD]
        on_c_signs = np.sign(beta[on_c])
        ball_active = on_c.size > 0 and abs(float(np.sum(np.abs(v))) - self.L) <= 1e-7

        A = np.concatenate([on_S, on_c])
        k = A.size
        rows = [np.concatenate([on_S_signs, np.zeros(on_c.size)])]
        rhs_c = [1.0]
        if ball_active:
            rows.append(np.concatenate([np.zeros(on_S.size), on_c_signs]))
            rhs_c.append(self.L)
        C = np.vstack(rows)
        m = C.shape[0]

        kkt = np.block([
            [2.0 * self.Sigma[np.ix_(A, A)], C.T],
            [C, np.zeros((m, m))],
        ])
        rhs = np.concatenate([-self.q[A], np.asarray(rhs_c)])
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        candidate = np.zeros_like(beta)
        candidate[A] = sol[:k]

        if np.any(on_S_signs * candidate[on_S] < -1e-12) or np.any(on_c_signs * candidate[on_c] < -1e-12):
            return None
        candidate[on_S] = on_S_signs * np.maximum(on_S_signs * candidate[on_S], 0.0)
        candidate[on_c] = on_c_signs * np.maximum(on_c_signs * candidate[on_c], 0.0)
        candidate = self.project(candidate)
        if not np.all(np.isfinite(candidate)):
            return None
        return candidate

    def solve(self, x0: Optional[np.ndarray] = None, tol: float = DEFAULT_GAP_TOLERANCE,
              max_iter: int = DEFAULT_MAX_ITERATIONS) -> PatternQPResult:
        beta = self.project(self.start() if x0 is None else np.asarray(x0, dtype=float))
        iterations = 0
        polished = False
        for _ in range(POLISH_ROUNDS):
            beta, used = self._fista(beta, tol, max_iter)
            iterations += used
            current_gap = self.gap(beta)
            candidate = self._polish(beta)
            if candidate is not None:
                cand_gap = self.gap(candidate)
                if self.objective(candidate) <= self.objective(beta) + 1e-15 and cand_gap <= current_gap:
                    beta, current_gap = candidate, cand_gap
                    polished = True
            if current_gap <= tol:
                break
        gap = self.gap(beta)
        if gap > tol:
            logger.debug(f"Задача для знаков {self.signs.astype(int).tolist()}: зазор {gap:.2e} > {tol:.0e}")
        return PatternQPResult(beta=beta, value=self.objective(beta), gap=gap,
                               iterations=iterations, polished=polished)

# -*- coding: utf-8 -*-
"""
Командная строка qlasso.

Подкоманды:
    fit          - решение l1-штрафованной задачи (FitResult в JSON)
    diagnose     - phi^2, phi_RE^2, Gamma_eff, theta, lambda_X плана
    calibrate    - уровни настройки, границы и таблица предпосылок
    simulate     - Монте-Карло сценарий (JSON-lines записи и сводка)
    example-sec4 - воспроизведение числового примера с двумя планами 2 x 3

Основной результат пишется в --out или, если путь не задан, в stdout.
Таблицы выводятся в stdout только при заданном --out. Логи идут в stderr.

Коды завершения: 0 - успех, 1 - ошибка входных данных, 2 - численная ошибка;
при ошибке в stderr пишется JSON {"error", "message", "exit_status"}.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .calibration import CalibrationInputs, TheoryConstants, calibrate, precondition_table
from .diagnostics import (
    DEFAULT_L,
    DEFAULT_S_MAX,
    compatibility_constant,
    compatibility_from_gram,
    effective_sparsity_from_result,
    gram_sup_distance,
    irrepresentable_theta,
    restricted_eigenvalue,
    weighted_gram,
)
from .exceptions import CompatibilityError, NumericalError, QLassoError, SingularMatrixError, ValidationError
from .factory import FamilyFactory
from .families import estimate_condition_constants
from .interfaces import DesignMatrix, FamilySpec, IndexSet, QuasiFamily, RobustLoss
from .io_formats import (
    JsonLinesWriter,
    dumps_json,
    read_design,
    read_json,
    read_matrix,
    read_response,
    read_vector,
    write_coefficients_csv,
    write_json,
)
from .logging_config import setup_logging
from .simulation import ErrorLaw, ScenarioConfig, run_scenario, scaling_study, verify_theorems
from .solver import PenalizedProblem, SolverConfig, fit, lambda_max

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

THREADS_ENV = 'QLASSO_THREADS'
CALIBRATION_GRID_POINTS = 256

# Числовой пример: n = 2, p = 3, S0 = {3}
SEC4_N = 2
SEC4_FIRST = ((5 / 13, 0.0, 1.0), (12 / 13, 1.0, 0.0))
SEC4_SECOND = ((12 / 13, 0.0, 1.0), (5 / 13, 1.0, 0.0))
SEC4_PHI_SQ = 2 / 13
SEC4_GAMMA_EFF = 6.5
SEC4_THETA = 5 / 13


class CommandError(ValidationError):
    """Ошибка разбора аргументов командной строки."""


class _Parser(argparse.ArgumentParser):
    """argparse с ошибками в виде исключения (код 1 вместо стандартного 2)."""

    def error(self, message: str):
        raise CommandError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class Command:
    """Разобранная команда: подкоманда, входные файлы, путь результата и переопределения."""
    subcommand: str
    design: Optional[Path] = None
    response: Optional[Path] = None
    family: Optional[str] = None
    lambda_: Optional[float] = None
    t: Optional[float] = None
    S: Optional[str] = None
    L: float = DEFAULT_L
    config: Optional[Path] = None
    out: Optional[Path] = None
    seed: Optional[int] = None
    threads: Optional[int] = None
    beta0: Optional[Path] = None
    population_gram: Optional[Path] = None
    sigma: Optional[float] = None
    kappa: Optional[float] = None
    coefficients: Optional[Path] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'Command':
        def path(name: str) -> Optional[Path]:
            value = getattr(args, name, None)
            return None if value is None else Path(value)

        return cls(
            subcommand=args.command,
            design=path('design'),
            response=path('response'),
            family=getattr(args, 'family', None),
            lambda_=getattr(args, 'lambda_', None),
            t=getattr(args, 't', None),
            S=getattr(args, 'set', None),
            L=getattr(args, 'L', DEFAULT_L),
            config=path('config'),
            out=path('out'),
            seed=getattr(args, 'seed', None),
            threads=getattr(args, 'threads', None),
            beta0=path('beta0'),
            population_gram=path('population_gram'),
            sigma=getattr(args, 'sigma', None),
            kappa=getattr(args, 'kappa', None),
            coefficients=path('coefficients'),
        )

    def require(self, *names: str) -> None:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            flags = ', '.join('--' + ('lambda' if n == 'lambda_' else 'set' if n == 'S' else n.replace('_', '-'))
                              for n in missing)
            raise CommandError(f"Команда {self.subcommand} требует {flags}")


# ============================================================================
# ВСПОМОГАТЕЛЬНЫЕ ФУНКЦИИ
# ============================================================================

def parse_index_set(text: str) -> IndexSet:
    """'1,3' -> IndexSet {0, 2}; пустая строка - пустое множество."""
    items = [item.strip() for item in text.split(',') if item.strip()]
    try:
        return IndexSet.from_one_based(int(item) for item in items)
    except ValueError as e:
        raise CommandError(f"Некорректное множество индексов '{text}': ожидались номера через запятую") from e


def resolve_threads(value: Optional[int]) -> int:
    """--threads, иначе переменная окружения QLASSO_THREADS, иначе 1."""
    if value is None:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or not raw.strip():
            return 1
        try:
            value = int(raw)
        except ValueError as e:
            raise CommandError(f"{THREADS_ENV} должно быть целым числом, получено '{raw}'") from e
    if value < 1:
        raise CommandError(f"Число потоков должно быть >= 1, получено {value}")
    return value


def _emit(command: Command, obj: Any) -> None:
    if command.out is not None:
        write_json(command.out, obj)
        logger.info(f"Результат записан: {command.out}")
    else:
        sys.stdout.write(dumps_json(obj) + "\n")


def _table(command: Command, text: str) -> None:
    if command.out is not None:
        sys.stdout.write(text + "\n")


def _family(command: Command):
    return FamilyFactory.from_spec(FamilySpec.parse(command.family or 'gaussian'))


def _solver_config(command: Command) -> SolverConfig:
    if command.config is None:
        return SolverConfig()
    return SolverConfig.from_dict(read_json(command.config))


def _theta(Sigma: Any, S: IndexSet) -> Optional[float]:
    try:
        return irrepresentable_theta(Sigma, S)
    except SingularMatrixError as e:
        logger.warning(f"theta не определена: {e}")
        return None


# ============================================================================
# ПОДКОМАНДЫ
# ============================================================================

def cmd_fit(command: Command) -> int:
    command.require('design', 'response', 'lambda_')
    design = read_design(command.design)
    Y = read_response(command.response, n=design.n)
    family = _family(command)
    problem = PenalizedProblem(design, Y, family, command.lambda_)
    lam_max = lambda_max(design, problem.Y, family)
    logger.info(f"lambda = {command.lambda_:.6g}, lambda_max = {lam_max:.6g}")
    result = fit(problem, _solver_config(command))
    output = result.to_dict()
    output.update({'lambda': command.lambda_, 'lambda_max': lam_max, 'family': str(family.spec)})
    _emit(command, output)
    if command.coefficients is not None:
        write_coefficients_csv(command.coefficients, result.beta_hat)
        logger.info(f"Коэффициенты записаны: {command.coefficients}")
    return EXIT_OK


def diagnose(design: DesignMatrix, S: IndexSet, L: float = DEFAULT_L, seed: int = 0, workers: int = 1,
             beta0: Optional[np.ndarray] = None, family: Any = None,
             population_gram: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """Диагностика плана на множестве S (нумерация в выводе с 1)."""
    S = S.validate(design.p)
    if S.s == 0:
        raise ValidationError("Множество S не должно быть пустым")
    result = compatibility_constant(design, S, L=L, seed=seed, workers=workers)
    try:
        gamma_eff = effective_sparsity_from_result(result)
    except CompatibilityError as e:
        logger.warning(str(e))
        gamma_eff = None
    report: Dict[str, Any] = {
        'S': list(S.one_based),
        'L': L,
        'n': design.n,
        'p': design.p,
        'K_X': design.K_X,
        'phi_sq': result.phi_sq,
        'phi_re_sq': restricted_eigenvalue(design, S, L=L, seed=seed, workers=workers),
        'gamma_eff': gamma_eff,
        'theta': _theta(design.gram, S),
        'compatibility': result.to_dict(),
    }
    if beta0 is not None and isinstance(family, QuasiFamily):
        report['theta_weighted'] = _theta(weighted_gram(design, beta0, family), S)
    if population_gram is not None:
        report['lambda_X'] = gram_sup_distance(design.gram, population_gram)
        population = compatibility_from_gram(population_gram, S, L=L, seed=seed, workers=workers)
        report['population_phi_sq'] = population.phi_sq
        report['population_theta'] = _theta(population_gram, S)
    return report


def cmd_diagnose(command: Command) -> int:
    command.require('design', 'S')
    design = read_design(command.design)
    S = parse_index_set(command.S)
    beta0 = read_vector(command.beta0, length=design.p) if command.beta0 is not None else None
    population = (read_matrix(command.population_gram, shape=(design.p, design.p))
                  if command.population_gram is not None else None)
    family = _family(command) if command.family is not None else None
    report = diagnose(design, S, L=command.L, seed=command.seed or 0,
                      workers=resolve_threads(command.threads),
                      beta0=beta0, family=family, population_gram=population)
    _emit(command, report)
    return EXIT_OK


def calibration_inputs(command: Command) -> CalibrationInputs:
    """
    Входы калибровки: из JSON (--config) с переопределениями --lambda и --t
    или из плана, множества S и семейства. Для потерь от остатка условный
    закон - гауссовская ошибка со стандартным отклонением sigma.
    """
    if command.config is not None:
        inputs = CalibrationInputs.from_dict(read_json(command.config))
        overrides: Dict[str, Any] = {}
        if command.lambda_ is not None:
            overrides['lambda_'] = command.lambda_
        if command.t is not None:
            overrides['t'] = command.t
        return replace(inputs, **overrides) if overrides else inputs

    command.require('design', 'S', 'lambda_')
    design = read_design(command.design)
    S = parse_index_set(command.S).validate(design.p)
    family = _family(command)
    beta0 = read_vector(command.beta0, length=design.p) if command.beta0 is not None else None
    f0 = design.X @ beta0 if beta0 is not None else np.zeros(design.n)
    K_0 = float(np.max(np.abs(f0)))

    sigma = 1.0 if command.sigma is None else command.sigma
    error = ErrorLaw('gaussian', sigma=sigma)
    kappa = error.moments()[1] if command.kappa is None else command.kappa
    law = error.centered(family) if isinstance(family, RobustLoss) and getattr(family, 'residual_based', False) else None
    f0_range = np.array([np.min(f0), np.max(f0)])
    cond = estimate_condition_constants(family, design.K_X, K_0, CALIBRATION_GRID_POINTS,
                                        conditional_law=law, f0=f0_range if law is not None else None)
    constants = TheoryConstants.from_condition_constants(cond, sigma, kappa, design.K_X, K_0)

    result = compatibility_constant(design, S, seed=command.seed or 0, workers=resolve_threads(command.threads))
    gamma_eff = effective_sparsity_from_result(result)
    if beta0 is not None and isinstance(family, QuasiFamily):
        theta = _theta(weighted_gram(design, beta0, family), S)
    else:
        theta = _theta(design.gram, S)
    lambda_X = None
    if command.population_gram is not None:
        lambda_X = gram_sup_distance(design.gram, read_matrix(command.population_gram, shape=(design.p, design.p)))
    return CalibrationInputs(constants=constants, n=design.n, p=design.p, lambda_=command.lambda_,
                             gamma_eff=gamma_eff, t=command.t, theta=theta, lambda_X=lambda_X)


def cmd_calibrate(command: Command) -> int:
    report = calibrate(calibration_inputs(command))
    _emit(command, report)
    _table(command, precondition_table(report.preconditions))
    return EXIT_OK


def _scenario(command: Command) -> Dict[str, Any]:
    command.require('config')
    data = read_json(command.config)
    if not isinstance(data, dict):
        raise ValidationError(f"Файл сценария '{command.config}' должен содержать JSON-объект")
    data = dict(data)
    if command.seed is not None:
        data['master_seed'] = command.seed
    if command.t is not None:
        data['t'] = command.t
    if command.family is not None:
        data['family'] = command.family
    if command.lambda_ is not None:
        data['lambda_rule'] = {'kind': 'fixed', 'value': command.lambda_}
    return data


def _records_path(out: Path) -> Path:
    return out if out.suffix == '.jsonl' else out.with_suffix('.jsonl')


def cmd_simulate(command: Command) -> int:
    data = _scenario(command)
    threads = resolve_threads(command.threads)
    grid = data.pop('grid', None)
    config = ScenarioConfig.from_dict(data)

    if grid is not None:
        report = scaling_study(grid, config, threads=threads)
        _emit(command, report)
        return EXIT_OK

    records = run_scenario(config, threads=threads)
    summary = verify_theorems(records, config)
    if command.out is not None:
        records_path = _records_path(command.out)
        with JsonLinesWriter(records_path) as writer:
            for record in records:
                writer.write(record)
        logger.info(f"Записей: {writer.count} -> {records_path}")
        summary_path = records_path.with_suffix('.summary.json')
        write_json(summary_path, {'config': config.to_dict(), 'summary': summary.to_dict()})
        logger.info(f"Сводка записана: {summary_path}")
        sys.stdout.write(summary.table() + "\n")
    else:
        sys.stdout.write(dumps_json({'config': config.to_dict(), 'summary': summary.to_dict()}) + "\n")
    return EXIT_OK


def example_sec4(seed: int = 0) -> Dict[str, Any]:
    """
    Два плана X = sqrt(n) A при n = 2, p = 3, S0 = {3}: для первого
    phi^2(3, S0) = 2/13, Gamma_eff = 6.5, theta = 5/13; для второго phi^2 = 0.

    Raises:
        NumericalError: Вычисленные значения расходятся с ожидаемыми
    """
    S = IndexSet.from_one_based([3])
    out: Dict[str, Any] = {}
    for name, rows in (('first', SEC4_FIRST), ('second', SEC4_SECOND)):
        design = DesignMatrix(math.sqrt(SEC4_N) * np.asarray(rows))
        result = compatibility_constant(design, S, L=DEFAULT_L, s_max=DEFAULT_S_MAX, seed=seed)
        try:
            gamma_eff = effective_sparsity_from_result(result)
        except CompatibilityError:
            gamma_eff = None
        out[name] = {
            'X': design.X.tolist(),
            'phi_sq': result.phi_sq,
            'gamma_eff': gamma_eff,
            'theta': irrepresentable_theta(design.gram, S),
        }

    first, second = out['first'], out['second']
    failures: List[str] = []
    if abs(first['phi_sq'] - SEC4_PHI_SQ) > 1e-8:
        failures.append(f"phi^2 = {first['phi_sq']:.12g}, ожидалось 2/13")
    if first['gamma_eff'] is None or abs(first['gamma_eff'] - SEC4_GAMMA_EFF) > 1e-8:
        failures.append(f"Gamma_eff = {first['gamma_eff']}, ожидалось 6.5")
    if abs(first['theta'] - SEC4_THETA) > 1e-10:
        failures.append(f"theta = {first['theta']:.12g}, ожидалось 5/13")
    if second['phi_sq'] > 1e-6:
        failures.append(f"phi^2 второго плана = {second['phi_sq']:.3e}, ожидалось 0")
    if failures:
        raise NumericalError("Пример не воспроизведен: " + "; ".join(failures))
    out['expected'] = {'phi_sq': SEC4_PHI_SQ, 'gamma_eff': SEC4_GAMMA_EFF, 'theta': SEC4_THETA}
    out['verified'] = True
    return out


def cmd_example_sec4(command: Command) -> int:
    result = example_sec4(seed=command.seed or 0)
    _emit(command, result)
    _table(command, "\n".join(
        f"{name}: phi^2 = {result[name]['phi_sq']:.10g}, Gamma_eff = {result[name]['gamma_eff']}, "
        f"theta = {result[name]['theta']:.10g}"
        for name in ('first', 'second')
    ))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Command], int]] = {
    'fit': cmd_fit,
    'diagnose': cmd_diagnose,
    'calibrate': cmd_calibrate,
    'simulate': cmd_simulate,
    'example-sec4': cmd_example_sec4,
}


# ============================================================================
# РАЗБОР АРГУМЕНТОВ
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='qlasso', description="l1-штрафованное квазиправдоподобие и робастные потери")
    parser.add_argument('--version', action='version', version=f"qlasso {__version__}")
    parser.add_argument('--log-level', default='WARNING', help="Уровень логирования (по умолчанию WARNING)")
    parser.add_argument('--log-file', default=None, help="Файл лога (ротация по размеру)")
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument('--out', help="Путь результата (по умолчанию stdout)")
        p.add_argument('--seed', type=int, help="Зерно генератора")
        p.add_argument('--threads', type=int, help=f"Число потоков (иначе {THREADS_ENV}, иначе 1)")

    p = sub.add_parser('fit', help="Решить l1-штрафованную задачу")
    p.add_argument('--design', help="CSV плана с заголовком")
    p.add_argument('--response', help="CSV отклика")
    p.add_argument('--family', help="Семейство, например gaussian или quantile:alpha=0.3")
    p.add_argument('--lambda', dest='lambda_', type=float, help="Параметр штрафа")
    p.add_argument('--config', help="JSON с параметрами решателя")
    p.add_argument('--coefficients', help="CSV для коэффициентов (столбцы j, beta)")
    common(p)

    p = sub.add_parser('diagnose', help="Константы совместимости и непредставимости плана")
    p.add_argument('--design', help="CSV плана с заголовком")
    p.add_argument('--set', help="Множество S, номера с 1 через запятую")
    p.add_argument('--L', type=float, default=DEFAULT_L, help="Радиус конуса (по умолчанию 3)")
    p.add_argument('--family', help="Семейство для взвешенной матрицы Грама")
    p.add_argument('--beta0', help="CSV истинных коэффициентов")
    p.add_argument('--population-gram', dest='population_gram', help="CSV популяционной матрицы Sigma")
    common(p)

    p = sub.add_parser('calibrate', help="Уровни настройки, границы и предпосылки")
    p.add_argument('--config', help="JSON с входами калибровки")
    p.add_argument('--design', help="CSV плана с заголовком")
    p.add_argument('--set', help="Множество S0, номера с 1 через запятую")
    p.add_argument('--family', help="Семейство потерь")
    p.add_argument('--lambda', dest='lambda_', type=float, help="Параметр штрафа")
    p.add_argument('--t', type=float, help="Параметр уровня доверия (по умолчанию log n)")
    p.add_argument('--beta0', help="CSV истинных коэффициентов (для K_0 и взвешенной theta)")
    p.add_argument('--population-gram', dest='population_gram', help="CSV популяционной матрицы Sigma")
    p.add_argument('--sigma', type=float, help="Константа sigma ошибок (по умолчанию 1)")
    p.add_argument('--kappa', type=float, help="Константа kappa ошибок (по умолчанию гауссовская)")
    common(p)

    p = sub.add_parser('simulate', help="Монте-Карло проверка теорем")
    p.add_argument('--config', help="JSON сценария (с ключом grid - исследование масштабирования)")
    p.add_argument('--family', help="Переопределить семейство")
    p.add_argument('--lambda', dest='lambda_', type=float, help="Фиксированное lambda")
    p.add_argument('--t', type=float, help="Параметр уровня доверия")
    common(p)

    p = sub.add_parser('example-sec4', help="Числовой пример с двумя планами 2 x 3")
    common(p)
    return parser


def _error_payload(error: BaseException, status: int) -> str:
    return dumps_json({'error': type(error).__name__, 'message': str(error), 'exit_status': status}, indent=None)


def execute(command: Command) -> int:
    """Выполняет команду и возвращает код завершения."""
    handler = COMMANDS.get(command.subcommand)
    if handler is None:
        raise CommandError(f"Неизвестная команда: {command.subcommand}. Доступные: {list(COMMANDS)}")
    return handler(command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CommandError("Не указана команда. Доступные: " + ", ".join(COMMANDS))
        setup_logging(log_level=args.log_level, log_file=args.log_file, log_dir='.',
                      console_output=True, file_output=args.log_file is not None)
        return execute(Command.from_args(args))
    except NumericalError as e:
        logger.error(f"Численная ошибка: {e}")
        sys.stderr.write(_error_payload(e, EXIT_NUMERICAL) + "\n")
        return EXIT_NUMERICAL
    except (QLassoError, ValueError, OSError) as e:
        sys.stderr.write(_error_payload(e, EXIT_VALIDATION) + "\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

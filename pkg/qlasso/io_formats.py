# -*- coding: utf-8 -*-
"""
Форматы файлов: CSV плана и отклика, JSON результатов, JSON-lines записей.

CSV пишется с заголовком и полной двойной точностью ('%.17g'). JSON пишется
кратчайшим представлением float (repr), а не фиксированными 17 значащими
цифрами: repr восстанавливает то же двоичное число, поэтому записи
побитово стабильны и не содержат хвостов вида 0.10000000000000001.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, TextIO, Union
import json
import logging
import math

import numpy as np
import pandas as pd

from .exceptions import ValidationError
from .interfaces import DesignMatrix

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CSV_FLOAT_FORMAT = '%.17g'
RESPONSE_COLUMN = 'y'
COEFFICIENT_COLUMNS = ('j', 'beta')


# ============================================================================
# CSV
# ============================================================================

def _read_numeric_csv(path: PathLike, what: str) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Файл {what} не найден: {path}")
    try:
        frame = pd.read_csv(path, header=0)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ValidationError(f"Не удалось прочитать CSV {what} '{path}': {e}") from e
    if frame.empty:
        raise ValidationError(f"CSV {what} '{path}' не содержит строк данных")
    try:
        frame = frame.apply(pd.to_numeric, errors='raise').astype(float)
    except (ValueError, TypeError) as e:
        raise ValidationError(f"CSV {what} '{path}' содержит нечисловые значения: {e}") from e
    if not np.all(np.isfinite(frame.to_numpy())):
        raise ValidationError(f"CSV {what} '{path}' содержит пропуски или бесконечные значения")
    return frame


def read_design(path: PathLike) -> DesignMatrix:
    """Читает план n x p из CSV с заголовком (имена столбцов произвольны)."""
    frame = _read_numeric_csv(path, 'плана')
    design = DesignMatrix(frame.to_numpy(dtype=float))
    logger.info(f"План прочитан из {path}: n={design.n}, p={design.p}")
    return design


def read_response(path: PathLike, n: Optional[int] = None) -> np.ndarray:
    """
    Читает отклик из CSV: столбец 'y', если он есть, иначе единственный столбец.

    Raises:
        ValidationError: Несколько столбцов без 'y' или длина не равна n
    """
    frame = _read_numeric_csv(path, 'отклика')
    if RESPONSE_COLUMN in frame.columns:
        values = frame[RESPONSE_COLUMN]
    elif frame.shape[1] == 1:
        values = frame.iloc[:, 0]
    else:
        raise ValidationError(
            f"CSV отклика '{path}' содержит {frame.shape[1]} столбцов; нужен один столбец или столбец '{RESPONSE_COLUMN}'"
        )
    Y = values.to_numpy(dtype=float)
    if n is not None and Y.shape[0] != n:
        raise ValidationError(f"Длина отклика {Y.shape[0]} не совпадает с числом строк плана {n}")
    return Y


def read_vector(path: PathLike, length: Optional[int] = None) -> np.ndarray:
    """Вектор из CSV: столбец 'beta' файла коэффициентов или единственный столбец."""
    frame = _read_numeric_csv(path, 'вектора')
    if 'beta' in frame.columns:
        values = frame['beta']
    elif frame.shape[1] == 1:
        values = frame.iloc[:, 0]
    else:
        raise ValidationError(f"CSV вектора '{path}' должен иметь один столбец или столбец 'beta'")
    v = values.to_numpy(dtype=float)
    if length is not None and v.shape[0] != length:
        raise ValidationError(f"Длина вектора {v.shape[0]} не совпадает с ожидаемой {length}")
    return v


def read_matrix(path: PathLike, shape: Optional[Sequence[int]] = None) -> np.ndarray:
    """Произвольная числовая матрица из CSV с заголовком (например, популяционная Sigma)."""
    M = _read_numeric_csv(path, 'матрицы').to_numpy(dtype=float)
    if shape is not None and M.shape != tuple(shape):
        raise ValidationError(f"Матрица '{path}' имеет размер {M.shape}, ожидалось {tuple(shape)}")
    return M


def write_matrix_csv(path: PathLike, matrix: Any, columns: Optional[Sequence[str]] = None) -> Path:
    """Пишет матрицу в CSV; по умолчанию столбцы x1..xp."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    if columns is None:
        columns = [f"x{j + 1}" for j in range(M.shape[1])]
    return _write_frame(path, pd.DataFrame(M, columns=list(columns)))


def write_response_csv(path: PathLike, Y: Any) -> Path:
    return _write_frame(path, pd.DataFrame({RESPONSE_COLUMN: np.asarray(Y, dtype=float)}))


def write_coefficients_csv(path: PathLike, beta: Any) -> Path:
    """Пишет коэффициенты: столбцы j (нумерация с 1) и beta."""
    beta = np.asarray(beta, dtype=float)
    frame = pd.DataFrame({
        COEFFICIENT_COLUMNS[0]: np.arange(1, beta.shape[0] + 1),
        COEFFICIENT_COLUMNS[1]: beta,
    })
    return _write_frame(path, frame)


def _write_frame(path: PathLike, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"CSV записан: {path} ({frame.shape[0]} строк)")
    return path


# ============================================================================
# JSON
# ============================================================================

def to_jsonable(obj: Any) -> Any:
    """
    Приводит результат к типам JSON: объекты с to_dict, numpy-массивы и
    скаляры, кортежи. Неконечные float записываются как null.
    """
    if callable(getattr(obj, 'to_dict', None)):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(obj: Any, indent: Optional[int] = 2) -> str:
    return json.dumps(to_jsonable(obj), ensure_ascii=False, indent=indent, allow_nan=False)


def write_json(path: PathLike, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj) + "\n", encoding='utf-8')
    logger.debug(f"JSON записан: {path}")
    return path


def read_json(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Файл не найден: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Некорректный формат файла '{path}': {e}") from e


# ============================================================================
# JSON-LINES
# ============================================================================

class JsonLinesWriter:
    """
    Потоковая запись записей в JSON-lines (по одной записи в строке).

    Использование:
        with JsonLinesWriter(path) as writer:
            writer.write(record)
    """

    def __init__(self, target: Union[PathLike, TextIO]):
        self._own = not hasattr(target, 'write')
        self.path = Path(target) if self._own else None
        self._target = target
        self._stream: Optional[TextIO] = None
        self.count = 0

    def __enter__(self) -> 'JsonLinesWriter':
        if self._own:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._stream = open(self.path, 'w', encoding='utf-8', newline='\n')
        else:
            self._stream = self._target
        return self

    def write(self, record: Any) -> None:
        if self._stream is None:
            raise ValidationError("JsonLinesWriter используется вне блока with")
        self._stream.write(dumps_json(record, indent=None) + "\n")
        self.count += 1

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._own and self._stream is not None:
            self._stream.close()
        self._stream = None


def write_jsonl(path: PathLike, records: Iterable[Any]) -> int:
    with JsonLinesWriter(path) as writer:
        for record in records:
            writer.write(record)
    return writer.count


def iter_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}:{number}: некорректная строка JSON-lines: {e}") from e


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    return list(iter_jsonl(path))

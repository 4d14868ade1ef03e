# -*- coding: utf-8 -*-
"""Общие фикстуры тестов qlasso."""

import math

import numpy as np
import pytest

from qlasso.cli import SEC4_FIRST, SEC4_N, SEC4_SECOND
from qlasso.interfaces import DesignMatrix, IndexSet
from qlasso.io_formats import write_matrix_csv, write_response_csv


@pytest.fixture
def rng():
    """Генератор с фиксированным зерном."""
    return np.random.default_rng(20240601)


@pytest.fixture
def sec4_first():
    """План 2 x 3 числового примера: phi^2(3, {3}) = 2/13."""
    return DesignMatrix(math.sqrt(SEC4_N) * np.asarray(SEC4_FIRST))


@pytest.fixture
def sec4_second():
    """Второй план примера: phi^2(3, {3}) = 0."""
    return DesignMatrix(math.sqrt(SEC4_N) * np.asarray(SEC4_SECOND))


@pytest.fixture
def sec4_set():
    return IndexSet.from_one_based([3])


@pytest.fixture
def gaussian_data(rng):
    """Разреженная линейная модель: n = 60, p = 8, beta0 = (2, -1.5, 0, ..., 0)."""
    n, p = 60, 8
    X = rng.standard_normal((n, p))
    beta0 = np.zeros(p)
    beta0[:2] = [2.0, -1.5]
    Y = X @ beta0 + 0.3 * rng.standard_normal(n)
    return DesignMatrix(X), Y, beta0


@pytest.fixture
def csv_inputs(tmp_path, gaussian_data):
    """План и отклик gaussian_data, записанные в CSV."""
    design, Y, _ = gaussian_data
    design_path = write_matrix_csv(tmp_path / "X.csv", design.X)
    response_path = write_response_csv(tmp_path / "y.csv", Y)
    return design_path, response_path

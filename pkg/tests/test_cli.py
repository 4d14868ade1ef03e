# -*- coding: utf-8 -*-
"""Тесты командной строки: подкоманды, коды завершения, JSON ошибок."""

import json
import logging

import numpy as np
import pandas as pd
import pytest

from qlasso.cli import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    SEC4_N,
    SEC4_SECOND,
    THREADS_ENV,
    CommandError,
    example_sec4,
    main,
    parse_index_set,
    resolve_threads,
)
from qlasso.io_formats import read_json, read_jsonl, write_json, write_matrix_csv


@pytest.fixture(autouse=True)
def restore_root_logger():
    """main() перенастраивает корневой логгер; после теста вернуть как было."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in list(root.handlers):
        root.removeHandler(handler)
        if handler not in handlers:
            handler.close()
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)


def error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


class TestHelpers:
    def test_parse_index_set(self):
        assert parse_index_set('1,3').indices == (0, 2)
        assert parse_index_set(' 2 , 2 ').indices == (1,)
        assert parse_index_set('').s == 0
        with pytest.raises(CommandError):
            parse_index_set('a,b')

    def test_resolve_threads(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert resolve_threads(None) == 1
        assert resolve_threads(3) == 3
        monkeypatch.setenv(THREADS_ENV, '4')
        assert resolve_threads(None) == 4
        assert resolve_threads(2) == 2
        monkeypatch.setenv(THREADS_ENV, 'many')
        with pytest.raises(CommandError):
            resolve_threads(None)
        with pytest.raises(CommandError):
            resolve_threads(0)

    def test_example_values(self):
        result = example_sec4()
        assert result['verified'] is True
        assert result['first']['phi_sq'] == pytest.approx(2 / 13, abs=1e-8)
        assert result['first']['gamma_eff'] == pytest.approx(6.5, abs=1e-7)
        assert result['second']['gamma_eff'] is None


class TestFit:
    def test_fit_writes_json_and_coefficients(self, csv_inputs, tmp_path):
        design, response = csv_inputs
        out = tmp_path / "fit.json"
        coef = tmp_path / "beta.csv"
        status = main(['fit', '--design', str(design), '--response', str(response),
                       '--lambda', '0.05', '--out', str(out), '--coefficients', str(coef)])
        assert status == EXIT_OK
        result = read_json(out)
        assert result['family'] == 'gaussian'
        assert result['lambda'] == 0.05
        assert result['kkt_sup_violation'] <= 1e-6
        assert {1, 2} <= set(result['active_set'])
        frame = pd.read_csv(coef)
        assert list(frame.columns) == ['j', 'beta']
        assert frame['beta'].tolist() == pytest.approx(result['beta'])

    def test_fit_to_stdout(self, csv_inputs, capsys):
        design, response = csv_inputs
        status = main(['fit', '--design', str(design), '--response', str(response),
                       '--lambda', '0.1', '--family', 'huber:k=1.5'])
        assert status == EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result['family'].startswith('huber')
        assert result['lambda_max'] > 0

    def test_missing_lambda(self, csv_inputs, capsys):
        design, response = csv_inputs
        status = main(['fit', '--design', str(design), '--response', str(response)])
        assert status == EXIT_VALIDATION
        payload = error_line(capsys)
        assert payload['error'] == 'CommandError'
        assert payload['exit_status'] == EXIT_VALIDATION
        assert '--lambda' in payload['message']

    def test_missing_file(self, tmp_path, capsys):
        status = main(['fit', '--design', str(tmp_path / "none.csv"),
                       '--response', str(tmp_path / "y.csv"), '--lambda', '0.1'])
        assert status == EXIT_VALIDATION
        assert error_line(capsys)['error'] == 'FileNotFoundError'

    def test_unknown_family(self, csv_inputs, capsys):
        design, response = csv_inputs
        status = main(['fit', '--design', str(design), '--response', str(response),
                       '--lambda', '0.1', '--family', 'poisson'])
        assert status == EXIT_VALIDATION
        assert error_line(capsys)['error'] == 'ValidationError'

    def test_non_positive_lambda(self, csv_inputs):
        design, response = csv_inputs
        assert main(['fit', '--design', str(design), '--response', str(response),
                     '--lambda', '-1']) == EXIT_VALIDATION

    def test_no_command(self, capsys):
        assert main([]) == EXIT_VALIDATION
        assert error_line(capsys)['error'] == 'CommandError'

    def test_log_file(self, csv_inputs, tmp_path):
        design, response = csv_inputs
        log_file = tmp_path / "run.log"
        status = main(['--log-level', 'INFO', '--log-file', str(log_file), 'fit', '--design', str(design),
                       '--response', str(response), '--lambda', '0.05', '--out', str(tmp_path / "fit.json")])
        assert status == EXIT_OK
        for handler in logging.getLogger().handlers:
            handler.flush()
        assert 'lambda_max' in log_file.read_text(encoding='utf-8')


class TestDiagnose:
    def test_diagnose(self, csv_inputs, capsys):
        design, _ = csv_inputs
        status = main(['diagnose', '--design', str(design), '--set', '1,2'])
        assert status == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['S'] == [1, 2]
        assert report['phi_sq'] > 0
        assert report['phi_re_sq'] <= report['phi_sq'] + 1e-8
        assert report['gamma_eff'] == pytest.approx(2 / report['phi_sq'])
        assert 0 <= report['theta']
        assert 'lambda_X' not in report

    def test_population_gram(self, csv_inputs, tmp_path, capsys):
        design, _ = csv_inputs
        sigma = write_matrix_csv(tmp_path / "sigma.csv", np.eye(8))
        status = main(['diagnose', '--design', str(design), '--set', '1', '--population-gram', str(sigma)])
        assert status == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['population_phi_sq'] == pytest.approx(1.0, abs=1e-8)
        assert report['population_theta'] == 0.0
        assert report['lambda_X'] > 0

    def test_index_out_of_range(self, csv_inputs):
        design, _ = csv_inputs
        assert main(['diagnose', '--design', str(design), '--set', '9']) == EXIT_VALIDATION

    def test_example_command(self, tmp_path, capsys):
        out = tmp_path / "sec4.json"
        assert main(['example-sec4', '--out', str(out)]) == EXIT_OK
        assert read_json(out)['verified'] is True
        assert 'first' in capsys.readouterr().out


class TestCalibrate:
    def test_from_config(self, tmp_path, capsys):
        config = write_json(tmp_path / "inputs.json", {
            'constants': {'sigma': 1.0, 'kappa': 0.0},
            'n': 400, 'p': 20, 'lambda': 0.1, 'gamma_eff': 6.5,
        })
        status = main(['calibrate', '--config', str(config), '--lambda', '0.2'])
        assert status == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['inputs']['lambda'] == 0.2
        assert 'thm2' in report['bounds']

    def test_from_design(self, csv_inputs, tmp_path, capsys):
        design, _ = csv_inputs
        out = tmp_path / "calib.json"
        status = main(['calibrate', '--design', str(design), '--set', '1,2', '--lambda', '0.05',
                       '--out', str(out)])
        assert status == EXIT_OK
        report = read_json(out)
        assert report['inputs']['n'] == 60
        table = capsys.readouterr().out
        assert '(s0)' in table
        assert 'PASS' in table or 'FAIL' in table

    def test_singular_compatibility_is_numerical(self, tmp_path, capsys):
        design = write_matrix_csv(tmp_path / "X.csv", np.sqrt(SEC4_N) * np.asarray(SEC4_SECOND))
        status = main(['calibrate', '--design', str(design), '--set', '3', '--lambda', '0.1'])
        assert status == EXIT_NUMERICAL
        assert error_line(capsys)['error'] == 'CompatibilityError'


class TestSimulate:
    SCENARIO = {
        'name': 'cli_small',
        'n': 30, 'p': 5, 's0': 1,
        'beta': {'magnitude': 2.0, 'placement': 'first', 'signs': 'positive'},
        'lambda_rule': {'kind': 'event'},
        'replications': 2,
        'master_seed': 3,
    }

    def test_records_and_summary(self, tmp_path, capsys):
        config = write_json(tmp_path / "scenario.json", self.SCENARIO)
        out = tmp_path / "run.jsonl"
        status = main(['simulate', '--config', str(config), '--out', str(out), '--threads', '2'])
        assert status == EXIT_OK
        records = read_jsonl(out)
        assert [r['replication'] for r in records] == [0, 1]
        summary = read_json(tmp_path / "run.summary.json")
        assert summary['config']['name'] == 'cli_small'
        assert summary['summary']['replications'] == 2
        assert 'thm1' in capsys.readouterr().out

    def test_stdout_with_overrides(self, tmp_path, capsys):
        config = write_json(tmp_path / "scenario.json", self.SCENARIO)
        status = main(['simulate', '--config', str(config), '--lambda', '0.3', '--seed', '11'])
        assert status == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data['config']['master_seed'] == 11
        assert data['config']['lambda_rule']['kind'] == 'fixed'

    def test_invalid_scenario(self, tmp_path, capsys):
        config = write_json(tmp_path / "scenario.json", dict(self.SCENARIO, family='logistic'))
        assert main(['simulate', '--config', str(config)]) == EXIT_VALIDATION
        assert error_line(capsys)['error'] == 'ValidationError'

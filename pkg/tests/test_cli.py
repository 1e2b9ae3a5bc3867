import json

import numpy as np
import pytest

import lower.resources as resources
import main as cli
from config.settings import Config, ConfigError
from lower.resources import ResourceReport
from problem.matrix_io import load_matrix


def _fake_step(n_x, n_v, strategy, params=None, ancillas=None):
    cx_count = 1000 if strategy == 'baseline' else 400
    return ResourceReport(n_x, n_v, strategy, cx_count, n_x + n_v + 10, 50)


def _run(tmp_path, *argv, name='report.json'):
    out = tmp_path / name
    status = cli.main([*argv, '--out', str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return status, report


class TestSettings:
    def test_flags_override_file(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'n_x': 4, 'n_v': 3, 'eps': 0.01}))
        values = cli.parse_args(['verify', '--config', str(path), '--nx', '3']).settings()
        assert (values['n_x'], values['n_v'], values['eps']) == (3, 3, 0.01)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'n_x': 3, 'bogus': 1}))
        assert cli.main(['verify', '--config', str(path)]) == 1

    def test_bad_strategy_in_file(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'strategy': 'greedy'}))
        with pytest.raises(ConfigError):
            cli.parse_args(['count', '--config', str(path)]).settings()

    def test_source_width_from_environment(self, monkeypatch, tmp_path):
        monkeypatch.setattr(Config, 'SOURCE_WIDTH', 2.5)
        values = cli.parse_args(['solve']).settings()
        assert values['source_width'] == 2.5
        params = cli.build_params(values)
        center = params.x_max / 2
        assert params.source_at(center + 2.5).real == pytest.approx(np.exp(-0.5))

        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'source_width': 1.0}))
        values = cli.parse_args(['solve', '--config', str(path)]).settings()
        assert values['source_width'] == 1.0

    def test_sizes(self):
        assert cli.parse_sizes('3x2, 4X3') == [(3, 2), (4, 3)]
        with pytest.raises(ConfigError):
            cli.parse_sizes('3-2')

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            cli.parse_args(['simulate'])


class TestVerify:
    def test_default_size(self, tmp_path):
        status, report = _run(tmp_path, 'verify')
        assert status == 0
        assert report['passed']
        assert set(report['scales']) == {'s', 's_F', 's_C', 'omega0'}
        assert report['scales']['s'] == pytest.approx(
            report['scales']['s_F'] + report['scales']['s_C'] + report['scales']['omega0'])
        assert report['structure'] == {'block_qubits': 8, 'data_qubits': 6, 'step_width': 15,
                                       'passed': True}
        assert all(row['passed'] for row in report['encodings'])

    def test_too_few_position_qubits(self, tmp_path):
        status, report = _run(tmp_path, 'verify', '--nx', '2', '--nv', '2')
        assert status == 1
        assert report is None

    def test_guard_suggests_count_only(self, tmp_path, caplog):
        status, _ = _run(tmp_path, 'verify', '--nx', '7', '--nv', '4')
        assert status == 1
        assert 'count-only' in caplog.text

    @pytest.mark.slow
    def test_reports_are_reproducible(self, tmp_path):
        _run(tmp_path, 'verify', name='a.json')
        _run(tmp_path, 'verify', name='b.json')
        assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()


class TestSolve:
    def test_without_coupling(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'include_a': False}))
        dump = tmp_path / 'psi.bin'
        status, report = _run(tmp_path, 'solve', '--config', str(path),
                              '--dump-solution', str(dump))
        assert status == 0
        assert report['fidelity'] >= 1 - 1e-6
        assert report['eps'] == pytest.approx(1e-3)
        assert load_matrix(dump).shape == (64, 1)


class TestCount:
    def test_both_strategies(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, 'step_resources', _fake_step)
        status, report = _run(tmp_path, 'count', '--nx', '4', '--nv', '3')
        assert status == 0
        assert [row['strategy'] for row in report['rows']] == ['baseline', 'optimized']
        assert report['rows'][0]['width'] == 17

    def test_count_only_mode(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, 'step_resources', _fake_step)
        status, report = _run(tmp_path, 'verify', '--mode', 'count-only', '--nx', '7',
                              '--nv', '4', '--strategy', 'optimized')
        assert status == 0
        assert report['command'] == 'count'
        assert report['rows'][0]['cx_count'] == 400

    @pytest.mark.slow
    def test_real_counts(self, tmp_path):
        status, report = _run(tmp_path, 'count')
        assert status == 0
        baseline, optimized = report['rows']
        assert optimized['cx_count'] < baseline['cx_count']


class TestSweep:
    def test_writes_table(self, tmp_path, monkeypatch):
        monkeypatch.setattr(resources, 'step_resources', _fake_step)
        csv_path = tmp_path / 'sweep.csv'
        status = cli.main(['sweep', '--sizes', '4x2,3x2', '--out', str(csv_path)])
        assert status == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == 'n_x,n_v,strategy,cx_count,width,depth'
        assert lines[1:] == ['3,2,baseline,1000,15,50', '3,2,optimized,400,15,50',
                             '4,2,baseline,1000,16,50', '4,2,optimized,400,16,50']
        mirror = json.loads(csv_path.with_suffix('.json').read_text())
        assert [r['cx_reduction'] for r in mirror['ratios']] == [2.5, 2.5]

    def test_rejects_small_sizes(self, tmp_path):
        assert cli.main(['sweep', '--sizes', '2x2', '--out', str(tmp_path / 's.csv')]) == 1

import json

import pytest

from quasi_mean_scales import scale
from quasi_mean_scales.cli import qmeans


def _report(result):
    assert result.exit_code == 0, result.stderr
    return json.loads(result.stdout)


def test_eval(runner, sample_csv):
    report = _report(runner.invoke(qmeans, ['eval', '--family', 'power:2', '--data', sample_csv]))
    assert report['mean'] == pytest.approx(8.5 ** .5, abs=1e-12)
    assert report['push'] == 4.25
    assert (report['min'], report['max']) == (1., 4.)


def test_solve(runner, sample_csv):
    report = _report(runner.invoke(qmeans, ['solve', '--family', 'power', '--data', sample_csv, '--target', '2']))
    assert report['t_star'] == pytest.approx(0., abs=1e-9)
    assert report['bounds'] == ['min', 'max']
    assert len(report['bracket_final']) == 2


def test_verify(runner):
    report = _report(runner.invoke(qmeans, ['verify', '--family', 'radical', '--x-grid', '16', '--t-grid', '16']))
    assert report['verdict'] == scale.DECREASING_SCALE
    assert report['n_failures'] == 0
    assert report['reverse_fraction'] == 1.


def test_compare(runner):
    report = _report(runner.invoke(qmeans, ['compare', '--f', 'power:3', '--g', 'power:2']))
    assert report['relation'] == 'greater'


def test_bound_of_identical_generators(runner):
    report = _report(runner.invoke(qmeans, ['bound', '--f', 'power:2', '--k', 'power:2', '--interval', '1,2',
                                            '--samples', '20']))
    assert report['bound'] == 0.
    assert report['empirical_gap'] == 0.


def test_curve_csv(runner, sample_csv):
    result = runner.invoke(qmeans, ['--format', 'csv', 'curve', '--family', 'power', '--data', sample_csv,
                                    '--window', '-5,5', '--points', '5'])
    assert result.exit_code == 0, result.stderr
    lines = result.stdout.splitlines()
    assert lines[0] == 't,mean,error'
    assert len(lines) == 6
    assert lines[3].startswith('0.0,')


def test_settings_file(runner, sample_csv, tmp_path):
    settings = tmp_path / 'settings.yaml'
    settings.write_text(f'family: power\ndata_path: {sample_csv}\ntarget: 2.5\n')
    report = _report(runner.invoke(qmeans, ['--settings', str(settings), 'solve']))
    assert report['t_star'] == pytest.approx(1., abs=1e-9)


def test_reruns_are_byte_identical(runner, sample_csv):
    for command in (['solve', '--family', 'radical', '--data', sample_csv, '--target', '2'],
                    ['--workers', '2', 'verify', '--family', 'power', '--x-grid', '16', '--t-grid', '16'],
                    ['--seed', '3', 'compare', '--f', 'power:3', '--g', 'power:2']):
        first = runner.invoke(qmeans, command)
        second = runner.invoke(qmeans, command)
        assert first.exit_code == 0, first.stderr
        assert first.stdout == second.stdout


def test_validation_errors_exit_with_2(runner, sample_csv):
    result = runner.invoke(qmeans, ['solve', '--family', 'power', '--data', sample_csv, '--target', '5'])
    assert result.exit_code == 2
    assert json.loads(result.stderr.splitlines()[-1])['code'] == 'target_out_of_range'
    assert result.stdout == ''

    result = runner.invoke(qmeans, ['solve', '--family', 'power', '--data', sample_csv])
    assert result.exit_code == 2
    assert json.loads(result.stderr.splitlines()[-1])['code'] == 'validation'


def test_numerical_errors_exit_with_3(runner, tmp_path):
    path = tmp_path / 'wide.csv'
    path.write_text('value\n1\n10\n')
    result = runner.invoke(qmeans, ['eval', '--family', 'x-pow-x:50', '--data', str(path)])
    assert result.exit_code == 3
    assert json.loads(result.stderr.splitlines()[-1])['code'] == 'numerical_failure'


def test_unknown_family_is_a_usage_error(runner):
    result = runner.invoke(qmeans, ['verify', '--family', 'gini'])
    assert result.exit_code == 2
    assert 'gini' in result.stderr

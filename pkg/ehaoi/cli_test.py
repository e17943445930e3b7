import io
import json

import pandas as pd
import pytest
from click.testing import CliRunner

from ehaoi.cli import cli

SYSTEM = ['--lambda', '0.5,0.5', '--eta', '1.5', '--mu', '1', '--battery', '2']


@pytest.fixture
def runner():
  return CliRunner()


def test_jfi(runner):
  result = runner.invoke(cli, ['jfi', '--values', '2,4'])
  assert result.exit_code == 0, result.output
  assert float(result.stdout) == pytest.approx(0.9)


def test_analyze_json(runner):
  args = ['analyze', '--lambda', '1', '--eta', '1', '--battery', '2', '--discipline', 'wp']
  result = runner.invoke(cli, args + ['--mgf-at', '0', '--format', 'json'])
  assert result.exit_code == 0, result.output
  report = json.loads(result.stdout)
  assert report['mean'] == pytest.approx(2.8)
  assert report['second_moment'] == pytest.approx(11.2)
  assert report['mgf_samples'][0]['value'] == pytest.approx(1.0)


def test_analyze_table(runner):
  result = runner.invoke(cli, ['analyze', *SYSTEM, '--discipline', 'sa', '--method', 'shs'])
  assert result.exit_code == 0, result.output
  assert 'shs analysis' in result.stdout


def test_config_file_with_flag_override(runner, tmp_path):
  path = tmp_path / 'run.json'
  path.write_text(json.dumps({'lambda': [1.0], 'eta': 2.0, 'battery': 2, 'discipline': 'ps'}))
  result = runner.invoke(
    cli, ['analyze', '--config', str(path), '--eta', '1', '--format', 'json']
  )
  assert result.exit_code == 0, result.output
  report = json.loads(result.stdout)
  assert report['discipline'] == 'ps'
  assert report['mean'] == pytest.approx(2.3)


def test_analyze_csv(runner):
  args = ['analyze', '--lambda', '1', '--eta', '1', '--battery', '2', '--discipline', 'wp']
  result = runner.invoke(cli, args + ['--mgf-at', '0,0.5', '--format', 'csv'])
  assert result.exit_code == 0, result.output
  frame = pd.read_csv(io.StringIO(result.stdout))
  assert list(frame.columns) == [
    'discipline',
    'source',
    'mean',
    'second_moment',
    'std',
    'domain_bound',
    'mgf_0',
    'mgf_0.5',
  ]
  assert frame.loc[0, 'discipline'] == 'wp'
  assert frame.loc[0, 'mean'] == pytest.approx(2.8)
  assert frame.loc[0, 'mgf_0'] == pytest.approx(1.0)


def test_compare_csv(runner, tmp_path):
  out = tmp_path / 'compare.csv'
  result = runner.invoke(cli, ['compare', *SYSTEM, '--format', 'csv', '--out', str(out)])
  assert result.exit_code == 0, result.output
  frame = pd.read_csv(out)
  assert list(frame['discipline']) == ['wp', 'wp', 'ps', 'ps', 'sa', 'sa']
  assert list(frame['source']) == [1, 2] * 3
  assert {'sum_aoi', 'jfi'} <= set(frame.columns)
  wp = frame[frame['discipline'] == 'wp']
  assert wp['sum_aoi'].iloc[0] == pytest.approx(wp['mean'].sum())


def test_compare_json(runner):
  result = runner.invoke(cli, ['compare', *SYSTEM, '--format', 'json'])
  assert result.exit_code == 0, result.output
  comparison = json.loads(result.stdout)
  assert [s['discipline'] for s in comparison['summaries']] == ['wp', 'ps', 'sa']
  assert set(comparison['gaps']) == {'wp-ps', 'wp-sa', 'sa-ps'}


def test_sweep_csv(runner, tmp_path):
  out = tmp_path / 'sweep.csv'
  result = runner.invoke(cli, ['sweep', '--sweep', 'beta=1:2:2', '--out', str(out)])
  assert result.exit_code == 0, result.output
  assert len(out.read_text().splitlines()) == 3


def test_simulate_is_reproducible(runner):
  args = ['simulate', *SYSTEM, '--discipline', 'wp', '--horizon', '2000', '--replications', '2']
  args += ['--mgf-at', '0']
  first = runner.invoke(cli, args)
  second = runner.invoke(cli, args)
  assert first.exit_code == 0, first.output
  assert first.stdout == second.stdout
  document = json.loads(first.stdout)
  mgf_checks = [c for c in document['checks'] if c['metric'] == 'mgf0']
  assert len(mgf_checks) == 2
  assert all(c['pass'] and c['simulated'] == 1.0 for c in mgf_checks)
  assert 'mean_batches' not in document['sources'][0]


def test_simulate_trace(runner, tmp_path):
  trace = tmp_path / 'events.txt'
  args = ['simulate', *SYSTEM, '--discipline', 'ps', '--horizon', '100', '--trace', str(trace)]
  result = runner.invoke(cli, args)
  assert result.exit_code == 0, result.output
  assert json.loads(result.stdout)['replications'] == 1
  assert trace.read_text().count('\n') > 10


def test_dump_model(runner):
  result = runner.invoke(cli, ['dump-model', *SYSTEM, '--discipline', 'sa'])
  assert result.exit_code == 0, result.output
  assert result.stdout.startswith('# states: 7\n')


@pytest.mark.parametrize(
  'args',
  [
    ['analyze', *SYSTEM, '--source', '3'],
    ['analyze', '--lambda', '1,0', '--eta', '1', '--battery', '2'],
    ['analyze', *SYSTEM, '--mgf-at', '5'],
    ['sweep', '--sweep', 'beta=2:1:3'],
    ['jfi', '--values', '1,-1'],
  ],
)
def test_errors_exit_with_status_one(runner, args):
  result = runner.invoke(cli, args)
  assert result.exit_code == 1
  assert 'Error' in result.output

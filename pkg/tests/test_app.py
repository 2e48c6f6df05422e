"""End-to-end runs through the command line entry point"""
import json
import os

import pytest

import app
from services.pipeline_service import ARTIFACTS, EXTRA_ARTIFACTS

SYMBOLS = ['A', 'B', 'C', 'D', 'E']


def _snapshot(directory):
    return {name: open(os.path.join(directory, name), 'rb').read() for name in sorted(os.listdir(directory))}


@pytest.fixture(scope='module')
def run_dir(tmp_path_factory, synthetic_manifest):
    outdir = str(tmp_path_factory.mktemp('run'))
    code = app.main(['run', '--manifest', synthetic_manifest, '--output-dir', outdir,
                     '--surrogates', '5', '--seed', '3', '--jobs', '2'])
    assert code == 0
    return outdir


def test_run_writes_every_artifact(run_dir):
    names = set(os.listdir(run_dir))
    assert set(ARTIFACTS) <= names
    assert set(EXTRA_ARTIFACTS) <= names
    assert not any(name.endswith('.tmp') for name in names)


def test_run_artifact_schemas(run_dir):
    def lines(name):
        with open(os.path.join(run_dir, name), encoding='utf-8') as f:
            return f.read().splitlines()

    assert lines('te_matrix.csv')[0] == 'source,' + ','.join(SYMBOLS)
    assert lines('te_matrix.csv')[1].startswith('A,NA,')
    assert lines('corr_matrix.csv')[0] == 'symbol,' + ','.join(SYMBOLS)
    assert lines('corr_matrix.csv')[1].startswith('A,1.0,')
    assert len(lines('flow_profiles.csv')) == 6
    assert len(lines('surrogates.csv')) == 1 + 5 * 4
    assert lines('flow_out.dot')[0] == 'digraph "flow_out" {'
    assert lines('flow_in.dot')[0] == 'digraph "flow_in" {'
    for name in ('te_map.pgm', 'corr_map.pgm'):
        with open(os.path.join(run_dir, name), 'rb') as f:
            data = f.read()
        assert data.startswith(b'P5\n# scale min=')
        assert len(data.split(b'\n255\n', 1)[1]) == 25


def test_run_metadata(run_dir):
    with open(os.path.join(run_dir, 'run_metadata.json'), encoding='utf-8') as f:
        metadata = json.load(f)
    assert metadata['config']['seed'] == 3
    assert metadata['config']['surrogates'] == 5
    assert metadata['tool_version']
    assert 'PCG64' in metadata['random_generator']
    assert [m['symbol'] for m in metadata['markets']] == SYMBOLS
    assert metadata['sample_counts']['min'] == 599
    assert metadata['surrogate_pairs'] == 20
    assert metadata['graphs']['out']['hub'] == 'A'


def test_rerun_is_byte_identical(run_dir, synthetic_manifest):
    before = _snapshot(run_dir)
    code = app.main(['run', '--manifest', synthetic_manifest, '--output-dir', run_dir,
                     '--surrogates', '5', '--seed', '3', '--jobs', '2'])
    assert code == 0
    assert _snapshot(run_dir) == before


def test_unreadable_market_fails_in_ingest(write_csv, two_column_prices, tmp_path, capsys):
    two_column_prices('prices/a.csv', [100.0, 101.0, 99.0, 98.0])
    manifest = write_csv('manifest.csv', 'symbol,path,region\nA,prices/a.csv,X\nB,prices/missing.csv,X\n')
    outdir = tmp_path / 'out'
    code = app.main(['run', '--manifest', manifest, '--output-dir', str(outdir)])
    assert code == 2
    assert "stage 'ingest'" in capsys.readouterr().err
    assert not outdir.exists() or not os.listdir(outdir)


def test_invalid_config_value_exits_with_1(synthetic_manifest, tmp_path):
    code = app.main(['run', '--manifest', synthetic_manifest, '--output-dir', str(tmp_path), '--surrogates', '0'])
    assert code == 1


def test_usage_error_exits_with_1():
    with pytest.raises(SystemExit) as excinfo:
        app.main(['te', '--k', 'one'])
    assert excinfo.value.code == 1
    with pytest.raises(SystemExit) as excinfo:
        app.main(['frobnicate'])
    assert excinfo.value.code == 1


def test_template(tmp_path, capsys):
    path = tmp_path / 'teflow.env'
    assert app.main(['run', '--template', str(path)]) == 0
    assert 'THRESHOLD=0.04' in path.read_text()


def test_synth_then_te(tmp_path, capsys):
    outdir = tmp_path / 'synth'
    assert app.main(['synth', '--epsilon', '1', '--length', '5000', '--seed', '2',
                     '--outdir', str(outdir), '--sym']) == 0
    assert {'driver.csv', 'follower.csv', 'manifest.csv', 'driver.sym', 'follower.sym'} <= set(os.listdir(outdir))
    capsys.readouterr()

    assert app.main(['te', '--k', '1', '--l', '1', '--base', '2',
                     str(outdir / 'driver.sym'), str(outdir / 'follower.sym')]) == 0
    forward, backward = capsys.readouterr().out.splitlines()
    assert forward.startswith('driver -> follower: ')
    assert abs(float(forward.split()[3]) - 1.58496) < 0.02
    assert backward.startswith('follower -> driver: ')
    assert float(backward.split()[3]) < 0.01


def test_te_needs_two_files(capsys):
    assert app.main(['te', 'only-one.sym']) == 1


def test_surrogate_on_symbol_files(tmp_path, capsys):
    outdir = tmp_path / 'synth'
    app.main(['synth', '--epsilon', '1', '--length', '3000', '--outdir', str(outdir), '--sym'])
    capsys.readouterr()
    assert app.main(['surrogate', '--M', '4', '--seed', '1',
                     str(outdir / 'driver.sym'), str(outdir / 'follower.sym')]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith('driver -> follower: observed ')
    assert '(M=4, seed=1)' in out[0]


def test_render_and_graph_commands_match_run(run_dir, synthetic_manifest, tmp_path):
    pgm = tmp_path / 'te_map.pgm'
    assert app.main(['render', os.path.join(run_dir, 'te_matrix.csv'), '-o', str(pgm)]) == 0
    with open(os.path.join(run_dir, 'te_map.pgm'), 'rb') as f:
        assert pgm.read_bytes() == f.read()

    graph_dir = tmp_path / 'graphs'
    assert app.main(['graph', os.path.join(run_dir, 'te_matrix.csv'), '--manifest', synthetic_manifest,
                     '--output-dir', str(graph_dir)]) == 0
    for name in ('flow_out.dot', 'flow_in.dot', 'flow_out_edges.csv'):
        with open(os.path.join(run_dir, name), 'rb') as f:
            assert (graph_dir / name).read_bytes() == f.read()


def test_render_default_name(reference_matrix, tmp_path):
    from services.entropy_service import write_matrix_csv
    matrix_path = tmp_path / 'te_matrix.csv'
    write_matrix_csv(reference_matrix.symbols, reference_matrix.values, str(matrix_path))
    assert app.main(['render', str(matrix_path)]) == 0
    assert (tmp_path / 'te_map.pgm').exists()


def test_returns_and_symbolize_commands(two_column_prices, tmp_path):
    path = two_column_prices('idx.csv', [100.0, 105.0, 104.9, 99.0, 99.1])
    assert app.main(['returns', path]) == 0
    returns = (tmp_path / 'idx.returns.csv').read_text().splitlines()
    assert returns[0] == 'date,return'
    assert len(returns) == 5

    assert app.main(['symbolize', path, '--threshold', '0.04']) == 0
    assert (tmp_path / 'idx.sym').read_text() == '2101\n'
    assert app.main(['symbolize', path, '--terciles', '-o', str(tmp_path / 'idx_t.sym')]) == 0
    assert len((tmp_path / 'idx_t.sym').read_text().strip()) == 4


def test_corr_command(synthetic_manifest, tmp_path):
    output = tmp_path / 'corr.csv'
    assert app.main(['corr', '--manifest', synthetic_manifest, '-o', str(output)]) == 0
    assert output.read_text().splitlines()[0] == 'symbol,' + ','.join(SYMBOLS)


def test_run_without_manifest_exits_with_1(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv('TEFLOW_MANIFEST', raising=False)
    assert app.main(['run', '--output-dir', str(tmp_path)]) == 1
    assert "stage 'ingest'" in capsys.readouterr().err


def test_shuffled_profiles_sit_far_below_observed(run_dir):
    def out_sums(name):
        with open(os.path.join(run_dir, name), encoding='utf-8') as f:
            rows = [line.split(',') for line in f.read().splitlines()]
        assert rows[0][3] == 'out_sum'
        return {row[1]: float(row[3]) for row in rows[1:]}

    observed, shuffled = out_sums('flow_profiles.csv'), out_sums('flow_profiles_shuffled.csv')
    assert list(shuffled) == SYMBOLS
    assert 0 < shuffled['A'] < observed['A'] / 10

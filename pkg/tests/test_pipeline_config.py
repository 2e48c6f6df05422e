import pytest

from errors import ConfigError
from pipeline_config import PipelineConfig, create_config_template


def test_defaults_match_published_settings():
    config = PipelineConfig()
    assert config.threshold == 0.04
    assert (config.k, config.l) == (1, 1)
    assert config.log_base == '2'
    assert config.scheme == 'threshold'
    assert config.graph_algorithm == 'branching'
    assert config.graph_input == 'raw'


def test_precedence_file_env_flags(write_csv):
    path = write_csv('run.env', 'THRESHOLD=0.02\nK=2\nSEED=5\nSURROGATES=10\n')
    config = PipelineConfig.from_sources(path, overrides={'seed': 9, 'k': None},
                                         environ={'TEFLOW_SURROGATES': '20', 'TEFLOW_K': '3', 'HOME': '/x'})
    assert config.threshold == 0.02
    assert config.k == 3
    assert config.surrogates == 20
    assert config.seed == 9


def test_synth_keys_are_ignored(write_csv):
    path = write_csv('run.env', 'SYNTH_EPSILON=0.5\nJOBS=2\n')
    assert PipelineConfig.from_sources(path, environ={}).jobs == 2


@pytest.mark.parametrize('text', [
    'SCHEME=quartiles\n',
    'THRESHOLD=-0.1\n',
    'K=0\n',
    'LOG_BASE=3\n',
    'SURROGATES=0\n',
    'SOURCE_LAG=-1\n',
    'K=one\n',
    'COLOUR=blue\n',
])
def test_invalid_values_raise_config_error(write_csv, text):
    path = write_csv('bad.env', text)
    with pytest.raises(ConfigError):
        PipelineConfig.from_sources(path, environ={})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig.from_sources(str(tmp_path / 'nope.env'), environ={})


def test_template_is_a_valid_config(tmp_path):
    path = create_config_template(str(tmp_path / 'teflow.env'))
    config = PipelineConfig.from_sources(path, environ={})
    assert config.manifest == 'data/markets.csv'
    assert config.price_format == 'yahoo-ohlc'
    assert config.surrogates == 100


def test_as_dict_lists_every_field():
    values = PipelineConfig(seed=3).as_dict()
    assert values['seed'] == 3
    assert set(values) >= {'manifest', 'threshold', 'k', 'l', 'log_base', 'alignment', 'surrogates',
                           'graph_algorithm', 'output_dir'}

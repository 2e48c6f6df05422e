import math

import numpy as np
import pytest

from errors import ConfigError, DataError, InvariantError
from models import CoupledProcessSpec, EmbeddingConfig, JointCounts, ReturnSeries, SymbolSequence
from services.entropy_service import (count_joint, count_states, cross_correlation_matrix, entropy_rate,
                                      lagged_mutual_information, pairwise_te, read_matrix_csv, read_te_matrix, te_matrix,
                                      transfer_entropy, transfer_entropy_decomposed, transfer_entropy_direct,
                                      write_matrix_csv, _clamp)
from services.synth_service import brute_force_te, generate

LOG2_3 = math.log2(3)


def _seq(states, symbol='X', alphabet_size=3):
    return SymbolSequence(symbol, np.asarray(states), alphabet_size)


def _random_seq(rng, n, symbol, alphabet_size=3):
    return _seq(rng.integers(0, alphabet_size, n), symbol, alphabet_size)


def _returns(symbol, values):
    dates = np.arange(np.datetime64('2015-01-01'), np.datetime64('2015-01-01') + len(values))
    return ReturnSeries(symbol, dates, values)


def test_count_joint_hand_enumeration():
    seq = _seq([0, 1, 2])
    counts = count_joint(seq, seq, EmbeddingConfig())
    assert counts.total == 2
    assert counts.as_dict() == {(1, (0,), (0,)): 1, (2, (1,), (1,)): 1}


def test_count_joint_constant_sequence():
    seq = _seq([1, 1, 1, 1])
    assert count_joint(seq, seq, EmbeddingConfig()).as_dict() == {(1, (1,), (1,)): 3}


def test_count_joint_longer_history():
    target = _seq([0, 1, 2, 0, 1])
    source = _seq([2, 2, 1, 0, 0])
    counts = count_joint(target, source, EmbeddingConfig(k=2, l=1))
    assert counts.total == 3
    assert counts.as_dict() == {(2, (0, 1), (2,)): 1, (0, (1, 2), (1,)): 1, (1, (2, 0), (0,)): 1}


def test_count_joint_errors():
    with pytest.raises(DataError):
        count_joint(_seq([0, 1, 2]), _seq([0, 1]), EmbeddingConfig())
    with pytest.raises(DataError):
        count_joint(_seq([0, 1]), _seq([0, 1]), EmbeddingConfig(k=2))


def test_dense_table_cap():
    with pytest.raises(ConfigError):
        count_states(np.zeros(50, dtype=int), np.zeros(50, dtype=int), 3, 8, 8)


def test_embedding_config_validation():
    with pytest.raises(ConfigError):
        EmbeddingConfig(k=0)
    with pytest.raises(ConfigError):
        EmbeddingConfig(log_base='3')


def test_entropy_rate_of_constant_sequence_is_zero():
    seq = _seq([2] * 50)
    counts = count_joint(seq, seq, EmbeddingConfig())
    assert entropy_rate(counts, 'target') == 0.0
    assert entropy_rate(counts, 'joint') == 0.0


def test_entropy_rate_uniform_iid():
    rng = np.random.default_rng(0)
    target, source = _random_seq(rng, 100000, 'I'), _random_seq(rng, 100000, 'J')
    counts = count_joint(target, source, EmbeddingConfig())
    assert abs(entropy_rate(counts, 'target') - LOG2_3) < 0.01
    assert entropy_rate(counts, 'joint') <= entropy_rate(counts, 'target')


def test_entropy_rate_needs_counts():
    empty = JointCounts(np.zeros((3, 3, 3), dtype=np.int64), 3, 1, 1)
    with pytest.raises(DataError):
        entropy_rate(empty)


def test_full_copy_gives_log_alphabet():
    driver, follower = generate(CoupledProcessSpec(alphabet=3, epsilon=1.0, length=100000, seed=1,
                                                   topology=(('J', 'I'),)))
    cfg = EmbeddingConfig()
    assert abs(transfer_entropy(follower, driver, cfg) - LOG2_3) < 0.01
    assert transfer_entropy(driver, follower, cfg) <= 0.01


def test_log_base_changes_units_only():
    rng = np.random.default_rng(9)
    target, source = _random_seq(rng, 3000, 'I'), _random_seq(rng, 3000, 'J')
    bits = transfer_entropy(target, source, EmbeddingConfig(log_base='2'))
    nats = transfer_entropy(target, source, EmbeddingConfig(log_base='e'))
    assert nats == pytest.approx(bits * math.log(2), rel=1e-12)


def test_single_key_counts_are_zero():
    seq = _seq([0] * 20)
    counts = count_joint(seq, seq, EmbeddingConfig())
    assert transfer_entropy_direct(counts) == 0.0
    assert transfer_entropy_decomposed(counts) == 0.0


@pytest.mark.parametrize('k,l', [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_direct_and_decomposed_forms_agree(k, l):
    cfg = EmbeddingConfig(k=k, l=l)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        target = _random_seq(rng, 1000, 'I')
        source = _seq(np.where(rng.random(1000) < 0.3, np.roll(target.states, 1), rng.integers(0, 3, 1000)), 'J')
        counts = count_joint(target, source, cfg)
        assert abs(transfer_entropy_direct(counts) - transfer_entropy_decomposed(counts)) < 1e-12


def test_matches_brute_force_on_short_binary_sequences():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 13))
        target, source = _random_seq(rng, n, 'I', 2), _random_seq(rng, n, 'J', 2)
        for cfg in (EmbeddingConfig(), EmbeddingConfig(k=2, l=1)):
            if n - cfg.window_offset < 1:
                continue
            assert abs(transfer_entropy(target, source, cfg) - brute_force_te(target, source, cfg)) < 1e-12


def test_relabeling_invariance():
    rng = np.random.default_rng(4)
    target = _random_seq(rng, 2000, 'I')
    source = _seq(np.where(rng.random(2000) < 0.5, np.roll(target.states, 1), rng.integers(0, 3, 2000)), 'J')
    relabel = np.array([2, 0, 1])
    cfg = EmbeddingConfig()
    original = transfer_entropy(target, source, cfg)
    renamed = transfer_entropy(_seq(relabel[target.states]), _seq(relabel[source.states]), cfg)
    assert abs(original - renamed) < 1e-12


def test_negative_clamp():
    assert _clamp(-1e-15) == 0.0
    assert _clamp(0.25) == 0.25
    with pytest.raises(InvariantError):
        _clamp(-1e-6)


@pytest.mark.slow
def test_plug_in_bias_on_independent_pairs():
    n = 2000
    expected = (3 - 1) * 3 * (3 - 1) / (2 * n * math.log(2))
    values = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        values.append(transfer_entropy(_random_seq(rng, n, 'I'), _random_seq(rng, n, 'J'), EmbeddingConfig()))
    assert 0.5 * expected <= np.mean(values) <= 2.0 * expected


def test_lagged_mutual_information():
    driver, follower = generate(CoupledProcessSpec(alphabet=3, epsilon=1.0, length=20000, seed=2,
                                                   topology=(('J', 'I'),)))
    counts = count_joint(follower, driver, EmbeddingConfig())
    assert abs(lagged_mutual_information(counts) - LOG2_3) < 0.01


def test_pairwise_te_both_directions():
    driver, follower = generate(CoupledProcessSpec(alphabet=3, epsilon=1.0, length=20000, seed=3,
                                                   topology=(('J', 'I'),)))
    forward, backward = pairwise_te(driver, follower, EmbeddingConfig())
    assert forward > 1.5
    assert backward < 0.01


def test_te_matrix_identical_series_is_symmetric():
    rng = np.random.default_rng(6)
    states = rng.integers(0, 3, 500)
    matrix = te_matrix([_seq(states, 'A'), _seq(states, 'B')], EmbeddingConfig())
    assert matrix.values[0, 1] == matrix.values[1, 0]
    assert np.isnan(matrix.values[0, 0]) and np.isnan(matrix.values[1, 1])
    assert matrix.samples[0, 1] == 499


def test_te_matrix_symbolizes_returns_and_marks_missing_pairs():
    rng = np.random.default_rng(8)
    a = _returns('A', rng.normal(0, 0.05, 200))
    b = _returns('B', rng.normal(0, 0.05, 200))
    late = ReturnSeries('C', np.arange(np.datetime64('2030-01-01'), np.datetime64('2030-01-01') + 50),
                        rng.normal(0, 0.05, 50))
    matrix = te_matrix([a, b, late], EmbeddingConfig())
    assert np.isfinite(matrix.values[0, 1]) and np.isfinite(matrix.values[1, 0])
    assert np.isnan(matrix.values[0, 2]) and np.isnan(matrix.values[2, 1])
    assert matrix.samples[0, 1] == 199


def test_te_matrix_same_for_any_worker_count():
    rng = np.random.default_rng(12)
    panel = [_random_seq(rng, 400, name) for name in 'ABCD']
    serial = te_matrix(panel, EmbeddingConfig(), jobs=1)
    parallel = te_matrix(panel, EmbeddingConfig(), jobs=2)
    assert np.array_equal(serial.values, parallel.values, equal_nan=True)


@pytest.mark.slow
def test_planted_chain_is_directional():
    spec = CoupledProcessSpec(alphabet=3, epsilon=1.0, length=100000, seed=5, topology=(('A', 'B'), ('B', 'C')))
    matrix = te_matrix(generate(spec), EmbeddingConfig())
    assert matrix.flow('A', 'B') >= 5 * matrix.flow('B', 'A')
    assert matrix.flow('B', 'C') >= 5 * matrix.flow('C', 'B')


def test_te_matrix_needs_two_series():
    with pytest.raises(DataError):
        te_matrix([_seq([0, 1, 2], 'A')], EmbeddingConfig())


def test_cross_correlation_basics():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, 10000)
    y = rng.normal(0, 1, 10000)
    corr = cross_correlation_matrix([_returns('X', x), _returns('X2', x), _returns('NX', -x), _returns('Y', y)])
    values = corr.values
    assert np.all(np.diag(values) == 1.0)
    assert values[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert values[0, 2] == pytest.approx(-1.0, abs=1e-12)
    assert abs(values[0, 3]) < 0.05
    assert np.allclose(values, values.T, atol=1e-12)


def test_cross_correlation_zero_variance_is_undefined():
    rng = np.random.default_rng(1)
    corr = cross_correlation_matrix([_returns('X', rng.normal(0, 1, 50)), _returns('Z', np.zeros(50))])
    assert np.isnan(corr.values[0, 1])
    assert corr.values[1, 1] == 1.0


def test_matrix_csv_round_trip(reference_matrix, tmp_path):
    path = tmp_path / 'te_matrix.csv'
    write_matrix_csv(reference_matrix.symbols, reference_matrix.values, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == 'source,A,B,C'
    assert lines[1] == 'A,NA,0.1,0.2'
    again = read_te_matrix(str(path))
    assert again.symbols == ['A', 'B', 'C']
    assert np.array_equal(again.values, reference_matrix.values, equal_nan=True)


def test_matrix_csv_keeps_every_bit(tmp_path):
    rng = np.random.default_rng(12)
    symbols = [f"M{n:02d}" for n in range(25)]
    values = rng.random((25, 25)) * 10.0 ** rng.integers(-8, 2, (25, 25))
    values[0, 1] = -values[0, 1]
    np.fill_diagonal(values, np.nan)
    path = tmp_path / 'te_matrix.csv'
    write_matrix_csv(symbols, values, str(path))

    read_symbols, again = read_matrix_csv(str(path))
    assert read_symbols == symbols
    assert np.array_equal(again, values, equal_nan=True)

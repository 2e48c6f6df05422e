"""
Plug-in estimation of entropy rates, transfer entropy and cross-correlation.

Probabilities are empirical frequencies over the usable windows; zero-count
terms contribute nothing. Every estimate is computed from one dense count
table so the two transfer entropy forms see identical inputs.
"""

import logging
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from errors import AlignmentError, ConfigError, DataError, InvariantError, ParseError
from helpers import format_float, write_text
from models import (CorrelationMatrix, EmbeddingConfig, JointCounts, MAX_DENSE_CELLS,
                    ReturnSeries, SymbolSequence, TEMatrix)
from services.ingest_service import align_indices
from services.symbol_service import symbolize_fixed

logger = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 1e-12


def _history_codes(states, length, positions, alphabet_size):
    """Base-A code of states[t-length+1 .. t] for each t, oldest sample first"""
    codes = np.zeros(len(positions), dtype=np.int64)
    for offset in range(length - 1, -1, -1):
        codes = codes * alphabet_size + states[positions - offset]
    return codes


def count_states(target, source, alphabet_size, k, l, log_base='2') -> JointCounts:
    """count_joint on raw state arrays; used directly by the surrogate loop"""
    target = np.asarray(target, dtype=np.int64)
    source = np.asarray(source, dtype=np.int64)
    if len(target) != len(source):
        raise DataError(f"sequence lengths differ: target {len(target)}, source {len(source)}")
    offset = max(k, l)
    if len(target) - offset < 1:
        raise DataError(f"{len(target)} samples leave no window for k={k}, l={l}")
    cells = alphabet_size ** (1 + k + l)
    if cells > MAX_DENSE_CELLS:
        raise ConfigError(f"embedding needs {cells} count cells; reduce k, l or the alphabet")

    positions = np.arange(offset - 1, len(target) - 1)
    target_history = _history_codes(target, k, positions, alphabet_size)
    source_history = _history_codes(source, l, positions, alphabet_size)
    packed = (target[positions + 1] * alphabet_size ** k + target_history) * alphabet_size ** l + source_history
    table = np.bincount(packed, minlength=cells).reshape(alphabet_size, alphabet_size ** k, alphabet_size ** l)
    return JointCounts(table, alphabet_size, k, l, log_base)


def count_joint(target: SymbolSequence, source: SymbolSequence, cfg: EmbeddingConfig) -> JointCounts:
    """
    Count (target[t+1], target[t-k+1..t], source[t-l+1..t]) for every t from
    max(k, l) - 1 to N - 2. The sequences must already be aligned.
    """
    alphabet_size = max(target.alphabet_size, source.alphabet_size)
    return count_states(target.states, source.states, alphabet_size, cfg.k, cfg.l, cfg.log_base)


def _marginals(counts: JointCounts):
    table = counts.table
    next_and_target = table.sum(axis=2)
    return table, table.sum(axis=0), next_and_target, next_and_target.sum(axis=0)


def entropy_rate(counts: JointCounts, which='target') -> float:
    """
    h_I(k) for which='target' (source history marginalized out) or
    h_IJ(k, l) for which='joint'.
    """
    total = counts.total
    if total < 1:
        raise DataError("entropy rate of empty counts")
    table, target_source, next_target, target_only = _marginals(counts)
    if which == 'joint':
        present = table > 0
        cells = table[present]
        given = np.broadcast_to(target_source[np.newaxis], table.shape)[present]
    elif which == 'target':
        present = next_target > 0
        cells = next_target[present]
        given = np.broadcast_to(target_only[np.newaxis], next_target.shape)[present]
    else:
        raise ValueError(f"which must be 'target' or 'joint', got {which!r}")
    cells = cells.astype(np.float64)
    h = -np.sum(cells / total * np.log(cells / given))
    return float(h / counts.log_factor)


def _clamp(te):
    if te < 0:
        if te < -NEGATIVE_TOLERANCE:
            raise InvariantError(f"plug-in transfer entropy came out negative: {te!r}")
        return 0.0
    return te


def transfer_entropy_decomposed(counts: JointCounts) -> float:
    """T = h_I(k) - h_IJ(k, l)"""
    return _clamp(entropy_rate(counts, 'target') - entropy_rate(counts, 'joint'))


def transfer_entropy_direct(counts: JointCounts) -> float:
    """Sum of p(i', i, j) log p(i' | i, j) / p(i' | i) evaluated term by term"""
    total = counts.total
    if total < 1:
        raise DataError("transfer entropy of empty counts")
    table, target_source, next_target, target_only = _marginals(counts)
    present = table > 0
    joint = table[present].astype(np.float64)
    shape = table.shape
    given_both = np.broadcast_to(target_source[np.newaxis], shape)[present]
    next_given_target = np.broadcast_to(next_target[:, :, np.newaxis], shape)[present]
    given_target = np.broadcast_to(target_only[np.newaxis, :, np.newaxis], shape)[present]
    ratio = (joint / given_both) / (next_given_target / given_target)
    te = np.sum(joint / total * np.log(ratio))
    return _clamp(float(te / counts.log_factor))


def lagged_mutual_information(counts: JointCounts) -> float:
    """I(i_{t+1}; j_t^(l)) ignoring the target's own history"""
    total = counts.total
    if total < 1:
        raise DataError("mutual information of empty counts")
    next_source = counts.table.sum(axis=1).astype(np.float64)
    next_only = next_source.sum(axis=1)
    source_only = next_source.sum(axis=0)
    present = next_source > 0
    expected = np.outer(next_only, source_only)[present] / total
    mi = np.sum(next_source[present] / total * np.log(next_source[present] / expected))
    return max(0.0, float(mi / counts.log_factor))


def transfer_entropy(target: SymbolSequence, source: SymbolSequence, cfg: EmbeddingConfig) -> float:
    return transfer_entropy_decomposed(count_joint(target, source, cfg))


def paired_states(target: SymbolSequence, source: SymbolSequence, lag=0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Target and source states on a shared calendar.

    Dated sequences are intersected by date; positional ones must have equal
    length. ``lag`` delays the source by that many shared samples.
    """
    if target.dates is not None and source.dates is not None:
        _, target_index, source_index = align_indices(target.dates, source.dates, lag,
                                                      names=(target.symbol, source.symbol))
        return target.states[target_index], source.states[source_index]
    if len(target) != len(source):
        raise AlignmentError(f"undated sequences {target.symbol} and {source.symbol} differ in length")
    if lag:
        return target.states[lag:], source.states[:-lag]
    return target.states, source.states


def pairwise_te(a: SymbolSequence, b: SymbolSequence, cfg: EmbeddingConfig, lag=0) -> Tuple[float, float]:
    """(T_{a->b}, T_{b->a})"""
    alphabet_size = max(a.alphabet_size, b.alphabet_size)
    b_states, a_states = paired_states(b, a, lag)
    forward = transfer_entropy_decomposed(count_states(b_states, a_states, alphabet_size, cfg.k, cfg.l, cfg.log_base))
    a_states, b_states = paired_states(a, b, lag)
    backward = transfer_entropy_decomposed(count_states(a_states, b_states, alphabet_size, cfg.k, cfg.l, cfg.log_base))
    return forward, backward


def _te_row(source_index, panel, cfg, lag):
    source = panel[source_index]
    values = np.full(len(panel), np.nan)
    samples = np.zeros(len(panel), dtype=np.int64)
    for target_index, target in enumerate(panel):
        if target_index == source_index:
            continue
        try:
            target_states, source_states = paired_states(target, source, lag)
            counts = count_states(target_states, source_states,
                                  max(target.alphabet_size, source.alphabet_size),
                                  cfg.k, cfg.l, cfg.log_base)
        except DataError as e:
            logger.warning(f"No estimate for {source.symbol} -> {target.symbol}: {e}")
            continue
        values[target_index] = transfer_entropy_decomposed(counts)
        samples[target_index] = counts.total
    return values, samples


def te_matrix(panel: Sequence[Union[SymbolSequence, ReturnSeries]], cfg: EmbeddingConfig,
              lag=0, jobs=1, symbolizer=None) -> TEMatrix:
    """
    Transfer entropy for every ordered pair of the panel.

    Return series are symbolized first (fixed threshold 0.04 unless a
    ``symbolizer`` is given). Pairs without a usable window stay NaN.
    """
    if len(panel) < 2:
        raise DataError(f"a TE matrix needs at least 2 series, got {len(panel)}")
    symbolizer = symbolizer or symbolize_fixed
    sequences = [s if isinstance(s, SymbolSequence) else symbolizer(s) for s in panel]
    symbols = [s.symbol for s in sequences]
    if len(set(symbols)) != len(symbols):
        raise DataError("panel symbols must be unique")

    logger.info(f"Estimating TE for {len(symbols) * (len(symbols) - 1)} ordered pairs "
                f"(k={cfg.k}, l={cfg.l}, base {cfg.log_base}, jobs={jobs})")
    rows = Parallel(n_jobs=jobs)(delayed(_te_row)(j, sequences, cfg, lag) for j in range(len(sequences)))
    values = np.vstack([row for row, _ in rows])
    samples = np.vstack([count for _, count in rows])
    return TEMatrix(symbols, values, cfg, samples)


def cross_correlation_matrix(panel: List[ReturnSeries], mode='pairwise-intersection') -> CorrelationMatrix:
    """Pearson correlation of log returns, each pair on its common dates"""
    if len(panel) < 2:
        raise DataError(f"a correlation matrix needs at least 2 series, got {len(panel)}")
    frame = pd.concat([s.to_series() for s in panel], axis=1)
    if mode == 'global-intersection':
        frame = frame.dropna(how='any')
    corr = frame.corr(method='pearson', min_periods=2)
    values = np.clip(corr.to_numpy(dtype=np.float64, copy=True), -1.0, 1.0)

    for j, i in zip(*np.nonzero(np.isnan(values))):
        if j < i:
            logger.warning(f"Correlation {panel[j].symbol}/{panel[i].symbol} undefined "
                           f"(zero variance or too few common dates)")
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix([s.symbol for s in panel], values)


def write_matrix_csv(symbols, values, path, corner='source'):
    """Square matrix with a symbol header row and column; NaN cells become NA"""
    cells = [[format_float(v) for v in row] for row in np.asarray(values)]
    frame = pd.DataFrame(cells, index=list(symbols), columns=list(symbols))
    write_text(path, frame.to_csv(index_label=corner, lineterminator='\n'))


def read_matrix_csv(path) -> Tuple[List[str], np.ndarray]:
    try:
        frame = pd.read_csv(path, index_col=0, na_values=['NA'], keep_default_na=False,
                            float_precision='round_trip')
    except OSError as e:
        raise DataError(f"{path}: unreadable file ({e})")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(path, f"malformed matrix ({e})")
    symbols = [str(c) for c in frame.columns]
    if [str(i) for i in frame.index] != symbols:
        raise ParseError(path, "row labels must match the header", line=1)
    try:
        values = frame.to_numpy(dtype=np.float64, copy=True)
    except ValueError as e:
        raise ParseError(path, f"non-numeric cell ({e})")
    return symbols, values


def read_te_matrix(path, cfg=None) -> TEMatrix:
    symbols, values = read_matrix_csv(path)
    np.fill_diagonal(values, np.nan)
    return TEMatrix(symbols, values, cfg or EmbeddingConfig())

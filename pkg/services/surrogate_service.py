import logging
from typing import List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from errors import ConfigError, DataError
from helpers import derive_rng, format_float, write_text
from models import EmbeddingConfig, SurrogateReport, SymbolSequence, TEMatrix
from services.entropy_service import count_states, paired_states, transfer_entropy_decomposed

logger = logging.getLogger(__name__)

DEFAULT_REALIZATIONS = 100
SURROGATE_STAGE = 'surrogate'
SHUFFLE_STAGE = 'shuffle'


def shuffle_sequence(sequence: SymbolSequence, seed: int) -> SymbolSequence:
    """Uniform random permutation of the states; the state multiset is kept exactly"""
    rng = derive_rng(seed, SHUFFLE_STAGE)
    return sequence.with_states(rng.permutation(sequence.states))


def _null_values(target_states, source_states, alphabet_size, cfg, realizations, seed, pair_index):
    null = np.empty(realizations)
    for r in range(realizations):
        rng = derive_rng(seed, SURROGATE_STAGE, pair_index, r)
        shuffled_target = rng.permutation(target_states)
        shuffled_source = rng.permutation(source_states)
        counts = count_states(shuffled_target, shuffled_source, alphabet_size, cfg.k, cfg.l, cfg.log_base)
        null[r] = transfer_entropy_decomposed(counts)
    return null


def _report(target, source, observed, null, realizations, seed) -> SurrogateReport:
    null_mean = float(np.mean(null))
    null_std = float(np.std(null, ddof=1)) if realizations > 1 else 0.0
    z_score = (observed - null_mean) / null_std if null_std > 0 else float('nan')
    p_value = (1 + int(np.sum(null >= observed))) / (realizations + 1)
    return SurrogateReport(source=source.symbol, target=target.symbol, observed_te=observed,
                           null_mean=null_mean, null_std=null_std, z_score=z_score,
                           realizations=realizations, seed=seed,
                           null_p95=float(np.percentile(null, 95)), p_value=p_value)


def null_distribution(target: SymbolSequence, source: SymbolSequence, cfg: EmbeddingConfig,
                      realizations=DEFAULT_REALIZATIONS, seed=0, pair_index=0, lag=0) -> SurrogateReport:
    """
    Shuffle both sequences independently ``realizations`` times and compare
    the observed TE (source -> target) with the shuffled estimates.

    Realization r of pair p draws from its own stream derived from
    (seed, p, r), so reports do not depend on evaluation order.
    """
    if realizations < 1:
        raise ConfigError(f"need at least one surrogate realization, got {realizations}")
    alphabet_size = max(target.alphabet_size, source.alphabet_size)
    target_states, source_states = paired_states(target, source, lag)
    observed = transfer_entropy_decomposed(
        count_states(target_states, source_states, alphabet_size, cfg.k, cfg.l, cfg.log_base))
    null = _null_values(target_states, source_states, alphabet_size, cfg, realizations, seed, pair_index)
    return _report(target, source, observed, null, realizations, seed)


def effective_te(report: SurrogateReport) -> float:
    """Observed TE minus the shuffled-data mean; negative means no detectable flow"""
    return report.observed_te - report.null_mean


def shuffled_te(report: SurrogateReport) -> float:
    return report.null_mean


def ordered_pairs(n) -> List[Tuple[int, int]]:
    """(source, target) index pairs in row-major order; the position is the pair index"""
    return [(j, i) for j in range(n) for i in range(n) if i != j]


def _pair_report(pair_index, source, target, cfg, realizations, seed, lag):
    try:
        return null_distribution(target, source, cfg, realizations, seed, pair_index, lag)
    except DataError as e:
        logger.warning(f"No surrogate test for {source.symbol} -> {target.symbol}: {e}")
        return None


def surrogate_panel(panel: Sequence[SymbolSequence], cfg: EmbeddingConfig,
                    realizations=DEFAULT_REALIZATIONS, seed=0, jobs=1, lag=0):
    """
    Surrogate reports for every ordered pair, plus the matrix of effective TE.

    Returns (reports, effective_matrix); pairs without data get no report and
    a NaN cell.
    """
    symbols = [s.symbol for s in panel]
    pairs = ordered_pairs(len(panel))
    logger.info(f"Running {realizations} surrogate realization(s) for {len(pairs)} pairs (seed={seed}, jobs={jobs})")
    reports = Parallel(n_jobs=jobs)(
        delayed(_pair_report)(p, panel[j], panel[i], cfg, realizations, seed, lag)
        for p, (j, i) in enumerate(pairs))

    reports = [r for r in reports if r is not None]
    return reports, report_matrix(reports, symbols, cfg)


def report_matrix(reports: List[SurrogateReport], symbols, cfg: EmbeddingConfig, value=effective_te) -> TEMatrix:
    """
    Source x target matrix of one per-pair surrogate quantity, effective TE by
    default. Pass ``value=shuffled_te`` for the shuffled-data TE behind the
    null profiles.
    """
    position = {symbol: n for n, symbol in enumerate(symbols)}
    values = np.full((len(symbols), len(symbols)), np.nan)
    for report in reports:
        values[position[report.source], position[report.target]] = value(report)
    return TEMatrix(list(symbols), values, cfg, np.zeros((len(symbols), len(symbols)), dtype=np.int64))


def write_surrogate_csv(reports: List[SurrogateReport], path):
    lines = ['pair,observed,null_mean,null_std,z,M,seed']
    for r in reports:
        lines.append(','.join([f"{r.source}->{r.target}", format_float(r.observed_te),
                               format_float(r.null_mean), format_float(r.null_std),
                               format_float(r.z_score), str(r.realizations), str(r.seed)]))
    write_text(path, '\n'.join(lines) + '\n')

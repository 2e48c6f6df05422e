import logging

from commands.common import (add_embedding_flags, add_panel_flags, add_scheme_flags, add_surrogate_flags,
                             embedding_from, output_path, with_config)
from errors import ConfigError
from helpers import format_float
from services.entropy_service import cross_correlation_matrix, pairwise_te, te_matrix, write_matrix_csv
from services.pipeline_service import load_returns, symbolize_panel
from services.surrogate_service import null_distribution, surrogate_panel, write_surrogate_csv
from services.symbol_service import read_symbol_file

logger = logging.getLogger(__name__)

UNITS = {'2': 'bits', 'e': 'nats', '10': 'hartleys'}


def _symbol_pair(args):
    if len(args.files) != 2:
        raise ConfigError(f"give exactly two .sym files or --manifest, got {len(args.files)} file(s)")
    return read_symbol_file(args.files[0]), read_symbol_file(args.files[1])


def _panel(config):
    _, _, returns = load_returns(config)
    return returns, symbolize_panel(returns, config)


def _print_report(report, unit):
    print(f"{report.source} -> {report.target}: observed {format_float(report.observed_te)} {unit}, "
          f"null {format_float(report.null_mean)} +/- {format_float(report.null_std)}, "
          f"z {format_float(report.z_score)}, p {report.p_value:.4f} (M={report.realizations}, seed={report.seed})")


@with_config
def te_command(args, config):
    cfg = embedding_from(config)
    unit = UNITS[cfg.log_base]
    if not config.manifest or args.files:
        a, b = _symbol_pair(args)
        forward, backward = pairwise_te(a, b, cfg, config.source_lag)
        print(f"{a.symbol} -> {b.symbol}: {format_float(forward)} {unit}")
        print(f"{b.symbol} -> {a.symbol}: {format_float(backward)} {unit}")
        return 0

    _, sequences = _panel(config)
    matrix = te_matrix(sequences, cfg, lag=config.source_lag, jobs=config.jobs)
    output = output_path(args, config, 'te_matrix.csv')
    write_matrix_csv(matrix.symbols, matrix.values, output)
    print(f"✅ {len(matrix.symbols)}x{len(matrix.symbols)} TE matrix ({unit}) written to {output}")
    return 0


@with_config
def corr_command(args, config):
    if not config.manifest:
        raise ConfigError("corr needs --manifest (or MANIFEST in the config)")
    _, _, returns = load_returns(config)
    correlation = cross_correlation_matrix(returns, config.alignment)
    output = output_path(args, config, 'corr_matrix.csv')
    write_matrix_csv(correlation.symbols, correlation.values, output, corner='symbol')
    print(f"✅ {len(correlation.symbols)}x{len(correlation.symbols)} correlation matrix written to {output}")
    return 0


@with_config
def surrogate_command(args, config):
    cfg = embedding_from(config)
    unit = UNITS[cfg.log_base]
    if not config.manifest or args.files:
        a, b = _symbol_pair(args)
        for pair_index, (source, target) in enumerate(((a, b), (b, a))):
            report = null_distribution(target, source, cfg, config.surrogates, config.seed,
                                       pair_index, config.source_lag)
            _print_report(report, unit)
        return 0

    _, sequences = _panel(config)
    reports, effective = surrogate_panel(sequences, cfg, config.surrogates, config.seed,
                                         config.jobs, config.source_lag)
    output = output_path(args, config, 'surrogates.csv')
    write_surrogate_csv(reports, output)
    write_matrix_csv(effective.symbols, effective.values, output_path(None, config, 'effective_te_matrix.csv'))
    print(f"✅ {len(reports)} surrogate report(s) written to {output}")
    return 0


def register(subparsers, parents):
    te = subparsers.add_parser('te', parents=parents,
                               help='TE between two .sym files, or the full matrix for a manifest')
    te.add_argument('files', nargs='*', help='two digit-string files (source a, target b and back)')
    te.add_argument('-o', '--output', help='matrix CSV (default <output-dir>/te_matrix.csv)')
    add_panel_flags(te)
    add_scheme_flags(te)
    add_embedding_flags(te)
    te.set_defaults(handler=te_command)

    corr = subparsers.add_parser('corr', parents=parents, help='cross-correlation matrix of log returns')
    corr.add_argument('-o', '--output', help='matrix CSV (default <output-dir>/corr_matrix.csv)')
    add_panel_flags(corr)
    corr.set_defaults(handler=corr_command)

    surrogate = subparsers.add_parser('surrogate', parents=parents, help='shuffled-surrogate significance test')
    surrogate.add_argument('files', nargs='*', help='two digit-string files')
    surrogate.add_argument('-o', '--output', help='report CSV (default <output-dir>/surrogates.csv)')
    add_panel_flags(surrogate)
    add_scheme_flags(surrogate)
    add_embedding_flags(surrogate)
    add_surrogate_flags(surrogate)
    surrogate.set_defaults(handler=surrogate_command)

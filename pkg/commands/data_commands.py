import logging
import os

from commands.common import add_price_flags, add_scheme_flags, with_config
from helpers import format_float
from services.ingest_service import log_returns, parse_price_csv, write_returns_csv
from services.symbol_service import state_frequencies, symbolize, write_symbol_file

logger = logging.getLogger(__name__)


def _sibling(path, suffix):
    return os.path.splitext(path)[0] + suffix


@with_config
def returns_command(args, config):
    """Price file -> date,return CSV of log returns"""
    prices = parse_price_csv(args.prices, config.price_format, config.price_column)
    returns = log_returns(prices)
    output = args.output or _sibling(args.prices, '.returns.csv')
    write_returns_csv(returns, output)
    print(f"✅ {returns.symbol}: {len(returns)} log returns written to {output}")
    return 0


@with_config
def symbolize_command(args, config):
    """Price file -> single-line digit string of states"""
    prices = parse_price_csv(args.prices, config.price_format, config.price_column)
    sequence = symbolize(log_returns(prices), config.scheme, config.threshold)
    output = args.output or _sibling(args.prices, '.sym')
    write_symbol_file(sequence, output)
    thresholds = ', '.join(format_float(t) for t in sequence.thresholds)
    freqs = ' '.join(f"{state}:{share:.3f}" for state, share in enumerate(state_frequencies(sequence)))
    print(f"✅ {sequence.symbol}: {len(sequence)} symbols ({config.scheme}, thresholds {thresholds}) -> {output}")
    print(f"   state frequencies {freqs}")
    return 0


def register(subparsers, parents):
    returns = subparsers.add_parser('returns', parents=parents, help='compute log returns from a price file')
    returns.add_argument('prices', help='price CSV')
    returns.add_argument('-o', '--output', help='output CSV (default <prices>.returns.csv)')
    add_price_flags(returns)
    returns.set_defaults(handler=returns_command)

    sym = subparsers.add_parser('symbolize', parents=parents, help='discretize a price file into ternary states')
    sym.add_argument('prices', help='price CSV')
    sym.add_argument('-o', '--output', help='output digit file (default <prices>.sym)')
    add_price_flags(sym)
    add_scheme_flags(sym)
    sym.set_defaults(handler=symbolize_command)

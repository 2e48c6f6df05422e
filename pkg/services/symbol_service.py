import logging

import numpy as np

from errors import ConfigError, DataError, ParseError
from helpers import write_text
from models import ReturnSeries, SymbolSequence

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.04
SCHEMES = ('threshold', 'terciles')


def symbolize_fixed(returns: ReturnSeries, d=DEFAULT_THRESHOLD) -> SymbolSequence:
    """
    Ternary states: 0 (decrease) for x <= -d, 2 (increase) for x >= d,
    1 (intermediate) in between.
    """
    if not d > 0:
        raise ConfigError(f"threshold must be positive, got {d}")
    x = returns.values
    states = np.ones(len(x), dtype=np.int64)
    states[x <= -d] = 0
    states[x >= d] = 2
    return SymbolSequence(returns.symbol, states, 3, 'fixed-threshold', (-d, d), returns.dates)


def symbolize_terciles(returns: ReturnSeries) -> SymbolSequence:
    """
    Ternary states split at the series' own 1/3 and 2/3 quantiles:
    0 for x <= q1, 1 for q1 < x <= q2, 2 for x > q2.
    """
    x = returns.values
    if len(x) < 3:
        raise DataError(f"{returns.symbol}: tercile symbolization needs at least 3 returns, got {len(x)}")
    q1, q2 = np.quantile(x, [1.0 / 3.0, 2.0 / 3.0])
    states = np.ones(len(x), dtype=np.int64)
    if q1 == q2:
        # q1 == q2: values on the shared threshold stay in state 1
        states[x < q1] = 0
        states[x > q2] = 2
    else:
        states[x <= q1] = 0
        states[x > q2] = 2
    return SymbolSequence(returns.symbol, states, 3, 'terciles', (float(q1), float(q2)), returns.dates)


def symbolize(returns: ReturnSeries, scheme='threshold', d=DEFAULT_THRESHOLD) -> SymbolSequence:
    if scheme == 'threshold':
        return symbolize_fixed(returns, d)
    if scheme == 'terciles':
        return symbolize_terciles(returns)
    raise ConfigError(f"unknown symbolization scheme '{scheme}', expected one of {SCHEMES}")


def state_frequencies(sequence: SymbolSequence) -> np.ndarray:
    if len(sequence) == 0:
        return np.zeros(sequence.alphabet_size)
    counts = np.bincount(sequence.states, minlength=sequence.alphabet_size)
    return counts / len(sequence)


def to_digit_string(sequence: SymbolSequence) -> str:
    if sequence.alphabet_size > 10:
        raise ConfigError("digit strings only cover alphabets of up to 10 states")
    return ''.join(str(int(s)) for s in sequence.states)


def write_symbol_file(sequence: SymbolSequence, path):
    write_text(path, to_digit_string(sequence) + '\n')


def read_symbol_file(path, symbol=None, alphabet_size=None) -> SymbolSequence:
    """Read a single-line digit string; the alphabet defaults to max state + 1 (at least 3)"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read().strip()
    except OSError as e:
        raise DataError(f"{path}: unreadable file ({e})")
    if not text.isdigit():
        raise ParseError(path, "symbol file must be a single line of digits", line=1)
    states = np.frombuffer(text.encode('ascii'), dtype=np.uint8).astype(np.int64) - ord('0')
    alphabet_size = alphabet_size or max(3, int(states.max()) + 1)
    if symbol is None:
        symbol = str(path).replace('\\', '/').rsplit('/', 1)[-1].rsplit('.', 1)[0]
    return SymbolSequence(symbol, states, alphabet_size, 'file')

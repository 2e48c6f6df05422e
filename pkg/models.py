"""
Domain models for the information flow analyzer.

All models are immutable once built: numpy buffers are flagged read-only so
the values can be handed to worker processes and shared between stages.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import ConfigError, DataError

LOG_BASES = {'2': 2.0, 'e': math.e, '10': 10.0}
MAX_DENSE_CELLS = 2 ** 24


def _frozen(values, dtype):
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


def _as_dates(values):
    return _frozen(values, 'datetime64[D]')


@dataclass(frozen=True)
class ManifestEntry:
    symbol: str
    path: str
    region: str = ''
    format: Optional[str] = None


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Dated close prices for one market"""
    symbol: str
    dates: np.ndarray
    closes: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'dates', _as_dates(self.dates))
        object.__setattr__(self, 'closes', _frozen(self.closes, np.float64))
        if len(self.dates) != len(self.closes):
            raise DataError(f"{self.symbol}: {len(self.dates)} dates but {len(self.closes)} prices")
        if len(self.dates) > 1 and not np.all(self.dates[1:] > self.dates[:-1]):
            raise DataError(f"{self.symbol}: dates must be strictly increasing")
        if np.any(~(self.closes > 0)):
            raise DataError(f"{self.symbol}: close prices must be positive")

    def __len__(self):
        return len(self.closes)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log returns stamped with the later of the two trading days"""
    symbol: str
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'dates', _as_dates(self.dates))
        object.__setattr__(self, 'values', _frozen(self.values, np.float64))
        if len(self.dates) != len(self.values):
            raise DataError(f"{self.symbol}: {len(self.dates)} dates but {len(self.values)} returns")

    def __len__(self):
        return len(self.values)

    def to_series(self) -> pd.Series:
        return pd.Series(self.values, index=pd.DatetimeIndex(self.dates), name=self.symbol)


@dataclass(frozen=True, eq=False)
class AlignedPair:
    left: ReturnSeries
    right: ReturnSeries
    dates: np.ndarray


@dataclass(frozen=True, eq=False)
class SymbolSequence:
    """
    Discretized states of one series.

    ``dates`` is optional: synthetic sequences are positional and can only be
    paired with sequences of the same length.
    """
    symbol: str
    states: np.ndarray
    alphabet_size: int = 3
    scheme: str = 'fixed-threshold'
    thresholds: Tuple[float, ...] = ()
    dates: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'states', _frozen(self.states, np.int64))
        if self.alphabet_size < 2:
            raise ConfigError(f"alphabet size must be at least 2, got {self.alphabet_size}")
        if len(self.states) and (self.states.min() < 0 or self.states.max() >= self.alphabet_size):
            raise DataError(f"{self.symbol}: states outside [0, {self.alphabet_size - 1}]")
        if self.dates is not None:
            object.__setattr__(self, 'dates', _as_dates(self.dates))
            if len(self.dates) != len(self.states):
                raise DataError(f"{self.symbol}: {len(self.dates)} dates but {len(self.states)} states")

    def __len__(self):
        return len(self.states)

    def with_states(self, states):
        """Same sequence metadata with replaced states"""
        return SymbolSequence(self.symbol, states, self.alphabet_size, self.scheme,
                              self.thresholds, self.dates)


@dataclass(frozen=True)
class EmbeddingConfig:
    """History lengths k (target) and l (source) plus the log base"""
    k: int = 1
    l: int = 1
    log_base: str = '2'

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise ConfigError(f"history lengths must be >= 1, got k={self.k} l={self.l}")
        if str(self.log_base) not in LOG_BASES:
            raise ConfigError(f"log base must be one of {sorted(LOG_BASES)}, got {self.log_base}")
        object.__setattr__(self, 'log_base', str(self.log_base))

    @property
    def log_factor(self) -> float:
        return math.log(LOG_BASES[self.log_base])

    @property
    def window_offset(self) -> int:
        return max(self.k, self.l)


@dataclass(frozen=True, eq=False)
class JointCounts:
    """
    Occurrence counts of (next target state, target history, source history).

    ``table[x, y, z]`` counts windows whose next target state is ``x``, whose
    packed target history is ``y`` and whose packed source history is ``z``.
    Histories are packed base-A with the oldest sample most significant.
    """
    table: np.ndarray
    alphabet_size: int
    k: int
    l: int
    log_base: str = '2'

    def __post_init__(self):
        object.__setattr__(self, 'table', _frozen(self.table, np.int64))

    @property
    def total(self) -> int:
        return int(self.table.sum())

    @property
    def log_factor(self) -> float:
        return math.log(LOG_BASES[str(self.log_base)])

    def _unpack(self, code, length):
        digits = []
        for _ in range(length):
            code, digit = divmod(code, self.alphabet_size)
            digits.append(digit)
        return tuple(reversed(digits))

    def as_dict(self) -> Dict[tuple, int]:
        """Sparse view keyed by (next_state, target_history, source_history)"""
        result = {}
        for x, y, z in zip(*np.nonzero(self.table)):
            key = (int(x), self._unpack(int(y), self.k), self._unpack(int(z), self.l))
            result[key] = int(self.table[x, y, z])
        return result


@dataclass(frozen=True, eq=False)
class TEMatrix:
    """
    Pairwise transfer entropies.

    ``values[j, i]`` is the flow from ``symbols[j]`` to ``symbols[i]``; the
    diagonal and pairs without a usable window are NaN.
    """
    symbols: List[str]
    values: np.ndarray
    config: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'symbols', list(self.symbols))
        object.__setattr__(self, 'values', _frozen(self.values, np.float64))
        n = len(self.symbols)
        if self.values.shape != (n, n):
            raise DataError(f"matrix shape {self.values.shape} does not match {n} symbols")
        samples = self.samples if self.samples is not None else np.zeros((n, n))
        object.__setattr__(self, 'samples', _frozen(samples, np.int64))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.symbols, columns=self.symbols)

    def index_of(self, symbol) -> int:
        return self.symbols.index(symbol)

    def flow(self, source, target) -> float:
        return float(self.values[self.index_of(source), self.index_of(target)])


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    symbols: List[str]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'symbols', list(self.symbols))
        object.__setattr__(self, 'values', _frozen(self.values, np.float64))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.symbols, columns=self.symbols)


@dataclass(frozen=True)
class SurrogateReport:
    source: str
    target: str
    observed_te: float
    null_mean: float
    null_std: float
    z_score: float
    realizations: int
    seed: int
    null_p95: float = float('nan')
    p_value: float = float('nan')

    @property
    def pair(self) -> Tuple[str, str]:
        return (self.source, self.target)


@dataclass(frozen=True)
class FlowSummary:
    symbol: str
    out_sum: float
    out_mean: float
    in_sum: float
    in_mean: float
    region: str = ''


@dataclass(frozen=True)
class FlowEdge:
    source: str
    target: str
    weight: float


@dataclass(frozen=True)
class FlowGraph:
    """
    Directed flow structure; edges point from information source to receiver.
    """
    nodes: List[Tuple[str, str]]
    edges: List[FlowEdge]
    structure_kind: str
    mode: str
    components: int = 0
    cycles: List[List[str]] = field(default_factory=list)
    ties: List[str] = field(default_factory=list)

    @property
    def total_weight(self) -> float:
        return float(sum(edge.weight for edge in self.edges))

    def edge_set(self):
        return {(edge.source, edge.target) for edge in self.edges}

    def in_degree(self) -> Dict[str, int]:
        degree = {symbol: 0 for symbol, _ in self.nodes}
        for edge in self.edges:
            degree[edge.target] += 1
        return degree

    def out_degree(self) -> Dict[str, int]:
        degree = {symbol: 0 for symbol, _ in self.nodes}
        for edge in self.edges:
            degree[edge.source] += 1
        return degree


@dataclass(frozen=True, eq=False)
class GrayscaleMap:
    width: int
    height: int
    pixels: bytes
    scale_min: float
    scale_max: float

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)

    def decode(self) -> np.ndarray:
        """Approximate cell values recovered from the pixels and the scale"""
        span = self.scale_max - self.scale_min
        return self.scale_min + self.as_array().astype(np.float64) / 255.0 * span


@dataclass(frozen=True)
class CoupledProcessSpec:
    alphabet: int = 3
    epsilon: float = 1.0
    length: int = 10000
    seed: int = 0
    topology: Tuple[Tuple[str, str], ...] = (('driver', 'follower'),)

    def __post_init__(self):
        object.__setattr__(self, 'topology', tuple(tuple(edge) for edge in self.topology))
        if self.alphabet < 2:
            raise ConfigError(f"alphabet must be at least 2, got {self.alphabet}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"coupling must lie in [0, 1], got {self.epsilon}")
        if self.length < 1:
            raise ConfigError(f"length must be positive, got {self.length}")
        followers = [follower for _, follower in self.topology]
        repeated = sorted({f for f in followers if followers.count(f) > 1})
        if repeated:
            raise ConfigError(f"followers with more than one driver: {', '.join(repeated)}")
        for driver, follower in self.topology:
            if driver == follower:
                raise ConfigError(f"process '{driver}' cannot drive itself")

    @property
    def nodes(self) -> List[str]:
        seen = []
        for driver, follower in self.topology:
            for name in (driver, follower):
                if name not in seen:
                    seen.append(name)
        return seen

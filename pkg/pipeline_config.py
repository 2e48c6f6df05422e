"""
Pipeline configuration

Settings come from (lowest to highest precedence) built-in defaults, a flat
KEY=value config file, TEFLOW_<KEY> environment variables and CLI flags.
The defaults reproduce the published settings: d = 0.04 and k = l = 1.
"""

import os
from dataclasses import asdict, dataclass, fields
from typing import Optional

from dotenv import dotenv_values

from errors import ConfigError
from models import LOG_BASES, CoupledProcessSpec

TOOL_VERSION = '1.0.0'
ENV_PREFIX = 'TEFLOW_'

SCHEMES = ('threshold', 'terciles')
PRICE_FORMATS = ('two-column', 'yahoo-ohlc')
ALIGNMENTS = ('pairwise-intersection', 'global-intersection')
GRAPH_ALGORITHMS = ('branching', 'greedy')
GRAPH_INPUTS = ('raw', 'effective')


@dataclass
class PipelineConfig:
    manifest: Optional[str] = None
    price_format: str = 'two-column'
    price_column: str = 'Close'
    scheme: str = 'threshold'
    threshold: float = 0.04
    k: int = 1
    l: int = 1
    log_base: str = '2'
    alignment: str = 'pairwise-intersection'
    source_lag: int = 0
    surrogates: int = 100
    seed: int = 0
    graph_algorithm: str = 'branching'
    graph_input: str = 'raw'
    output_dir: str = 'output'
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        choices = {
            'scheme': SCHEMES, 'price_format': PRICE_FORMATS, 'alignment': ALIGNMENTS,
            'graph_algorithm': GRAPH_ALGORITHMS, 'graph_input': GRAPH_INPUTS,
            'log_base': tuple(LOG_BASES),
        }
        self.log_base = str(self.log_base)
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name.upper()} must be one of {', '.join(allowed)}, got '{getattr(self, name)}'")
        if not self.threshold > 0:
            raise ConfigError(f"THRESHOLD must be positive, got {self.threshold}")
        if self.k < 1 or self.l < 1:
            raise ConfigError(f"K and L must be at least 1, got K={self.k} L={self.l}")
        if self.source_lag < 0:
            raise ConfigError(f"SOURCE_LAG must be non-negative, got {self.source_lag}")
        if self.surrogates < 1:
            raise ConfigError(f"SURROGATES must be at least 1, got {self.surrogates}")
        if self.jobs == 0:
            raise ConfigError("JOBS must be non-zero (negative values count back from all cores)")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_sources(cls, config_path=None, overrides=None, environ=None):
        """Merge defaults, the config file, TEFLOW_* variables and flag overrides"""
        raw = {}
        if config_path:
            if not os.path.exists(config_path):
                raise ConfigError(f"config file not found: {config_path}")
            raw.update({k.lower(): v for k, v in dotenv_values(config_path).items() if v is not None})
        environ = os.environ if environ is None else environ
        for key, value in environ.items():
            if key.startswith(ENV_PREFIX):
                raw[key[len(ENV_PREFIX):].lower()] = value
        raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls(**_coerce(raw))


def _coerce(raw):
    known = {f.name: f.type for f in fields(PipelineConfig)}
    raw = {k: v for k, v in raw.items() if not k.startswith('synth_')}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(k.upper() for k in unknown)}")
    values = {}
    for name, value in raw.items():
        kind = known[name]
        try:
            if kind is int or kind == 'int':
                values[name] = int(value)
            elif kind is float or kind == 'float':
                values[name] = float(value)
            else:
                values[name] = str(value).strip()
        except (TypeError, ValueError):
            raise ConfigError(f"{name.upper()}: cannot read '{value}' as {getattr(kind, '__name__', kind)}")
    return values


def parse_topology(text):
    """'A>B,B>C' -> (('A', 'B'), ('B', 'C'))"""
    edges = []
    for item in filter(None, (part.strip() for part in str(text).split(','))):
        if '>' not in item:
            raise ConfigError(f"topology edge '{item}' must look like DRIVER>FOLLOWER")
        driver, follower = (side.strip() for side in item.split('>', 1))
        if not driver or not follower:
            raise ConfigError(f"topology edge '{item}' has an empty side")
        edges.append((driver, follower))
    if not edges:
        raise ConfigError("topology needs at least one DRIVER>FOLLOWER edge")
    return tuple(edges)


def spec_from_config(path, overrides=None) -> CoupledProcessSpec:
    """Read SYNTH_* keys from a config file into a CoupledProcessSpec"""
    raw = {k.upper(): v for k, v in dotenv_values(path).items() if v is not None} if path else {}
    raw.update({k.upper(): v for k, v in (overrides or {}).items() if v is not None})
    try:
        return CoupledProcessSpec(alphabet=int(raw.get('SYNTH_ALPHABET', 3)),
                                  epsilon=float(raw.get('SYNTH_EPSILON', 1.0)),
                                  length=int(raw.get('SYNTH_LENGTH', 10000)),
                                  seed=int(raw.get('SYNTH_SEED', 0)),
                                  topology=parse_topology(raw.get('SYNTH_TOPOLOGY', 'driver>follower')))
    except ValueError as e:
        raise ConfigError(f"invalid synthetic spec: {e}")


CONFIG_TEMPLATE = """
# Transfer entropy flow pipeline configuration
# Flat KEY=value pairs; TEFLOW_<KEY> environment variables and CLI flags override them.

MANIFEST=data/markets.csv
PRICE_FORMAT=yahoo-ohlc
PRICE_COLUMN=Close

# threshold (fixed d) or terciles
SCHEME=threshold
THRESHOLD=0.04

K=1
L=1
LOG_BASE=2

# pairwise-intersection or global-intersection
ALIGNMENT=pairwise-intersection
SOURCE_LAG=0

SURROGATES=100
SEED=0

# branching (maximum spanning branching) or greedy (strongest-neighbor attachment)
GRAPH_ALGORITHM=branching
# raw or effective (surrogate-corrected) TE feeds the graphs
GRAPH_INPUT=raw

OUTPUT_DIR=output
JOBS=1

# Synthetic panels (synth command)
SYNTH_ALPHABET=3
SYNTH_EPSILON=0.8
SYNTH_LENGTH=2000
SYNTH_SEED=0
SYNTH_TOPOLOGY=A>B,A>C,A>D
"""


def create_config_template(path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(CONFIG_TEMPLATE.lstrip('\n'))
    return path

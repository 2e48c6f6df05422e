import os
from functools import wraps

from models import EmbeddingConfig
from pipeline_config import ALIGNMENTS, GRAPH_ALGORITHMS, GRAPH_INPUTS, PRICE_FORMATS, PipelineConfig

# flag dest -> PipelineConfig field
CONFIG_FLAGS = {
    'manifest': 'manifest', 'price_format': 'price_format', 'price_column': 'price_column',
    'scheme': 'scheme', 'threshold': 'threshold', 'k': 'k', 'l': 'l', 'base': 'log_base',
    'alignment': 'alignment', 'lag': 'source_lag', 'surrogates': 'surrogates', 'seed': 'seed',
    'algorithm': 'graph_algorithm', 'graph_input': 'graph_input', 'output_dir': 'output_dir',
    'jobs': 'jobs',
}


def add_price_flags(parser):
    parser.add_argument('--format', dest='price_format', choices=PRICE_FORMATS, default=None,
                        help='price file layout (default two-column)')
    parser.add_argument('--column', dest='price_column', default=None,
                        help='price column for yahoo-ohlc files (default Close)')


def add_scheme_flags(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--threshold', type=float, default=None, help='fixed threshold d (default 0.04)')
    group.add_argument('--terciles', dest='scheme', action='store_const', const='terciles', default=None,
                       help='equiprobable bins from the empirical terciles')


def add_embedding_flags(parser):
    parser.add_argument('--k', type=int, default=None, help='target history length (default 1)')
    parser.add_argument('--l', type=int, default=None, help='source history length (default 1)')
    parser.add_argument('--base', choices=('2', 'e', '10'), default=None, help='logarithm base (default 2)')
    parser.add_argument('--lag', type=int, default=None, help='delay the source by this many samples')


def add_panel_flags(parser):
    parser.add_argument('--config', default=None, help='KEY=value config file')
    parser.add_argument('--manifest', default=None, help='CSV with symbol,path,region[,format]')
    parser.add_argument('--alignment', choices=ALIGNMENTS, default=None)
    parser.add_argument('--output-dir', dest='output_dir', default=None)
    parser.add_argument('--jobs', type=int, default=None, help='parallel workers (-1 for all cores)')
    add_price_flags(parser)


def add_surrogate_flags(parser):
    parser.add_argument('--surrogates', '--M', dest='surrogates', type=int, default=None,
                        help='shuffled realizations per pair (default 100)')
    parser.add_argument('--seed', type=int, default=None, help='master seed (default 0)')


def add_graph_flags(parser):
    parser.add_argument('--algorithm', choices=GRAPH_ALGORITHMS, default=None,
                        help='branching (maximum spanning branching) or greedy (strongest neighbor)')
    parser.add_argument('--graph-input', dest='graph_input', choices=GRAPH_INPUTS, default=None)


def config_from_args(args, environ=None) -> PipelineConfig:
    """Defaults < --config file < TEFLOW_* variables < flags"""
    overrides = {field: getattr(args, dest) for dest, field in CONFIG_FLAGS.items()
                 if getattr(args, dest, None) is not None}
    if overrides.get('threshold') is not None and 'scheme' not in overrides:
        overrides['scheme'] = 'threshold'
    return PipelineConfig.from_sources(getattr(args, 'config', None), overrides, environ)


def embedding_from(config: PipelineConfig) -> EmbeddingConfig:
    return EmbeddingConfig(config.k, config.l, config.log_base)


def with_config(handler):
    """Resolve the effective PipelineConfig before the handler runs"""
    @wraps(handler)
    def wrapper(args):
        return handler(args, config_from_args(args))
    return wrapper


def output_path(args, config, default_name):
    if getattr(args, 'output', None):
        return args.output
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, default_name)

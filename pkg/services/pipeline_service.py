import json
import logging
import math
import os
from contextlib import contextmanager

import numpy as np
import pandas as pd

from errors import ConfigError, DataError, FlowError, InvariantError, PipelineError
from helpers import GENERATOR_NAME, write_text
from models import EmbeddingConfig
from pipeline_config import TOOL_VERSION, PipelineConfig
from services.entropy_service import cross_correlation_matrix, te_matrix, write_matrix_csv
from services.ingest_service import PriceLoader, align_panel, load_manifest, log_returns
from services.network_service import aggregate_flow, build_graph, hub, write_dot, write_edge_list
from services.render_service import export_profiles, render_grayscale, write_pgm
from services.surrogate_service import report_matrix, shuffled_te, surrogate_panel, write_surrogate_csv
from services.symbol_service import state_frequencies, symbolize

logger = logging.getLogger(__name__)

ARTIFACTS = ('te_matrix.csv', 'corr_matrix.csv', 'te_map.pgm', 'corr_map.pgm', 'flow_profiles.csv',
             'surrogates.csv', 'flow_out.dot', 'flow_in.dot', 'run_metadata.json')
EXTRA_ARTIFACTS = ('effective_te_matrix.csv', 'flow_out_edges.csv', 'flow_in_edges.csv',
                   'flow_profiles_shuffled.csv')


def _plain(value):
    """JSON-safe copy: numpy scalars unwrapped, NaN as null"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    return value


class FlowPipeline:
    """Runs every stage from a manifest to the artifact set"""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.embedding = EmbeddingConfig(config.k, config.l, config.log_base)
        self.written = []
        self.stage = None

    def _path(self, name):
        return os.path.join(self.config.output_dir, name)

    def _record(self, name):
        path = self._path(name)
        self.written.append(path)
        return path

    @contextmanager
    def _stage(self, name):
        self.stage = name
        logger.info(f"Stage: {name}")
        try:
            yield
        except FlowError as e:
            raise PipelineError(name, e) from e
        except (OSError, ValueError) as e:
            raise PipelineError(name, _as_data_error(e)) from e

    def _cleanup(self):
        for path in self.written:
            for candidate in (path, f"{path}.tmp"):
                if os.path.exists(candidate):
                    os.remove(candidate)
        if self.written:
            logger.warning(f"Removed {len(self.written)} partial artifact(s) from {self.config.output_dir}")
        self.written = []

    def run(self):
        try:
            return self._run()
        except PipelineError:
            self._cleanup()
            raise
        except Exception as e:
            self._cleanup()
            raise PipelineError(self.stage or 'setup', InvariantError(str(e))) from e

    def _run(self):
        config = self.config
        with self._stage('ingest'):
            entries, prices, returns = load_returns(config)
            regions = {e.symbol: e.region for e in entries}

        with self._stage('symbolize'):
            sequences = symbolize_panel(returns, config)

        with self._stage('te'):
            matrix = te_matrix(sequences, self.embedding, lag=config.source_lag, jobs=config.jobs)

        with self._stage('corr'):
            correlation = cross_correlation_matrix(returns, config.alignment)

        with self._stage('surrogate'):
            reports, effective = surrogate_panel(sequences, self.embedding, config.surrogates,
                                                 config.seed, config.jobs, config.source_lag)
            shuffled = report_matrix(reports, matrix.symbols, self.embedding, value=shuffled_te)

        with self._stage('network'):
            summaries = aggregate_flow(matrix, regions)
            shuffled_summaries = aggregate_flow(shuffled, regions)
            graph_source = matrix if config.graph_input == 'raw' else effective
            flow_out = build_graph(graph_source, 'outgoing', config.graph_algorithm, regions)
            flow_in = build_graph(graph_source, 'incoming', config.graph_algorithm, regions)

        with self._stage('render'):
            te_map = render_grayscale(matrix)
            corr_map = render_grayscale(correlation)

        with self._stage('export'):
            os.makedirs(config.output_dir, exist_ok=True)
            write_matrix_csv(matrix.symbols, matrix.values, self._record('te_matrix.csv'))
            write_matrix_csv(correlation.symbols, correlation.values, self._record('corr_matrix.csv'), corner='symbol')
            write_matrix_csv(effective.symbols, effective.values, self._record('effective_te_matrix.csv'))
            write_pgm(te_map, self._record('te_map.pgm'))
            write_pgm(corr_map, self._record('corr_map.pgm'))
            boundaries = export_profiles(summaries, self._record('flow_profiles.csv'))
            export_profiles(shuffled_summaries, self._record('flow_profiles_shuffled.csv'))
            write_surrogate_csv(reports, self._record('surrogates.csv'))
            write_dot(flow_out, self._record('flow_out.dot'), 'flow_out')
            write_dot(flow_in, self._record('flow_in.dot'), 'flow_in')
            write_edge_list(flow_out, self._record('flow_out_edges.csv'))
            write_edge_list(flow_in, self._record('flow_in_edges.csv'))
            metadata = self._metadata(prices, sequences, matrix, flow_out, flow_in, boundaries, len(reports))
            write_text(self._record('run_metadata.json'),
                       json.dumps(_plain(metadata), indent=2, sort_keys=True) + '\n')

        artifacts = {os.path.basename(p): p for p in self.written}
        logger.info(f"Pipeline finished: {len(artifacts)} artifact(s) in {config.output_dir}")
        return artifacts

    def _metadata(self, prices, sequences, matrix, flow_out, flow_in, boundaries, report_count):
        off_diagonal = matrix.samples[~np.eye(len(matrix.symbols), dtype=bool)]
        return {
            'tool_version': TOOL_VERSION,
            'config': self.config.as_dict(),
            'random_generator': GENERATOR_NAME,
            'library_versions': {'numpy': np.__version__, 'pandas': pd.__version__},
            'estimator': 'plug-in (maximum likelihood), zero-count terms contribute 0',
            'markets': [{
                'symbol': p.symbol,
                'prices': len(p),
                'dropped_rows': p.dropped,
                'first_date': str(p.dates[0]) if len(p) else None,
                'last_date': str(p.dates[-1]) if len(p) else None,
                'scheme': s.scheme,
                'thresholds': list(s.thresholds),
                'state_frequencies': list(state_frequencies(s)),
            } for p, s in zip(prices, sequences)],
            'sample_counts': {
                'symbols': matrix.symbols,
                'per_pair': matrix.samples.tolist(),
                'min': int(off_diagonal.min()) if off_diagonal.size else 0,
                'max': int(off_diagonal.max()) if off_diagonal.size else 0,
            },
            'surrogate_pairs': report_count,
            'region_boundaries': boundaries,
            'graphs': {
                'out': {'kind': flow_out.structure_kind, 'hub': hub(flow_out), 'edges': len(flow_out.edges),
                        'components': flow_out.components, 'cycles': flow_out.cycles, 'ties': flow_out.ties},
                'in': {'kind': flow_in.structure_kind, 'hub': hub(flow_in), 'edges': len(flow_in.edges),
                       'components': flow_in.components, 'cycles': flow_in.cycles, 'ties': flow_in.ties},
            },
        }


def load_returns(config: PipelineConfig):
    """Manifest entries, parsed prices and aligned log returns for a config"""
    if not config.manifest:
        raise ConfigError("no manifest given (MANIFEST / --manifest)")
    entries = load_manifest(config.manifest)
    prices = PriceLoader(config.price_format, config.price_column, config.jobs).load_panel(entries)
    returns = align_panel([log_returns(p) for p in prices], config.alignment)
    return entries, prices, returns


def symbolize_panel(returns, config: PipelineConfig):
    sequences = [symbolize(r, config.scheme, config.threshold) for r in returns]
    for sequence in sequences:
        logger.info(f"{sequence.symbol}: {len(sequence)} symbols, state frequencies {state_frequencies(sequence)}")
    return sequences


def _as_data_error(error):
    return DataError(str(error))


def run_pipeline(config: PipelineConfig):
    """Run the full analysis; returns {artifact name: path}"""
    return FlowPipeline(config).run()

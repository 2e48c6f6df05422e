"""
Directional flow summaries and hub-revealing spanning structures.

Two constructions are offered for the flow tree:

* ``max_branching`` - maximum-weight spanning branching (Chu-Liu/Edmonds via
  networkx), optimal over all acyclic edge sets with one parent per node.
* ``greedy_attachment`` - every market attaches to its single strongest
  information source (outgoing) or sink (incoming); cycles are kept and
  flagged.

Edges are always reported in the direction information flows.
"""

import logging
from typing import Dict, List, Optional

import networkx as nx
import numpy as np

from errors import DataError
from helpers import format_float, format_weight, write_text
from models import FlowEdge, FlowGraph, FlowSummary, TEMatrix

logger = logging.getLogger(__name__)

MODES = ('outgoing', 'incoming')
ALGORITHMS = ('branching', 'greedy')


def _off_diagonal(values):
    masked = np.array(values, dtype=np.float64, copy=True)
    np.fill_diagonal(masked, np.nan)
    return masked


def _mean_or_nan(total, count):
    return total / count if count else float('nan')


def aggregate_flow(matrix: TEMatrix, regions: Optional[Dict[str, str]] = None) -> List[FlowSummary]:
    """Row (outgoing) and column (incoming) sums and means over defined cells"""
    regions = regions or {}
    values = _off_diagonal(matrix.values)
    defined = ~np.isnan(values)
    filled = np.where(defined, values, 0.0)
    out_sums, out_counts = filled.sum(axis=1), defined.sum(axis=1)
    in_sums, in_counts = filled.sum(axis=0), defined.sum(axis=0)

    summaries = []
    for n, symbol in enumerate(matrix.symbols):
        if not out_counts[n] or not in_counts[n]:
            logger.warning(f"{symbol}: no defined outgoing or incoming TE, mean left undefined")
        summaries.append(FlowSummary(symbol=symbol,
                                     out_sum=float(out_sums[n]),
                                     out_mean=_mean_or_nan(float(out_sums[n]), int(out_counts[n])),
                                     in_sum=float(in_sums[n]),
                                     in_mean=_mean_or_nan(float(in_sums[n]), int(in_counts[n])),
                                     region=regions.get(symbol, '')))
    return summaries


def _oriented(matrix: TEMatrix, mode):
    """Weights as seen by the construction: entry [a, b] is the weight of a -> b"""
    if mode not in MODES:
        raise DataError(f"mode must be one of {MODES}, got '{mode}'")
    values = _off_diagonal(matrix.values)
    return values if mode == 'outgoing' else values.T


def _nodes(matrix, regions):
    regions = regions or {}
    return [(symbol, regions.get(symbol, '')) for symbol in matrix.symbols]


def _flow_edge(matrix, mode, a, b):
    # construction edge a -> b; in incoming mode it stands for the flow b -> a
    source, target = (a, b) if mode == 'outgoing' else (b, a)
    return FlowEdge(matrix.symbols[source], matrix.symbols[target], float(matrix.values[source, target]))


def _check_coverage(matrix):
    if len(matrix.symbols) < 2:
        raise DataError("a flow graph needs at least 2 markets")
    values = _off_diagonal(matrix.values)
    for n, symbol in enumerate(matrix.symbols):
        if np.all(np.isnan(values[n])) and np.all(np.isnan(values[:, n])):
            logger.warning(f"{symbol} has no defined TE in either direction")


def max_branching(matrix: TEMatrix, mode='outgoing', regions=None) -> FlowGraph:
    """
    Maximum-weight spanning branching over edges j -> i weighted by T_{j->i}
    (outgoing) or on the transposed weights (incoming).
    """
    _check_coverage(matrix)
    weights = _oriented(matrix, mode)
    order = sorted(range(len(matrix.symbols)), key=lambda n: matrix.symbols[n])

    graph = nx.DiGraph()
    graph.add_nodes_from(order)
    for a in order:
        for b in order:
            if a != b and not np.isnan(weights[a, b]):
                graph.add_edge(a, b, weight=float(weights[a, b]))

    branching = nx.maximum_branching(graph, attr='weight')
    edges = sorted((_flow_edge(matrix, mode, a, b) for a, b in branching.edges()),
                   key=lambda e: (e.source, e.target))
    branching.add_nodes_from(order)
    components = nx.number_weakly_connected_components(branching)
    if components > 1:
        logger.info(f"Branching ({mode}) is a forest of {components} trees")
    return FlowGraph(_nodes(matrix, regions), edges, 'max-branching', mode, components=components)


def _strongest(row, symbols, exclude):
    """Index of the largest defined weight; ties go to the lexicographically first symbol"""
    best, tied = None, False
    for n in sorted(range(len(symbols)), key=lambda m: symbols[m]):
        if n == exclude or np.isnan(row[n]):
            continue
        if best is None or row[n] > row[best]:
            best, tied = n, False
        elif row[n] == row[best]:
            tied = True
    return best, tied


def greedy_attachment(matrix: TEMatrix, mode='outgoing', regions=None) -> FlowGraph:
    """
    Outgoing: each market i gains the edge argmax_j T_{j->i} -> i.
    Incoming: each market i gains the edge i -> argmax_j T_{i->j}.
    """
    _check_coverage(matrix)
    if mode not in MODES:
        raise DataError(f"mode must be one of {MODES}, got '{mode}'")
    values = _off_diagonal(matrix.values)
    symbols = matrix.symbols
    edges, ties = {}, []
    for i in range(len(symbols)):
        row = values[:, i] if mode == 'outgoing' else values[i, :]
        best, tied = _strongest(row, symbols, i)
        if best is None:
            continue
        if tied:
            ties.append(symbols[i])
        source, target = (best, i) if mode == 'outgoing' else (i, best)
        edges[(source, target)] = FlowEdge(symbols[source], symbols[target], float(values[source, target]))

    if ties:
        logger.info(f"Greedy attachment ({mode}) broke ties lexicographically for: {', '.join(ties)}")
    graph = nx.DiGraph()
    graph.add_nodes_from(symbols)
    graph.add_edges_from((e.source, e.target) for e in edges.values())
    cycles = sorted(sorted(cycle) for cycle in nx.simple_cycles(graph))
    return FlowGraph(_nodes(matrix, regions),
                     sorted(edges.values(), key=lambda e: (e.source, e.target)),
                     'greedy-attachment', mode,
                     components=nx.number_weakly_connected_components(graph),
                     cycles=cycles, ties=ties)


def build_graph(matrix: TEMatrix, mode='outgoing', algorithm='branching', regions=None) -> FlowGraph:
    if algorithm == 'branching':
        return max_branching(matrix, mode, regions)
    if algorithm == 'greedy':
        return greedy_attachment(matrix, mode, regions)
    raise DataError(f"algorithm must be one of {ALGORITHMS}, got '{algorithm}'")


def hub(graph: FlowGraph) -> str:
    """Market with the most edges in the dominant direction (out for outgoing, in for incoming)"""
    degree = graph.out_degree() if graph.mode == 'outgoing' else graph.in_degree()
    return min(degree, key=lambda symbol: (-degree[symbol], symbol))


def _quoted(text):
    return '"' + str(text).replace('\\', '\\\\').replace('"', '\\"') + '"'


def to_dot(graph: FlowGraph, name=None) -> str:
    name = name or f"flow_{graph.mode}"
    lines = [f"digraph {_quoted(name)} {{",
             f"  graph [structure={_quoted(graph.structure_kind)}, mode={_quoted(graph.mode)}];"]
    for symbol, region in graph.nodes:
        lines.append(f"  {_quoted(symbol)} [region={_quoted(region)}];")
    for edge in graph.edges:
        lines.append(f"  {_quoted(edge.source)} -> {_quoted(edge.target)} [weight={format_weight(edge.weight)}];")
    lines.append('}')
    return '\n'.join(lines) + '\n'


def write_dot(graph: FlowGraph, path, name=None):
    write_text(path, to_dot(graph, name))


def write_edge_list(graph: FlowGraph, path):
    lines = ['source,target,weight']
    lines += [f"{e.source},{e.target},{format_float(e.weight)}" for e in graph.edges]
    write_text(path, '\n'.join(lines) + '\n')

import logging
import os

from commands.common import add_graph_flags, embedding_from, output_path, with_config
from helpers import format_weight
from models import CorrelationMatrix
from services.entropy_service import read_matrix_csv, read_te_matrix
from services.ingest_service import load_manifest
from services.network_service import MODES, build_graph, hub, write_dot, write_edge_list
from services.render_service import ORIENTATIONS, render_grayscale, write_pgm

logger = logging.getLogger(__name__)

GRAPH_FILES = {'outgoing': 'flow_out', 'incoming': 'flow_in'}


@with_config
def graph_command(args, config):
    matrix = read_te_matrix(args.matrix, embedding_from(config))
    regions = {}
    if config.manifest:
        regions = {e.symbol: e.region for e in load_manifest(config.manifest)}
    modes = MODES if args.mode == 'both' else (args.mode,)

    for mode in modes:
        graph = build_graph(matrix, mode, config.graph_algorithm, regions)
        name = GRAPH_FILES[mode]
        write_dot(graph, output_path(None, config, f"{name}.dot"), name)
        write_edge_list(graph, output_path(None, config, f"{name}_edges.csv"))
        print(f"✅ {name}: {graph.structure_kind}, {len(graph.edges)} edge(s), "
              f"{graph.components} component(s), hub {hub(graph)}")
        for edge in graph.edges:
            print(f"   {edge.source} -> {edge.target} ({format_weight(edge.weight)})")
        if graph.cycles:
            print(f"   cycles: {'; '.join(' '.join(cycle) for cycle in graph.cycles)}")
    return 0


def _map_name(matrix_path):
    directory, filename = os.path.split(matrix_path)
    stem = os.path.splitext(filename)[0]
    stem = stem[:-len('_matrix')] + '_map' if stem.endswith('_matrix') else stem
    return os.path.join(directory, f"{stem}.pgm")


def render_command(args):
    symbols, values = read_matrix_csv(args.matrix)
    gray = render_grayscale(CorrelationMatrix(symbols, values), args.orientation)
    output = args.output or _map_name(args.matrix)
    write_pgm(gray, output, ascii=args.ascii)
    print(f"✅ {gray.width}x{gray.height} map written to {output} "
          f"(scale {gray.scale_min:.6g} .. {gray.scale_max:.6g})")
    return 0


def register(subparsers, parents):
    graph = subparsers.add_parser('graph', parents=parents, help='flow trees from a TE matrix CSV')
    graph.add_argument('matrix', help='TE matrix CSV (rows are sources)')
    graph.add_argument('--mode', choices=MODES + ('both',), default='both')
    graph.add_argument('--config', default=None, help='KEY=value config file')
    graph.add_argument('--manifest', default=None, help='manifest supplying region labels')
    graph.add_argument('--output-dir', dest='output_dir', default=None)
    add_graph_flags(graph)
    graph.set_defaults(handler=graph_command)

    render = subparsers.add_parser('render', parents=parents, help='grayscale PGM map of a matrix CSV')
    render.add_argument('matrix', help='matrix CSV')
    render.add_argument('-o', '--output', help='PGM path (default te_matrix.csv -> te_map.pgm)')
    render.add_argument('--orientation', choices=ORIENTATIONS, default='source-on-x')
    render.add_argument('--ascii', action='store_true', help='plain P2 instead of binary P5')
    render.set_defaults(handler=render_command)

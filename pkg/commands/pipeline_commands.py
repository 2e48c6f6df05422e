import logging

from commands.common import (add_embedding_flags, add_graph_flags, add_panel_flags, add_scheme_flags,
                             add_surrogate_flags, config_from_args)
from pipeline_config import create_config_template
from services.pipeline_service import run_pipeline

logger = logging.getLogger(__name__)


def run_command(args):
    if args.template:
        create_config_template(args.template)
        print(f"✅ Config template written to {args.template}")
        return 0

    config = config_from_args(args)
    logger.info(f"Effective config: {config.as_dict()}")
    artifacts = run_pipeline(config)
    print(f"✅ Pipeline finished, {len(artifacts)} artifact(s) in {config.output_dir}")
    for name in sorted(artifacts):
        print(f"   {name}")
    return 0


def register(subparsers, parents):
    run = subparsers.add_parser('run', parents=parents, help='full pipeline from a manifest to every artifact')
    add_panel_flags(run)
    add_scheme_flags(run)
    add_embedding_flags(run)
    add_surrogate_flags(run)
    add_graph_flags(run)
    run.add_argument('--template', metavar='PATH', default=None,
                     help='write a commented config template to PATH and exit')
    run.set_defaults(handler=run_command)

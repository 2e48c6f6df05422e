"""
Command-line entry point: python app.py <command> [options]

Commands: run, returns, symbolize, te, corr, surrogate, graph, render, synth.
Exit codes: 0 success, 1 usage or config error, 2 data error, 3 internal
invariant violation.
"""

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from commands import register_commands
from errors import ConfigError, FlowError, PipelineError
from pipeline_config import TOOL_VERSION

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class FlowArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1 instead of argparse's 2, which is reserved for bad data"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser():
    common = FlowArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG')
    common.add_argument('--log-file', default=None, help='also write the log to this file')

    parser = FlowArgumentParser(prog='app.py',
                                description='Transfer entropy information flow between market indices')
    parser.add_argument('--version', action='version', version=f"%(prog)s {TOOL_VERSION}")
    subparsers = parser.add_subparsers(dest='command', metavar='command', parser_class=FlowArgumentParser)
    subparsers.required = True
    register_commands(subparsers, parents=[common])
    return parser


def setup_logging(verbose=0, log_file=None):
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, os.getenv('LOG_LEVEL', 'WARNING').upper(), logging.WARNING)
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def main(argv=None):
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.log_file)

    try:
        return args.handler(args)
    except PipelineError as e:
        logger.error(f"Pipeline failed in stage '{e.stage}': {e.cause}")
        print(f"❌ Error in stage '{e.stage}': {e.cause}", file=sys.stderr)
        return e.exit_code
    except FlowError as e:
        logger.error(str(e))
        print(f"❌ Error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        print(f"❌ Internal error: {e}", file=sys.stderr)
        return 3


if __name__ == '__main__':
    sys.exit(main())

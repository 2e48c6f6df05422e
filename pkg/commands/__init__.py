from . import data_commands, entropy_commands, network_commands, pipeline_commands, synth_commands


def register_commands(subparsers, parents=()):
    """Register every subcommand on the CLI parser"""
    parents = list(parents)
    pipeline_commands.register(subparsers, parents)
    data_commands.register(subparsers, parents)
    entropy_commands.register(subparsers, parents)
    network_commands.register(subparsers, parents)
    synth_commands.register(subparsers, parents)

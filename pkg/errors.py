"""
Error types shared by the services and the command line.

Each error carries the process exit code the CLI should use for it.
"""


class FlowError(Exception):
    """Base class for every error raised on purpose by this project"""
    exit_code = 2


class ConfigError(FlowError):
    """Invalid flag, config value or embedding request"""
    exit_code = 1


class DataError(FlowError):
    """Input data that cannot be used as given"""
    exit_code = 2


class ParseError(DataError):
    """A price or matrix file that could not be parsed"""

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{location}: {message}")


class AlignmentError(DataError):
    """Two series share no trading dates"""


class InvariantError(FlowError):
    """A mathematical invariant failed; this is a bug, not bad input"""
    exit_code = 3


class PipelineError(FlowError):
    """Wraps the first failing pipeline stage"""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', 3)
        super().__init__(f"stage '{stage}' failed: {cause}")

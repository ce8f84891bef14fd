from .console.console_writer import ConsoleWriter
from .runlog.runlog_writer import RunLogWriter, read_run_log

__all__: list[str] = [
    "ConsoleWriter",
    "RunLogWriter",
    "read_run_log",
]

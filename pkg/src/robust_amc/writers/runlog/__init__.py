from .runlog_writer import RunLogWriter, read_run_log

__all__ = ["RunLogWriter", "read_run_log"]

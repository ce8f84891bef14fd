from .console_writer import ConsoleWriter

__all__ = ["ConsoleWriter"]

from .events import global_bus, global_bus as event_bus
from .history import RunHistory
from .record import PhaseRecord
from .tracker import RunTracker

__all__ = ["event_bus", "global_bus", "RunTracker", "PhaseRecord", "RunHistory"]

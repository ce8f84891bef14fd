from __future__ import annotations

import json
import logging
import threading

from pathlib import Path
from typing import Any, Callable, List

from robust_amc.core._json import jsonify
from robust_amc.core.events import RECORD_CREATED, global_bus
from robust_amc.core.record import PhaseRecord

_LOG = logging.getLogger(__name__)


class RunLogWriter:
    """
    Append every `record.created` event to a JSON-lines run log:
      • one object per line
      • file opened in append mode per record, so crashed runs keep prior lines
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._unsubscribe: Callable[[], None] = global_bus.subscribe(
            RECORD_CREATED, self._on_record_created
        )

    def _on_record_created(self, record: PhaseRecord, **_: Any) -> None:
        line = json.dumps(jsonify(record.to_dict()), sort_keys=True)
        try:
            with self._lock, open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        except OSError:
            _LOG.exception("Failed to append record %s to %s", record.id, self.path)

    def close(self) -> None:
        with self._lock:
            try:
                self._unsubscribe()
            except Exception:
                _LOG.warning("Failed to detach run log %s from the event bus", self.path, exc_info=True)

    def __enter__(self) -> "RunLogWriter":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def read_run_log(path: str | Path) -> List[PhaseRecord]:
    """Parse a run log written by :class:`RunLogWriter`; blank lines skipped."""
    records: List[PhaseRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(PhaseRecord.from_dict(json.loads(line)))
    return records

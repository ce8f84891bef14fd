import collections

from typing import Deque, Dict, Iterator, List

from .record import PhaseRecord


class RunHistory:
    """A ring‑buffer of phase records **plus** a lightweight lineage index."""

    def __init__(self, max_len: int | None = None) -> None:
        self._buf: Deque[PhaseRecord] = collections.deque(maxlen=max_len or 10_000)
        self._children: Dict[str, List[str]] = {}
        self._parents: Dict[str, List[str]] = {}

    def append(self, rec: PhaseRecord) -> None:
        """Append *rec* and update adjacency lists.

        If the buffer is at capacity and a *left* record is evicted we *also*
        evict its edges to keep indices in sync.
        """
        evicted: PhaseRecord | None = None
        if self._buf.maxlen and len(self._buf) == self._buf.maxlen:
            evicted = self._buf[0]

        self._buf.append(rec)

        self._parents[rec.id] = list(rec.parents)
        for pid in rec.parents:
            self._children.setdefault(pid, []).append(rec.id)

        if evicted is not None:
            self._remove_record(evicted.id)

    def parents_of(self, rid: str) -> List[str]:
        return self._parents.get(rid, [])

    def children_of(self, rid: str) -> List[str]:
        return self._children.get(rid, [])

    def ancestors_of(self, rid: str) -> Iterator[str]:
        stack = list(self.parents_of(rid))
        seen: set[str] = set()
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            yield current
            stack.extend(self.parents_of(current))

    def descendants_of(self, rid: str) -> Iterator[str]:
        stack = list(self.children_of(rid))
        seen: set[str] = set()
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            yield current
            stack.extend(self.children_of(current))

    def __len__(self) -> int:  # pragma: no cover – trivial
        return len(self._buf)

    def __iter__(self) -> Iterator[PhaseRecord]:  # pragma: no cover – trivial
        return iter(self._buf)

    def __getitem__(self, idx: int) -> PhaseRecord:
        return self._buf[idx]

    def filter(
        self, phase: str | None = None, baseline: str | None = None
    ) -> Iterator[PhaseRecord]:
        """Yield records matching *phase* and *baseline* (``None`` matches all)."""
        for rec in self._buf:
            if phase is not None and rec.phase != phase:
                continue
            if baseline is not None and rec.baseline != baseline:
                continue
            yield rec

    def _remove_record(self, rid: str) -> None:
        """Remove *rid* from adjacency lists – called when buffer evicts."""
        for p in self._parents.pop(rid, []):
            siblings = self._children.get(p, [])
            if rid in siblings:
                siblings.remove(rid)
            if p in self._children and not self._children[p]:
                self._children.pop(p)

        self._children.pop(rid, None)

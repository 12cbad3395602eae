"""Bounded page cache with strict LRU eviction and I/O counters."""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass

from .pagefile import PageFile

log = logging.getLogger(__name__)

DEFAULT_BUFFER_PAGES = 1024


@dataclass
class IoStats:
    page_reads: int = 0
    page_writes: int = 0
    buffer_hits: int = 0

    def copy(self) -> IoStats:
        return IoStats(self.page_reads, self.page_writes, self.buffer_hits)

    def __sub__(self, other: IoStats) -> IoStats:
        return IoStats(self.page_reads - other.page_reads,
                       self.page_writes - other.page_writes,
                       self.buffer_hits - other.buffer_hits)


class _Frame:
    __slots__ = ("rows", "dirty")

    def __init__(self, rows: list, dirty: bool):
        self.rows = rows
        self.dirty = dirty


class BufferPool:
    """Caches decoded pages of any number of page files.

    Frames are kept in recency order; the least recently used frame is evicted
    when a new page has to come in. Recency is a strict total order, so the
    eviction sequence is a pure function of the access sequence. Dirty frames
    are written back on eviction.
    """

    def __init__(self, capacity: int = DEFAULT_BUFFER_PAGES):
        if capacity < 1:
            raise ValueError("buffer pool needs at least one page")
        self.capacity = capacity
        self.stats = IoStats()
        self._frames: OrderedDict[tuple[PageFile, int], _Frame] = OrderedDict()

    def __len__(self) -> int:
        return len(self._frames)

    def fetch(self, pf: PageFile, page_no: int, write: bool = False) -> list:
        """Return the row list of a page, reading it from disk on a miss.

        With ``write=True`` the frame is marked dirty; callers mutate the
        returned list in place.
        """
        key = (pf, page_no)
        frame = self._frames.get(key)
        if frame is not None:
            self._frames.move_to_end(key)
            self.stats.buffer_hits += 1
        else:
            self._make_room()
            frame = _Frame(pf.read(page_no), False)
            self.stats.page_reads += 1
            self._frames[key] = frame
        if write:
            frame.dirty = True
        return frame.rows

    def create(self, pf: PageFile, page_no: int) -> list:
        """Install a fresh empty page without touching the disk."""
        key = (pf, page_no)
        if key in self._frames:
            raise KeyError(f"page {page_no} of {pf} already cached")
        self._make_room()
        frame = _Frame([], True)
        self._frames[key] = frame
        return frame.rows

    def _make_room(self) -> None:
        while len(self._frames) >= self.capacity:
            (pf, page_no), frame = self._frames.popitem(last=False)
            if frame.dirty:
                pf.write(page_no, frame.rows)
                self.stats.page_writes += 1

    def resize(self, capacity: int) -> None:
        if capacity < 1:
            raise ValueError("buffer pool needs at least one page")
        self.capacity = capacity
        while len(self._frames) > capacity:
            (pf, page_no), frame = self._frames.popitem(last=False)
            if frame.dirty:
                pf.write(page_no, frame.rows)
                self.stats.page_writes += 1

    def flush(self, pf: PageFile | None = None) -> None:
        """Write back dirty frames (of one file, or all) in page order."""
        dirty = sorted(((k, f) for k, f in self._frames.items()
                        if f.dirty and (pf is None or k[0] is pf)),
                       key=lambda item: (str(item[0][0].path), item[0][1]))
        for (owner, page_no), frame in dirty:
            owner.write(page_no, frame.rows)
            frame.dirty = False
            self.stats.page_writes += 1

    def discard(self, pf: PageFile) -> None:
        """Forget every frame of ``pf`` without writing anything."""
        for key in [k for k in self._frames if k[0] is pf]:
            del self._frames[key]

    def clear(self) -> None:
        """Flush everything and start cold."""
        self.flush()
        self._frames.clear()

    def reset_stats(self) -> None:
        self.stats.page_reads = self.stats.page_writes = self.stats.buffer_hits = 0

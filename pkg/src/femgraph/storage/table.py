"""Paged tables with a clustered key, lookups, updates and merge/upsert."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Iterator, Mapping
from operator import itemgetter
from pathlib import Path
from typing import Any, Union

from .bufferpool import BufferPool
from .pagefile import (TABLE_MAGIC, FormatError, Header, PageFile,
                       rows_per_page, validate_name)

log = logging.getLogger(__name__)

#: Distinguished "unknown / unreachable" cost. Stored as the largest int64.
INF = 2**63 - 1
#: Missing node reference (parent pointers of unreached rows).
NULL = -1

Row = tuple
Assignment = Union[Mapping[str, Any], Callable[..., Any]]


def sat_add(a: int, b: int) -> int:
    """Cost addition saturating at INF."""
    s = a + b
    return INF if s >= INF else s


class StorageError(Exception):
    pass


class SchemaError(StorageError, ValueError):
    pass


class UniqueViolation(StorageError):
    pass


class KeyMutationError(StorageError):
    pass


class DuplicateSourceKey(StorageError):
    pass


class Table:
    """A table of fixed-width integer rows stored in a page file.

    Rows are addressed by position; position ``p`` lives in data page
    ``p // rows_per_page + 1``. An in-memory index maps each clustered-key
    value to its row positions, so a lookup touches only the pages that hold
    matching rows. Appends that keep key order leave the file clustered;
    otherwise ``flush`` rewrites it in key order.
    """

    def __init__(self, pool: BufferPool, path, fields: Iterable[str], key: Iterable[str] | str,
                 unique: bool = False, *, magic: bytes = TABLE_MAGIC, meta: int = -1,
                 temporary: bool = False, name: str | None = None):
        fields = tuple(fields)
        key = (key,) if isinstance(key, str) else tuple(key)
        if not fields:
            raise SchemaError("schema must have at least one field")
        for f in fields:
            validate_name(f)
        if len(set(fields)) != len(fields):
            raise SchemaError(f"duplicate field names in {fields}")
        if not key:
            raise SchemaError("clustered key must name at least one field")
        for k in key:
            if k not in fields:
                raise SchemaError(f"key field {k!r} not in schema {fields}")
        self.name = name or Path(path).stem
        self.pool = pool
        self.fields = fields
        self.key = key
        self.unique = unique
        self.magic = magic
        self.meta = meta
        self.temporary = temporary
        self.file = PageFile(path, len(fields))
        self.rows_per_page = rows_per_page(len(fields))
        self.row_count = 0
        self._key_pos = tuple(fields.index(k) for k in key)
        self.key_of: Callable[[Row], Any] = itemgetter(*self._key_pos)
        self._index: dict = {}
        self._sorted = True
        self._last_key = None
        self._dropped = False
        if not temporary:
            self.file.truncate(0)
            self._write_header()

    def __repr__(self) -> str:
        return f"<Table {self.name} rows={self.row_count} key={self.key}>"

    def __len__(self) -> int:
        return self.row_count

    def __contains__(self, key) -> bool:
        return key in self._index

    @classmethod
    def open(cls, pool: BufferPool, path, expect_magic: bytes | None = None) -> Table:
        """Reopen a flushed table and rebuild its key index from the pages."""
        probe = PageFile(path, 1)
        try:
            header = Header.unpack(probe.read_raw(0))
        finally:
            probe.close()
        if expect_magic is not None and header.magic != expect_magic:
            raise FormatError(f"{path}: expected magic {expect_magic!r}, found {header.magic!r}")
        self = cls.__new__(cls)
        Table.__init__(self, pool, path, header.fields,
                       [header.fields[i] for i in header.key], header.unique,
                       magic=header.magic, meta=header.meta, temporary=True)
        self.temporary = False
        rpp = self.rows_per_page
        pos = 0
        for page_no in range(1, header.page_count + 1):
            for row in pool.fetch(self.file, page_no):
                self._index_add(self.key_of(row), pos)
                pos += 1
        if pos != header.row_count:
            raise FormatError(f"{path}: header says {header.row_count} rows, pages hold {pos}")
        self.row_count = pos
        self._sorted = header.sorted
        if pos:
            last = pool.fetch(self.file, (pos - 1) // rpp + 1)
            self._last_key = self.key_of(last[-1])
        return self

    # -- schema helpers -------------------------------------------------

    def col(self, name: str) -> int:
        return self.fields.index(name)

    def match(self, **conditions) -> Callable[[Row], bool]:
        """Build an equality predicate, e.g. ``t.match(f=1, nid=7)``."""
        pairs = [(self.col(k), v) for k, v in conditions.items()]
        return lambda row: all(row[i] == v for i, v in pairs)

    @property
    def page_count(self) -> int:
        return -(-self.row_count // self.rows_per_page)

    @property
    def is_clustered(self) -> bool:
        return self._sorted

    # -- row access -----------------------------------------------------

    def _locate(self, pos: int) -> tuple[int, int]:
        return pos // self.rows_per_page + 1, pos % self.rows_per_page

    def _read(self, pos: int) -> Row:
        page_no, slot = self._locate(pos)
        return self.pool.fetch(self.file, page_no)[slot]

    def _write(self, pos: int, row: Row) -> None:
        page_no, slot = self._locate(pos)
        self.pool.fetch(self.file, page_no, write=True)[slot] = row

    def _index_add(self, key, pos: int) -> None:
        if self.unique:
            self._index[key] = pos
            return
        locs = self._index.get(key)
        if locs is None:
            self._index[key] = range(pos, pos + 1)
        elif isinstance(locs, range):
            if locs.stop == pos:
                self._index[key] = range(locs.start, pos + 1)
            else:
                self._index[key] = [*locs, pos]
        else:
            locs.append(pos)

    def _check_row(self, row) -> Row:
        row = tuple(row)
        if len(row) != len(self.fields):
            raise SchemaError(f"{self.name}: row {row} does not match {self.fields}")
        for v in row:
            if not isinstance(v, int) or isinstance(v, bool):
                raise SchemaError(f"{self.name}: non-integer value {v!r} in {row}")
            if not -2**63 <= v < 2**63:
                raise SchemaError(f"{self.name}: value {v} outside int64")
        return row

    def _append(self, row: Row) -> None:
        key = self.key_of(row)
        pos = self.row_count
        page_no, slot = self._locate(pos)
        if slot == 0:
            page = self.pool.create(self.file, page_no)
        else:
            page = self.pool.fetch(self.file, page_no, write=True)
        page.append(row)
        self._index_add(key, pos)
        if self._last_key is not None and key < self._last_key:
            self._sorted = False
        self._last_key = key
        self.row_count = pos + 1

    def insert(self, row: Iterable[int]) -> None:
        row = self._check_row(row)
        if self.unique and self.key_of(row) in self._index:
            raise UniqueViolation(f"{self.name}: key {self.key_of(row)!r} already present")
        self._append(row)

    def insert_many(self, rows: Iterable[Iterable[int]]) -> int:
        n = 0
        for row in rows:
            self.insert(row)
            n += 1
        return n

    def get(self, key) -> Row | None:
        """Row with the given key in a unique table, or None."""
        pos = self._index.get(key)
        if pos is None:
            return None
        if not self.unique:
            raise StorageError(f"{self.name}: get() needs a unique key, use lookup()")
        return self._read(pos)

    def replace(self, key, row: Row) -> None:
        """Overwrite the row stored under ``key`` (unique tables, same key)."""
        pos = self._index[key]
        if self.key_of(row) != key:
            raise KeyMutationError(f"{self.name}: replacement changes key {key!r}")
        self._write(pos, row)

    def lookup(self, key) -> list[Row]:
        """All rows whose clustered key equals ``key``, in key-then-insertion order."""
        locs = self._index.get(key)
        if locs is None:
            return []
        if self.unique:
            return [self._read(locs)]
        rpp = self.rows_per_page
        fetch = self.pool.fetch
        out = []
        current = -1
        page: list = []
        for pos in locs:
            page_no = pos // rpp + 1
            if page_no != current:
                page = fetch(self.file, page_no)
                current = page_no
            out.append(page[pos % rpp])
        return out

    def __iter__(self) -> Iterator[Row]:
        for page_no in range(1, self.page_count + 1):
            yield from list(self.pool.fetch(self.file, page_no))

    def scan(self, predicate: Callable[[Row], bool] | None = None) -> list[Row]:
        """Full scan in physical order, optionally filtered."""
        if predicate is None:
            return list(self)
        return [row for row in self if predicate(row)]

    def keys(self) -> list:
        return list(self._index)

    # -- updates --------------------------------------------------------

    def _apply(self, row: Row, assignment: Assignment, *extra) -> Row:
        if callable(assignment) and not isinstance(assignment, Mapping):
            result = assignment(row, *extra)
            if not isinstance(result, Mapping):
                return tuple(result)
            assignment = result
        new = list(row)
        for name, value in assignment.items():
            new[self.col(name)] = value(row, *extra) if callable(value) else value
        return tuple(new)

    def update_where(self, predicate: Callable[[Row], bool], assignment: Assignment) -> int:
        """Update every row matching ``predicate``; returns the number updated.

        ``assignment`` maps field names to values or to callables of the old
        row, or is a callable returning such a mapping. Changing a key field
        is rejected before anything is written.
        """
        pending = []
        pos = 0
        for row in self:
            if predicate(row):
                new = self._apply(row, assignment)
                if self.key_of(new) != self.key_of(row):
                    raise KeyMutationError(f"{self.name}: update would change key of {row}")
                pending.append((pos, new))
            pos += 1
        for pos, new in pending:
            self._write(pos, new)
        return len(pending)

    def merge(self, source: Iterable[Row], match_key: Callable[[Row], Any] | int,
              matched_predicate: Callable[[Row, Row], bool],
              matched_assignment: Assignment,
              insert_projection: Callable[[Row], Iterable[int]]) -> int:
        """Upsert ``source`` into this table and return the affected-row count.

        For each source row: if a target row with the same key exists and
        ``matched_predicate(target, source)`` holds, the assignment is applied;
        if no target row exists, ``insert_projection(source)`` is inserted;
        otherwise nothing happens.
        """
        if not self.unique:
            raise StorageError(f"{self.name}: merge target needs a unique key")
        if isinstance(match_key, int):
            match_key = itemgetter(match_key)
        source = list(source)
        keys = [match_key(s) for s in source]
        if len(set(keys)) != len(keys):
            raise DuplicateSourceKey(f"{self.name}: merge source repeats a key")
        affected = 0
        index = self._index
        for key, src in zip(keys, source):
            pos = index.get(key)
            if pos is None:
                row = tuple(insert_projection(src))
                if self.key_of(row) != key:
                    raise KeyMutationError(f"{self.name}: projected row {row} does not carry key {key!r}")
                self._append(row)
                affected += 1
                continue
            row = self._read(pos)
            if matched_predicate(row, src):
                new = self._apply(row, matched_assignment, src)
                if self.key_of(new) != key:
                    raise KeyMutationError(f"{self.name}: merge would change key {key!r}")
                self._write(pos, new)
                affected += 1
        return affected

    # -- persistence ----------------------------------------------------

    def _header(self) -> Header:
        return Header(self.magic, self.fields, self._key_pos, self.unique, self._sorted,
                      self.row_count, self.page_count, self.meta)

    def _write_header(self) -> None:
        self.file.write_raw(0, self._header().pack())

    def _rewrite(self, rows: list[Row]) -> None:
        """Replace the contents with ``rows`` (already in key order)."""
        self.pool.discard(self.file)
        self._index = {}
        rpp = self.rows_per_page
        self.file.truncate(1)
        for page_no, start in enumerate(range(0, len(rows), rpp), start=1):
            self.file.write(page_no, rows[start:start + rpp])
            self.pool.stats.page_writes += 1
        key_of = self.key_of
        for pos, row in enumerate(rows):
            self._index_add(key_of(row), pos)
        self.row_count = len(rows)
        self._sorted = True
        self._last_key = key_of(rows[-1]) if rows else None

    def bulk_load(self, rows: Iterable[Iterable[int]]) -> int:
        """Load rows into an empty table, sorted (stably) by the clustered key."""
        if self.row_count:
            raise StorageError(f"{self.name}: bulk_load needs an empty table")
        rows = [self._check_row(r) for r in rows]
        rows.sort(key=self.key_of)
        if self.unique:
            keys = [self.key_of(r) for r in rows]
            if len(set(keys)) != len(keys):
                raise UniqueViolation(f"{self.name}: duplicate keys in bulk load")
        self._rewrite(rows)
        self._write_header()
        return len(rows)

    def flush(self) -> None:
        """Make the table durable, re-clustering it first if needed."""
        if self._dropped:
            raise StorageError(f"{self.name}: table was dropped")
        if not self._sorted:
            rows = list(self)
            rows.sort(key=self.key_of)
            self._rewrite(rows)
        else:
            self.pool.flush(self.file)
        self._write_header()
        self.file.sync()
        self.temporary = False

    def close(self) -> None:
        self.pool.discard(self.file)
        self.file.close()

    def drop(self) -> None:
        self.pool.discard(self.file)
        self.file.remove()
        self._index = {}
        self.row_count = 0
        self._dropped = True

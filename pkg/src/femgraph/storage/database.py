"""A directory of tables sharing one buffer pool."""

from __future__ import annotations

import itertools
import logging
import os
from pathlib import Path

from .bufferpool import DEFAULT_BUFFER_PAGES, BufferPool, IoStats
from .pagefile import TABLE_MAGIC
from .table import SchemaError, StorageError, Table

log = logging.getLogger(__name__)

TABLE_SUFFIX = ".tbl"
BUFFER_ENV = "FEMGRAPH_BUFFER_PAGES"


def default_buffer_pages() -> int:
    raw = os.environ.get(BUFFER_ENV)
    if not raw:
        return DEFAULT_BUFFER_PAGES
    try:
        pages = int(raw)
    except ValueError:
        raise ValueError(f"{BUFFER_ENV}={raw!r} is not an integer") from None
    if pages < 1:
        raise ValueError(f"{BUFFER_ENV} must be >= 1")
    return pages


class Database:
    """One session: a directory of page files and the buffer pool over them.

    Single-threaded; a session must not be used from two threads at once.
    """

    _tmp_ids = itertools.count()

    def __init__(self, path, buffer_pages: int | None = None, create: bool = True):
        self.path = Path(path)
        if not self.path.is_dir():
            if not create:
                raise FileNotFoundError(f"database directory {self.path} does not exist")
            self.path.mkdir(parents=True)
        self.pool = BufferPool(buffer_pages or default_buffer_pages())
        self.tables: dict[str, Table] = {}

    def __repr__(self) -> str:
        return f"Database({str(self.path)!r}, buffer_pages={self.pool.capacity})"

    def __enter__(self) -> Database:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def table_path(self, name: str, suffix: str = TABLE_SUFFIX) -> Path:
        return self.path / f"{name}{suffix}"

    def create_table(self, name: str, fields, key, unique: bool = False, *,
                     temporary: bool = False, magic: bytes = TABLE_MAGIC,
                     meta: int = -1, suffix: str = TABLE_SUFFIX, replace: bool = False) -> Table:
        if temporary:
            name = f"{name}_{os.getpid()}_{next(self._tmp_ids)}"
            path = self.path / "tmp" / f"{name}{suffix}"
            path.parent.mkdir(exist_ok=True)
        else:
            path = self.table_path(name, suffix)
        if name in self.tables or (not temporary and path.exists()):
            if not replace:
                raise StorageError(f"table {name!r} already exists in {self.path}")
            self.drop_table(name, suffix)
        table = Table(self.pool, path, fields, key, unique, magic=magic, meta=meta,
                      temporary=temporary, name=name)
        self.tables[name] = table
        return table

    def open_table(self, name: str, suffix: str = TABLE_SUFFIX,
                   expect_magic: bytes | None = None) -> Table:
        if name in self.tables:
            return self.tables[name]
        path = self.table_path(name, suffix)
        if not path.exists():
            raise StorageError(f"no table {name!r} in {self.path}")
        table = Table.open(self.pool, path, expect_magic)
        table.name = name
        self.tables[name] = table
        return table

    def has_table(self, name: str, suffix: str = TABLE_SUFFIX) -> bool:
        return name in self.tables or self.table_path(name, suffix).exists()

    def drop_table(self, name: str, suffix: str = TABLE_SUFFIX) -> None:
        table = self.tables.pop(name, None)
        if table is not None:
            table.drop()
        else:
            self.table_path(name, suffix).unlink(missing_ok=True)

    def set_buffer_pages(self, pages: int) -> None:
        if pages < 1:
            raise SchemaError("buffer must hold at least one page")
        self.pool.resize(pages)

    def io_stats(self) -> IoStats:
        return self.pool.stats.copy()

    def reset_io_stats(self) -> None:
        self.pool.reset_stats()

    def drop_cache(self) -> None:
        """Write back dirty pages and empty the buffer (cold start)."""
        self.pool.clear()

    def flush(self) -> None:
        for table in self.tables.values():
            if not table.temporary:
                table.flush()

    def close(self) -> None:
        for name, table in list(self.tables.items()):
            if table.temporary:
                table.drop()
            else:
                table.flush()
                table.close()
        self.tables.clear()

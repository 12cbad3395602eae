"""Fixed-size page files.

Every table lives in one file made of 4096-byte pages. Page 0 is the header
(magic, schema descriptor, counters); pages 1.. hold rows of fixed-width
little-endian int64 fields.

Header page layout (all integers little-endian)::

    offset  size  field
    0       4     magic (b"FEMT" for tables, b"FEMS" for segment tables)
    4       2     format version (1)
    6       2     field count F
    8       2     clustered key length K
    10      2     flags (bit 0: unique key, bit 1: rows sorted by key)
    12      4     reserved (zero)
    16      8     row count
    24      8     data page count
    32      8     meta value (l_thd for segment tables, -1 otherwise)
    40      16*F  field names, ASCII, NUL padded
    ..      2*K   clustered key field positions

Data page layout::

    0       4     rows on this page
    4       4     reserved (zero)
    8       8*F*r rows, each F signed int64 values
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

PAGE_SIZE = 4096
FORMAT_VERSION = 1
TABLE_MAGIC = b"FEMT"
SEGMENT_MAGIC = b"FEMS"

_HEADER = struct.Struct("<4sHHHHIqqq")
_PAGE_HEADER = struct.Struct("<II")
_NAME_WIDTH = 16

FLAG_UNIQUE = 1
FLAG_SORTED = 2


class FormatError(ValueError):
    """A page file does not match the expected on-disk format."""


def rows_per_page(nfields: int) -> int:
    return (PAGE_SIZE - _PAGE_HEADER.size) // (8 * nfields)


@dataclass
class Header:
    magic: bytes
    fields: tuple[str, ...]
    key: tuple[int, ...]
    unique: bool
    sorted: bool
    row_count: int
    page_count: int
    meta: int = -1

    def pack(self) -> bytes:
        flags = (FLAG_UNIQUE if self.unique else 0) | (FLAG_SORTED if self.sorted else 0)
        head = _HEADER.pack(self.magic, FORMAT_VERSION, len(self.fields), len(self.key),
                            flags, 0, self.row_count, self.page_count, self.meta)
        names = b"".join(f.encode("ascii").ljust(_NAME_WIDTH, b"\0") for f in self.fields)
        keys = struct.pack(f"<{len(self.key)}H", *self.key)
        body = head + names + keys
        if len(body) > PAGE_SIZE:
            raise FormatError("schema descriptor does not fit in the header page")
        return body.ljust(PAGE_SIZE, b"\0")

    @classmethod
    def unpack(cls, data: bytes) -> Header:
        if len(data) < _HEADER.size:
            raise FormatError("truncated header page")
        magic, version, nf, nk, flags, _, rows, pages, meta = _HEADER.unpack_from(data)
        if magic not in (TABLE_MAGIC, SEGMENT_MAGIC):
            raise FormatError(f"bad magic bytes {magic!r}")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}")
        off = _HEADER.size
        fields = []
        for i in range(nf):
            raw = data[off + i * _NAME_WIDTH: off + (i + 1) * _NAME_WIDTH]
            fields.append(raw.rstrip(b"\0").decode("ascii"))
        off += nf * _NAME_WIDTH
        key = struct.unpack_from(f"<{nk}H", data, off)
        return cls(magic, tuple(fields), tuple(key), bool(flags & FLAG_UNIQUE),
                   bool(flags & FLAG_SORTED), rows, pages, meta)


def validate_name(name: str) -> None:
    if not name or len(name) > _NAME_WIDTH or not name.isascii():
        raise ValueError(f"field name {name!r} must be 1..{_NAME_WIDTH} ASCII characters")


class PageFile:
    """Raw page I/O for one table file. The file is opened on first use."""

    def __init__(self, path: str | os.PathLike, nfields: int):
        self.path = Path(path)
        self.nfields = nfields
        self.capacity = rows_per_page(nfields)
        self._row = struct.Struct("<" + "q" * nfields)
        self._fh = None

    def __repr__(self) -> str:
        return f"PageFile({str(self.path)!r})"

    def _handle(self):
        if self._fh is None:
            mode = "r+b" if self.path.exists() else "w+b"
            self._fh = open(self.path, mode)
        return self._fh

    def read_raw(self, page_no: int) -> bytes:
        fh = self._handle()
        fh.seek(page_no * PAGE_SIZE)
        data = fh.read(PAGE_SIZE)
        if len(data) != PAGE_SIZE:
            raise FormatError(f"{self.path}: page {page_no} is truncated")
        return data

    def write_raw(self, page_no: int, data: bytes) -> None:
        fh = self._handle()
        fh.seek(page_no * PAGE_SIZE)
        fh.write(data)

    def read(self, page_no: int) -> list[tuple[int, ...]]:
        data = self.read_raw(page_no)
        count, _ = _PAGE_HEADER.unpack_from(data)
        if count > self.capacity:
            raise FormatError(f"{self.path}: page {page_no} claims {count} rows")
        end = _PAGE_HEADER.size + count * self._row.size
        return list(self._row.iter_unpack(data[_PAGE_HEADER.size:end]))

    def write(self, page_no: int, rows: list[tuple[int, ...]]) -> None:
        pack = self._row.pack
        body = b"".join(pack(*r) for r in rows)
        data = _PAGE_HEADER.pack(len(rows), 0) + body
        self.write_raw(page_no, data.ljust(PAGE_SIZE, b"\0"))

    def truncate(self, pages: int) -> None:
        fh = self._handle()
        fh.truncate(pages * PAGE_SIZE)

    def sync(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def remove(self) -> None:
        self.close()
        self.path.unlink(missing_ok=True)

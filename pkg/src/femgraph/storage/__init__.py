"""Minimal persistent relational kernel: page files, buffer pool, tables."""

from .bufferpool import DEFAULT_BUFFER_PAGES, BufferPool, IoStats
from .database import BUFFER_ENV, Database, default_buffer_pages
from .graph import (EDGE_FIELDS, EdgeListError, EdgeTuple, Graph, GraphStats,
                    NodeNotFound, collapse_edges, parse_edge_list,
                    read_edge_list, write_edge_list)
from .pagefile import (PAGE_SIZE, SEGMENT_MAGIC, TABLE_MAGIC, FormatError,
                       PageFile, rows_per_page)
from .table import (INF, NULL, DuplicateSourceKey, KeyMutationError,
                    SchemaError, StorageError, Table, UniqueViolation, sat_add)

__all__ = [
    "BUFFER_ENV", "DEFAULT_BUFFER_PAGES", "EDGE_FIELDS", "INF", "NULL", "PAGE_SIZE",
    "SEGMENT_MAGIC", "TABLE_MAGIC", "BufferPool", "Database", "DuplicateSourceKey",
    "EdgeListError", "EdgeTuple", "FormatError", "Graph", "GraphStats", "IoStats",
    "KeyMutationError", "NodeNotFound", "PageFile", "SchemaError", "StorageError",
    "Table", "UniqueViolation", "collapse_edges", "default_buffer_pages",
    "parse_edge_list", "read_edge_list", "rows_per_page", "sat_add", "write_edge_list",
]

"""Disk-backed shortest-path search built from frontier-select / expand / merge
operators over paged relational tables."""

__version__ = "0.1.0"

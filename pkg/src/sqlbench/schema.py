"""SQLite schema introspection and content-row sampling for prompt rendering."""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field
from pathlib import Path


class IntrospectionError(Exception):
    pass


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    declared_type: str
    is_primary_key: bool
    not_null: bool


@dataclass
class TableSchema:
    name: str
    columns: list[ColumnSchema]
    foreign_keys: list[tuple[str, str, str]]  # (from_column, ref_table, ref_column)
    create_sql: str

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def primary_key(self) -> list[str]:
        return [c.name for c in self.columns if c.is_primary_key]


@dataclass
class DatabaseSchema:
    db_file: Path
    tables: list[TableSchema]
    warnings: list[str] = field(default_factory=list)

    def table(self, name: str) -> TableSchema:
        for t in self.tables:
            if t.name.lower() == name.lower():
                return t
        raise KeyError(name)


@dataclass
class RowSample:
    table: str
    limit: int
    header: list[str]
    rows: list[tuple]


def _connect_ro(db_file) -> sqlite3.Connection:
    path = Path(db_file)
    if not path.exists():
        raise IntrospectionError(f"database file not found: {path}")
    return sqlite3.connect(f"file:{path}?mode=ro", uri=True)


def introspect(db_file) -> DatabaseSchema:
    """Read all user tables in catalog order, with columns, PKs, FKs, and the
    original CREATE TABLE text. Dangling foreign keys become schema warnings."""
    try:
        conn = _connect_ro(db_file)
        cur = conn.execute(
            "SELECT name, sql FROM sqlite_master "
            "WHERE type = 'table' AND name NOT LIKE 'sqlite_%'"
        )
        master = cur.fetchall()
    except sqlite3.Error as e:
        raise IntrospectionError(f"cannot read database {db_file}: {e}") from e

    tables = []
    warnings = []
    try:
        for name, create_sql in master:
            cols = []
            for _, cname, ctype, notnull, _, pk in conn.execute(
                f'PRAGMA table_info("{name}")'
            ):
                cols.append(ColumnSchema(cname, ctype, pk > 0, bool(notnull)))
            fks = []
            for row in conn.execute(f'PRAGMA foreign_key_list("{name}")'):
                # (id, seq, ref_table, from_col, to_col, ...)
                ref_table, from_col, to_col = row[2], row[3], row[4]
                if to_col is None:
                    to_col = ""  # implicit reference to the parent PK
                fks.append((from_col, ref_table, to_col))
            tables.append(TableSchema(name, cols, fks, create_sql or ""))
    except sqlite3.Error as e:
        raise IntrospectionError(f"cannot introspect {db_file}: {e}") from e
    finally:
        conn.close()

    by_name = {t.name.lower(): t for t in tables}
    for t in tables:
        fixed = []
        for from_col, ref_table, to_col in t.foreign_keys:
            parent = by_name.get(ref_table.lower())
            if parent is None:
                warnings.append(
                    f"table {t.name}: foreign key {from_col} references "
                    f"missing table {ref_table}"
                )
                fixed.append((from_col, ref_table, to_col))
                continue
            if not to_col:
                pk = parent.primary_key
                to_col = pk[0] if len(pk) == 1 else ""
            if to_col and to_col.lower() not in {c.name.lower() for c in parent.columns}:
                warnings.append(
                    f"table {t.name}: foreign key {from_col} references "
                    f"missing column {ref_table}.{to_col}"
                )
            fixed.append((from_col, ref_table, to_col))
        t.foreign_keys = fixed
    return DatabaseSchema(db_file=Path(db_file), tables=tables, warnings=warnings)


def sample_rows(db_file, table: str, x: int) -> RowSample:
    """First x rows of a table in natural (rowid) order, typed values preserved."""
    if x < 1:
        raise ValueError("sample limit must be >= 1")
    conn = _connect_ro(db_file)
    try:
        try:
            cur = conn.execute(f'SELECT * FROM "{table}" LIMIT {int(x)}')
        except sqlite3.Error as e:
            raise IntrospectionError(f"cannot sample table {table!r}: {e}") from e
        header = [d[0] for d in cur.description]
        rows = [tuple(r) for r in cur.fetchall()]
    finally:
        conn.close()
    return RowSample(table=table, limit=x, header=header, rows=rows)

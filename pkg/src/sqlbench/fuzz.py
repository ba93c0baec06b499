"""Schema-preserving database fuzzing for test-suite accuracy evaluation.

A test suite pairs the original database (variant 0) with k fuzzed variants
that keep tables, columns, types, primary-key uniqueness, and foreign-key
integrity, while regenerating row contents. The last fuzzed variant empties
every originally non-empty table to probe empty-input query semantics.
"""

from __future__ import annotations

import json
import random
import sqlite3
import string
from dataclasses import dataclass
from pathlib import Path

from .schema import DatabaseSchema, TableSchema, introspect

GENERATOR_VERSION = "1"
MAX_ROWS = 64


class SuiteError(Exception):
    pass


@dataclass
class TestSuite:
    __test__ = False  # keep pytest from collecting this dataclass

    db_id: str
    seed: int
    k: int
    variants: list[Path]  # variants[0] is the original database file


def _topo_order(schema: DatabaseSchema) -> tuple[list[TableSchema], list[TableSchema]]:
    """Kahn topological sort over FK dependencies (parents first).

    Returns (ordered acyclic tables, tables stuck in FK cycles)."""
    by_name = {t.name.lower(): t for t in schema.tables}
    deps = {
        t.name.lower(): {
            ref.lower()
            for _, ref, _ in t.foreign_keys
            if ref.lower() in by_name and ref.lower() != t.name.lower()
        }
        for t in schema.tables
    }
    ordered = []
    remaining = dict(deps)
    while remaining:
        ready = [name for name, d in remaining.items() if not (d & remaining.keys())]
        if not ready:
            break
        for name in sorted(ready, key=lambda n: [t.name.lower() for t in schema.tables].index(n)):
            ordered.append(by_name[name])
            del remaining[name]
    cyclic = [by_name[name] for name in remaining]
    return ordered, cyclic


def _fresh_value(rng: random.Random, declared_type: str):
    t = (declared_type or "").upper()
    if "INT" in t:
        return rng.randint(0, 100000)
    if any(k in t for k in ("REAL", "FLOA", "DOUB", "DEC", "NUM")):
        return round(rng.uniform(0, 10000), 3)
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(6))


def _mutate_value(rng: random.Random, value, declared_type: str):
    if value is None:
        return _fresh_value(rng, declared_type)
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + rng.choice((-1, 1))
    if isinstance(value, float):
        return value + rng.choice((-1.0, 1.0))
    if isinstance(value, str):
        choice = rng.randrange(3)
        if choice == 0:
            return ""
        if choice == 1 and value:
            return value.swapcase()
        return value + rng.choice(string.ascii_lowercase)
    return value


def _column_pools(conn: sqlite3.Connection, table: TableSchema) -> tuple[list[tuple], list[list]]:
    rows = [tuple(r) for r in conn.execute(f'SELECT * FROM "{table.name}"')]
    pools = []
    for j in range(len(table.columns)):
        seen = []
        for r in rows:
            if r[j] not in seen:
                seen.append(r[j])
        pools.append(seen)
    return rows, pools


def _generate_table_rows(
    rng: random.Random,
    table: TableSchema,
    orig_rows: list[tuple],
    pools: list[list],
    parent_keys: dict[str, dict[str, list]],
    empty: bool,
) -> list[tuple]:
    n_orig = len(orig_rows)
    if empty or n_orig == 0:
        return []
    lo = max(1, n_orig // 2)
    hi = min(2 * n_orig, MAX_ROWS)
    n_new = rng.randint(lo, max(lo, hi))

    fk_by_col = {}
    for from_col, ref_table, ref_col in table.foreign_keys:
        fk_by_col[from_col.lower()] = (ref_table, ref_col)

    pk_cols = [i for i, c in enumerate(table.columns) if c.is_primary_key]
    rows = []
    seen_pk = set()
    for _ in range(n_new):
        for attempt in range(200):
            row = []
            feasible = True
            for j, col in enumerate(table.columns):
                fk = fk_by_col.get(col.name.lower())
                if fk is not None:
                    ref_table, ref_col = fk
                    candidates = parent_keys.get(ref_table.lower(), {}).get(ref_col.lower(), [])
                    if not candidates:
                        feasible = False
                        break
                    row.append(rng.choice(candidates))
                    continue
                pool = pools[j]
                r = rng.random()
                if pool and r < 0.6:
                    v = rng.choice(pool)
                elif pool and r < 0.8:
                    v = _mutate_value(rng, rng.choice(pool), col.declared_type)
                else:
                    v = _fresh_value(rng, col.declared_type)
                if v is None and (col.not_null or col.is_primary_key):
                    v = _fresh_value(rng, col.declared_type)
                row.append(v)
            if not feasible:
                break
            if pk_cols:
                key = tuple(row[i] for i in pk_cols)
                if key in seen_pk:
                    continue
                seen_pk.add(key)
            rows.append(tuple(row))
            break
        else:
            # PK exhaustion under a small candidate space: stop adding rows
            break
        if not feasible:
            break
    return rows


def _generate_variant(
    schema: DatabaseSchema,
    orig_data: dict[str, tuple[list[tuple], list[list]]],
    rng: random.Random,
    out_file: Path,
    empty: bool,
) -> None:
    ordered, cyclic = _topo_order(schema)
    generated: dict[str, list[tuple]] = {}
    parent_keys: dict[str, dict[str, list]] = {}

    def register(table: TableSchema, rows: list[tuple]):
        generated[table.name.lower()] = rows
        cols = {}
        for j, c in enumerate(table.columns):
            vals = []
            for r in rows:
                if r[j] is not None and r[j] not in vals:
                    vals.append(r[j])
            cols[c.name.lower()] = vals
        parent_keys[table.name.lower()] = cols

    for table in ordered:
        orig_rows, pools = orig_data[table.name.lower()]
        rows = _generate_table_rows(rng, table, orig_rows, pools, parent_keys, empty)
        register(table, rows)

    if cyclic:
        # two-pass fill: generate rows ignoring FKs, then rewrite FK cells
        for table in cyclic:
            orig_rows, pools = orig_data[table.name.lower()]
            plain = TableSchema(table.name, table.columns, [], table.create_sql)
            rows = _generate_table_rows(rng, plain, orig_rows, pools, {}, empty)
            register(table, rows)
        for table in cyclic:
            fk_by_col = {fc.lower(): (rt, rc) for fc, rt, rc in table.foreign_keys}
            cols = [c.name.lower() for c in table.columns]
            pk_cols = [i for i, c in enumerate(table.columns) if c.is_primary_key]
            new_rows = []
            seen_pk = set()
            for row in generated[table.name.lower()]:
                row = list(row)
                ok = True
                for j, cname in enumerate(cols):
                    if cname in fk_by_col:
                        rt, rc = fk_by_col[cname]
                        candidates = parent_keys.get(rt.lower(), {}).get(rc.lower(), [])
                        if not candidates:
                            ok = False
                            break
                        row[j] = rng.choice(candidates)
                if not ok:
                    continue
                if pk_cols:
                    key = tuple(row[i] for i in pk_cols)
                    if key in seen_pk:
                        continue
                    seen_pk.add(key)
                new_rows.append(tuple(row))
            register(table, new_rows)
        # FK targets may themselves have changed; one verification pass
        for table in cyclic:
            for from_col, rt, rc in table.foreign_keys:
                j = [c.name.lower() for c in table.columns].index(from_col.lower())
                valid = set(parent_keys.get(rt.lower(), {}).get(rc.lower(), []))
                for row in generated[table.name.lower()]:
                    if row[j] is not None and row[j] not in valid:
                        raise SuiteError(
                            f"cannot satisfy cyclic foreign keys for table {table.name}"
                        )

    out_file.parent.mkdir(parents=True, exist_ok=True)
    if out_file.exists():
        out_file.unlink()
    conn = sqlite3.connect(out_file)
    try:
        for table in schema.tables:
            conn.execute(table.create_sql)
        for table in schema.tables:
            rows = generated[table.name.lower()]
            if rows:
                marks = ",".join("?" * len(table.columns))
                conn.executemany(f'INSERT INTO "{table.name}" VALUES ({marks})', rows)
        conn.commit()
    finally:
        conn.close()


def build_test_suite(db_file, k: int, seed: int, cache_dir, db_id: str | None = None,
                     log=None) -> TestSuite:
    """Create (or reuse) k fuzzed variants of db_file under cache_dir.

    Generation is a pure function of (original database, seed, k); a manifest
    guards cached suites and triggers regeneration when stale or corrupt.
    """
    if k < 1:
        raise ValueError("suite size k must be >= 1")
    db_file = Path(db_file)
    if db_id is None:
        db_id = db_file.stem
    suite_dir = Path(cache_dir) / db_id / str(seed)
    manifest_path = suite_dir / "manifest.json"
    variants = [db_file] + [suite_dir / f"variant_{i}.db" for i in range(1, k + 1)]

    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text())
            if (
                manifest.get("seed") == seed
                and manifest.get("k") == k
                and manifest.get("generator_version") == GENERATOR_VERSION
                and all(v.exists() for v in variants[1:])
            ):
                return TestSuite(db_id=db_id, seed=seed, k=k, variants=variants)
            if log:
                log(f"suite manifest for {db_id}/{seed} is stale; regenerating")
        except (json.JSONDecodeError, OSError):
            if log:
                log(f"suite manifest for {db_id}/{seed} is corrupt; regenerating")

    schema = introspect(db_file)
    conn = sqlite3.connect(f"file:{db_file}?mode=ro", uri=True)
    try:
        orig_data = {t.name.lower(): _column_pools(conn, t) for t in schema.tables}
    finally:
        conn.close()

    for i in range(1, k + 1):
        rng = random.Random(f"{seed}:{i}")
        empty = i == k  # last variant probes empty-table semantics
        _generate_variant(schema, orig_data, rng, variants[i], empty)

    manifest_path.write_text(json.dumps(
        {"db_id": db_id, "seed": seed, "k": k, "generator_version": GENERATOR_VERSION}
    ))
    return TestSuite(db_id=db_id, seed=seed, k=k, variants=variants)

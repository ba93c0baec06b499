"""Benchmark loading, SQL template derivation, and few-shot support selection."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path


class IngestionError(Exception):
    pass


class TemplateError(Exception):
    pass


@dataclass(frozen=True)
class ExampleRecord:
    example_id: str
    db_id: str
    question: str
    gold_sql: str
    template_id: str | None = None


@dataclass
class Benchmark:
    name: str
    split: str
    examples: list[ExampleRecord]
    db_root: Path
    warnings: list[str] = field(default_factory=list)

    def db_path(self, db_id: str) -> Path:
        """Spider layout: <db_root>/<db_id>/<db_id>.sqlite."""
        return Path(self.db_root) / db_id / f"{db_id}.sqlite"


@dataclass
class SupportSet:
    n: int
    seed: int
    examples: list[ExampleRecord]

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "seed": self.seed,
            "examples": [
                {"question": e.question, "gold_sql": e.gold_sql, "template": e.template_id}
                for e in self.examples
            ],
        }
        return json.dumps(payload, indent=2)


def load_benchmark(path, db_root, name: str | None = None, split: str = "dev") -> Benchmark:
    """Load a Spider-format JSON list of {db_id, question, query} items.

    Example order is preserved; example ids are zero-padded positional ids.
    Missing database files produce warnings, not errors (evaluation fails on use).
    """
    path = Path(path)
    db_root = Path(db_root)
    try:
        with open(path) as f:
            items = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise IngestionError(f"cannot parse benchmark file {path}: {e}") from e
    if not isinstance(items, list):
        raise IngestionError(f"benchmark file {path} is not a JSON list")

    examples = []
    warnings = []
    seen_dbs = set()
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise IngestionError(f"item at index {i} is not an object")
        for key in ("db_id", "question", "query"):
            if key not in item:
                raise IngestionError(f"item at index {i} is missing field {key!r}")
        if not str(item["query"]).strip():
            raise IngestionError(f"item at index {i} has an empty gold query")
        rec = ExampleRecord(
            example_id=f"e{i:04d}",
            db_id=item["db_id"],
            question=item["question"],
            gold_sql=item["query"],
            template_id=item.get("template_id"),
        )
        examples.append(rec)
        if rec.db_id not in seen_dbs:
            seen_dbs.add(rec.db_id)
            if not (db_root / rec.db_id / f"{rec.db_id}.sqlite").exists():
                warnings.append(f"database file not found for db_id {rec.db_id!r}")
    return Benchmark(name=name or path.stem, split=split, examples=examples,
                     db_root=db_root, warnings=warnings)


# SQL lexer for template derivation: string literals, numbers, words, operators.
_SQL_TOKEN = re.compile(
    r"""
      '(?:[^']|'')*'          # single-quoted string
    | "(?:[^"]|"")*"          # double-quoted (Spider golds use these as strings)
    | \d+\.\d*(?:[eE][+-]?\d+)?
    | \.\d+(?:[eE][+-]?\d+)?
    | \d+(?:[eE][+-]?\d+)?
    | [A-Za-z_][A-Za-z_0-9]*
    | <>|<=|>=|!=|\|\|
    | [(),.;*=<>+\-/%]
    """,
    re.VERBOSE,
)


def canonical_template(sql: str) -> str:
    """Anonymize literals so queries sharing structure map to one string.

    String literals become <str>, numeric literals <num>; everything else is
    uppercased and whitespace-collapsed. Idempotent.
    """
    tokens = []
    pos = 0
    for m in _SQL_TOKEN.finditer(sql):
        between = sql[pos:m.start()]
        if between.strip():
            raise TemplateError(f"cannot lex SQL near {between.strip()[:20]!r}")
        pos = m.end()
        tok = m.group(0)
        if tok[0] in "'\"":
            tokens.append("<str>")
        elif tok[0].isdigit() or (tok[0] == "." and len(tok) > 1 and tok[1].isdigit()):
            tokens.append("<num>")
        else:
            tokens.append(tok.upper())
    if sql[pos:].strip():
        raise TemplateError(f"cannot lex SQL near {sql[pos:].strip()[:20]!r}")
    out = " ".join(tokens)
    # re-join placeholder brackets split by the lexer
    out = out.replace("< STR >", "<str>").replace("< NUM >", "<num>")
    return out


def template_groups(bench: Benchmark) -> dict[str, list[ExampleRecord]]:
    """Group examples by template id, deriving one from the gold SQL when absent.

    Unlexable golds are excluded from grouping with a warning on the benchmark.
    """
    groups: dict[str, list[ExampleRecord]] = {}
    for rec in bench.examples:
        tid = rec.template_id
        if tid is None:
            try:
                tid = canonical_template(rec.gold_sql)
            except TemplateError as e:
                bench.warnings.append(f"{rec.example_id}: excluded from templates ({e})")
                continue
        groups.setdefault(tid, []).append(rec)
    return groups


def select_support(train: Benchmark, n: int, seed: int) -> SupportSet:
    """Pick one example from each of the n most frequent train templates.

    Frequency ties break by ascending template string. The draw for each
    template is seeded by (seed, template string) so extending the pool never
    perturbs draws for templates already present.
    """
    if n == 0:
        return SupportSet(n=0, seed=seed, examples=[])
    groups = template_groups(train)
    if not groups:
        raise ValueError("training split has no template groups")
    ranked = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    chosen = []
    for template, members in ranked[:n]:
        rng = random.Random(f"{seed}:{template}")
        pick = members[rng.randrange(len(members))]
        if pick.template_id is None:
            pick = ExampleRecord(pick.example_id, pick.db_id, pick.question,
                                 pick.gold_sql, template_id=template)
        chosen.append(pick)
    return SupportSet(n=n, seed=seed, examples=chosen)

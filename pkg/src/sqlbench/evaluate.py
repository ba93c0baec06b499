"""Per-example metric computation: validity, execution accuracy, test-suite accuracy."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .backend import EMPTY_PREDICTION, Prediction
from .dataset import Benchmark, ExampleRecord
from .execution import ExecError, ExecResult, compare_results, execute_sql
from .fuzz import TestSuite


class GoldBrokenError(Exception):
    """The gold query fails on the original database; the example is excluded."""


@dataclass
class EvalOutcome:
    example_id: str
    valid: bool
    invalid_reason: str | None
    ex: bool
    ts: bool
    timing_ms: float

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "valid": self.valid,
            "invalid_reason": self.invalid_reason,
            "ex": self.ex,
            "ts": self.ts,
            "timing_ms": round(self.timing_ms, 3),
        }


def evaluate(example: ExampleRecord, prediction: Prediction, suite: TestSuite,
             timeout_ms: int = 30000, warnings: list | None = None) -> EvalOutcome:
    """Score one prediction. valid: executes on the original database;
    ex: matches gold there; ts: matches gold on every suite variant."""
    start = time.monotonic()
    original = suite.variants[0]

    gold_res = execute_sql(original, example.gold_sql, timeout_ms)
    if isinstance(gold_res, ExecError):
        raise GoldBrokenError(
            f"{example.example_id}: gold query failed on {suite.db_id}: {gold_res.message}"
        )

    def done(valid, reason, ex, ts):
        return EvalOutcome(
            example_id=example.example_id,
            valid=valid,
            invalid_reason=reason,
            ex=ex,
            ts=ts,
            timing_ms=(time.monotonic() - start) * 1000,
        )

    if prediction.sql == EMPTY_PREDICTION:
        return done(False, "empty prediction", False, False)

    pred_res = execute_sql(original, prediction.sql, timeout_ms)
    if isinstance(pred_res, ExecError):
        return done(False, pred_res.message, False, False)

    ex = compare_results(gold_res, pred_res)
    if not ex:
        return done(True, None, False, False)

    ts = True
    for variant in suite.variants[1:]:
        gold_v = execute_sql(variant, example.gold_sql, timeout_ms)
        if isinstance(gold_v, ExecError):
            if warnings is not None:
                warnings.append(
                    f"{example.example_id}: gold failed on variant {variant}; skipped"
                )
            continue
        pred_v = execute_sql(variant, prediction.sql, timeout_ms)
        if isinstance(pred_v, ExecError) or not compare_results(gold_v, pred_v):
            ts = False
            break
    return done(True, None, ex, ts)


@dataclass
class BenchmarkEvaluation:
    outcomes: list[EvalOutcome]
    gold_broken: list[str]
    warnings: list[str] = field(default_factory=list)


def evaluate_benchmark(bench: Benchmark, predictions: dict[str, Prediction],
                       suites: dict[str, TestSuite], timeout_ms: int = 30000,
                       jobs: int = 1) -> BenchmarkEvaluation:
    """Evaluate every benchmark example that has a prediction and a suite.

    Gold-broken examples are excluded from outcomes and listed separately.
    """
    result = BenchmarkEvaluation(outcomes=[], gold_broken=[])

    def run_one(example):
        pred = predictions.get(example.example_id)
        if pred is None:
            return ("missing", example.example_id, None)
        suite = suites.get(example.db_id)
        if suite is None:
            return ("nosuite", example.example_id, None)
        try:
            outcome = evaluate(example, pred, suite, timeout_ms, result.warnings)
            return ("ok", example.example_id, outcome)
        except GoldBrokenError as e:
            result.warnings.append(str(e))
            return ("broken", example.example_id, None)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            statuses = list(pool.map(run_one, bench.examples))
    else:
        statuses = [run_one(e) for e in bench.examples]

    for status, example_id, outcome in statuses:
        if status == "ok":
            result.outcomes.append(outcome)
        elif status == "broken":
            result.gold_broken.append(example_id)
        elif status == "missing":
            result.warnings.append(f"{example_id}: no prediction; skipped")
        else:
            result.warnings.append(f"{example_id}: no test suite for its database; skipped")
    return result

"""Text-to-SQL evaluation harness: prompt rendering, completion backends,
and execution-based scoring (validity, execution accuracy, test-suite accuracy)."""

__version__ = "0.1.0"

"""Benchmark problems, closed-form references, error metrics and sweeps."""

from .cases import CASE_IDS, BenchmarkCase, build_case

__all__ = ["CASE_IDS", "BenchmarkCase", "build_case"]

"""Simulation harness: runs, CSV traces, acceptance checks and the CLI."""

from dremlab.harness.acceptance import AcceptanceRunner, acceptance
from dremlab.harness.simulation import TraceLog, TraceRecord, run
from dremlab.harness.trace_io import emit_csv, load_csv

__all__ = [
    "AcceptanceRunner",
    "TraceLog",
    "TraceRecord",
    "acceptance",
    "emit_csv",
    "load_csv",
    "run",
]

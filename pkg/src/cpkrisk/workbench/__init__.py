"""Dataset ingestion, validation-table reports, curve emission and the CLI."""

from .emit import emit_curves, emit_reports, read_reports_csv, read_reports_json
from .io import Dimension, convert_wide, ingest, load_fixture
from .report import DimensionReport, analyze_dataset

__all__ = [
    "Dimension",
    "DimensionReport",
    "analyze_dataset",
    "convert_wide",
    "emit_curves",
    "emit_reports",
    "ingest",
    "load_fixture",
    "read_reports_csv",
    "read_reports_json",
]

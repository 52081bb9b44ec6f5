from spectnt.reporting.formatter import find_section, generate_section, section_markers, update_report
from spectnt.reporting.history import HistoryBuffer, format_value, make_csv_sink
from spectnt.reporting.summary import VariantSummary, rank_variants, summarize_history

__all__ = [
    "HistoryBuffer",
    "VariantSummary",
    "find_section",
    "format_value",
    "generate_section",
    "make_csv_sink",
    "rank_variants",
    "section_markers",
    "summarize_history",
    "update_report",
]

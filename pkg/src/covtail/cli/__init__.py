from .main import build_parser, main, run_cli
from .rich_display import (
    console,
    create_checks_table,
    create_summary_table,
    print_error_panel,
    print_json_panel,
    print_re_panel,
    print_report,
    print_start_panel,
)

__all__ = [
    "build_parser",
    "main",
    "run_cli",
    "console",
    "create_checks_table",
    "create_summary_table",
    "print_error_panel",
    "print_json_panel",
    "print_re_panel",
    "print_report",
    "print_start_panel",
]

"""Command-line front end."""
from .config import SCHEMA, Experiment, load_config, parse_config_text, resolved_text
from .main import EXIT_CONFIG, EXIT_CRASH, EXIT_DIVERGED, EXIT_OK, build_parser, compare_summaries, main, reduction

__all__ = [
    "EXIT_CONFIG",
    "EXIT_CRASH",
    "EXIT_DIVERGED",
    "EXIT_OK",
    "SCHEMA",
    "Experiment",
    "build_parser",
    "compare_summaries",
    "load_config",
    "main",
    "parse_config_text",
    "reduction",
    "resolved_text",
]

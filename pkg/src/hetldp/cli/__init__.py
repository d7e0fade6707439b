"""Command-line surface: config files, data files and report emission."""
from .configfile import ParsedConfig, parse_config, parse_config_document, serialize_config
from .datafiles import DataError, Schema, ingest_dataset
from .main import EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL, EXIT_OK, build_parser, main

__all__ = [
    "DataError", "EXIT_CONFIG", "EXIT_DATA", "EXIT_INTERNAL", "EXIT_OK", "ParsedConfig", "Schema",
    "build_parser", "ingest_dataset", "main", "parse_config", "parse_config_document", "serialize_config",
]

"""Command-line harness: scenarios, commands and artifact writers."""
from .config import BUILTIN, ConfigError, Scenario, parse_config, parse_config_text
from .main import main, run_command
from .output import RunReport, emit_outputs

__all__ = ["BUILTIN", "ConfigError", "RunReport", "Scenario", "emit_outputs", "main",
           "parse_config", "parse_config_text", "run_command"]

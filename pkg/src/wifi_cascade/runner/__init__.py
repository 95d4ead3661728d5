"""Scenario files, figure reproductions and the command-line interface."""
from .cli import main
from .scenario_file import ScenarioParseError, format_scenario, parse_scenario, parse_scenario_text

__all__ = ["main", "ScenarioParseError", "format_scenario", "parse_scenario", "parse_scenario_text"]

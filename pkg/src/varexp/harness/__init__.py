"""Theorem checks, refinement studies, reports and the command-line tool."""

from .checks import CHECKS, CaseError, merged_params, run_check
from .refinement import TrendReport, refinement_study, run_suite, suite_exit_code
from .report import Policy, canonical, classify_slope, decide, log_slope, write_report

__all__ = ["CHECKS", "CaseError", "Policy", "TrendReport", "canonical", "classify_slope",
           "decide", "log_slope", "merged_params", "refinement_study", "run_check",
           "run_suite", "suite_exit_code", "write_report"]

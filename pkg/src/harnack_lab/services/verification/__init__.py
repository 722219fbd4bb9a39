"""Verification checks and the suite runner."""

from .suite import SuiteResult, run_suite

__all__ = ['SuiteResult', 'run_suite']

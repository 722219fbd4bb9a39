"""Service layer of the Harnack lab."""

def get_report_store(out_dir: str):
    """Factory function to get a report store writing to ``out_dir``."""
    from .data.persistence import ReportStore
    return ReportStore(out_dir)

def get_suite_runner():
    """Factory function to get the suite entry point."""
    from .verification.suite import run_suite
    return run_suite

def get_config_loader():
    """Factory function to get the experiment config loader."""
    from .data.config_loader import load_config
    return load_config

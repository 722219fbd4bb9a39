"""
Command-line front end: ``harnack-lab run <config>`` and ``harnack-lab list-presets``
"""

import logging
from typing import Dict, List, Optional

import typer
import yaml
from rich.console import Console
from rich.table import Table

from .core.exceptions import (
    ConfigError,
    ExplosionError,
    ModelValidationError,
    PositivityViolationError,
    SolverError,
    UsageError,
)
from .core.logging_setup import setup_logging
from .models.presets import get_registry

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

app = typer.Typer(add_completion=False, help="Numerical checks of log-Harnack inequalities and their consequences.")
console = Console()


def _bundled_usage() -> Dict[str, List[str]]:
    """preset name -> bundled configs that use it"""
    from .services.data.config_loader import bundled_configs

    usage: Dict[str, List[str]] = {}
    for path in bundled_configs():
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
            preset = data['model']['preset']
        except (OSError, yaml.YAMLError, KeyError, TypeError) as e:
            logger.warning(f"Skipping unreadable bundled config {path}: {e}")
            continue
        usage.setdefault(preset, []).append(path.stem)
    return usage


@app.command()
def run(
    config: str = typer.Argument(..., help="Config file path or bundled config name"),
    seed: Optional[int] = typer.Option(None, help="Override the config seed"),
    workers: Optional[int] = typer.Option(None, help="Worker threads (default HARNACK_WORKERS)"),
    out_dir: Optional[str] = typer.Option(None, help="Output directory (default HARNACK_OUTPUT_DIR)"),
    tolerance_scale: float = typer.Option(1.0, help="Multiply every tolerance by this factor"),
    log_level: Optional[str] = typer.Option(None, help="Logging level (default HARNACK_LOG_LEVEL)"),
):
    """Run every verification of an experiment config and write its reports."""
    setup_logging(log_level)
    from .services.data.config_loader import load_config
    from .services.verification.suite import run_suite

    try:
        experiment = load_config(config)
        result = run_suite(experiment, out_dir=out_dir, workers=workers, seed=seed, tolerance_scale=tolerance_scale)
    except (SolverError, ExplosionError) as e:
        logger.error(f"Solver failure: {e}")
        raise typer.Exit(EXIT_SOLVER)
    except (UsageError, ModelValidationError, PositivityViolationError) as e:
        logger.error(f"{e}")
        raise typer.Exit(EXIT_USAGE)
    except Exception as e:
        logger.exception(f"Unexpected failure while running {config}: {e}")
        raise typer.Exit(EXIT_SOLVER)

    table = Table(title=f"{experiment.name}")
    for column in ('name', 'verdict', 'lhs', 'rhs', 'slack', 'tolerance'):
        table.add_column(column, justify='left' if column in ('name', 'verdict') else 'right')
    for r in result.reports:
        style = 'green' if r.passed else 'bold red'
        table.add_row(r.name, f"[{style}]{r.verdict}[/{style}]", f"{r.lhs:.6g}", f"{r.rhs:.6g}", f"{r.slack:.3e}",
                      f"{r.tolerance:.3e}")
    console.print(table)

    failures = result.failures
    if failures:
        console.print(f"[bold red]{len(failures)} of {len(result.reports)} verifications failed[/bold red]")
        raise typer.Exit(EXIT_FAIL)
    console.print(f"[green]all {len(result.reports)} verifications passed[/green]")
    raise typer.Exit(EXIT_OK)


@app.command('list-presets')
def list_presets(
    registry: Optional[str] = typer.Option(None, help="User preset file (empty string: built-ins only)"),
):
    """List model presets, their parameters and what they exercise."""
    try:
        presets = get_registry(registry).listing()
    except ConfigError as e:
        console.print(f"[red]{e}[/red]")
        raise typer.Exit(EXIT_USAGE)

    usage = _bundled_usage()
    table = Table(title="Model presets")
    table.add_column('name', style='bold', no_wrap=True)
    table.add_column('family')
    table.add_column('parameters')
    table.add_column('exercises')
    table.add_column('bundled configs')
    for preset in presets:
        params = ', '.join(f"{k}={v:g}" for k, v in sorted(preset['defaults'].items()))
        table.add_row(preset['name'], preset['family'], params, '; '.join(preset['exercises']),
                      ', '.join(usage.get(preset['name'], [])))
    console.print(table)


def main():
    app()


if __name__ == "__main__":
    main()
